#pragma once

#include <stdexcept>

namespace gne {

/// An inner maximization stopped at its iteration cap above the requested
/// stationarity tolerance.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A solver iterate became non-finite or left the divergence radius.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gne
