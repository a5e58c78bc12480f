#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gne/errors.hpp"
#include "gne/feasible_set.hpp"
#include "gne/games.hpp"
#include "gne/linalg.hpp"
#include "gne/profile.hpp"

namespace gne {

/// Gradients of the regularized cumulative regret psi_c(a, b).
struct RegretGradient {
  Vector wrt_a;
  Vector wrt_b;
};

enum class Flavor { VE, GNE, RegularizedVE };

inline std::string to_string(Flavor f) {
  switch (f) {
    case Flavor::VE: return "ve";
    case Flavor::GNE: return "gne";
    case Flavor::RegularizedVE: return "regularized-ve";
  }
  return "?";
}

struct OracleConfig {
  std::size_t max_iterations = 5000;
  std::optional<double> step;  // default: 1 / L of the inner objective
  double stop_tol = 1e-10;     // on the gradient-map norm
  /// regularized_exploitability throws ConvergenceError when the tolerance is
  /// not met within max_iterations.
  bool require_convergence = true;
};

struct ExploitabilityReport {
  double value = 0.0;
  StrategyProfile maximizer;
  Flavor flavor = Flavor::VE;
  double regularization = 0.0;
  std::size_t inner_iterations = 0;
  double residual = 0.0;  // final ascent gradient-map norm
  bool converged = false;
};

struct RegularizedExploitability {
  ExploitabilityReport report;
  Vector gradient;  // grad_a psi(a, b*) - c (a - b*)
};

namespace detail {

// Swaps block i of `mixed` (a copy of a) to b_i for the duration of `body`.
template <class Body>
decltype(auto) with_block(std::span<double> mixed, const ProfileLayout& layout, std::size_t i,
                          std::span<const double> a, std::span<const double> b, Body&& body) {
  const std::size_t off = layout.offset(i);
  const std::size_t m = layout.dim(i);
  std::copy(b.begin() + off, b.begin() + off + m, mixed.begin() + off);
  struct Restore {
    std::span<double> mixed;
    std::span<const double> a;
    std::size_t off, m;
    ~Restore() { std::copy(a.begin() + off, a.begin() + off + m, mixed.begin() + off); }
  } restore{mixed, a, off, m};
  return body(std::span<const double>(mixed));
}

struct AscentResult {
  Vector x;
  std::size_t iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Projected gradient ascent from a feasible x0 with step `step`. A trial step
// is accepted when it satisfies the quadratic sufficient-increase test
//   f(y) >= f(x) + g.(y - x) - |y - x|^2 / (2 eta),
// which always holds for L-smooth objectives with eta <= 1/L; otherwise eta is
// halved (nonsmooth objectives) and allowed to grow back after acceptance.
template <class Value, class Gradient, class Project>
AscentResult projected_ascent(Value&& value, Gradient&& gradient, Project&& project, Vector x0,
                              double step, std::size_t max_iterations, double stop_tol) {
  AscentResult out;
  out.x = std::move(x0);
  const std::size_t d = out.x.size();
  Vector g(d), trial(d);
  double fx = value(std::span<const double>(out.x));
  double eta = step;
  out.residual = std::numeric_limits<double>::infinity();

  while (out.iterations < max_iterations) {
    gradient(std::span<const double>(out.x), std::span<double>(g));
    for (std::size_t k = 0; k < d; ++k) trial[k] = out.x[k] + eta * g[k];
    Vector y = project(std::span<const double>(trial));
    const double move2 = linalg::squared_distance(y, out.x);
    out.residual = std::sqrt(move2) / eta;
    if (out.residual <= stop_tol) {
      out.converged = true;
      break;
    }
    ++out.iterations;
    double gain = 0.0;
    for (std::size_t k = 0; k < d; ++k) gain += g[k] * (y[k] - out.x[k]);
    const double fy = value(std::span<const double>(y));
    const double slack = 1e-14 * (1.0 + std::abs(fx));
    if (fy >= fx + gain - move2 / (2.0 * eta) - slack) {
      out.x = std::move(y);
      fx = fy;
      eta = std::min(step, 2.0 * eta);
    } else {
      eta *= 0.5;
      if (eta < step * 1e-14) break;
    }
  }
  return out;
}

template <PseudoGame G>
void require_feasible(const G& game, std::span<const double> a, const char* what) {
  game.layout().check_size(a.size(), what);
  if (!game.feasible().contains(a, kMembershipTolerance))
    throw std::invalid_argument(std::string(what) + ": profile is not feasible");
}

// grad_b psi_c(a, b) only: block i is grad_{b_i} u_i(b_i, a_-i) + c (a_i - b_i).
template <PseudoGame G>
void regret_gradient_b(const G& game, std::span<const double> a, std::span<const double> b,
                       double c, std::span<double> out) {
  const auto& L = game.layout();
  Vector mixed(a.begin(), a.end());
  for (std::size_t i = 0; i < L.num_players(); ++i) {
    auto dst = out.subspan(L.offset(i), L.dim(i));
    with_block(mixed, L, i, a, b, [&](std::span<const double> m) {
      game.utility_grad(i, m, i, dst);
      return 0;
    });
  }
  if (c != 0.0)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += c * (a[k] - b[k]);
}

}  // namespace detail

/// psi(a, b) = sum_i [u_i(b_i, a_-i) - u_i(a)]
template <PseudoGame G>
double cumulative_regret(const G& game, std::span<const double> a, std::span<const double> b) {
  const auto& L = game.layout();
  L.check_size(a.size(), "cumulative_regret(a)");
  L.check_size(b.size(), "cumulative_regret(b)");
  Vector mixed(a.begin(), a.end());
  double total = 0.0;
  for (std::size_t i = 0; i < L.num_players(); ++i) {
    const double deviated = detail::with_block(
        mixed, L, i, a, b, [&](std::span<const double> m) { return game.utility(i, m); });
    total += deviated - game.utility(i, a);
  }
  return total;
}

template <PseudoGame G>
double cumulative_regret(const G& game, const StrategyProfile& a, const StrategyProfile& b) {
  return cumulative_regret(game, a.values(), b.values());
}

/// psi_c(a, b) = psi(a, b) - (c/2) |a - b|^2
template <PseudoGame G>
double regularized_regret(const G& game, std::span<const double> a, std::span<const double> b,
                          double c) {
  if (!(c >= 0.0)) throw std::invalid_argument("regularized_regret: c must be >= 0");
  return cumulative_regret(game, a, b) - 0.5 * c * linalg::squared_distance(a, b);
}

template <PseudoGame G>
double regularized_regret(const G& game, const StrategyProfile& a, const StrategyProfile& b,
                          double c) {
  return regularized_regret(game, a.values(), b.values(), c);
}

/// Closed-form gradients of psi_c in both arguments.
///   wrt_b block i: grad_{b_i} u_i(b_i, a_-i) + c (a_i - b_i)
///   wrt_a block j: sum_{i != j} grad_{a_j} u_i(b_i, a_-i) - sum_i grad_{a_j} u_i(a) - c (a_j - b_j)
template <PseudoGame G>
RegretGradient regret_gradients(const G& game, std::span<const double> a,
                                std::span<const double> b, double c) {
  const auto& L = game.layout();
  L.check_size(a.size(), "regret_gradients(a)");
  L.check_size(b.size(), "regret_gradients(b)");
  if (!(c >= 0.0)) throw std::invalid_argument("regret_gradients: c must be >= 0");

  const std::size_t n = L.num_players();
  RegretGradient out{Vector(L.size(), 0.0), Vector(L.size(), 0.0)};
  Vector mixed(a.begin(), a.end());
  Vector scratch;

  for (std::size_t i = 0; i < n; ++i) {
    detail::with_block(mixed, L, i, a, b, [&](std::span<const double> m) {
      for (std::size_t j = 0; j < n; ++j) {
        scratch.assign(L.dim(j), 0.0);
        game.utility_grad(i, m, j, scratch);
        double* dst = (j == i ? out.wrt_b.data() : out.wrt_a.data()) + L.offset(j);
        for (std::size_t k = 0; k < scratch.size(); ++k) dst[k] += scratch[k];
      }
      return 0;
    });
    for (std::size_t j = 0; j < n; ++j) {
      scratch.assign(L.dim(j), 0.0);
      game.utility_grad(i, a, j, scratch);
      double* dst = out.wrt_a.data() + L.offset(j);
      for (std::size_t k = 0; k < scratch.size(); ++k) dst[k] -= scratch[k];
    }
  }
  if (c != 0.0) {
    for (std::size_t k = 0; k < L.size(); ++k) {
      out.wrt_b[k] += c * (a[k] - b[k]);
      out.wrt_a[k] -= c * (a[k] - b[k]);
    }
  }
  return out;
}

template <PseudoGame G>
RegretGradient regret_gradients(const G& game, const StrategyProfile& a, const StrategyProfile& b,
                                double c) {
  return regret_gradients(game, a.values(), b.values(), c);
}

/// G_eta(a) = a - proj(a - eta g)
inline Vector gradient_map(const FeasibleSet& s, std::span<const double> a,
                           std::span<const double> g, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("gradient_map: eta must be > 0");
  s.layout().check_size(a.size(), "gradient_map(a)");
  s.layout().check_size(g.size(), "gradient_map(g)");
  Vector y(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) y[k] = a[k] - eta * g[k];
  Vector p = s.project(y);
  for (std::size_t k = 0; k < a.size(); ++k) p[k] = a[k] - p[k];
  return p;
}

/// VE exploitability max_{b in A} psi(a, b), by projected gradient ascent
/// started from proj(a).
template <PseudoGame G>
ExploitabilityReport exploitability_ve(const G& game, std::span<const double> a,
                                       const OracleConfig& cfg = {}) {
  detail::require_feasible(game, a, "exploitability_ve");
  const FeasibleSet& S = game.feasible();
  const double step = cfg.step.value_or(1.0 / game.lipschitz().grad_smoothness);

  auto res = detail::projected_ascent(
      [&](std::span<const double> b) { return cumulative_regret(game, a, b); },
      [&](std::span<const double> b, std::span<double> g) {
        detail::regret_gradient_b(game, a, b, 0.0, g);
      },
      [&](std::span<const double> y) { return S.project(y); }, S.project(a), step,
      cfg.max_iterations, cfg.stop_tol);

  ExploitabilityReport rep{cumulative_regret(game, a, res.x),
                           StrategyProfile(game.layout(), res.x),
                           Flavor::VE,
                           0.0,
                           res.iterations,
                           res.residual,
                           res.converged};
  return rep;
}

template <PseudoGame G>
ExploitabilityReport exploitability_ve(const G& game, const StrategyProfile& a,
                                       const OracleConfig& cfg = {}) {
  return exploitability_ve(game, a.values(), cfg);
}

/// GNE exploitability sum_i max_{b_i in A_i(a_-i)} [u_i(b_i, a_-i) - u_i(a)]:
/// one ascent per player over that player's slice of the joint set.
template <PseudoGame G>
ExploitabilityReport exploitability_gne(const G& game, std::span<const double> a,
                                        const OracleConfig& cfg = {}) {
  detail::require_feasible(game, a, "exploitability_gne");
  const auto& L = game.layout();
  const double step = cfg.step.value_or(1.0 / game.lipschitz().grad_smoothness);

  Vector best(a.begin(), a.end());
  Vector mixed(a.begin(), a.end());
  ExploitabilityReport rep{0.0, StrategyProfile(L), Flavor::GNE, 0.0, 0, 0.0, true};

  for (std::size_t i = 0; i < L.num_players(); ++i) {
    const FeasibleSet Si = game.feasible().slice(i, a);
    const std::size_t off = L.offset(i);
    const std::size_t m = L.dim(i);
    const double base = game.utility(i, a);

    auto place = [&](std::span<const double> bi) {
      std::copy(bi.begin(), bi.end(), mixed.begin() + off);
    };
    auto res = detail::projected_ascent(
        [&](std::span<const double> bi) {
          place(bi);
          return game.utility(i, mixed) - base;
        },
        [&](std::span<const double> bi, std::span<double> g) {
          place(bi);
          game.utility_grad(i, mixed, i, g);
        },
        [&](std::span<const double> y) { return Si.project(y); },
        Si.project(a.subspan(off, m)), step, cfg.max_iterations, cfg.stop_tol);

    place(res.x);
    rep.value += game.utility(i, mixed) - base;
    std::copy(a.begin() + off, a.begin() + off + m, mixed.begin() + off);
    std::copy(res.x.begin(), res.x.end(), best.begin() + off);
    rep.inner_iterations += res.iterations;
    rep.residual = std::max(rep.residual, res.residual);
    rep.converged = rep.converged && res.converged;
  }
  rep.maximizer = StrategyProfile(L, std::move(best));
  return rep;
}

template <PseudoGame G>
ExploitabilityReport exploitability_gne(const G& game, const StrategyProfile& a,
                                        const OracleConfig& cfg = {}) {
  return exploitability_gne(game, a.values(), cfg);
}

/// phi_c(a) = max_{b in A} psi_c(a, b) together with its gradient
/// grad_a psi(a, b*) - c (a - b*). The inner problem is c-strongly concave and
/// is solved from proj(a) with step 1/(L + c). Defined for any finite a, not
/// only feasible ones, so finite differences may straddle the boundary.
template <PseudoGame G>
RegularizedExploitability regularized_exploitability(const G& game, std::span<const double> a,
                                                     double c, const OracleConfig& cfg = {}) {
  if (!(c > 0.0)) throw std::invalid_argument("regularized_exploitability: c must be > 0");
  game.layout().check_size(a.size(), "regularized_exploitability");
  if (!linalg::all_finite(a))
    throw std::domain_error("regularized_exploitability: non-finite profile");
  const FeasibleSet& S = game.feasible();
  const double step = cfg.step.value_or(1.0 / (game.lipschitz().grad_smoothness + c));

  auto res = detail::projected_ascent(
      [&](std::span<const double> b) { return regularized_regret(game, a, b, c); },
      [&](std::span<const double> b, std::span<double> g) {
        detail::regret_gradient_b(game, a, b, c, g);
      },
      [&](std::span<const double> y) { return S.project(y); }, S.project(a), step,
      cfg.max_iterations, cfg.stop_tol);

  if (!res.converged && cfg.require_convergence)
    throw ConvergenceError("regularized_exploitability: inner ascent stopped at residual " +
                           std::to_string(res.residual) + " after " +
                           std::to_string(res.iterations) + " iterations");

  Vector gradient = regret_gradients(game, a, std::span<const double>(res.x), c).wrt_a;
  return RegularizedExploitability{ExploitabilityReport{regularized_regret(game, a, std::span<const double>(res.x), c),
                                    StrategyProfile(game.layout(), res.x),
                                    Flavor::RegularizedVE,
                                    c,
                                    res.iterations,
                                    res.residual,
                                    res.converged},
                                   std::move(gradient)};
}

template <PseudoGame G>
RegularizedExploitability regularized_exploitability(const G& game, const StrategyProfile& a,
                                                     double c, const OracleConfig& cfg = {}) {
  return regularized_exploitability(game, a.values(), c, cfg);
}

/// Upper bound on max_{a,b} [psi_c(a, b) - psi_c(a, b0)] over the box:
/// L_psi * diam + (c/2) * diam^2.
template <PseudoGame G>
double inner_gap_bound(const G& game, double c) {
  const double diam = game.feasible().diameter();
  return game.lipschitz().value_lipschitz * diam + 0.5 * c * diam * diam;
}

}  // namespace gne
