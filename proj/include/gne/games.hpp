#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "gne/feasible_set.hpp"
#include "gne/linalg.hpp"
#include "gne/profile.hpp"
#include "gne/random.hpp"

namespace gne {

struct LipschitzEstimate {
  double grad_smoothness = 0.0;  // L of grad psi
  double value_lipschitz = 0.0;  // L of psi
  /// Set when grad_smoothness is an empirical step-size surrogate rather than
  /// a bound (nonsmooth payoffs).
  bool surrogate = false;
};

/// A pseudo-game: per-player utilities with closed-form partial gradients at
/// arbitrary (including mixed) profiles, a joint feasible set, and smoothness
/// constants. Solvers and oracles are written against this concept.
template <class G>
concept PseudoGame = requires(const G& g, std::size_t i, std::size_t j,
                              std::span<const double> a, std::span<double> out) {
  { g.layout() } -> std::convertible_to<const ProfileLayout&>;
  { g.feasible() } -> std::convertible_to<const FeasibleSet&>;
  { g.utility(i, a) } -> std::convertible_to<double>;
  { g.utility_grad(i, a, j, out) } -> std::same_as<void>;
  { g.lipschitz() } -> std::convertible_to<LipschitzEstimate>;
};

/// u1 = a1' Q a2 = -u2
struct BilinearZeroSum {
  Matrix q;
};

/// u1 = a1' Q1 a2, u2 = a1' Q2 a2
struct BilinearGeneralSum {
  Matrix q1;
  Matrix q2;
};

/// u_i = -| sum_j a_j - s_i |
struct MonotoneNormMin {
  std::vector<Vector> shifts;
};

using Payoff = std::variant<BilinearZeroSum, BilinearGeneralSum, MonotoneNormMin>;

enum class Family { BilinearZeroSum, BilinearGeneralSum, MonotoneNormMin };
enum class ConstraintKind { Affine, Ball };

/// Residual norms below this count as the norm-min kink; the zero subgradient
/// is returned there.
inline constexpr double kNormMinKink = 1e-12;

/// Step-size surrogate for the norm-min family: 1/L = 0.02.
inline constexpr double kNormMinSmoothness = 50.0;

/// Benchmark metadata, kept so a game can be regenerated or re-serialized.
struct BenchmarkInfo {
  Family family = Family::BilinearZeroSum;
  std::size_t num_players = 2;
  std::size_t dim = 1;
  ConstraintKind constraint = ConstraintKind::Affine;
  std::uint64_t seed = 0;
  bool canonical = true;
  bool operator==(const BenchmarkInfo&) const = default;
};

class GameSpec {
 public:
  GameSpec(Payoff payoff, FeasibleSet feasible, std::optional<BenchmarkInfo> info = std::nullopt)
      : payoff_(std::move(payoff)), feasible_(std::move(feasible)), info_(std::move(info)) {
    validate();
  }

  const ProfileLayout& layout() const { return feasible_.layout(); }
  const FeasibleSet& feasible() const { return feasible_; }
  const Payoff& payoff() const { return payoff_; }
  const std::optional<BenchmarkInfo>& info() const { return info_; }
  Family family() const { return static_cast<Family>(payoff_.index()); }

  double utility(std::size_t i, std::span<const double> a) const {
    layout().check_player(i);
    const auto& L = layout();
    return std::visit(
        [&](const auto& p) -> double {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, BilinearZeroSum>) {
            const double u1 = p.q.bilinear(L.block_of(a, 0), L.block_of(a, 1));
            return i == 0 ? u1 : -u1;
          } else if constexpr (std::is_same_v<P, BilinearGeneralSum>) {
            const Matrix& q = i == 0 ? p.q1 : p.q2;
            return q.bilinear(L.block_of(a, 0), L.block_of(a, 1));
          } else {
            Vector r = residual(p, i, a);
            return -linalg::norm(r);
          }
        },
        payoff_);
  }

  /// out = grad of u_i with respect to player j's block, evaluated at a.
  void utility_grad(std::size_t i, std::span<const double> a, std::size_t j,
                    std::span<double> out) const {
    layout().check_player(i);
    layout().check_player(j);
    const auto& L = layout();
    if (out.size() != L.dim(j)) throw std::invalid_argument("utility_grad: output length mismatch");
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, MonotoneNormMin>) {
            Vector r = residual(p, i, a);
            const double n = linalg::norm(r);
            for (std::size_t k = 0; k < out.size(); ++k) out[k] = n < kNormMinKink ? 0.0 : -r[k] / n;
          } else {
            const Matrix* q = nullptr;
            double sign = 1.0;
            if constexpr (std::is_same_v<P, BilinearZeroSum>) {
              q = &p.q;
              sign = i == 0 ? 1.0 : -1.0;
            } else {
              q = i == 0 ? &p.q1 : &p.q2;
            }
            if (j == 0)
              q->multiply(L.block_of(a, 1), out);
            else
              q->multiply_transposed(L.block_of(a, 0), out);
            if (sign < 0.0)
              for (double& v : out) v = -v;
          }
        },
        payoff_);
  }

  Vector utility_grad(std::size_t i, std::span<const double> a, std::size_t j) const {
    Vector out(layout().dim(j));
    utility_grad(i, a, j, out);
    return out;
  }

  LipschitzEstimate lipschitz() const {
    return std::visit(
        [&](const auto& p) -> LipschitzEstimate {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, MonotoneNormMin>) {
            // Each utility gradient block is a unit vector; psi's gradient has
            // at most 2n unit terms per a-block and one per b-block.
            const double n = static_cast<double>(p.shifts.size());
            return {kNormMinSmoothness, std::sqrt(n * (4.0 * n * n + 1.0)), true};
          } else {
            double l = 0.0;
            if constexpr (std::is_same_v<P, BilinearZeroSum>)
              l = spectral_norm(p.q);
            else
              l = spectral_norm(p.q1) + spectral_norm(p.q2);
            return {l, l * feasible_.diameter(), false};
          }
        },
        payoff_);
  }

 private:
  Vector residual(const MonotoneNormMin& p, std::size_t i, std::span<const double> a) const {
    const auto& L = layout();
    Vector r(L.dim(0), 0.0);
    for (std::size_t j = 0; j < L.num_players(); ++j) linalg::axpy(1.0, L.block_of(a, j), r);
    linalg::axpy(-1.0, p.shifts[i], r);
    return r;
  }

  void validate() const {
    const auto& L = layout();
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, MonotoneNormMin>) {
            if (p.shifts.size() != L.num_players())
              throw std::invalid_argument("MonotoneNormMin: need one shift per player");
            for (const auto& s : p.shifts)
              if (s.size() != L.dim(0) || !linalg::all_finite(s))
                throw std::invalid_argument("MonotoneNormMin: bad shift vector");
            for (std::size_t j = 1; j < L.num_players(); ++j)
              if (L.dim(j) != L.dim(0))
                throw std::invalid_argument("MonotoneNormMin: players need equal dimensions");
          } else {
            if (L.num_players() != 2 || L.dim(0) != L.dim(1))
              throw std::invalid_argument("bilinear games need two players of equal dimension");
            auto check = [&](const Matrix& q) {
              if (q.rows() != L.dim(0) || q.cols() != L.dim(1) || !linalg::all_finite(q.data()))
                throw std::invalid_argument("bilinear payoff matrix has wrong shape or non-finite entries");
            };
            if constexpr (std::is_same_v<P, BilinearZeroSum>) {
              check(p.q);
            } else {
              check(p.q1);
              check(p.q2);
            }
          }
        },
        payoff_);
  }

  Payoff payoff_;
  FeasibleSet feasible_;
  std::optional<BenchmarkInfo> info_;
};

static_assert(PseudoGame<GameSpec>);

template <PseudoGame G>
double utility(const G& game, std::size_t i, const StrategyProfile& a) {
  game.layout().check_size(a.size(), "utility");
  return game.utility(i, a.values());
}

template <PseudoGame G>
Vector utility_grad(const G& game, std::size_t i, const StrategyProfile& a, std::size_t j) {
  game.layout().check_size(a.size(), "utility_grad");
  Vector out(game.layout().dim(j));
  game.utility_grad(i, a.values(), j, out);
  return out;
}

template <PseudoGame G>
LipschitzEstimate lipschitz_estimate(const G& game) {
  return game.lipschitz();
}

/// The feasible set shared by every benchmark: box [-10, 10] per coordinate
/// plus either sum(a) <= 1 or |a| <= 1.
inline FeasibleSet benchmark_feasible_set(const ProfileLayout& layout, ConstraintKind constraint) {
  const std::size_t d = layout.size();
  JointConstraint joint = constraint == ConstraintKind::Affine
                              ? JointConstraint{AffineHalfspace{Vector(d, 1.0), 1.0}}
                              : JointConstraint{Ball{1.0}};
  return FeasibleSet(layout, BoxBounds::uniform(d, -10.0, 10.0), std::move(joint));
}

/// Builds one of the benchmark families. Matrix and shift entries are i.i.d.
/// uniform on [-1, 1], drawn row-major from a 64-bit Mersenne twister seeded
/// with `seed` (Q1 before Q2; shifts player by player).
inline GameSpec make_benchmark(Family family, std::size_t dim, ConstraintKind constraint,
                               std::uint64_t seed, std::size_t num_players = 2) {
  if (dim == 0) throw std::invalid_argument("make_benchmark: dimension must be >= 1");
  if (family != Family::MonotoneNormMin && num_players != 2)
    throw std::invalid_argument("make_benchmark: bilinear families are two-player");
  if (num_players == 0) throw std::invalid_argument("make_benchmark: need at least one player");

  Rng rng(seed);
  auto draw_matrix = [&] {
    Matrix q(dim, dim);
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = 0; c < dim; ++c) q(r, c) = uniform(rng, -1.0, 1.0);
    return q;
  };

  Payoff payoff;
  switch (family) {
    case Family::BilinearZeroSum:
      payoff = BilinearZeroSum{draw_matrix()};
      break;
    case Family::BilinearGeneralSum: {
      Matrix q1 = draw_matrix();
      Matrix q2 = draw_matrix();
      payoff = BilinearGeneralSum{std::move(q1), std::move(q2)};
      break;
    }
    case Family::MonotoneNormMin: {
      std::vector<Vector> shifts(num_players, Vector(dim));
      for (auto& s : shifts)
        for (double& v : s) v = uniform(rng, -1.0, 1.0);
      payoff = MonotoneNormMin{std::move(shifts)};
      break;
    }
  }

  const ProfileLayout layout = ProfileLayout::uniform(num_players, dim);
  BenchmarkInfo info{family, num_players, dim, constraint, seed,
                     !(family == Family::MonotoneNormMin && constraint == ConstraintKind::Ball)};
  return GameSpec(std::move(payoff), benchmark_feasible_set(layout, constraint), info);
}

inline std::string to_string(Family f) {
  switch (f) {
    case Family::BilinearZeroSum: return "bilinear-zs";
    case Family::BilinearGeneralSum: return "bilinear-gs";
    case Family::MonotoneNormMin: return "normmin";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  if (s == "bilinear-zs") return Family::BilinearZeroSum;
  if (s == "bilinear-gs") return Family::BilinearGeneralSum;
  if (s == "normmin") return Family::MonotoneNormMin;
  throw std::invalid_argument("unknown game family '" + s + "' (expected bilinear-zs, bilinear-gs or normmin)");
}

inline std::string to_string(ConstraintKind c) { return c == ConstraintKind::Affine ? "affine" : "ball"; }

inline ConstraintKind parse_constraint(const std::string& s) {
  if (s == "affine") return ConstraintKind::Affine;
  if (s == "ball") return ConstraintKind::Ball;
  throw std::invalid_argument("unknown constraint '" + s + "' (expected affine or ball)");
}

}  // namespace gne
