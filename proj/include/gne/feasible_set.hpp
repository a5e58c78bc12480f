#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "gne/linalg.hpp"
#include "gne/profile.hpp"
#include "gne/random.hpp"

namespace gne {

struct BoxBounds {
  Vector lower;
  Vector upper;

  static BoxBounds uniform(std::size_t size, double lo, double hi) {
    return {Vector(size, lo), Vector(size, hi)};
  }
  bool operator==(const BoxBounds&) const = default;
};

struct NoJoint {
  bool operator==(const NoJoint&) const = default;
};

/// g(a) = r - w.a >= 0
struct AffineHalfspace {
  Vector w;
  double r = 0.0;
  bool operator==(const AffineHalfspace&) const = default;
};

/// g(a) = radius^2 - |a|^2 >= 0. A zero radius is allowed; it arises when a
/// player's slice of a ball is pinned to the origin.
struct Ball {
  double radius = 1.0;
  bool operator==(const Ball&) const = default;
};

using JointConstraint = std::variant<NoJoint, AffineHalfspace, Ball>;

inline constexpr double kMembershipTolerance = 1e-9;

namespace detail {

inline void clip_into(std::span<const double> y, const Vector& lo, const Vector& hi,
                      std::span<double> out) {
  for (std::size_t k = 0; k < y.size(); ++k) out[k] = std::clamp(y[k], lo[k], hi[k]);
}

// Box intersected with {x : w.x <= r}. The multiplier search runs over the
// sorted breakpoints of the piecewise-linear map lambda -> w.clip(y - lambda w),
// which is nonincreasing; the crossing piece is then solved exactly.
inline Vector project_box_halfspace(std::span<const double> y, const Vector& lo,
                                    const Vector& hi, const Vector& w, double r) {
  const std::size_t d = y.size();
  Vector x(d);
  clip_into(y, lo, hi, x);
  if (linalg::dot(w, x) <= r) return x;

  auto level = [&](double lambda) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += w[k] * std::clamp(y[k] - lambda * w[k], lo[k], hi[k]);
    return s;
  };

  std::vector<double> breaks;
  breaks.reserve(2 * d);
  for (std::size_t k = 0; k < d; ++k) {
    if (w[k] == 0.0) continue;
    for (double bound : {hi[k], lo[k]}) {
      const double lambda = (y[k] - bound) / w[k];
      if (lambda > 0.0) breaks.push_back(lambda);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  if (breaks.empty() || level(breaks.back()) > r) {
    // r sits at (or a rounding error below) the box minimum of w.x: the set is
    // the minimizing face, reached once every coordinate hits its bound.
    const double last = breaks.empty() ? 0.0 : breaks.back();
    if (level(last) <= r + 1e-9 * (1.0 + std::abs(r))) {
      for (std::size_t k = 0; k < d; ++k) x[k] = std::clamp(y[k] - last * w[k], lo[k], hi[k]);
      return x;
    }
    throw std::runtime_error("project: multiplier bracket failure (box and halfspace do not intersect)");
  }

  // First breakpoint whose level is <= r.
  std::size_t lo_idx = 0, hi_idx = breaks.size() - 1;
  if (level(breaks[0]) <= r) {
    hi_idx = 0;
  } else {
    while (hi_idx - lo_idx > 1) {
      const std::size_t mid = lo_idx + (hi_idx - lo_idx) / 2;
      if (level(breaks[mid]) <= r)
        hi_idx = mid;
      else
        lo_idx = mid;
    }
  }
  const double left = hi_idx == 0 ? 0.0 : breaks[hi_idx - 1];
  const double right = breaks[hi_idx];
  const double h_left = level(left);
  const double h_right = level(right);
  double lambda = right;
  if (h_left > h_right) lambda = left + (h_left - r) * (right - left) / (h_left - h_right);
  lambda = std::clamp(lambda, left, right);

  for (std::size_t k = 0; k < d; ++k) x[k] = std::clamp(y[k] - lambda * w[k], lo[k], hi[k]);
  return x;
}

// Box intersected with the centered ball. The KKT system is separable:
// x = clip(s y) for a scale s in [0, 1], and |clip(s y)| is nondecreasing in s.
inline Vector project_box_ball(std::span<const double> y, const Vector& lo, const Vector& hi,
                               double radius) {
  const std::size_t d = y.size();
  Vector x(d);
  clip_into(y, lo, hi, x);
  const double r2 = radius * radius;
  if (linalg::squared_norm(x) <= r2) return x;

  auto scaled_norm2 = [&](double s) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double v = std::clamp(s * y[k], lo[k], hi[k]);
      acc += v * v;
    }
    return acc;
  };
  if (scaled_norm2(0.0) > r2)
    throw std::runtime_error("project: box and ball do not intersect");

  double s_lo = 0.0, s_hi = 1.0;
  for (int step = 0; step < 200 && s_hi - s_lo > 0.0; ++step) {
    const double mid = 0.5 * (s_lo + s_hi);
    if (mid <= s_lo || mid >= s_hi) break;
    if (scaled_norm2(mid) > r2)
      s_hi = mid;
    else
      s_lo = mid;
  }
  for (std::size_t k = 0; k < d; ++k) x[k] = std::clamp(s_lo * y[k], lo[k], hi[k]);
  return x;
}

}  // namespace detail

/// Box bounds intersected with at most one joint constraint g(a) >= 0.
class FeasibleSet {
 public:
  FeasibleSet(ProfileLayout layout, BoxBounds box, JointConstraint joint = NoJoint{})
      : layout_(std::move(layout)), box_(std::move(box)), joint_(std::move(joint)) {
    validate();
  }

  const ProfileLayout& layout() const { return layout_; }
  const BoxBounds& box() const { return box_; }
  const JointConstraint& joint() const { return joint_; }
  std::size_t size() const { return layout_.size(); }

  /// g(a); +infinity when there is no joint constraint.
  double constraint_value(std::span<const double> a) const {
    return std::visit(
        [&](const auto& j) -> double {
          using J = std::decay_t<decltype(j)>;
          if constexpr (std::is_same_v<J, AffineHalfspace>)
            return j.r - linalg::dot(j.w, a);
          else if constexpr (std::is_same_v<J, Ball>)
            return j.radius * j.radius - linalg::squared_norm(a);
          else
            return std::numeric_limits<double>::infinity();
        },
        joint_);
  }

  bool contains(std::span<const double> a, double tol = kMembershipTolerance) const {
    layout_.check_size(a.size(), "contains");
    if (tol < 0.0) throw std::invalid_argument("contains: negative tolerance");
    for (std::size_t k = 0; k < a.size(); ++k)
      if (!(a[k] >= box_.lower[k] - tol && a[k] <= box_.upper[k] + tol)) return false;
    return constraint_value(a) >= -tol;
  }

  /// Euclidean projection of y onto the set.
  Vector project(std::span<const double> y) const {
    layout_.check_size(y.size(), "project");
    if (!linalg::all_finite(y)) throw std::domain_error("project: non-finite input");
    return std::visit(
        [&](const auto& j) -> Vector {
          using J = std::decay_t<decltype(j)>;
          if constexpr (std::is_same_v<J, AffineHalfspace>) {
            return detail::project_box_halfspace(y, box_.lower, box_.upper, j.w, j.r);
          } else if constexpr (std::is_same_v<J, Ball>) {
            if (ball_inside_box()) {
              Vector x(y.begin(), y.end());
              const double n = linalg::norm(x);
              if (n > j.radius)
                for (double& v : x) v *= j.radius / n;
              detail::clip_into(x, box_.lower, box_.upper, x);
              return x;
            }
            return detail::project_box_ball(y, box_.lower, box_.upper, j.radius);
          } else {
            Vector x(y.size());
            detail::clip_into(y, box_.lower, box_.upper, x);
            return x;
          }
        },
        joint_);
  }

  /// True when the joint constraint is a ball contained in the box.
  bool ball_inside_box() const {
    const auto* ball = std::get_if<Ball>(&joint_);
    if (!ball) return false;
    for (std::size_t k = 0; k < size(); ++k)
      if (box_.lower[k] > -ball->radius || box_.upper[k] < ball->radius) return false;
    return true;
  }

  /// Euclidean diameter of the box.
  double diameter() const { return linalg::distance(box_.upper, box_.lower); }

  /// Player i's feasible set {b_i in box_i : g(b_i, a_-i) >= 0}, over block i only.
  FeasibleSet slice(std::size_t i, std::span<const double> a) const {
    layout_.check_player(i);
    layout_.check_size(a.size(), "slice");
    if (!contains(a, kMembershipTolerance))
      throw std::invalid_argument("slice: profile is not feasible");

    const std::size_t off = layout_.offset(i);
    const std::size_t m = layout_.dim(i);
    ProfileLayout single({m});
    BoxBounds box{Vector(box_.lower.begin() + off, box_.lower.begin() + off + m),
                  Vector(box_.upper.begin() + off, box_.upper.begin() + off + m)};

    JointConstraint joint = std::visit(
        [&](const auto& j) -> JointConstraint {
          using J = std::decay_t<decltype(j)>;
          if constexpr (std::is_same_v<J, AffineHalfspace>) {
            Vector w(j.w.begin() + off, j.w.begin() + off + m);
            double others = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k)
              if (k < off || k >= off + m) others += j.w[k] * a[k];
            if (linalg::squared_norm(w) == 0.0) return NoJoint{};
            return AffineHalfspace{std::move(w), j.r - others};
          } else if constexpr (std::is_same_v<J, Ball>) {
            double others = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k)
              if (k < off || k >= off + m) others += a[k] * a[k];
            return Ball{std::sqrt(std::max(0.0, j.radius * j.radius - others))};
          } else {
            return NoJoint{};
          }
        },
        joint_);
    return FeasibleSet(std::move(single), std::move(box), std::move(joint));
  }

 private:
  void validate() {
    layout_.check_size(box_.lower.size(), "FeasibleSet lower bounds");
    layout_.check_size(box_.upper.size(), "FeasibleSet upper bounds");
    if (!linalg::all_finite(box_.lower) || !linalg::all_finite(box_.upper))
      throw std::invalid_argument("FeasibleSet: non-finite box bound");
    for (std::size_t k = 0; k < box_.lower.size(); ++k)
      if (box_.lower[k] > box_.upper[k])
        throw std::invalid_argument("FeasibleSet: lower > upper at coordinate " + std::to_string(k));
    if (const auto* h = std::get_if<AffineHalfspace>(&joint_)) {
      layout_.check_size(h->w.size(), "AffineHalfspace weights");
      if (!linalg::all_finite(h->w) || !std::isfinite(h->r))
        throw std::invalid_argument("AffineHalfspace: non-finite parameter");
      if (linalg::squared_norm(h->w) == 0.0)
        throw std::invalid_argument("AffineHalfspace: zero normal");
    }
    if (const auto* b = std::get_if<Ball>(&joint_)) {
      if (!std::isfinite(b->radius) || b->radius < 0.0)
        throw std::invalid_argument("Ball: radius must be finite and nonnegative");
    }
    Vector center(size());
    for (std::size_t k = 0; k < size(); ++k) center[k] = 0.5 * (box_.lower[k] + box_.upper[k]);
    Vector p = project(center);  // throws on empty intersections
    if (!contains(p, kMembershipTolerance))
      throw std::invalid_argument("FeasibleSet: set is empty");
  }

  ProfileLayout layout_;
  BoxBounds box_;
  JointConstraint joint_;
};

inline bool contains(const FeasibleSet& s, const StrategyProfile& a, double tol) {
  return s.contains(a.values(), tol);
}

inline StrategyProfile project(const FeasibleSet& s, std::span<const double> y) {
  return StrategyProfile(s.layout(), s.project(y));
}

inline FeasibleSet slice(const FeasibleSet& s, std::size_t i, const StrategyProfile& a) {
  return s.slice(i, a.values());
}

/// Uniform draw over the box, projected onto the set.
inline StrategyProfile random_feasible(const FeasibleSet& s, Rng& rng) {
  Vector y(s.size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = uniform(rng, s.box().lower[k], s.box().upper[k]);
  return project(s, y);
}

}  // namespace gne
