#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace gne {

using Vector = std::vector<double>;

// Dense helpers over contiguous double ranges. Sizes are the caller's
// responsibility; they are asserted, not checked.
namespace linalg {

inline double dot(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  return s;
}

inline double squared_norm(std::span<const double> x) { return dot(x, x); }

inline double norm(std::span<const double> x) { return std::sqrt(squared_norm(x)); }

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return s;
}

inline double distance(std::span<const double> x, std::span<const double> y) {
  return std::sqrt(squared_distance(x, y));
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += alpha * x[k];
}

inline Vector subtract(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  Vector out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] - y[k];
  return out;
}

inline bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace linalg

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, Vector data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw std::invalid_argument("Matrix: data length does not match shape");
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t k = 0; k < d.size(); ++k) m(k, k) = d[k];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }
  const Vector& data() const { return data_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  /// out = M x
  void multiply(std::span<const double> x, std::span<double> out) const {
    assert(x.size() == cols_ && out.size() == rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
      const double* row = data_.data() + r * cols_;
      double s = 0.0;
      for (std::size_t c = 0; c < cols_; ++c) s += row[c] * x[c];
      out[r] = s;
    }
  }

  /// out = M^T x
  void multiply_transposed(std::span<const double> x, std::span<double> out) const {
    assert(x.size() == rows_ && out.size() == cols_);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      const double* row = data_.data() + r * cols_;
      const double xr = x[r];
      for (std::size_t c = 0; c < cols_; ++c) out[c] += row[c] * xr;
    }
  }

  /// x^T M y
  double bilinear(std::span<const double> x, std::span<const double> y) const {
    assert(x.size() == rows_ && y.size() == cols_);
    double s = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      const double* row = data_.data() + r * cols_;
      double t = 0.0;
      for (std::size_t c = 0; c < cols_; ++c) t += row[c] * y[c];
      s += x[r] * t;
    }
    return s;
  }

  Matrix scaled(double factor) const {
    Matrix out = *this;
    for (double& v : out.data_) v *= factor;
    return out;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

/// Largest singular value of `m`, by power iteration on M^T M started from the
/// all-ones vector. Stops once the Rayleigh quotient changes by less than
/// 1e-14 relative, or after `max_iterations`.
inline double spectral_norm(const Matrix& m, std::size_t max_iterations = 10'000) {
  if (m.empty()) throw std::invalid_argument("spectral_norm: empty matrix");
  if (!linalg::all_finite(m.data()))
    throw std::domain_error("spectral_norm: non-finite entry");

  Vector v(m.cols(), 1.0 / std::sqrt(static_cast<double>(m.cols())));
  Vector mv(m.rows());
  Vector w(m.cols());

  auto apply = [&](const Vector& x) {
    m.multiply(x, mv);
    m.multiply_transposed(mv, w);
    return linalg::squared_norm(mv);  // x^T M^T M x for unit x
  };

  double lambda = apply(v);
  if (linalg::norm(w) == 0.0) {
    // The ones vector lies in the null space of M^T M; fall back to the
    // canonical basis before declaring the matrix zero.
    for (std::size_t k = 0; k < m.cols() && linalg::norm(w) == 0.0; ++k) {
      std::fill(v.begin(), v.end(), 0.0);
      v[k] = 1.0;
      lambda = apply(v);
    }
    if (linalg::norm(w) == 0.0) return 0.0;
  }

  for (std::size_t it = 0; it < max_iterations; ++it) {
    const double wn = linalg::norm(w);
    if (wn == 0.0) break;
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = w[k] / wn;
    const double next = apply(v);
    const bool done = std::abs(next - lambda) <= 1e-14 * std::max(next, 1e-300);
    lambda = next;
    if (done) break;
  }
  return std::sqrt(lambda);
}

}  // namespace gne
