#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gne/linalg.hpp"

namespace gne {

/// Per-player block structure of a flat strategy profile.
class ProfileLayout {
 public:
  ProfileLayout() : ProfileLayout(std::vector<std::size_t>{1}) {}

  explicit ProfileLayout(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw std::invalid_argument("ProfileLayout: need at least one player");
    offsets_.resize(dims_.size() + 1, 0);
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (dims_[i] == 0) throw std::invalid_argument("ProfileLayout: block size must be >= 1");
      offsets_[i + 1] = offsets_[i] + dims_[i];
    }
  }

  static ProfileLayout uniform(std::size_t num_players, std::size_t dim) {
    return ProfileLayout(std::vector<std::size_t>(num_players, dim));
  }

  std::size_t num_players() const { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t offset(std::size_t i) const { return offsets_.at(i); }
  std::size_t size() const { return offsets_.back(); }
  const std::vector<std::size_t>& dims() const { return dims_; }

  void check_player(std::size_t i) const {
    if (i >= dims_.size())
      throw std::out_of_range("player index " + std::to_string(i) + " out of range for " +
                              std::to_string(dims_.size()) + " players");
  }

  void check_size(std::size_t n, const char* what) const {
    if (n != size())
      throw std::invalid_argument(std::string(what) + ": expected length " +
                                  std::to_string(size()) + ", got " + std::to_string(n));
  }

  /// Block i of a flat vector laid out by this layout.
  template <class T>
  std::span<T> block_of(std::span<T> values, std::size_t i) const {
    check_player(i);
    return values.subspan(offsets_[i], dims_[i]);
  }

  bool operator==(const ProfileLayout&) const = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
};

/// Flat vector of every player's action, addressed by player block.
class StrategyProfile {
 public:
  explicit StrategyProfile(ProfileLayout layout)
      : layout_(std::move(layout)), values_(layout_.size(), 0.0) {}

  StrategyProfile(ProfileLayout layout, Vector values)
      : layout_(std::move(layout)), values_(std::move(values)) {
    layout_.check_size(values_.size(), "StrategyProfile");
    if (!linalg::all_finite(values_))
      throw std::domain_error("StrategyProfile: non-finite entry");
  }

  const ProfileLayout& layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }
  const Vector& vector() const { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }

  std::span<const double> block(std::size_t i) const {
    return layout_.block_of(std::span<const double>(values_), i);
  }
  std::span<double> block(std::size_t i) { return layout_.block_of(std::span<double>(values_), i); }

  void set_block(std::size_t i, std::span<const double> b) {
    auto dst = block(i);
    if (b.size() != dst.size())
      throw std::invalid_argument("set_block: block " + std::to_string(i) + " has length " +
                                  std::to_string(dst.size()) + ", got " +
                                  std::to_string(b.size()));
    std::copy(b.begin(), b.end(), dst.begin());
  }

  bool operator==(const StrategyProfile&) const = default;

 private:
  ProfileLayout layout_;
  Vector values_;
};

inline Vector block(const StrategyProfile& profile, std::size_t i) {
  auto b = profile.block(i);
  return {b.begin(), b.end()};
}

/// Copy of `a` with player i's block replaced by `b_i`: the profile (b_i, a_-i).
inline StrategyProfile replace_block(const StrategyProfile& a, std::size_t i,
                                     std::span<const double> b_i) {
  StrategyProfile out = a;
  out.set_block(i, b_i);
  return out;
}

}  // namespace gne
