#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "gne/linalg.hpp"
#include "gne/profile.hpp"
#include "gne/random.hpp"

using namespace gne;

TEST(Layout, OffsetsArePrefixSums) {
  ProfileLayout l(std::vector<std::size_t>{2, 1, 3});
  EXPECT_EQ(l.num_players(), 3u);
  EXPECT_EQ(l.offset(0), 0u);
  EXPECT_EQ(l.offset(1), 2u);
  EXPECT_EQ(l.offset(2), 3u);
  EXPECT_EQ(l.size(), 6u);
}

TEST(Layout, RejectsEmptyOrZeroBlocks) {
  EXPECT_THROW(ProfileLayout(std::vector<std::size_t>{}), std::invalid_argument);
  EXPECT_THROW(ProfileLayout(std::vector<std::size_t>{2, 0}), std::invalid_argument);
}

TEST(Profile, BlockReadsPlayerSlice) {
  StrategyProfile a(ProfileLayout::uniform(2, 1), {3, 5});
  EXPECT_EQ(block(a, 0), Vector{3});
  StrategyProfile b(ProfileLayout::uniform(2, 2), {1, 2, 3, 4});
  EXPECT_EQ(block(b, 1), (Vector{3, 4}));
  EXPECT_THROW(block(b, 2), std::out_of_range);
}

TEST(Profile, WritesThroughBlockTouchOnlyThatSlice) {
  StrategyProfile a(ProfileLayout::uniform(3, 2), {1, 2, 3, 4, 5, 6});
  auto b1 = a.block(1);
  b1[0] = -3;
  EXPECT_EQ(a.vector(), (Vector{1, 2, -3, 4, 5, 6}));
  const Vector v{7, 8};
  a.set_block(2, v);
  EXPECT_EQ(a.vector(), (Vector{1, 2, -3, 4, 7, 8}));
  const Vector bad{1};
  EXPECT_THROW(a.set_block(0, bad), std::invalid_argument);
}

TEST(Profile, ReplaceBlock) {
  StrategyProfile a(ProfileLayout::uniform(2, 1), {1, 2});
  const Vector nine{9}, seven{7}, two{1, 2};
  EXPECT_EQ(replace_block(a, 0, nine).vector(), (Vector{9, 2}));
  EXPECT_EQ(replace_block(a, 1, seven).vector(), (Vector{1, 7}));
  EXPECT_THROW(replace_block(a, 0, two), std::invalid_argument);
  EXPECT_EQ(a.vector(), (Vector{1, 2}));
}

TEST(Profile, ReplaceWithOwnBlockIsBitwiseIdentity) {
  Rng rng(3);
  ProfileLayout l(std::vector<std::size_t>{3, 1, 4});
  Vector v(l.size());
  for (double& x : v) x = uniform(rng, -1e3, 1e3);
  StrategyProfile a(l, v);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(replace_block(a, i, block(a, i)) == a);
}

TEST(Profile, RejectsBadValues) {
  EXPECT_THROW(StrategyProfile(ProfileLayout::uniform(2, 1), {1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(StrategyProfile(ProfileLayout::uniform(2, 1), {1, std::nan("")}),
               std::domain_error);
}

TEST(SpectralNorm, Diagonal) {
  const Vector d{3, 4};
  EXPECT_NEAR(spectral_norm(Matrix::diagonal(d)), 4.0, 1e-10);
}

TEST(SpectralNorm, Nilpotent) {
  EXPECT_NEAR(spectral_norm(Matrix(2, 2, {0, 1, 0, 0})), 1.0, 1e-10);
}

TEST(SpectralNorm, ZeroMatrix) { EXPECT_EQ(spectral_norm(Matrix(3, 3)), 0.0); }

TEST(SpectralNorm, RejectsNonFiniteAndEmpty) {
  EXPECT_THROW(spectral_norm(Matrix(1, 1, {std::numeric_limits<double>::infinity()})),
               std::domain_error);
  EXPECT_THROW(spectral_norm(Matrix(0, 0)), std::invalid_argument);
}

static Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = uniform(rng, -1, 1);
  return m;
}

TEST(SpectralNorm, MatchesSvd) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = 1 + trial % 7, c = 1 + (trial * 3) % 6;
    const Matrix m = trial < 10 ? random_matrix(rng, 5, 5) : random_matrix(rng, r, c);
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    const double ref = Eigen::JacobiSVD<Eigen::MatrixXd>(e).singularValues()(0);
    EXPECT_NEAR(spectral_norm(m), ref, 1e-8) << "trial " << trial;
  }
}

TEST(SpectralNorm, BoundsMatrixVectorProducts) {
  Rng rng(5);
  const Matrix m = random_matrix(rng, 6, 6);
  const double s = spectral_norm(m);
  Vector x(6), y(6);
  for (int k = 0; k < 100; ++k) {
    for (double& v : x) v = uniform(rng, -3, 3);
    m.multiply(x, y);
    EXPECT_LE(linalg::norm(y), s * linalg::norm(x) + 1e-8);
  }
}

TEST(SpectralNorm, Homogeneous) {
  Rng rng(6);
  const Matrix m = random_matrix(rng, 4, 4);
  const double s = spectral_norm(m);
  for (double c : {2.0, -0.5, 13.0}) EXPECT_NEAR(spectral_norm(m.scaled(c)), std::abs(c) * s, 1e-9 * std::abs(c) * s);
}
