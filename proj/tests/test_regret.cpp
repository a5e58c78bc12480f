#include <gtest/gtest.h>

#include <cmath>

#include "gne/regret.hpp"
#include "gne/solvers.hpp"
#include "oracles.hpp"

using namespace gne;

namespace {

GameSpec zs1_affine(double q = 1.0) {
  return GameSpec(BilinearZeroSum{Matrix(1, 1, {q})},
                  benchmark_feasible_set(ProfileLayout::uniform(2, 1), ConstraintKind::Affine));
}

std::vector<GameSpec> small_games(std::size_t m) {
  return {make_benchmark(Family::BilinearZeroSum, m, ConstraintKind::Affine, 11),
          make_benchmark(Family::BilinearZeroSum, m, ConstraintKind::Ball, 12),
          make_benchmark(Family::BilinearGeneralSum, m, ConstraintKind::Affine, 13),
          make_benchmark(Family::BilinearGeneralSum, m, ConstraintKind::Ball, 14),
          make_benchmark(Family::MonotoneNormMin, m, ConstraintKind::Affine, 15, 2),
          make_benchmark(Family::MonotoneNormMin, m, ConstraintKind::Ball, 16, 2)};
}

Vector feasible_point(const GameSpec& g, Rng& rng) { return random_feasible(g.feasible(), rng).vector(); }

Vector random_point(Rng& rng, std::size_t d, double scale) {
  Vector v(d);
  for (double& x : v) x = uniform(rng, -scale, scale);
  return v;
}

}  // namespace

TEST(Regret, VanishesOnDiagonal) {
  Rng rng(1);
  for (const auto& g : small_games(3)) {
    const Vector a = random_point(rng, g.layout().size(), 5);
    EXPECT_EQ(cumulative_regret(g, a, a), 0.0);
    EXPECT_EQ(regularized_regret(g, a, a, 0.7), 0.0);
  }
}

TEST(Regret, HandExamples) {
  const auto g = zs1_affine();
  EXPECT_DOUBLE_EQ(cumulative_regret(g, Vector{1, 0}, Vector{0, 1}), -1.0);
  EXPECT_DOUBLE_EQ(oracle::regret(g, Vector{1, 0}, Vector{0, 1}), -1.0);
  EXPECT_DOUBLE_EQ(regularized_regret(g, Vector{1, 0}, Vector{0, 1}, 0.1), -1.1);
  EXPECT_DOUBLE_EQ(regularized_regret(g, Vector{1, 0}, Vector{0, 1}, 0.0), -1.0);
  Rng rng(2);
  for (int k = 0; k < 20; ++k) EXPECT_EQ(cumulative_regret(g, Vector{0, 0}, random_point(rng, 2, 10)), 0.0);
  EXPECT_THROW(regularized_regret(g, Vector{1, 0}, Vector{0, 1}, -0.1), std::invalid_argument);
  EXPECT_THROW(cumulative_regret(g, Vector{1, 0}, Vector{0, 1, 2}), std::invalid_argument);
}

TEST(Regret, MatchesUtilityDefinition) {
  Rng rng(3);
  for (const auto& g : small_games(3)) {
    for (int k = 0; k < 50; ++k) {
      const Vector a = random_point(rng, g.layout().size(), 5), b = random_point(rng, g.layout().size(), 5);
      EXPECT_NEAR(cumulative_regret(g, a, b), oracle::regret(g, a, b), 1e-12 * (1 + std::abs(oracle::regret(g, a, b))));
    }
  }
}

TEST(RegretGradients, CancelOnDiagonal) {
  Rng rng(4);
  for (const auto& g : small_games(2)) {
    const auto& l = g.layout();
    const Vector a = random_point(rng, l.size(), 3);
    const auto rg = regret_gradients(g, a, a, 0.3);
    for (std::size_t j = 0; j < l.num_players(); ++j) {
      const Vector own = g.utility_grad(j, a, j);
      for (std::size_t k = 0; k < own.size(); ++k) EXPECT_NEAR(rg.wrt_a[l.offset(j) + k], -own[k], 1e-12);
    }
  }
}

TEST(RegretGradients, ZeroAtOrigin) {
  const auto rg = regret_gradients(zs1_affine(), Vector{0, 0}, Vector{0, 0}, 0.4);
  EXPECT_EQ(rg.wrt_a, (Vector{0, 0}));
  EXPECT_EQ(rg.wrt_b, (Vector{0, 0}));
}

TEST(RegretGradients, MatchFiniteDifferences) {
  Rng rng(5);
  for (const auto& g : small_games(3)) {
    const std::size_t d = g.layout().size();
    for (int k = 0; k < 30; ++k) {
      const Vector a = random_point(rng, d, 2), b = random_point(rng, d, 2);
      const double c = 0.1 * (k % 3);
      const auto rg = regret_gradients(g, a, b, c);
      const Vector fa = oracle::fd_gradient([&](const Vector& x) { return regularized_regret(g, x, b, c); }, a, 1e-6);
      const Vector fb = oracle::fd_gradient([&](const Vector& y) { return regularized_regret(g, a, y, c); }, b, 1e-6);
      for (std::size_t p = 0; p < d; ++p) {
        EXPECT_NEAR(rg.wrt_a[p], fa[p], 1e-5);
        EXPECT_NEAR(rg.wrt_b[p], fb[p], 1e-5);
      }
    }
  }
}

TEST(ExploitabilityVe, ZeroAtOrigin) {
  const auto r = exploitability_ve(zs1_affine(), Vector{0, 0});
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.flavor, Flavor::VE);
}

TEST(ExploitabilityVe, RejectsInfeasibleProfile) {
  EXPECT_THROW(exploitability_ve(zs1_affine(), Vector{1, 1}), std::invalid_argument);
  EXPECT_THROW(exploitability_gne(zs1_affine(), Vector{1, 1}), std::invalid_argument);
}

TEST(ExploitabilityVe, MatchesGridOnScalarGames) {
  Rng rng(6);
  for (const auto& g : small_games(1)) {
    for (int k = 0; k < 4; ++k) {
      const Vector a = feasible_point(g, rng);
      const auto r = exploitability_ve(g, a);
      EXPECT_NEAR(r.value, oracle::ve_grid_max(g, a), 2e-3) << to_string(g.family());
      EXPECT_TRUE(g.feasible().contains(r.maximizer.values(), 1e-9));
      EXPECT_NEAR(cumulative_regret(g, a, r.maximizer.vector()), r.value, 1e-12 * (1 + r.value));
    }
  }
}

TEST(ExploitabilityGne, MatchesJointGridOnScalarGames) {
  Rng rng(7);
  for (const auto& g : small_games(1)) {
    for (int k = 0; k < 4; ++k) {
      const Vector a = feasible_point(g, rng);
      const auto r = exploitability_gne(g, a);
      EXPECT_NEAR(r.value, oracle::gne_grid_max(g, a), 2e-3) << to_string(g.family());
      EXPECT_EQ(r.flavor, Flavor::GNE);
    }
  }
}

TEST(ExploitabilityGne, MaximizerLiesInEachSlice) {
  Rng rng(8);
  for (const auto& g : small_games(3)) {
    const Vector a = feasible_point(g, rng);
    const auto r = exploitability_gne(g, a);
    const StrategyProfile ap(g.layout(), a);
    for (std::size_t i = 0; i < g.layout().num_players(); ++i)
      EXPECT_TRUE(g.feasible().contains(replace_block(ap, i, r.maximizer.block(i)).values(), 1e-9));
  }
}

TEST(Exploitability, NonNegative) {
  Rng rng(9);
  for (const auto& g : small_games(3)) {
    for (int k = 0; k < 40; ++k) {
      const Vector a = feasible_point(g, rng);
      EXPECT_GE(exploitability_ve(g, a).value, -1e-6);
      EXPECT_GE(exploitability_gne(g, a).value, -1e-6);
    }
  }
}

TEST(Exploitability, GneMatchesVeNearEquilibrium) {
  // Last extragradient iterate on a small convex-concave instance.
  const auto g = make_benchmark(Family::BilinearZeroSum, 2, ConstraintKind::Affine, 3);
  Rng rng(10);
  const Vector a0 = feasible_point(g, rng);
  EdaConfig cfg;
  cfg.eta = 0.999 / g.lipschitz().grad_smoothness;
  cfg.iterations = 20000;
  cfg.record_every = 20000;
  const auto res = eda_run(g, cfg, a0, a0);
  const double ve = exploitability_ve(g, res.a).value;
  const double gne = exploitability_gne(g, res.a).value;
  EXPECT_LE(ve, 1e-5);
  EXPECT_NEAR(ve, gne, 1e-5);
}

TEST(Exploitability, CertifiesAgainstUnilateralDeviations) {
  Rng rng(11);
  for (const auto& g : small_games(3)) {
    const auto& l = g.layout();
    const Vector a = feasible_point(g, rng);
    const double phi = exploitability_ve(g, a).value;
    const StrategyProfile ap(l, a);
    for (int k = 0; k < 100; ++k) {
      const std::size_t i = k % l.num_players();
      const auto sl = slice(g.feasible(), i, ap);
      const Vector bi = sl.project(random_point(rng, l.dim(i), 10));
      const auto dev = replace_block(ap, i, bi);
      EXPECT_LE(g.utility(i, dev.values()) - g.utility(i, a), phi + 1e-6);
    }
  }
}

TEST(RegularizedExploitability, VanishesAtEquilibrium) {
  const auto r = regularized_exploitability(zs1_affine(2.0), Vector{0, 0}, 0.1);
  EXPECT_LE(r.report.value, 1e-8);
  EXPECT_LE(linalg::norm(r.report.maximizer.values()), 1e-6);
  EXPECT_EQ(r.report.flavor, Flavor::RegularizedVE);
}

TEST(RegularizedExploitability, RejectsNonPositiveC) {
  EXPECT_THROW(regularized_exploitability(zs1_affine(), Vector{0, 0}, 0.0), std::invalid_argument);
}

TEST(RegularizedExploitability, BelowPlainExploitability) {
  Rng rng(12);
  for (const auto& g : small_games(3)) {
    if (g.family() == Family::MonotoneNormMin) continue;  // nonsmooth inner problem
    for (int k = 0; k < 10; ++k) {
      const Vector a = feasible_point(g, rng);
      EXPECT_LE(regularized_exploitability(g, a, 0.1).report.value, exploitability_ve(g, a).value + 1e-6);
    }
  }
}

TEST(RegularizedExploitability, GradientMatchesFiniteDifferences) {
  Rng rng(13);
  OracleConfig tight;
  tight.stop_tol = 1e-12;
  tight.max_iterations = 100000;
  for (const auto& g : small_games(3)) {
    if (g.family() == Family::MonotoneNormMin) continue;
    for (int k = 0; k < 5; ++k) {
      const Vector a = feasible_point(g, rng);
      const Vector grad = regularized_exploitability(g, a, 0.1, tight).gradient;
      const Vector fd = oracle::fd_gradient(
          [&](const Vector& x) { return regularized_exploitability(g, x, 0.1, tight).report.value; }, a, 1e-5);
      EXPECT_LE(linalg::distance(grad, fd), 1e-4 * std::max(1.0, linalg::norm(fd)));
    }
  }
}

TEST(RegularizedExploitability, MaximizerIsUnique) {
  Rng rng(14);
  for (const auto& g : small_games(3)) {
    if (g.family() == Family::MonotoneNormMin) continue;
    const auto& S = g.feasible();
    const double c = 0.1;
    for (int k = 0; k < 5; ++k) {
      const Vector a = feasible_point(g, rng);
      const Vector b1 = regularized_exploitability(g, a, c).report.maximizer.vector();
      const auto other = detail::projected_ascent(
          [&](std::span<const double> b) { return regularized_regret(g, a, b, c); },
          [&](std::span<const double> b, std::span<double> out) { detail::regret_gradient_b(g, a, b, c, out); },
          [&](std::span<const double> y) { return S.project(y); }, feasible_point(g, rng),
          1.0 / (g.lipschitz().grad_smoothness + c), 20000, 1e-11);
      EXPECT_LE(linalg::distance(b1, other.x), 1e-6);
    }
  }
}

TEST(RegularizedExploitability, SmoothnessAndSolutionMapBounds) {
  Rng rng(15);
  const double c = 0.1;
  for (const auto& g : small_games(2)) {
    if (g.family() == Family::MonotoneNormMin) continue;
    const double L = g.lipschitz().grad_smoothness + c;
    for (int k = 0; k < 50; ++k) {
      const Vector x = feasible_point(g, rng);
      Vector y = x;
      const double scale = k % 2 ? 1e-2 : 3.0;
      for (double& v : y) v += uniform(rng, -scale, scale);
      y = g.feasible().project(y);
      const double dxy = linalg::distance(x, y);
      if (dxy < 1e-9) continue;
      const auto rx = regularized_exploitability(g, x, c), ry = regularized_exploitability(g, y, c);
      EXPECT_LE(linalg::distance(rx.gradient, ry.gradient) / dxy, (L + L * L / c) * (1 + 1e-3));
      EXPECT_LE(linalg::distance(rx.report.maximizer.values(), ry.report.maximizer.values()),
                (L / c) * dxy * (1 + 1e-3));
    }
  }
}

TEST(GradientMap, Examples) {
  const auto g = zs1_affine();
  const auto& S = g.feasible();
  EXPECT_EQ(gradient_map(S, Vector{-1, -2}, Vector{0, 0}, 0.5), (Vector{0, 0}));
  const Vector gm = gradient_map(S, Vector{-1, -2}, Vector{0.3, -0.2}, 0.01);
  EXPECT_NEAR(gm[0], 0.003, 1e-15);
  EXPECT_NEAR(gm[1], -0.002, 1e-15);
  Rng rng(16);
  for (int k = 0; k < 200; ++k) {
    const Vector a = feasible_point(g, rng), v = random_point(rng, 2, 50);
    const double eta = uniform(rng, 1e-3, 2);
    EXPECT_LE(linalg::norm(gradient_map(S, a, v, eta)), eta * linalg::norm(v) + 1e-10);
  }
}

TEST(InnerGapBound, CoversObservedGaps) {
  const auto g = make_benchmark(Family::BilinearZeroSum, 3, ConstraintKind::Affine, 2);
  const double c = 0.1, bound = inner_gap_bound(g, c);
  Rng rng(17);
  const Vector b0 = g.feasible().project(Vector(6, 0.0));
  for (int k = 0; k < 100; ++k) {
    const Vector a = feasible_point(g, rng), b = feasible_point(g, rng);
    EXPECT_LE(regularized_regret(g, a, b, c) - regularized_regret(g, a, b0, c), bound);
  }
}
