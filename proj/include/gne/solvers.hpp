#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gne/errors.hpp"
#include "gne/feasible_set.hpp"
#include "gne/games.hpp"
#include "gne/regret.hpp"

namespace gne {

enum class Algorithm { EDA, ADA };

/// Where ADA's inner ascent starts each outer step: proj(0), or the previous b.
enum class InnerInit { ZeroProjected, WarmStart };

inline std::string to_string(Algorithm a) { return a == Algorithm::EDA ? "eda" : "ada"; }

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "eda") return Algorithm::EDA;
  if (s == "ada") return Algorithm::ADA;
  throw std::invalid_argument("unknown solver '" + s + "' (expected eda or ada)");
}

/// Iterates farther than this from the origin abort a run.
inline constexpr double kDivergenceRadius = 1e6;

struct TraceRow {
  std::size_t iteration = 0;
  Vector profile;
  Vector deviation;
  double exploitability = 0.0;  // VE exploitability of `profile`
  double grad_map_norm = 0.0;
  double wall_time = 0.0;  // seconds since the run started
};

/// Called once per recorded iteration; must not touch solver state.
using Recorder = std::function<void(const TraceRow&)>;

/// Record every iteration up to T = 100, otherwise every T/100-th.
inline std::size_t default_record_every(std::size_t iterations) {
  return iterations <= 100 ? 1 : iterations / 100;
}

struct EdaConfig {
  double eta = 0.0;
  std::size_t iterations = 0;
  /// Trace rows (and the reported profile) use running averages over t = 1..T.
  bool record_average = true;
  std::size_t record_every = 0;  // 0: default_record_every(iterations)
  OracleConfig oracle;
};

struct EdaResult {
  Vector a, b;          // last iterates
  Vector a_avg, b_avg;  // (1/T) sum_{t=1..T}
  std::vector<TraceRow> trace;
};

struct AdaConfig {
  double eta_a = 0.0;
  double eta_b = 0.0;
  double c = 0.1;
  std::size_t outer_iterations = 0;
  std::size_t inner_iterations = 0;
  InnerInit inner_init = InnerInit::ZeroProjected;
  /// When positive, the inner loop also stops once its gradient-map norm drops
  /// below this value. Zero runs exactly inner_iterations steps.
  double inner_tolerance = 0.0;
  std::size_t record_every = 0;
  OracleConfig oracle;
};

struct AdaResult {
  Vector a, b;
  std::size_t best_iteration = 0;  // argmin over recorded t of |G(a^t)|^2
  Vector best_profile;
  double best_grad_map_norm = std::numeric_limits<double>::infinity();
  std::size_t min_exploitability_iteration = 0;
  Vector min_exploitability_profile;
  double min_exploitability = std::numeric_limits<double>::infinity();
  bool inner_converged = true;
  double max_inner_residual = 0.0;
  std::vector<TraceRow> trace;
};

namespace detail {

inline void check_iterate(std::span<const double> x, std::size_t t, const char* what) {
  if (!linalg::all_finite(x) || linalg::norm(x) > kDivergenceRadius)
    throw DivergenceError(std::string(what) + ": iterate diverged at iteration " +
                          std::to_string(t) + " (step size too large?)");
}

inline bool should_record(std::size_t t, std::size_t total, std::size_t every) {
  return t == 0 || t == total || t % every == 0;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

template <PseudoGame G>
void require_feasible_start(const G& game, std::span<const double> x, const char* what) {
  game.layout().check_size(x.size(), what);
  if (!game.feasible().contains(x, kMembershipTolerance))
    throw std::invalid_argument(std::string(what) + " is not feasible");
}

}  // namespace detail

/// Extragradient descent-ascent on psi over A x A.
template <PseudoGame G>
EdaResult eda_run(const G& game, const EdaConfig& cfg, std::span<const double> a0,
                  std::span<const double> b0, const Recorder& recorder = {}) {
  if (!(cfg.eta > 0.0)) throw std::invalid_argument("eda_run: eta must be > 0");
  if (cfg.iterations == 0) throw std::invalid_argument("eda_run: iterations must be >= 1");
  detail::require_feasible_start(game, a0, "eda_run: a0");
  detail::require_feasible_start(game, b0, "eda_run: b0");

  const FeasibleSet& S = game.feasible();
  const std::size_t d = a0.size();
  const std::size_t T = cfg.iterations;
  const std::size_t every = cfg.record_every ? cfg.record_every : default_record_every(T);
  const double eta = cfg.eta;
  detail::Stopwatch clock;

  EdaResult out;
  out.a.assign(a0.begin(), a0.end());
  out.b.assign(b0.begin(), b0.end());
  Vector sum_a(d, 0.0), sum_b(d, 0.0), y(d);

  auto step = [&](const Vector& from, const Vector& dir, double sign) {
    for (std::size_t k = 0; k < d; ++k) y[k] = from[k] + sign * eta * dir[k];
    return S.project(y);
  };

  auto record = [&](std::size_t t) {
    TraceRow row;
    row.iteration = t;
    if (cfg.record_average && t > 0) {
      row.profile.resize(d);
      row.deviation.resize(d);
      for (std::size_t k = 0; k < d; ++k) {
        row.profile[k] = sum_a[k] / static_cast<double>(t);
        row.deviation[k] = sum_b[k] / static_cast<double>(t);
      }
      // Averages of feasible points are feasible up to rounding.
      row.profile = S.project(row.profile);
      row.deviation = S.project(row.deviation);
    } else {
      row.profile = out.a;
      row.deviation = out.b;
    }
    row.exploitability = exploitability_ve(game, row.profile, cfg.oracle).value;
    const Vector ga = regret_gradients(game, row.profile, row.deviation, 0.0).wrt_a;
    row.grad_map_norm = linalg::norm(gradient_map(S, row.profile, ga, eta));
    row.wall_time = clock.seconds();
    if (recorder) recorder(row);
    out.trace.push_back(std::move(row));
  };

  record(0);
  for (std::size_t t = 1; t <= T; ++t) {
    RegretGradient g = regret_gradients(game, out.a, out.b, 0.0);
    const Vector a_half = step(out.a, g.wrt_a, -1.0);
    const Vector b_half = step(out.b, g.wrt_b, +1.0);
    g = regret_gradients(game, a_half, b_half, 0.0);
    out.a = step(out.a, g.wrt_a, -1.0);
    out.b = step(out.b, g.wrt_b, +1.0);
    detail::check_iterate(out.a, t, "eda_run");
    detail::check_iterate(out.b, t, "eda_run");
    linalg::axpy(1.0, out.a, sum_a);
    linalg::axpy(1.0, out.b, sum_b);
    if (detail::should_record(t, T, every)) record(t);
  }

  out.a_avg.resize(d);
  out.b_avg.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    out.a_avg[k] = sum_a[k] / static_cast<double>(T);
    out.b_avg[k] = sum_b[k] / static_cast<double>(T);
  }
  out.a_avg = S.project(out.a_avg);
  out.b_avg = S.project(out.b_avg);
  return out;
}

/// Augmented descent-ascent: projected descent on the regularized regret in a,
/// with an inner projected ascent of inner_iterations steps approximating the
/// regularized best response b*(a).
template <PseudoGame G>
AdaResult ada_run(const G& game, const AdaConfig& cfg, std::span<const double> a0,
                  std::span<const double> b0, const Recorder& recorder = {}) {
  if (!(cfg.eta_a > 0.0) || !(cfg.eta_b > 0.0))
    throw std::invalid_argument("ada_run: step sizes must be > 0");
  if (!(cfg.c > 0.0)) throw std::invalid_argument("ada_run: c must be > 0");
  if (cfg.outer_iterations == 0 || cfg.inner_iterations == 0)
    throw std::invalid_argument("ada_run: iteration counts must be >= 1");
  detail::require_feasible_start(game, a0, "ada_run: a0");
  detail::require_feasible_start(game, b0, "ada_run: b0");

  const FeasibleSet& S = game.feasible();
  const std::size_t d = a0.size();
  const std::size_t T = cfg.outer_iterations;
  const std::size_t every = cfg.record_every ? cfg.record_every : default_record_every(T);
  const double c = cfg.c;
  detail::Stopwatch clock;

  OracleConfig diag = cfg.oracle;
  diag.require_convergence = false;

  AdaResult out;
  out.a.assign(a0.begin(), a0.end());
  out.b.assign(b0.begin(), b0.end());
  const Vector zero_start = S.project(Vector(d, 0.0));
  Vector y(d), g(d);

  auto record = [&](std::size_t t) {
    TraceRow row;
    row.iteration = t;
    row.profile = out.a;
    row.deviation = out.b;
    const auto reg = regularized_exploitability(game, out.a, c, diag);
    const double gm = linalg::norm(gradient_map(S, out.a, reg.gradient, cfg.eta_a));
    row.grad_map_norm = gm;
    row.exploitability = exploitability_ve(game, out.a, cfg.oracle).value;
    row.wall_time = clock.seconds();
    if (gm < out.best_grad_map_norm) {
      out.best_grad_map_norm = gm;
      out.best_iteration = t;
      out.best_profile = out.a;
    }
    if (row.exploitability < out.min_exploitability) {
      out.min_exploitability = row.exploitability;
      out.min_exploitability_iteration = t;
      out.min_exploitability_profile = out.a;
    }
    if (recorder) recorder(row);
    out.trace.push_back(std::move(row));
  };

  record(0);
  for (std::size_t t = 1; t <= T; ++t) {
    // Outer: a <- proj[a - eta_a (grad_a psi(a, b) - c (a - b))]
    const Vector ga = regret_gradients(game, out.a, out.b, c).wrt_a;
    for (std::size_t k = 0; k < d; ++k) y[k] = out.a[k] - cfg.eta_a * ga[k];
    out.a = S.project(y);
    detail::check_iterate(out.a, t, "ada_run");

    // Inner: b <- proj[b + eta_b (grad_b psi(a, b) + c (a - b))]
    Vector b = cfg.inner_init == InnerInit::WarmStart ? out.b : zero_start;
    double residual = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < cfg.inner_iterations; ++s) {
      detail::regret_gradient_b(game, out.a, b, c, g);
      for (std::size_t k = 0; k < d; ++k) y[k] = b[k] + cfg.eta_b * g[k];
      Vector next = S.project(y);
      residual = linalg::distance(next, b) / cfg.eta_b;
      b = std::move(next);
      if (cfg.inner_tolerance > 0.0 && residual <= cfg.inner_tolerance) break;
    }
    detail::regret_gradient_b(game, out.a, b, c, g);
    for (std::size_t k = 0; k < d; ++k) y[k] = b[k] + cfg.eta_b * g[k];
    residual = linalg::distance(S.project(y), b) / cfg.eta_b;
    out.max_inner_residual = std::max(out.max_inner_residual, residual);
    if (residual > 1e3 * cfg.oracle.stop_tol) out.inner_converged = false;
    out.b = std::move(b);
    detail::check_iterate(out.b, t, "ada_run");

    if (detail::should_record(t, T, every)) record(t);
  }
  return out;
}

struct StepDefaults {
  double eta = 0.0;    // EDA
  double eta_a = 0.0;  // ADA outer
  double eta_b = 0.0;  // ADA inner
  std::size_t inner_iterations = 0;
};

/// Fixed steps for the nonsmooth norm-min family.
inline constexpr double kSurrogateEta = 0.02;
inline constexpr double kSurrogateEtaA = 0.02;
inline constexpr double kSurrogateEtaB = 0.05;
inline constexpr std::size_t kSurrogateInnerIterations = 50;

/// Inner ascent steps that bound |grad phi_c(a) - grad_a psi_c(a, b_T)| by eps.
/// With step 1/L_c on a c-strongly concave, L_c-smooth objective the optimality
/// gap contracts by (1 - c/L_c) per step, the gap from the start is at most
/// `gap_bound`, and |b - b*|^2 <= (2/c) * gap, so
///   T >= 2 log(eps / (L_c sqrt(2 gap_bound / c))) / log(1 - c/L_c).
inline std::size_t inner_iterations_bound(double smoothness_c, double c, double gap_bound,
                                          double eps) {
  if (!(c > 0.0) || !(smoothness_c >= c) || !(eps > 0.0) || !(gap_bound > 0.0))
    throw std::invalid_argument("inner_iterations_bound: need c > 0, L_c >= c, eps > 0, gap > 0");
  const double target = eps / (smoothness_c * std::sqrt(2.0 * gap_bound / c));
  if (target >= 1.0) return 1;
  const double rate = 1.0 - c / smoothness_c;
  if (rate <= 0.0) return 1;
  return static_cast<std::size_t>(std::ceil(2.0 * std::log(target) / std::log(rate)));
}

template <PseudoGame G>
StepDefaults default_steps(const G& game, Algorithm algorithm, std::optional<double> c = {},
                           double eps = 1e-3) {
  const LipschitzEstimate lip = game.lipschitz();
  StepDefaults out;
  if (algorithm == Algorithm::ADA && !c) throw std::invalid_argument("default_steps: ADA needs c");
  if (c && !(*c > 0.0)) throw std::invalid_argument("default_steps: c must be > 0");
  if (lip.surrogate) {
    out.eta = kSurrogateEta;
    out.eta_a = kSurrogateEtaA;
    out.eta_b = kSurrogateEtaB;
    out.inner_iterations = kSurrogateInnerIterations;
    return out;
  }
  const double L = lip.grad_smoothness;
  out.eta = std::min(1.0 / L, 0.999 / L);
  if (c) {
    const double Lc = L + *c;
    out.eta_a = 1.0 / (Lc + Lc * Lc / *c);
    out.eta_b = 1.0 / Lc;
    out.inner_iterations = inner_iterations_bound(Lc, *c, inner_gap_bound(game, *c), eps);
  }
  return out;
}

struct RestartPolicy {
  std::size_t max_restarts = 20;
  double threshold = 1e-2;
};

struct SolverSettings {
  Algorithm algorithm = Algorithm::EDA;
  EdaConfig eda;
  AdaConfig ada;
};

struct RunRecord {
  std::size_t restart_index = 0;
  Vector start;
  Vector final_profile;  // EDA: averaged (or last) iterate; ADA: best-stationarity iterate
  double final_exploitability = 0.0;
  double best_grad_map_norm = 0.0;
  std::vector<TraceRow> trace;
};

struct RestartResult {
  std::vector<RunRecord> runs;
  std::size_t best_run = 0;  // lowest final exploitability
  std::size_t restarts = 0;  // runs.size() - 1
  bool converged = false;
};

/// Runs one solver from a random feasible start (b0 = a0), returning the
/// reported profile and its VE exploitability.
template <PseudoGame G>
RunRecord solve_once(const G& game, const SolverSettings& settings, std::span<const double> start,
                     std::size_t restart_index = 0, const Recorder& recorder = {}) {
  RunRecord run;
  run.restart_index = restart_index;
  run.start.assign(start.begin(), start.end());
  if (settings.algorithm == Algorithm::EDA) {
    EdaResult r = eda_run(game, settings.eda, start, start, recorder);
    run.final_profile = settings.eda.record_average ? r.a_avg : r.a;
    run.final_exploitability = exploitability_ve(game, run.final_profile, settings.eda.oracle).value;
    run.best_grad_map_norm = std::numeric_limits<double>::infinity();
    for (const auto& row : r.trace)
      run.best_grad_map_norm = std::min(run.best_grad_map_norm, row.grad_map_norm);
    run.trace = std::move(r.trace);
  } else {
    AdaResult r = ada_run(game, settings.ada, start, start, recorder);
    run.final_profile = r.best_profile;
    run.final_exploitability = exploitability_ve(game, run.final_profile, settings.ada.oracle).value;
    run.best_grad_map_norm = r.best_grad_map_norm;
    run.trace = std::move(r.trace);
  }
  return run;
}

/// Re-runs the solver from fresh random feasible starts until the reported
/// profile's exploitability is at most the threshold, or max_restarts is used up.
template <PseudoGame G>
RestartResult restart_solve(const G& game, const SolverSettings& settings,
                            const RestartPolicy& policy, Rng& rng,
                            const std::function<void(std::size_t, const TraceRow&)>& recorder = {}) {
  RestartResult out;
  for (std::size_t r = 0; r <= policy.max_restarts; ++r) {
    const StrategyProfile start = random_feasible(game.feasible(), rng);
    Recorder rec;
    if (recorder) rec = [&recorder, r](const TraceRow& row) { recorder(r, row); };
    out.runs.push_back(solve_once(game, settings, start.values(), r, rec));
    const RunRecord& run = out.runs.back();
    if (run.final_exploitability < out.runs[out.best_run].final_exploitability)
      out.best_run = out.runs.size() - 1;
    if (run.final_exploitability <= policy.threshold) {
      out.converged = true;
      break;
    }
  }
  out.restarts = out.runs.size() - 1;
  return out;
}

}  // namespace gne
