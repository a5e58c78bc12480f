#pragma once

// Experiment harness: config parsing, trace/summary files, seed sweeps.

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gne/game_json.hpp"
#include "gne/games.hpp"
#include "gne/solvers.hpp"
#include "gne/version.hpp"

namespace gne::bench {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kOk = 0, kConfigError = 1, kDivergence = 2, kIoFailure = 3 };

struct ExperimentConfig {
  Family game = Family::BilinearZeroSum;
  std::size_t m = 10;
  std::size_t n = 2;
  ConstraintKind constraint = ConstraintKind::Affine;
  std::uint64_t game_seed = 0;
  std::uint64_t init_seed = 0;

  Algorithm solver = Algorithm::EDA;
  std::optional<double> eta, eta_a, eta_b;  // unset: default_steps
  double c = 0.1;
  std::size_t iters = 50;
  std::optional<std::size_t> inner_iters;
  InnerInit inner_init = InnerInit::ZeroProjected;
  bool record_average = true;
  std::size_t record_every = 0;

  std::size_t max_restarts = 0;
  double threshold = 1e-2;

  std::size_t oracle_max_iters = 5000;
  double oracle_tol = 1e-10;

  std::string out_dir = ".";
  std::string name = "run";
};

/// Raw key=value pairs in application order; later entries win.
using Overrides = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty() || !std::isfinite(x))
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  errno = 0;
  const unsigned long long x = std::strtoull(v.c_str(), nullptr, 10);
  if (errno == ERANGE) throw ConfigError(key + ": value out of range");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

// Explicit seeds beat the `seed` shorthand regardless of order.
struct SeedState {
  std::optional<std::uint64_t> seed, game, init;
};

inline void apply(ExperimentConfig& cfg, SeedState& seeds, const std::string& key,
                  const std::string& v) {
  try {
    if (key == "game") cfg.game = parse_family(v);
    else if (key == "m") cfg.m = to_uint(key, v);
    else if (key == "n") cfg.n = to_uint(key, v);
    else if (key == "constraint") cfg.constraint = parse_constraint(v);
    else if (key == "seed") seeds.seed = to_uint(key, v);
    else if (key == "game_seed") seeds.game = to_uint(key, v);
    else if (key == "init_seed") seeds.init = to_uint(key, v);
    else if (key == "solver") cfg.solver = parse_algorithm(v);
    else if (key == "eta") cfg.eta = to_double(key, v);
    else if (key == "eta_a") cfg.eta_a = to_double(key, v);
    else if (key == "eta_b") cfg.eta_b = to_double(key, v);
    else if (key == "c") cfg.c = to_double(key, v);
    else if (key == "iters") cfg.iters = to_uint(key, v);
    else if (key == "inner_iters") cfg.inner_iters = to_uint(key, v);
    else if (key == "inner_init") {
      if (v == "zero") cfg.inner_init = InnerInit::ZeroProjected;
      else if (v == "warm") cfg.inner_init = InnerInit::WarmStart;
      else throw ConfigError("inner_init: expected zero or warm, got '" + v + "'");
    }
    else if (key == "record_average") cfg.record_average = to_bool(key, v);
    else if (key == "record_every") cfg.record_every = to_uint(key, v);
    else if (key == "max_restarts") cfg.max_restarts = to_uint(key, v);
    else if (key == "threshold") cfg.threshold = to_double(key, v);
    else if (key == "oracle_max_iters") cfg.oracle_max_iters = to_uint(key, v);
    else if (key == "oracle_tol") cfg.oracle_tol = to_double(key, v);
    else if (key == "out_dir") cfg.out_dir = v;
    else if (key == "name") cfg.name = v;
    else throw ConfigError("unknown key '" + key + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace detail

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.iters == 0) throw ConfigError("iters must be >= 1");
  if (cfg.m == 0) throw ConfigError("m must be >= 1");
  if (cfg.n == 0) throw ConfigError("n must be >= 1");
  if (cfg.game != Family::MonotoneNormMin && cfg.n != 2)
    throw ConfigError("bilinear games are two-player (n = 2)");
  if (!(cfg.c > 0.0)) throw ConfigError("c must be > 0");
  for (const auto* e : {&cfg.eta, &cfg.eta_a, &cfg.eta_b})
    if (*e && !(**e > 0.0)) throw ConfigError("step sizes must be > 0");
  if (cfg.inner_iters && *cfg.inner_iters == 0) throw ConfigError("inner_iters must be >= 1");
  if (cfg.oracle_max_iters == 0) throw ConfigError("oracle_max_iters must be >= 1");
  if (!(cfg.oracle_tol > 0.0)) throw ConfigError("oracle_tol must be > 0");
  if (!(cfg.threshold >= 0.0)) throw ConfigError("threshold must be >= 0");
  if (cfg.name.empty() || cfg.name.find('/') != std::string::npos)
    throw ConfigError("name must be a plain file stem");
}

/// Reads `key = value` lines ('#' starts a comment). Each line is checked
/// here so errors carry line numbers.
inline Overrides read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Overrides out;
  ExperimentConfig probe;
  detail::SeedState probe_seeds;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    try {
      detail::apply(probe, probe_seeds, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

/// Applies overrides on top of the defaults and validates the result.
inline ExperimentConfig parse_config(const Overrides& overrides) {
  ExperimentConfig cfg;
  detail::SeedState seeds;
  for (const auto& [k, v] : overrides) {
    try {
      detail::apply(cfg, seeds, k, v);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("--") + k + ": " + e.what());
    }
  }
  const std::uint64_t base = seeds.seed.value_or(0);
  cfg.game_seed = seeds.game.value_or(base);
  cfg.init_seed = seeds.init.value_or(base);
  validate(cfg);
  return cfg;
}

/// Config file (optional) first, then flag overrides.
inline ExperimentConfig parse_config(const std::optional<std::string>& path, const Overrides& flags) {
  Overrides all;
  if (path) all = read_config_file(*path);
  all.insert(all.end(), flags.begin(), flags.end());
  return parse_config(all);
}

/// Everything a run needs, with auto values filled in.
struct ResolvedExperiment {
  ExperimentConfig config;
  GameSpec game;
  SolverSettings settings;
  RestartPolicy policy;
};

inline ResolvedExperiment resolve(const ExperimentConfig& cfg) {
  validate(cfg);
  GameSpec game = make_benchmark(cfg.game, cfg.m, cfg.constraint, cfg.game_seed, cfg.n);
  const StepDefaults d = default_steps(
      game, cfg.solver, cfg.solver == Algorithm::ADA ? std::optional<double>(cfg.c) : std::nullopt);

  OracleConfig oracle;
  oracle.max_iterations = cfg.oracle_max_iters;
  oracle.stop_tol = cfg.oracle_tol;

  SolverSettings s;
  s.algorithm = cfg.solver;
  s.eda.eta = cfg.eta.value_or(d.eta);
  s.eda.iterations = cfg.iters;
  s.eda.record_average = cfg.record_average;
  s.eda.record_every = cfg.record_every;
  s.eda.oracle = oracle;
  s.ada.eta_a = cfg.eta_a.value_or(d.eta_a);
  s.ada.eta_b = cfg.eta_b.value_or(d.eta_b);
  s.ada.c = cfg.c;
  s.ada.outer_iterations = cfg.iters;
  s.ada.inner_iterations = cfg.inner_iters.value_or(d.inner_iterations);
  s.ada.inner_init = cfg.inner_init;
  s.ada.record_every = cfg.record_every;
  s.ada.oracle = oracle;

  RestartPolicy policy{cfg.max_restarts, cfg.threshold};
  return ResolvedExperiment{cfg, std::move(game), s, policy};
}

inline Json to_json(const ResolvedExperiment& r) {
  const ExperimentConfig& c = r.config;
  Json j;
  j["game"] = to_string(c.game);
  j["m"] = c.m;
  j["n"] = c.n;
  j["constraint"] = to_string(c.constraint);
  j["game_seed"] = c.game_seed;
  j["init_seed"] = c.init_seed;
  j["solver"] = to_string(c.solver);
  j["iters"] = c.iters;
  j["record_every"] = c.record_every ? c.record_every : default_record_every(c.iters);
  j["max_restarts"] = c.max_restarts;
  j["threshold"] = c.threshold;
  j["oracle_max_iters"] = c.oracle_max_iters;
  j["oracle_tol"] = c.oracle_tol;
  if (c.solver == Algorithm::EDA) {
    j["eta"] = r.settings.eda.eta;
    j["record_average"] = c.record_average;
  } else {
    j["eta_a"] = r.settings.ada.eta_a;
    j["eta_b"] = r.settings.ada.eta_b;
    j["c"] = c.c;
    j["inner_iters"] = r.settings.ada.inner_iterations;
    j["inner_init"] = c.inner_init == InnerInit::WarmStart ? "warm" : "zero";
  }
  j["out_dir"] = c.out_dir;
  j["name"] = c.name;
  return j;
}

// ---- trace CSV ----

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_header(std::size_t dim) {
  std::string h = "iter,solver,exploitability,grad_map_norm,restart_index";
  for (std::size_t k = 0; k < dim; ++k) h += ",a_" + std::to_string(k);
  return h;
}

inline std::string csv_row(const TraceRow& row, Algorithm solver, std::size_t restart) {
  std::string s = std::to_string(row.iteration) + "," + to_string(solver) + "," +
                  format_double(row.exploitability) + "," + format_double(row.grad_map_norm) + "," +
                  std::to_string(restart);
  for (double v : row.profile) s += "," + format_double(v);
  return s;
}

struct CsvRow {
  std::size_t iter = 0;
  std::string solver;
  double exploitability = 0.0;
  double grad_map_norm = 0.0;
  std::size_t restart_index = 0;
  Vector profile;
};

/// Parses a trace CSV, rejecting any header other than the exact schema.
inline std::vector<CsvRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("trace csv: empty input");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
  }
  if (cols.size() < 6) throw ConfigError("trace csv: header has too few columns");
  const std::size_t dim = cols.size() - 5;
  if (line != csv_header(dim)) throw ConfigError("trace csv: header does not match schema");

  std::vector<CsvRow> rows;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) f.push_back(c);
    if (f.size() != cols.size())
      throw ConfigError("trace csv: line " + std::to_string(lineno) + " has " +
                        std::to_string(f.size()) + " fields");
    CsvRow r;
    try {
      r.iter = detail::to_uint("iter", f[0]);
      r.solver = f[1];
      r.exploitability = detail::to_double("exploitability", f[2]);
      r.grad_map_norm = detail::to_double("grad_map_norm", f[3]);
      r.restart_index = detail::to_uint("restart_index", f[4]);
      for (std::size_t k = 0; k < dim; ++k)
        r.profile.push_back(detail::to_double("a_" + std::to_string(k), f[5 + k]));
    } catch (const ConfigError& e) {
      throw ConfigError("trace csv: line " + std::to_string(lineno) + ": " + e.what());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---- single run ----

struct RunSummary {
  std::string status = "ok";  // ok | divergence | error
  std::string error;
  double final_exploitability = 0.0;
  double best_grad_map_norm = 0.0;
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  bool converged = false;
  double wall_time = 0.0;
  Json config;
  std::string csv_path, summary_path, game_path;
};

inline Json to_json(const RunSummary& s) {
  Json j;
  j["status"] = s.status;
  if (!s.error.empty()) j["error"] = s.error;
  j["final_exploitability"] = s.final_exploitability;
  j["best_grad_map_norm"] = s.best_grad_map_norm;
  j["iterations"] = s.iterations;
  j["restarts"] = s.restarts;
  j["converged"] = s.converged;
  j["wall_time"] = s.wall_time;
  j["config"] = s.config;
  j["version"] = kVersion;
  return j;
}

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + p.string() + "' failed");
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

}  // namespace detail

/// Runs one experiment and writes <name>.csv, <name>.summary.json and
/// <name>.game.json under out_dir. Divergence propagates as DivergenceError
/// (after the summary is written with status "divergence").
inline RunSummary run_experiment(const ExperimentConfig& cfg) {
  const ResolvedExperiment r = resolve(cfg);
  detail::ensure_dir(cfg.out_dir);
  const std::filesystem::path dir(cfg.out_dir);

  RunSummary s;
  s.config = to_json(r);
  s.iterations = cfg.iters;
  s.csv_path = (dir / (cfg.name + ".csv")).string();
  s.summary_path = (dir / (cfg.name + ".summary.json")).string();
  s.game_path = (dir / (cfg.name + ".game.json")).string();

  detail::write_file(s.game_path, to_json(r.game).dump(2) + "\n");

  std::string csv = csv_header(r.game.layout().size()) + "\n";
  const gne::detail::Stopwatch clock;
  Rng rng(cfg.init_seed);
  try {
    const RestartResult res = restart_solve(
        r.game, r.settings, r.policy, rng,
        [&](std::size_t restart, const TraceRow& row) {
          csv += csv_row(row, cfg.solver, restart);
          csv += '\n';
        });
    const RunRecord& best = res.runs[res.best_run];
    s.final_exploitability = best.final_exploitability;
    s.best_grad_map_norm = best.best_grad_map_norm;
    s.restarts = res.restarts;
    s.converged = res.converged;
  } catch (const DivergenceError& e) {
    s.status = "divergence";
    s.error = e.what();
    s.wall_time = clock.seconds();
    detail::write_file(s.csv_path, csv);
    detail::write_file(s.summary_path, to_json(s).dump(2) + "\n");
    throw;
  }
  s.wall_time = clock.seconds();
  detail::write_file(s.csv_path, csv);
  detail::write_file(s.summary_path, to_json(s).dump(2) + "\n");
  return s;
}

// ---- sweeps ----

struct SweepEntry {
  std::uint64_t seed = 0;
  RunSummary summary;
};

struct Aggregate {
  std::vector<SweepEntry> runs;  // in seed-list order
  std::size_t converged_count = 0;
  std::size_t failed_count = 0;
  double median_final_exploitability = 0.0;
  double median_restarts = 0.0;
};

/// GNE_THREADS if set and positive, else the hardware concurrency.
inline std::size_t sweep_threads() {
  if (const char* env = std::getenv("GNE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Runs `base` once per seed (seed sets both game and init seeds), each into
/// <name>_seed<s>.*. Failed runs are recorded, not rethrown.
inline Aggregate sweep(const ExperimentConfig& base, const std::vector<std::uint64_t>& seeds,
                       std::size_t threads = 0) {
  if (seeds.empty()) throw ConfigError("sweep: seed list is empty");
  validate(base);
  Aggregate agg;
  agg.runs.resize(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < seeds.size();) {
      ExperimentConfig cfg = base;
      cfg.game_seed = cfg.init_seed = seeds[k];
      cfg.name = base.name + "_seed" + std::to_string(seeds[k]);
      SweepEntry& e = agg.runs[k];
      e.seed = seeds[k];
      try {
        e.summary = run_experiment(cfg);
      } catch (const DivergenceError& ex) {
        e.summary.status = "divergence";
        e.summary.error = ex.what();
      } catch (const std::exception& ex) {
        e.summary.status = "error";
        e.summary.error = ex.what();
      }
    }
  };
  const std::size_t n = std::min(threads ? threads : sweep_threads(), seeds.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<double> expl, restarts;
  for (const auto& e : agg.runs) {
    if (e.summary.status != "ok") {
      ++agg.failed_count;
      continue;
    }
    if (e.summary.converged) ++agg.converged_count;
    expl.push_back(e.summary.final_exploitability);
    restarts.push_back(static_cast<double>(e.summary.restarts));
  }
  agg.median_final_exploitability = median(expl);
  agg.median_restarts = median(restarts);
  return agg;
}

/// Wall times are left out so identical sweeps give identical JSON.
inline Json to_json(const Aggregate& a, double threshold) {
  Json j;
  j["num_runs"] = a.runs.size();
  j["converged_count"] = a.converged_count;
  j["failed_count"] = a.failed_count;
  j["threshold"] = threshold;
  j["median_final_exploitability"] = a.median_final_exploitability;
  j["median_restarts"] = a.median_restarts;
  Json runs = Json::array();
  for (const auto& e : a.runs) {
    Json r{{"seed", e.seed},
           {"status", e.summary.status},
           {"final_exploitability", e.summary.final_exploitability},
           {"restarts", e.summary.restarts},
           {"converged", e.summary.converged}};
    if (!e.summary.error.empty()) r["error"] = e.summary.error;
    runs.push_back(std::move(r));
  }
  j["runs"] = std::move(runs);
  j["version"] = kVersion;
  return j;
}

}  // namespace gne::bench
