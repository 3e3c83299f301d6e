#pragma once

// Experiment harness: configuration, seeded repetitions, JSON-lines traces,
// ADMM-vs-JOPT metrics, constraint and rho sweeps, and plot-ready CSV.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cashadmm/admm.hpp"
#include "cashadmm/constraints.hpp"
#include "cashadmm/external.hpp"
#include "cashadmm/objective.hpp"
#include "cashadmm/search_space.hpp"
#include "cashadmm/solvers.hpp"

namespace cashadmm {

/// Invalid experiment configuration (CLI exit code 1).
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Method { admm, admm_constrained, jopt, random };

inline std::string to_string(Method method) {
  switch (method) {
    case Method::admm: return "admm";
    case Method::admm_constrained: return "admm_constrained";
    case Method::jopt: return "jopt";
    case Method::random: return "random";
  }
  return "unknown";
}

inline Method parse_method(const std::string& text) {
  if (text == "admm") return Method::admm;
  if (text == "admm_constrained") return Method::admm_constrained;
  if (text == "jopt") return Method::jopt;
  if (text == "random") return Method::random;
  throw config_error("unknown method '" + text + "' (admm|admm_constrained|jopt|random)");
}

inline ThetaSolverKind parse_theta_solver(const std::string& text) {
  if (text == "bo") return ThetaSolverKind::bo;
  if (text == "random") return ThetaSolverKind::random;
  throw config_error("unknown theta solver '" + text + "' (bo|random)");
}

inline ZSolverKind parse_z_solver(const std::string& text) {
  if (text == "bandit") return ZSolverKind::bandit;
  if (text == "exhaustive") return ZSolverKind::exhaustive;
  if (text == "random") return ZSolverKind::random;
  throw config_error("unknown z solver '" + text + "' (bandit|exhaustive|random)");
}

inline std::string to_string(ThetaSolverKind kind) { return kind == ThetaSolverKind::bo ? "bo" : "random"; }
inline std::string to_string(ZSolverKind kind) {
  switch (kind) {
    case ZSolverKind::bandit: return "bandit";
    case ZSolverKind::exhaustive: return "exhaustive";
    case ZSolverKind::random: return "random";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Desk-scale benchmark space: 4 modules with 3, 4, 3 and 4 algorithms. HP
// ranges share one order of magnitude so no single HP dominates v_i.

inline SearchSpace benchmark_space() {
  auto c = [](std::string name, double lo, double hi) { return HpSpec{std::move(name), HpKind::continuous, lo, hi}; };
  auto d = [](std::string name, double lo, double hi) { return HpSpec{std::move(name), HpKind::integer, lo, hi}; };
  std::vector<ModuleSpec> modules{
      {"scaler",
       {{"standard", {c("clip", 0.5, 5.0), d("quantile_bins", 1, 8)}},
        {"robust", {c("q_low", 0.1, 2.5), c("q_high", 0.5, 5.0), d("centering", 1, 4)}},
        {"minmax", {c("range", 0.5, 2.0), d("feature_groups", 1, 8)}}}},
      {"transformer",
       {{"pca", {c("variance", 0.5, 5.0), d("components", 1, 10)}},
        {"polynomial", {d("degree", 1, 4), c("interaction_scale", 0.1, 3.0)}},
        {"kernel_pca", {c("gamma", 0.1, 2.0), d("components", 1, 10), c("alpha", 0.1, 1.0)}},
        {"ica", {c("tolerance", 0.1, 2.0), d("max_iter", 1, 6)}}}},
      {"selector",
       {{"variance", {c("threshold", 0.1, 5.0), d("keep_min", 1, 10)}},
        {"select_k", {d("k", 1, 8), c("score_power", 0.5, 2.0)}},
        {"l1", {c("c", 0.1, 10.0), d("max_features", 1, 6), c("tol", 0.1, 1.0)}}}},
      {"estimator",
       {{"logistic", {c("c", 0.1, 10.0), d("max_iter", 1, 8)}},
        {"random_forest", {d("trees", 1, 10), d("depth", 1, 6), c("max_features", 0.1, 1.0)}},
        {"gradient_boosting", {c("learning_rate", 0.1, 2.0), d("stages", 1, 10), d("depth", 1, 6)}},
        {"svm", {c("c", 0.1, 10.0), c("gamma", 0.1, 1.0)}}}}};
  return SearchSpace(std::move(modules));
}

// ---------------------------------------------------------------------------
// Configuration

struct ObjectiveConfig {
  enum class Kind { artificial, external };
  Kind kind = Kind::artificial;
  std::uint64_t master_seed = 1;
  int n = 10;
  /// Adds g1 = artificial objective of an independent spec, g2 = mean active continuous HP.
  bool synthetic_constraints = false;
  std::uint64_t constraint_seed = 2;
  std::string command;
  double timeout_seconds = 60.0;
};

struct ExperimentConfig {
  SearchSpace space = benchmark_space();
  std::string space_source = "benchmark";
  ObjectiveConfig objective;
  Method method = Method::admm;
  AdmmConfig admm;
  std::vector<ConstraintSpec> constraints;
  int reps = 1;
  std::uint64_t seed = 0;
  std::string out = "traces";
  /// Evaluation cap for jopt and random; 0 derives it from a logical budget.
  int max_evals = 0;
  std::string label;

  void validate() const {
    if (reps < 1) throw config_error("reps must be >= 1");
    if (auto violations = validate_space(space); !violations.empty()) {
      throw config_error("invalid search space: " + violations.front());
    }
    try {
      admm.validate();
      (void)thresholds_of(constraints);
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());
    }
    if (objective.kind == ObjectiveConfig::Kind::external && objective.command.empty()) {
      throw config_error("external objective needs a command");
    }
    if (objective.kind == ObjectiveConfig::Kind::artificial && objective.n < 1) {
      throw config_error("artificial objective needs n >= 1");
    }
    if (objective.kind == ObjectiveConfig::Kind::artificial && objective.synthetic_constraints &&
        !constraints.empty() && constraints.size() != 2) {
      throw config_error("synthetic constraints produce 2 values; got " + std::to_string(constraints.size()) +
                         " thresholds");
    }
    if (method == Method::admm_constrained && objective.kind == ObjectiveConfig::Kind::artificial &&
        !objective.synthetic_constraints && !constraints.empty()) {
      throw config_error("admm_constrained with the artificial objective needs synthetic_constraints");
    }
    if (admm.z_solver == ZSolverKind::exhaustive && space.num_combinations() > kExhaustiveLimit) {
      throw config_error("exhaustive z solver needs at most 10^4 algorithm combinations");
    }
  }

  std::string run_label() const { return label.empty() ? to_string(method) : label; }
};

inline void apply_json(ExperimentConfig& config, const nlohmann::json& doc,
                       const std::filesystem::path& base_dir = {}) {
  try {
    if (doc.contains("space")) {
      const auto& space = doc["space"];
      if (space.is_string()) {
        const auto text = space.get<std::string>();
        if (text == "benchmark") {
          config.space = benchmark_space();
        } else {
          std::filesystem::path path = text;
          if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
          std::ifstream in(path);
          if (!in) throw config_error("cannot open space file " + path.string());
          config.space = space_from_json(nlohmann::json::parse(in));
        }
        config.space_source = text;
      } else {
        config.space = space_from_json(space);
        config.space_source = "inline";
      }
    }
    if (doc.contains("objective")) {
      const auto& o = doc["objective"];
      const auto type = o.value("type", std::string("artificial"));
      if (type == "artificial") {
        config.objective.kind = ObjectiveConfig::Kind::artificial;
      } else if (type == "external") {
        config.objective.kind = ObjectiveConfig::Kind::external;
      } else {
        throw config_error("unknown objective type '" + type + "'");
      }
      config.objective.master_seed = o.value("master_seed", config.objective.master_seed);
      config.objective.n = o.value("n", config.objective.n);
      config.objective.synthetic_constraints = o.value("synthetic_constraints", config.objective.synthetic_constraints);
      config.objective.constraint_seed = o.value("constraint_seed", config.objective.constraint_seed);
      config.objective.command = o.value("command", config.objective.command);
      config.objective.timeout_seconds = o.value("timeout", config.objective.timeout_seconds);
    }
    if (doc.contains("constraints")) {
      config.constraints.clear();
      for (const auto& c : doc["constraints"]) {
        if (c.is_number()) {
          config.constraints.push_back({"g" + std::to_string(config.constraints.size() + 1), c.get<double>()});
        } else {
          config.constraints.push_back(
              {c.value("name", "g" + std::to_string(config.constraints.size() + 1)), c.at("epsilon").get<double>()});
        }
      }
    }
    if (doc.contains("method")) config.method = parse_method(doc["method"].get<std::string>());
    if (doc.contains("theta_solver")) config.admm.theta_solver = parse_theta_solver(doc["theta_solver"].get<std::string>());
    if (doc.contains("z_solver")) config.admm.z_solver = parse_z_solver(doc["z_solver"].get<std::string>());
    config.admm.rho = doc.value("rho", config.admm.rho);
    config.admm.max_iters = doc.value("max_iters", config.admm.max_iters);
    if (doc.contains("time_budget")) {
      config.admm.time_budget = doc["time_budget"].is_null() ? kInf : doc["time_budget"].get<double>();
    }
    if (doc.contains("clock")) {
      const auto clock = doc["clock"].get<std::string>();
      if (clock == "wall") {
        config.admm.clock = ClockKind::wall;
      } else if (clock == "logical") {
        config.admm.clock = ClockKind::logical;
      } else {
        throw config_error("clock must be wall or logical");
      }
    }
    if (doc.contains("schedule")) config.admm.schedule = parse_schedule(doc["schedule"].get<std::string>());
    config.admm.warm_start = doc.value("warm_start", config.admm.warm_start);
    config.reps = doc.value("reps", config.reps);
    config.seed = doc.value("seed", config.seed);
    config.out = doc.value("out", config.out);
    config.max_evals = doc.value("max_evals", config.max_evals);
    config.label = doc.value("label", config.label);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config " + path.string() + ": " + e.what());
  }
  ExperimentConfig config;
  apply_json(config, doc, path.parent_path());
  return config;
}

// ---------------------------------------------------------------------------
// Objectives

/// Mean of the continuous HPs owned by the chosen algorithms; 0 if none.
inline double mean_active_continuous(const SearchSpace& space, const PipelineQuery& q) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t flat : active_set(space, q.sel)) {
    const auto& slot = space.slot(flat);
    if (slot.kind != HpKind::continuous) continue;
    sum += q.theta_c[slot.offset];
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

inline BlackBox make_black_box(const ExperimentConfig& config) {
  const auto& o = config.objective;
  if (o.kind == ObjectiveConfig::Kind::external) {
    return make_external_black_box({o.command, o.timeout_seconds});
  }
  auto spec = make_artificial(config.space, o.master_seed, o.n);
  if (!o.synthetic_constraints) return make_artificial_black_box(std::move(spec));
  auto second = make_artificial(config.space, o.constraint_seed, o.n);
  return [spec = std::move(spec), second = std::move(second)](const PipelineQuery& q) {
    return Evaluation{artificial_eval(spec, q),
                      {artificial_eval(second, q), mean_active_continuous(spec.space, q)}};
  };
}

// ---------------------------------------------------------------------------
// Runs

struct RunOutcome {
  std::string run_id;
  std::uint64_t seed = 0;
  std::vector<TraceRecord> trace;
  double best_value = kInf;
  double best_feasible_value = kInf;
  std::optional<PipelineQuery> best;
  std::optional<PipelineQuery> best_feasible;
  std::size_t failures = 0;
};

inline std::uint64_t rep_seed(const ExperimentConfig& config, int rep) {
  return config.seed + static_cast<std::uint64_t>(rep);
}

inline int evaluation_cap(const ExperimentConfig& config) {
  if (config.max_evals > 0) return config.max_evals;
  if (config.admm.clock == ClockKind::logical && std::isfinite(config.admm.time_budget)) {
    return static_cast<int>(std::ceil(config.admm.time_budget));
  }
  return 10000;
}

/// One seeded repetition of the configured method; nothing touches disk.
inline RunOutcome run_single(const ExperimentConfig& config, int rep) {
  config.validate();
  RunOutcome outcome;
  outcome.seed = rep_seed(config, rep);
  outcome.run_id = config.run_label() + "-r" + std::to_string(rep);

  EvaluatorOptions options;
  options.clock = config.admm.clock;
  options.time_budget = config.admm.time_budget;
  options.run_id = outcome.run_id;
  options.seed = outcome.seed;
  options.epsilon = thresholds_of(config.constraints);
  Evaluator evaluator(config.space, make_black_box(config), options);

  AdmmConfig admm = config.admm;
  admm.seed = outcome.seed;
  switch (config.method) {
    case Method::admm:
      run_admm(evaluator, admm);
      break;
    case Method::admm_constrained:
      run_admm_constrained(evaluator, admm, config.constraints);
      break;
    case Method::jopt:
      jopt_minimize(config.space, evaluator, evaluation_cap(config), outcome.seed);
      break;
    case Method::random: {
      const int cap = evaluation_cap(config);
      try {
        for (int e = 0; e < cap; ++e) {
          const auto [sel, theta] = sample_uniform(config.space, derive_seed(outcome.seed, 0x72616eULL, e));
          evaluator.surrogate(sel, theta);
        }
      } catch (const budget_exhausted&) {
      }
      break;
    }
  }
  outcome.trace = evaluator.trace();
  outcome.best_value = evaluator.incumbent();
  outcome.best_feasible_value = evaluator.incumbent_feasible();
  outcome.best = evaluator.best();
  outcome.best_feasible = evaluator.best_feasible();
  outcome.failures = evaluator.failures();
  return outcome;
}

// ---------------------------------------------------------------------------
// Trace files: one JSON object per line; +inf is written as null.

inline nlohmann::json finite_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

inline double number_or_inf(const nlohmann::json& value) {
  return value.is_number() ? value.get<double>() : kInf;
}

inline nlohmann::json trace_record_to_json(const TraceRecord& r, const std::string& method) {
  nlohmann::json constraints = nlohmann::json::array();
  for (double g : r.constraints) constraints.push_back(finite_or_null(g));
  return {{"run_id", r.run_id},
          {"method", method},
          {"seed", r.seed},
          {"eval_index", r.eval_index},
          {"wall_seconds", r.wall_seconds},
          {"objective", finite_or_null(r.objective)},
          {"feasible", r.feasible},
          {"incumbent", finite_or_null(r.incumbent)},
          {"incumbent_feasible", finite_or_null(r.incumbent_feasible)},
          {"constraints", std::move(constraints)}};
}

inline TraceRecord trace_record_from_json(const nlohmann::json& j) {
  TraceRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.eval_index = j.at("eval_index").get<std::size_t>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.objective = number_or_inf(j.at("objective"));
  r.feasible = j.at("feasible").get<bool>();
  r.incumbent = number_or_inf(j.at("incumbent"));
  r.incumbent_feasible = number_or_inf(j.at("incumbent_feasible"));
  for (const auto& g : j.value("constraints", nlohmann::json::array())) r.constraints.push_back(number_or_inf(g));
  return r;
}

inline void write_trace(const std::filesystem::path& path, const std::vector<TraceRecord>& trace,
                        const std::string& method) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write trace " + path.string());
  for (const auto& r : trace) out << trace_record_to_json(r, method).dump() << '\n';
}

inline std::vector<TraceRecord> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read trace " + path.string());
  std::vector<TraceRecord> trace;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      trace.push_back(trace_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return trace;
}

/// Runs all repetitions, streaming each trace to `<out>/<label>-r<rep>.jsonl`.
inline std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out);
  std::vector<std::filesystem::path> files;
  for (int rep = 0; rep < config.reps; ++rep) {
    const auto outcome = run_single(config, rep);
    const auto path = std::filesystem::path(config.out) / (outcome.run_id + ".jsonl");
    write_trace(path, outcome.trace, to_string(config.method));
    files.push_back(path);
  }
  return files;
}

// ---------------------------------------------------------------------------
// Statistics

/// Linear-interpolation quantile; +inf entries sort last and propagate.
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double position = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(position));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = position - static_cast<double>(lo);
  if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
  if (!std::isfinite(values[hi])) return values[hi];
  return values[lo] + frac * (values[hi] - values[lo]);
}

inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

inline double final_incumbent(const std::vector<TraceRecord>& trace) {
  return trace.empty() ? kInf : trace.back().incumbent;
}

/// Incumbent at time t: last record with wall_seconds <= t, or nullopt if none yet.
inline std::optional<double> incumbent_at(const std::vector<TraceRecord>& trace, double t) {
  std::optional<double> value;
  for (const auto& r : trace) {
    if (r.wall_seconds > t) break;
    value = r.incumbent;
  }
  return value;
}

/// Earliest time the incumbent reaches `target`, or nullopt.
inline std::optional<double> time_to_reach(const std::vector<TraceRecord>& trace, double target) {
  for (const auto& r : trace) {
    if (r.incumbent <= target) return r.wall_seconds;
  }
  return std::nullopt;
}

inline double feasible_fraction(const std::vector<TraceRecord>& trace) {
  if (trace.empty()) return 0.0;
  std::size_t feasible = 0;
  for (const auto& r : trace) feasible += r.feasible ? 1 : 0;
  return static_cast<double>(feasible) / static_cast<double>(trace.size());
}

// ---------------------------------------------------------------------------
// Plot data

struct PlotSeries {
  std::string method;
  std::vector<std::vector<TraceRecord>> runs;
};

inline std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> grid;
  if (points < 1 || !(hi > 0.0)) return grid;
  lo = std::max(lo, hi * 1e-9);
  if (points == 1 || hi <= lo) return {hi};
  const double step = std::log(hi / lo) / static_cast<double>(points - 1);
  for (int k = 0; k < points; ++k) grid.push_back(lo * std::exp(step * k));
  grid.back() = hi;
  return grid;
}

/// Default grid: log-spaced from the earliest first evaluation to the latest last one.
inline std::vector<double> default_grid(const std::vector<PlotSeries>& series, int points) {
  double lo = kInf;
  double hi = 0.0;
  for (const auto& s : series) {
    for (const auto& run : s.runs) {
      if (run.empty()) continue;
      lo = std::min(lo, run.front().wall_seconds);
      hi = std::max(hi, run.back().wall_seconds);
    }
  }
  if (!std::isfinite(lo)) return {};
  return log_grid(std::max(lo, 1e-9), hi, points);
}

inline std::string format_number(double x) {
  if (!std::isfinite(x)) return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
  std::ostringstream out;
  out << std::setprecision(10) << x;
  return out.str();
}

/// CSV with columns time, then <method>_median, <method>_q25, <method>_q75 per
/// series. Grid points before any run has evaluated anything are omitted.
inline std::string emit_plot_data(const std::vector<PlotSeries>& series, const std::vector<double>& grid) {
  if (series.empty()) throw std::invalid_argument("emit_plot_data: no series");
  for (const auto& s : series) {
    if (s.runs.empty()) throw std::invalid_argument("emit_plot_data: series '" + s.method + "' has no runs");
  }
  std::ostringstream csv;
  csv << "time";
  for (const auto& s : series) csv << ',' << s.method << "_median," << s.method << "_q25," << s.method << "_q75";
  csv << '\n';
  for (double t : grid) {
    std::vector<std::vector<double>> columns;
    bool complete = true;
    for (const auto& s : series) {
      std::vector<double> values;
      for (const auto& run : s.runs) {
        const auto v = incumbent_at(run, t);
        if (!v) {
          complete = false;
          break;
        }
        values.push_back(*v);
      }
      if (!complete) break;
      columns.push_back(std::move(values));
    }
    if (!complete) continue;
    csv << format_number(t);
    for (const auto& values : columns) {
      csv << ',' << format_number(quantile(values, 0.5)) << ',' << format_number(quantile(values, 0.25)) << ','
          << format_number(quantile(values, 0.75));
    }
    csv << '\n';
  }
  return csv.str();
}

// ---------------------------------------------------------------------------
// ADMM vs JOPT

struct MetricsSummary {
  double f_jopt = kInf;   // median JOPT final incumbent
  double f_admm = kInf;   // median ADMM final incumbent
  std::optional<double> time_to_reach;  // median earliest time ADMM reaches f_jopt
  std::optional<double> speedup;        // budget / time_to_reach
  double improvement = std::numeric_limits<double>::quiet_NaN();  // percent
  double admm_feasible_fraction = 0.0;
  double jopt_feasible_fraction = 0.0;
  std::string curves_csv;
};

inline MetricsSummary compare(const std::vector<std::vector<TraceRecord>>& admm_traces,
                              const std::vector<std::vector<TraceRecord>>& jopt_traces, double budget,
                              int grid_points = 50) {
  if (admm_traces.empty() || jopt_traces.empty()) throw std::invalid_argument("compare: empty trace set");
  for (const auto& t : admm_traces) {
    if (t.empty()) throw std::invalid_argument("compare: empty ADMM trace");
  }
  for (const auto& t : jopt_traces) {
    if (t.empty()) throw std::invalid_argument("compare: empty JOPT trace");
  }
  MetricsSummary summary;
  std::vector<double> jopt_finals, admm_finals, reach, admm_fraction, jopt_fraction;
  for (const auto& t : jopt_traces) {
    jopt_finals.push_back(final_incumbent(t));
    jopt_fraction.push_back(feasible_fraction(t));
  }
  summary.f_jopt = median(jopt_finals);
  for (const auto& t : admm_traces) {
    admm_finals.push_back(final_incumbent(t));
    admm_fraction.push_back(feasible_fraction(t));
    reach.push_back(time_to_reach(t, summary.f_jopt).value_or(kInf));
  }
  summary.f_admm = median(admm_finals);
  const double t_a = median(reach);
  if (std::isfinite(t_a)) {
    summary.time_to_reach = t_a;
    summary.speedup = budget / std::max(t_a, std::numeric_limits<double>::min());
  }
  if (summary.f_jopt != 0.0 && std::isfinite(summary.f_jopt)) {
    summary.improvement = 100.0 * (summary.f_jopt - summary.f_admm) / summary.f_jopt;
  }
  summary.admm_feasible_fraction = median(admm_fraction);
  summary.jopt_feasible_fraction = median(jopt_fraction);
  const std::vector<PlotSeries> series{{"admm", admm_traces}, {"jopt", jopt_traces}};
  summary.curves_csv = emit_plot_data(series, default_grid(series, grid_points));
  return summary;
}

inline nlohmann::json to_json(const MetricsSummary& s) {
  nlohmann::json j{{"f_jopt", finite_or_null(s.f_jopt)},
                   {"f_admm", finite_or_null(s.f_admm)},
                   {"time_to_reach", s.time_to_reach ? nlohmann::json(*s.time_to_reach) : nlohmann::json("not reached")},
                   {"speedup", s.speedup ? nlohmann::json(*s.speedup) : nlohmann::json("not reached")},
                   {"improvement_percent", std::isnan(s.improvement) ? nlohmann::json(nullptr) : nlohmann::json(s.improvement)},
                   {"admm_feasible_fraction", s.admm_feasible_fraction},
                   {"jopt_feasible_fraction", s.jopt_feasible_fraction}};
  return j;
}

// ---------------------------------------------------------------------------
// Constraint sweep (CST vs post-hoc filtered UCST)

struct FilteredStats {
  double best_feasible = kInf;
  double feasible_fraction = 0.0;
};

/// Re-derives feasibility of every record of a trace against `epsilon`.
inline FilteredStats refilter(const std::vector<TraceRecord>& trace, const std::vector<double>& epsilon) {
  FilteredStats stats;
  if (trace.empty()) return stats;
  std::size_t feasible = 0;
  for (const auto& r : trace) {
    if (std::isfinite(r.objective) && is_feasible(r.constraints, epsilon)) {
      ++feasible;
      stats.best_feasible = std::min(stats.best_feasible, r.objective);
    }
  }
  stats.feasible_fraction = static_cast<double>(feasible) / static_cast<double>(trace.size());
  return stats;
}

struct SweepCell {
  std::vector<double> best_feasible;      // one per repetition
  std::vector<double> feasible_fraction;  // one per repetition
};

struct ConstraintSweepRow {
  std::vector<double> epsilon;
  SweepCell cst;
  SweepCell ucst;
};

inline std::vector<ConstraintSweepRow> constraint_sweep(const ExperimentConfig& config,
                                                        const std::vector<std::vector<double>>& thresholds) {
  if (thresholds.empty()) throw config_error("constraint sweep needs at least one threshold");
  ExperimentConfig ucst = config;
  ucst.method = Method::admm;
  ucst.label = config.run_label() + "-ucst";
  ucst.constraints.clear();
  std::vector<std::vector<TraceRecord>> ucst_traces;
  for (int rep = 0; rep < config.reps; ++rep) ucst_traces.push_back(run_single(ucst, rep).trace);

  std::vector<ConstraintSweepRow> rows;
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    ConstraintSweepRow row{thresholds[k], {}, {}};
    ExperimentConfig cst = config;
    cst.method = Method::admm_constrained;
    cst.label = config.run_label() + "-cst" + std::to_string(k);
    cst.constraints.clear();
    for (std::size_t m = 0; m < thresholds[k].size(); ++m) {
      cst.constraints.push_back({"g" + std::to_string(m + 1), thresholds[k][m]});
    }
    cst.validate();
    for (int rep = 0; rep < config.reps; ++rep) {
      const auto c = refilter(run_single(cst, rep).trace, thresholds[k]);
      row.cst.best_feasible.push_back(c.best_feasible);
      row.cst.feasible_fraction.push_back(c.feasible_fraction);
      const auto u = refilter(ucst_traces[static_cast<std::size_t>(rep)], thresholds[k]);
      row.ucst.best_feasible.push_back(u.best_feasible);
      row.ucst.feasible_fraction.push_back(u.feasible_fraction);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string constraint_sweep_csv(const std::vector<ConstraintSweepRow>& rows) {
  std::ostringstream csv;
  csv << "threshold,method,best_feasible_median,best_feasible_q25,best_feasible_q75,"
         "feasible_fraction_median,feasible_fraction_q25,feasible_fraction_q75\n";
  for (const auto& row : rows) {
    std::string eps;
    for (std::size_t m = 0; m < row.epsilon.size(); ++m) eps += (m ? ";" : "") + format_number(row.epsilon[m]);
    for (const auto& [name, cell] : {std::pair{"cst", &row.cst}, std::pair{"ucst", &row.ucst}}) {
      csv << eps << ',' << name << ',' << format_number(quantile(cell->best_feasible, 0.5)) << ','
          << format_number(quantile(cell->best_feasible, 0.25)) << ','
          << format_number(quantile(cell->best_feasible, 0.75)) << ','
          << format_number(quantile(cell->feasible_fraction, 0.5)) << ','
          << format_number(quantile(cell->feasible_fraction, 0.25)) << ','
          << format_number(quantile(cell->feasible_fraction, 0.75)) << '\n';
    }
  }
  return csv.str();
}

// ---------------------------------------------------------------------------
// rho sweep

struct RhoSweepRow {
  double rho = 1.0;
  std::vector<double> finals;  // final incumbent per repetition
  double median_final() const { return median(finals); }
};

inline std::vector<RhoSweepRow> rho_sweep(const ExperimentConfig& config, const std::vector<double>& rhos) {
  if (rhos.empty()) throw config_error("rho sweep needs at least one rho");
  for (double rho : rhos) {
    if (!(rho > 0.0)) throw config_error("rho values must be > 0");
  }
  std::vector<RhoSweepRow> rows;
  for (double rho : rhos) {
    ExperimentConfig run = config;
    run.method = Method::admm;
    run.admm.rho = rho;
    run.label = config.run_label() + "-rho" + format_number(rho);
    RhoSweepRow row{rho, {}};
    for (int rep = 0; rep < config.reps; ++rep) row.finals.push_back(run_single(run, rep).best_value);
    rows.push_back(std::move(row));
  }
  return rows;
}

/// (max - min) / mean over the per-rho median final incumbents.
inline double relative_spread(const std::vector<RhoSweepRow>& rows) {
  std::vector<double> medians;
  for (const auto& row : rows) medians.push_back(row.median_final());
  const auto [lo, hi] = std::minmax_element(medians.begin(), medians.end());
  double mean = 0.0;
  for (double m : medians) mean += m;
  mean /= static_cast<double>(medians.size());
  if (mean == 0.0) return 0.0;
  return (*hi - *lo) / mean;
}

inline std::string rho_sweep_csv(const std::vector<RhoSweepRow>& rows) {
  std::ostringstream csv;
  csv << "rho,final_median,final_q25,final_q75\n";
  for (const auto& row : rows) {
    csv << format_number(row.rho) << ',' << format_number(quantile(row.finals, 0.5)) << ','
        << format_number(quantile(row.finals, 0.25)) << ',' << format_number(quantile(row.finals, 0.75)) << '\n';
  }
  return csv.str();
}

}  // namespace cashadmm
