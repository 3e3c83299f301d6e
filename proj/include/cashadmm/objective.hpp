#pragma once

// Black-box objective contract, the projected surrogate f~, the artificial
// benchmark objective, and the evaluation bookkeeping (cache, counter, clock,
// incumbents, trace) shared by every solver.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cashadmm/random.hpp"
#include "cashadmm/search_space.hpp"

namespace cashadmm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct PipelineQuery {
  Selection sel;
  std::vector<double> theta_c;
  std::vector<std::int64_t> theta_d;

  bool operator==(const PipelineQuery&) const = default;
};

/// Output of one joint black-box call: f and the M constraint values g_m.
struct Evaluation {
  double objective = kInf;
  std::vector<double> constraints;
};

enum class EvalFailure { timeout, malformed_reply, child_exited };

inline const char* to_string(EvalFailure kind) {
  switch (kind) {
    case EvalFailure::timeout: return "timeout";
    case EvalFailure::malformed_reply: return "malformed reply";
    case EvalFailure::child_exited: return "child exited";
  }
  return "unknown";
}

class evaluation_error : public std::runtime_error {
 public:
  evaluation_error(EvalFailure kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  EvalFailure kind() const noexcept { return kind_; }

 private:
  EvalFailure kind_;
};

/// Thrown by Evaluator when the run's time budget is spent; unwinds to the driver.
class budget_exhausted : public std::exception {
 public:
  const char* what() const noexcept override { return "time budget exhausted"; }
};

using BlackBox = std::function<Evaluation(const PipelineQuery&)>;

struct EvaluationRecord {
  PipelineQuery query;
  double objective = kInf;
  std::vector<double> constraint_values;
  double wall_time = 0.0;
  std::size_t eval_index = 0;
};

struct TraceRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::size_t eval_index = 0;
  double wall_seconds = 0.0;
  double objective = kInf;
  bool feasible = false;
  double incumbent = kInf;
  double incumbent_feasible = kInf;
  std::vector<double> constraints;
};

/// g_m <= eps_m for all m (non-strict); a length mismatch is infeasible.
inline bool is_feasible(const std::vector<double>& constraints, const std::vector<double>& epsilon) {
  if (constraints.size() != epsilon.size()) return false;
  for (std::size_t m = 0; m < epsilon.size(); ++m) {
    if (!(constraints[m] <= epsilon[m])) return false;
  }
  return true;
}

/// P_D applied to every relaxed integer dim; assembles the query f~ forwards to f.
inline PipelineQuery project_query(const SearchSpace& space, const Selection& sel,
                                   const ThetaAssignment& theta) {
  if (theta.cont.size() != space.num_continuous() || theta.relaxed_int.size() != space.num_integer()) {
    throw std::invalid_argument("theta dimension does not match search space");
  }
  PipelineQuery q{sel, theta.cont, {}};
  q.theta_d.resize(theta.relaxed_int.size());
  for (std::size_t k = 0; k < theta.relaxed_int.size(); ++k) {
    q.theta_d[k] = project_integer(theta.relaxed_int[k], space.integer_slot(k));
  }
  return q;
}

// ---------------------------------------------------------------------------
// Evaluation cache

class EvaluationCache {
 public:
  /// Linearizable get-or-insert; `compute` runs at most once per distinct key.
  template <class Compute>
  std::pair<Evaluation, bool> get_or_compute(const PipelineQuery& q, Compute&& compute) {
    const Key key = make_key(q);
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return {it->second, true};
    auto [it, inserted] = entries_.emplace(key, compute());
    ++misses_;
    return {it->second, false};
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }
  std::size_t evaluations() const {
    std::lock_guard lock(mutex_);
    return misses_;
  }

 private:
  struct Key {
    std::vector<std::size_t> sel;
    std::vector<std::uint64_t> cont_bits;
    std::vector<std::int64_t> ints;
    auto operator<=>(const Key&) const = default;
  };

  static Key make_key(const PipelineQuery& q) {
    Key key{q.sel.choice, {}, q.theta_d};
    key.cont_bits.resize(q.theta_c.size());
    for (std::size_t k = 0; k < q.theta_c.size(); ++k) {
      std::memcpy(&key.cont_bits[k], &q.theta_c[k], sizeof(double));
    }
    return key;
  }

  mutable std::mutex mutex_;
  std::map<Key, Evaluation> entries_;
  std::size_t misses_ = 0;
};

/// Objective value of q, evaluating f only on a cache miss.
inline double cached_eval(EvaluationCache& cache, const BlackBox& f, const PipelineQuery& q) {
  return cache.get_or_compute(q, [&] { return f(q); }).first.objective;
}

// ---------------------------------------------------------------------------
// Evaluator: the single entry point through which solvers touch the black box.

enum class ClockKind { wall, logical };

struct EvaluatorOptions {
  ClockKind clock = ClockKind::wall;
  /// Seconds (wall) or evaluation count (logical).
  double time_budget = kInf;
  bool use_cache = true;
  /// Constraint thresholds used to flag feasibility in the trace.
  std::vector<double> epsilon;
  std::string run_id = "run";
  std::uint64_t seed = 0;
};

class Evaluator {
 public:
  using Sink = std::function<void(const TraceRecord&)>;
  using Observer = std::function<void(const EvaluationRecord&, bool cache_hit)>;

  Evaluator(const SearchSpace& space, BlackBox black_box, EvaluatorOptions options = {})
      : space_(&space),
        black_box_(std::move(black_box)),
        options_(std::move(options)),
        start_(std::chrono::steady_clock::now()) {}

  Evaluator(const Evaluator&) = delete;
  Evaluator& operator=(const Evaluator&) = delete;

  const SearchSpace& space() const noexcept { return *space_; }
  const EvaluatorOptions& options() const noexcept { return options_; }

  void set_sink(Sink sink) { sink_ = std::move(sink); }
  void set_observer(Observer observer) { observer_ = std::move(observer); }

  /// Raw f at an integral query.
  EvaluationRecord evaluate(const PipelineQuery& q) {
    ++calls_;
    if (options_.use_cache) {
      if (auto it = hits_.find(q); it != hits_.end()) {
        if (observer_) observer_(it->second, true);
        return it->second;
      }
    }
    if (exhausted()) throw budget_exhausted();

    Evaluation value;
    bool failed = false;
    try {
      value = black_box_(q);
    } catch (const evaluation_error& e) {
      failed = true;
      ++failures_;
      last_failure_ = e.what();
      value.objective = kInf;
      value.constraints.assign(options_.epsilon.size(), kInf);
    }
    if (std::isnan(value.objective)) value.objective = kInf;

    EvaluationRecord record{q, value.objective, std::move(value.constraints), 0.0, evaluations_};
    ++evaluations_;
    record.wall_time = now();
    if (options_.use_cache && !failed) hits_.emplace(q, record);

    const bool feasible = std::isfinite(record.objective) &&
                          is_feasible(record.constraint_values, options_.epsilon);
    if (record.objective < incumbent_) {
      incumbent_ = record.objective;
      best_ = record.query;
    }
    if (feasible && record.objective < incumbent_feasible_) {
      incumbent_feasible_ = record.objective;
      best_feasible_ = record.query;
    }
    TraceRecord trace{options_.run_id, options_.seed, record.eval_index, record.wall_time,
                      record.objective, feasible, incumbent_, incumbent_feasible_,
                      record.constraint_values};
    if (sink_) sink_(trace);
    trace_.push_back(std::move(trace));
    if (observer_) observer_(record, false);
    return record;
  }

  /// f~(z, {theta_c, theta_d~}) = f(z, {theta_c, P_D(theta_d~)}).
  EvaluationRecord surrogate(const Selection& sel, const ThetaAssignment& theta) {
    return evaluate(project_query(*space_, sel, theta));
  }

  /// Current clock reading: seconds since construction, or evaluations made.
  double now() const {
    if (options_.clock == ClockKind::logical) return static_cast<double>(evaluations_);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  bool exhausted() const { return now() >= options_.time_budget; }

  std::size_t evaluations() const noexcept { return evaluations_; }
  std::size_t calls() const noexcept { return calls_; }
  std::size_t failures() const noexcept { return failures_; }
  const std::string& last_failure() const noexcept { return last_failure_; }

  double incumbent() const noexcept { return incumbent_; }
  double incumbent_feasible() const noexcept { return incumbent_feasible_; }
  const std::optional<PipelineQuery>& best() const noexcept { return best_; }
  const std::optional<PipelineQuery>& best_feasible() const noexcept { return best_feasible_; }
  const std::vector<TraceRecord>& trace() const noexcept { return trace_; }

 private:
  struct QueryLess {
    bool operator()(const PipelineQuery& a, const PipelineQuery& b) const {
      if (a.sel != b.sel) return a.sel < b.sel;
      if (a.theta_d != b.theta_d) return a.theta_d < b.theta_d;
      // bitwise order on doubles so -0.0 and 0.0 stay distinct keys
      for (std::size_t k = 0; k < std::min(a.theta_c.size(), b.theta_c.size()); ++k) {
        std::uint64_t x = 0, y = 0;
        std::memcpy(&x, &a.theta_c[k], sizeof x);
        std::memcpy(&y, &b.theta_c[k], sizeof y);
        if (x != y) return x < y;
      }
      return a.theta_c.size() < b.theta_c.size();
    }
  };

  const SearchSpace* space_;
  BlackBox black_box_;
  EvaluatorOptions options_;
  std::chrono::steady_clock::time_point start_;
  Sink sink_;
  Observer observer_;
  std::map<PipelineQuery, EvaluationRecord, QueryLess> hits_;
  std::size_t evaluations_ = 0;
  std::size_t calls_ = 0;
  std::size_t failures_ = 0;
  std::string last_failure_;
  double incumbent_ = kInf;
  double incumbent_feasible_ = kInf;
  std::optional<PipelineQuery> best_;
  std::optional<PipelineQuery> best_feasible_;
  std::vector<TraceRecord> trace_;
};

// ---------------------------------------------------------------------------
// Artificial black-box objective
//
// Per module i (f_0 = 0): v_i = |w_ij . theta_ij / 1 . theta_ij| for the
// chosen j; n draws from Normal(f_{i-1}, v_i) with the fixed seed s_ij;
// f_i = max |draw|. Output f_N.

struct ArtificialObjectiveSpec {
  SearchSpace space;
  std::vector<std::vector<std::vector<double>>> weights;  // [module][algorithm][hp]
  std::vector<std::vector<std::uint64_t>> seeds;          // [module][algorithm]
  int n = 10;
  std::uint64_t master_seed = 0;

  bool operator==(const ArtificialObjectiveSpec& other) const {
    return weights == other.weights && seeds == other.seeds && n == other.n &&
           master_seed == other.master_seed;
  }
};

inline ArtificialObjectiveSpec make_artificial(const SearchSpace& space, std::uint64_t master_seed,
                                               int n = 10) {
  if (n < 1) throw std::invalid_argument("artificial objective needs n >= 1");
  ArtificialObjectiveSpec spec{space, {}, {}, n, master_seed};
  rng_t weight_rng(derive_seed(master_seed, 0x77656967ULL));
  spec.weights.resize(space.num_modules());
  spec.seeds.resize(space.num_modules());
  for (std::size_t i = 0; i < space.num_modules(); ++i) {
    const std::size_t k = space.num_algorithms(i);
    spec.weights[i].resize(k);
    spec.seeds[i].resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t count = space.algorithm_slots(i, j).size();
      for (std::size_t h = 0; h < count; ++h) spec.weights[i][j].push_back(standard_normal(weight_rng));
      spec.seeds[i][j] = derive_seed(master_seed, 0x73656564ULL, i, j);
    }
  }
  return spec;
}

namespace detail {

inline void check_query(const SearchSpace& space, const PipelineQuery& q) {
  check_selection(space, q.sel);
  if (q.theta_c.size() != space.num_continuous() || q.theta_d.size() != space.num_integer()) {
    throw std::invalid_argument("query dimension does not match search space");
  }
}

/// theta_ij: continuous values then integer values, in index-map order.
inline std::vector<double> algorithm_theta(const SearchSpace& space, const PipelineQuery& q,
                                           std::size_t module) {
  std::vector<double> theta;
  for (std::size_t flat : space.algorithm_slots(module, q.sel.choice[module])) {
    const auto& slot = space.slot(flat);
    theta.push_back(slot.kind == HpKind::continuous ? q.theta_c[slot.offset]
                                                    : static_cast<double>(q.theta_d[slot.offset]));
  }
  return theta;
}

}  // namespace detail

/// v_i for module i of q; 0 when |1 . theta_ij| < 1e-9.
inline double module_scale(const ArtificialObjectiveSpec& spec, const PipelineQuery& q,
                           std::size_t module) {
  const auto theta = detail::algorithm_theta(spec.space, q, module);
  const auto& w = spec.weights.at(module).at(q.sel.choice[module]);
  if (w.size() != theta.size()) throw std::invalid_argument("weight vector length mismatch");
  double dot = 0.0;
  double sum = 0.0;
  for (std::size_t h = 0; h < theta.size(); ++h) {
    dot += w[h] * theta[h];
    sum += theta[h];
  }
  if (std::abs(sum) < 1e-9) return 0.0;
  return std::abs(dot / sum);
}

inline double artificial_eval(const ArtificialObjectiveSpec& spec, const PipelineQuery& q) {
  detail::check_query(spec.space, q);
  double previous = 0.0;
  for (std::size_t i = 0; i < spec.space.num_modules(); ++i) {
    const double scale = module_scale(spec, q, i);
    rng_t rng(spec.seeds[i][q.sel.choice[i]]);
    double output = 0.0;
    for (int m = 0; m < spec.n; ++m) {
      output = std::max(output, std::abs(previous + scale * standard_normal(rng)));
    }
    previous = output;
  }
  return previous;
}

inline BlackBox make_artificial_black_box(ArtificialObjectiveSpec spec) {
  return [spec = std::move(spec)](const PipelineQuery& q) {
    return Evaluation{artificial_eval(spec, q), {}};
  };
}

}  // namespace cashadmm
