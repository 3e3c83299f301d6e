#pragma once

// Unconstrained ADMM for CASH. Each iteration t runs
//
//   theta-min  argmin f~(z^t, theta) + rho/2 |theta_d~ - b|^2,  b = delta - lambda/rho
//              inactive relaxed-integer dims: closed-form box projection of b;
//              active dims: black-box solve over the active set S only
//   delta-min  delta = P_D(theta_d~ + lambda/rho), closed form
//   z-min      argmin_z f~(z, theta^{t+1}), black-box over selections
//   lambda    += rho (theta_d~ - delta)
//
// Sub-solver budgets follow a fixed or adaptive precision schedule; the budget
// unit is one f~ evaluation. Incumbents live in the Evaluator and cover every
// evaluation made by any step.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cashadmm/objective.hpp"
#include "cashadmm/search_space.hpp"
#include "cashadmm/solvers.hpp"

namespace cashadmm {

struct PrecisionSchedule {
  enum class Mode { fixed, adaptive };

  Mode mode = Mode::adaptive;
  int initial = 16;  // I (fixed) or I0 (adaptive)
  int factor = 8;    // F
  int cap = 256;     // Imax

  static PrecisionSchedule fixed(int iterations) { return {Mode::fixed, iterations, 0, iterations}; }
  static PrecisionSchedule adaptive(int initial, int factor, int cap) {
    return {Mode::adaptive, initial, factor, cap};
  }

  void validate() const {
    if (initial < 1) throw std::invalid_argument("precision schedule needs I >= 1");
    if (mode == Mode::adaptive && (factor < 1 || cap < initial)) {
      throw std::invalid_argument("adaptive schedule needs F >= 1 and Imax >= I0");
    }
  }

  std::string to_string() const {
    if (mode == Mode::fixed) return "fixed:" + std::to_string(initial);
    return "adaptive:" + std::to_string(initial) + ":" + std::to_string(factor) + ":" + std::to_string(cap);
  }
};

/// Parses "fixed:I" or "adaptive:I0:F:Imax".
inline PrecisionSchedule parse_schedule(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream stream(text);
  for (std::string part; std::getline(stream, part, ':');) parts.push_back(part);
  auto number = [&](std::size_t k) {
    std::size_t used = 0;
    const int value = std::stoi(parts.at(k), &used);
    if (used != parts[k].size()) throw std::invalid_argument("bad schedule field '" + parts[k] + "'");
    return value;
  };
  PrecisionSchedule schedule;
  try {
    if (parts.size() == 2 && parts[0] == "fixed") {
      schedule = PrecisionSchedule::fixed(number(1));
    } else if (parts.size() == 4 && parts[0] == "adaptive") {
      schedule = PrecisionSchedule::adaptive(number(1), number(2), number(3));
    } else {
      throw std::invalid_argument("");
    }
  } catch (const std::logic_error&) {
    throw std::invalid_argument("schedule must be fixed:I or adaptive:I0:F:Imax, got '" + text + "'");
  }
  schedule.validate();
  return schedule;
}

/// fixed(I) -> I; adaptive(I0, F, Imax) -> min(I0 + t F, Imax).
inline int precision_at(const PrecisionSchedule& schedule, int t) {
  if (schedule.mode == PrecisionSchedule::Mode::fixed) return schedule.initial;
  const long long value = static_cast<long long>(schedule.initial) +
                          static_cast<long long>(t) * static_cast<long long>(schedule.factor);
  return static_cast<int>(std::min<long long>(value, schedule.cap));
}

enum class ThetaSolverKind { bo, random };
enum class ZSolverKind { bandit, exhaustive, random };

struct AdmmConfig {
  double rho = 1.0;
  int max_iters = 100;
  double time_budget = kInf;
  ClockKind clock = ClockKind::wall;
  PrecisionSchedule schedule = PrecisionSchedule::adaptive(16, 8, 256);
  bool warm_start = true;
  std::uint64_t seed = 0;
  ThetaSolverKind theta_solver = ThetaSolverKind::bo;
  ZSolverKind z_solver = ZSolverKind::bandit;
  BoOptions bo;

  void validate() const {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw std::invalid_argument("rho must be > 0");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(time_budget > 0.0)) throw std::invalid_argument("time_budget must be > 0");
    schedule.validate();
  }
};

/// Raw black-box outputs of one sub-problem, replayed with the current
/// penalty when the same selection recurs.
struct WarmHistory {
  std::vector<std::vector<double>> points;
  std::vector<Evaluation> values;
};

struct AdmmState {
  int t = 0;
  double rho = 1.0;
  Selection z;
  ThetaAssignment theta;            // theta_c and theta_d~
  std::vector<std::int64_t> delta;  // integer copy of theta_d~
  std::vector<double> lambda;
  BanditState bandit;
  std::map<Selection, WarmHistory> warm;
};

/// Extra variables and penalty appended to the theta-min black-box objective.
struct ThetaAugmentation {
  Box extra;
  std::function<double(const Evaluation&, std::span<const double> extra)> penalty;
};

/// Extra penalty added to each z-min score.
using ZAugmentation = std::function<double(const Evaluation&)>;

struct ThetaStepResult {
  std::size_t dimension = 0;  // black-box dimension actually solved
  int evaluations = 0;
  double best_value = kInf;
  std::vector<double> extra;  // solved values of the augmentation variables
};

struct ZStepResult {
  Selection best;
  double best_value = kInf;
  int evaluations = 0;
  std::optional<EvaluationRecord> best_record;  // f~ and g~ at (best, theta)
};

namespace detail {

enum : std::uint64_t { kInitStream = 1, kThetaStream = 2, kZStream = 3, kFallbackStream = 4 };

struct ActiveLayout {
  std::vector<std::size_t> flat;  // active HP flat indices, ascending
  Box box;                        // HP dims then augmentation dims
};

inline ActiveLayout active_layout(const SearchSpace& space, const Selection& z, const Box* extra) {
  ActiveLayout layout;
  layout.flat = active_set(space, z);
  for (std::size_t flat : layout.flat) {
    const auto& slot = space.slot(flat);
    layout.box.lower.push_back(slot.lower);
    layout.box.upper.push_back(slot.upper);
  }
  if (extra != nullptr) {
    layout.box.lower.insert(layout.box.lower.end(), extra->lower.begin(), extra->lower.end());
    layout.box.upper.insert(layout.box.upper.end(), extra->upper.begin(), extra->upper.end());
  }
  return layout;
}

inline void write_active(const SearchSpace& space, const ActiveLayout& layout, std::span<const double> x,
                         ThetaAssignment& theta) {
  for (std::size_t k = 0; k < layout.flat.size(); ++k) {
    const auto& slot = space.slot(layout.flat[k]);
    auto& target = slot.kind == HpKind::continuous ? theta.cont : theta.relaxed_int;
    target[slot.offset] = x[k];
  }
}

}  // namespace detail

/// b = delta - lambda / rho, elementwise.
inline std::vector<double> compute_b(const AdmmState& state) {
  std::vector<double> b(state.delta.size());
  for (std::size_t k = 0; k < b.size(); ++k) {
    b[k] = static_cast<double>(state.delta[k]) - state.lambda[k] / state.rho;
  }
  return b;
}

/// Initial state: uniform (z, theta), delta = theta_d sample, lambda = 0.
inline AdmmState initial_state(const SearchSpace& space, const AdmmConfig& config) {
  AdmmState state;
  state.rho = config.rho;
  auto [z, theta] = sample_uniform(space, derive_seed(config.seed, detail::kInitStream));
  state.z = std::move(z);
  state.theta = std::move(theta);
  state.delta.resize(space.num_integer());
  for (std::size_t k = 0; k < state.delta.size(); ++k) {
    state.delta[k] = project_integer(state.theta.relaxed_int[k], space.integer_slot(k));
  }
  state.lambda.assign(space.num_integer(), 0.0);
  state.bandit = BanditState::for_space(space);
  return state;
}

inline ThetaStepResult theta_min_step(AdmmState& state, Evaluator& evaluator, const AdmmConfig& config,
                                      int budget, const ThetaAugmentation* augmentation = nullptr) {
  const SearchSpace& space = evaluator.space();
  const std::vector<double> b = compute_b(state);

  // Inactive relaxed-integer dims: Euclidean projection of b, no evaluations.
  std::vector<char> is_active(space.num_hps(), 0);
  for (std::size_t flat : active_set(space, state.z)) is_active[flat] = 1;
  for (std::size_t k = 0; k < space.num_integer(); ++k) {
    const auto& slot = space.integer_slot(k);
    if (!is_active[slot.flat]) state.theta.relaxed_int[k] = project_box(b[k], slot.lower, slot.upper);
  }

  const Box* extra_box = augmentation != nullptr ? &augmentation->extra : nullptr;
  const auto layout = detail::active_layout(space, state.z, extra_box);
  const std::size_t hp_dims = layout.flat.size();

  auto penalized = [&](std::span<const double> x, const Evaluation& raw) {
    if (!std::isfinite(raw.objective)) return kInf;
    double prox = 0.0;
    for (std::size_t k = 0; k < hp_dims; ++k) {
      const auto& slot = space.slot(layout.flat[k]);
      if (slot.kind != HpKind::integer) continue;
      const double r = x[k] - b[slot.offset];
      prox += r * r;
    }
    double value = raw.objective + 0.5 * state.rho * prox;
    if (augmentation != nullptr) value += augmentation->penalty(raw, x.subspan(hp_dims));
    return value;
  };

  WarmHistory fresh;
  int evaluations = 0;
  ThetaAssignment trial = state.theta;
  auto objective = [&](std::span<const double> x) {
    if (evaluations >= budget) throw budget_overrun("theta-min");
    ++evaluations;
    detail::write_active(space, layout, x, trial);
    const auto record = evaluator.surrogate(state.z, trial);
    Evaluation raw{record.objective, record.constraint_values};
    fresh.points.emplace_back(x.begin(), x.end());
    fresh.values.push_back(raw);
    return penalized(x, raw);
  };

  SolverHistory warm{layout.box, {}, {}};
  WarmHistory* stored = nullptr;
  if (config.warm_start) {
    stored = &state.warm[state.z];
    for (std::size_t p = 0; p < stored->points.size(); ++p) {
      warm.add(stored->points[p], penalized(stored->points[p], stored->values[p]));
    }
  }

  const std::uint64_t seed = derive_seed(config.seed, detail::kThetaStream, static_cast<std::uint64_t>(state.t));
  SolveResult solved;
  auto finish = [&] {
    if (stored != nullptr) {
      stored->points.insert(stored->points.end(), fresh.points.begin(), fresh.points.end());
      stored->values.insert(stored->values.end(), fresh.values.begin(), fresh.values.end());
    }
  };
  try {
    if (config.theta_solver == ThetaSolverKind::bo) {
      BoOptions options = config.bo;
      options.seed = seed;
      solved = bo_minimize(objective, layout.box, budget, config.warm_start ? &warm : nullptr, options);
    } else {
      solved = random_minimize(objective, layout.box, budget, seed);
    }
  } catch (const budget_exhausted&) {
    finish();
    throw;
  } catch (const budget_overrun&) {
    throw;
  } catch (const std::exception&) {
    // Solver failure: best of random sampling with what is left of the budget.
    const int remaining = budget - evaluations;
    if (remaining < 1) {
      finish();
      return {layout.box.dim(), evaluations, kInf, {}};
    }
    solved = random_minimize(objective, layout.box, remaining,
                             derive_seed(seed, detail::kFallbackStream));
  }
  finish();

  ThetaStepResult result{layout.box.dim(), evaluations, solved.best_value, {}};
  if (solved.best_x.size() == layout.box.dim()) {
    detail::write_active(space, layout, solved.best_x, state.theta);
    result.extra.assign(solved.best_x.begin() + static_cast<std::ptrdiff_t>(hp_dims), solved.best_x.end());
  }
  return result;
}

/// delta = P_D(theta_d~ + lambda / rho); no evaluations.
inline void delta_min_step(AdmmState& state, const SearchSpace& space) {
  for (std::size_t k = 0; k < state.delta.size(); ++k) {
    const double a = state.theta.relaxed_int[k] + state.lambda[k] / state.rho;
    state.delta[k] = project_integer(a, space.integer_slot(k));
  }
}

inline ZStepResult z_min_step(AdmmState& state, Evaluator& evaluator, const AdmmConfig& config, int budget,
                              const ZAugmentation* augmentation = nullptr) {
  const SearchSpace& space = evaluator.space();
  int evaluations = 0;
  std::map<Selection, EvaluationRecord> seen;
  auto score = [&](const Selection& sel) {
    if (evaluations >= budget) throw budget_overrun("z-min");
    ++evaluations;
    const auto record = evaluator.surrogate(sel, state.theta);
    seen.insert_or_assign(sel, record);
    if (!std::isfinite(record.objective)) return kInf;
    double value = record.objective;
    if (augmentation != nullptr) value += (*augmentation)(Evaluation{record.objective, record.constraint_values});
    return value;
  };

  const std::uint64_t seed = derive_seed(config.seed, detail::kZStream, static_cast<std::uint64_t>(state.t));
  ZResult solved;
  try {
    switch (config.z_solver) {
      case ZSolverKind::bandit:
        solved = bandit_z_minimize(score, space, budget, state.bandit, seed);
        break;
      case ZSolverKind::exhaustive:
        solved = exhaustive_z_minimize(score, space, budget);
        break;
      case ZSolverKind::random:
        solved = random_z_minimize(score, space, budget, seed);
        break;
    }
  } catch (const budget_exhausted&) {
    throw;
  } catch (const budget_overrun&) {
    throw;
  } catch (const std::exception&) {
    const int remaining = budget - evaluations;
    if (remaining < 1) return {state.z, kInf, evaluations, std::nullopt};
    solved = random_z_minimize(score, space, remaining, derive_seed(seed, detail::kFallbackStream));
  }

  ZStepResult result{solved.best, solved.best_value, evaluations, std::nullopt};
  if (auto it = seen.find(solved.best); it != seen.end()) result.best_record = it->second;
  if (!solved.best.choice.empty() || space.num_modules() == 0) state.z = solved.best;
  return result;
}

/// lambda += rho (theta_d~ - delta).
inline void lambda_update(AdmmState& state) {
  for (std::size_t k = 0; k < state.lambda.size(); ++k) {
    state.lambda[k] += state.rho * (state.theta.relaxed_int[k] - static_cast<double>(state.delta[k]));
  }
}

/// max_k |theta_d~_k - delta_k|.
inline double primal_residual(const AdmmState& state) {
  double worst = 0.0;
  for (std::size_t k = 0; k < state.delta.size(); ++k) {
    worst = std::max(worst, std::abs(state.theta.relaxed_int[k] - static_cast<double>(state.delta[k])));
  }
  return worst;
}

struct AdmmResult {
  std::optional<PipelineQuery> best;
  double best_value = kInf;
  AdmmState state;
  int iterations = 0;  // completed ADMM iterations
  std::vector<TraceRecord> trace;
};

/// Per-iteration hook, called after the lambda update.
using IterationHook = std::function<void(const AdmmState&, const ThetaStepResult&, const ZStepResult&)>;

inline AdmmResult run_admm(Evaluator& evaluator, const AdmmConfig& config, const IterationHook& hook = {}) {
  config.validate();
  const SearchSpace& space = evaluator.space();
  if (auto violations = validate_space(space); !violations.empty()) {
    throw std::invalid_argument("invalid search space: " + violations.front());
  }
  AdmmResult result;
  result.state = initial_state(space, config);
  AdmmState& state = result.state;
  try {
    evaluator.surrogate(state.z, state.theta);
    for (int t = 0; t < config.max_iters; ++t) {
      state.t = t;
      const int budget = precision_at(config.schedule, t);
      const auto theta_step = theta_min_step(state, evaluator, config, budget);
      delta_min_step(state, space);
      const auto z_step = z_min_step(state, evaluator, config, budget);
      lambda_update(state);
      ++result.iterations;
      if (hook) hook(state, theta_step, z_step);
    }
  } catch (const budget_exhausted&) {
  }
  result.best = evaluator.best();
  result.best_value = evaluator.incumbent();
  result.trace = evaluator.trace();
  return result;
}

inline AdmmResult run_admm(const SearchSpace& space, BlackBox black_box, const AdmmConfig& config,
                           EvaluatorOptions options = {}) {
  options.clock = config.clock;
  options.time_budget = config.time_budget;
  options.seed = config.seed;
  Evaluator evaluator(space, std::move(black_box), std::move(options));
  return run_admm(evaluator, config);
}

}  // namespace cashadmm
