#pragma once

// ADMM with black-box constraints g_m <= eps_m.
//
// Each inequality becomes g_m = eps_m - u_m with a slack u_m in [0, eps_m].
// The slacks join the active black-box solve of theta-min, z-min gains the
// same quadratic penalty, and a multiplier mu_m per constraint is updated
// with g~_m at the new iterate:
//
//   penalty = rho/2 sum_m (g~_m - eps_m + u_m + mu_m/rho)^2
//   mu_m   += rho (g~_m(z^{t+1}, theta^{t+1}) - eps_m + u_m^{t+1})
//
// f and every g_m come from one joint black-box evaluation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cashadmm/admm.hpp"
#include "cashadmm/objective.hpp"

namespace cashadmm {

struct ConstraintSpec {
  std::string name;
  double epsilon = 0.0;
};

struct ConstrainedState {
  AdmmState base;
  std::vector<double> epsilon;
  std::vector<double> u;
  std::vector<double> mu;
  std::vector<double> g_latest;  // g~ at the latest (z, theta)
};

/// rho/2 sum_m (g_m - eps_m + u_m + mu_m/rho)^2; +inf if g is missing or non-finite.
inline double constraint_penalty(std::span<const double> g, std::span<const double> u,
                                 std::span<const double> mu, std::span<const double> epsilon, double rho) {
  if (g.size() != epsilon.size()) return kInf;
  double sum = 0.0;
  for (std::size_t m = 0; m < epsilon.size(); ++m) {
    if (!std::isfinite(g[m])) return kInf;
    const double r = g[m] - epsilon[m] + u[m] + mu[m] / rho;
    sum += r * r;
  }
  return 0.5 * rho * sum;
}

/// f~ + rho/2 [ |theta_d~_S - b_S|^2 + sum_m (g~_m - eps_m + u_m + mu_m/rho)^2 ],
/// with the proximal term passed in as its squared norm.
inline double constrained_theta_objective(double f, double prox_squared_norm, std::span<const double> g,
                                          std::span<const double> u, std::span<const double> mu,
                                          std::span<const double> epsilon, double rho) {
  if (!std::isfinite(f)) return kInf;
  return f + 0.5 * rho * prox_squared_norm + constraint_penalty(g, u, mu, epsilon, rho);
}

/// f~ + rho/2 sum_m (g~_m - eps_m + u_m + mu_m/rho)^2.
inline double constrained_z_objective(double f, std::span<const double> g, std::span<const double> u,
                                      std::span<const double> mu, std::span<const double> epsilon,
                                      double rho) {
  if (!std::isfinite(f)) return kInf;
  return f + constraint_penalty(g, u, mu, epsilon, rho);
}

inline void mu_update(std::vector<double>& mu, std::span<const double> g, std::span<const double> u,
                      std::span<const double> epsilon, double rho) {
  if (g.size() != mu.size() || u.size() != mu.size() || epsilon.size() != mu.size()) {
    throw std::invalid_argument("mu_update: constraint vector lengths differ");
  }
  for (std::size_t m = 0; m < mu.size(); ++m) mu[m] += rho * (g[m] - epsilon[m] + u[m]);
}

/// g_m <= eps_m for every m (non-strict).
inline bool feasibility_check(const EvaluationRecord& record, std::span<const double> epsilon) {
  if (record.constraint_values.size() != epsilon.size()) {
    throw std::invalid_argument("record carries " + std::to_string(record.constraint_values.size()) +
                                " constraint values, expected " + std::to_string(epsilon.size()));
  }
  for (std::size_t m = 0; m < epsilon.size(); ++m) {
    if (!(record.constraint_values[m] <= epsilon[m])) return false;
  }
  return true;
}

inline std::vector<double> thresholds_of(const std::vector<ConstraintSpec>& specs) {
  std::vector<double> epsilon;
  for (const auto& spec : specs) {
    if (!(spec.epsilon >= 0.0)) {
      throw std::invalid_argument("constraint '" + spec.name + "' has negative threshold");
    }
    epsilon.push_back(spec.epsilon);
  }
  return epsilon;
}

struct ConstrainedResult {
  std::optional<PipelineQuery> best;
  double best_value = kInf;
  std::optional<PipelineQuery> best_feasible;
  double best_feasible_value = kInf;
  ConstrainedState state;
  int iterations = 0;
  std::vector<TraceRecord> trace;
};

/// Called once per iteration, after the mu update.
using ConstrainedHook = std::function<void(const ConstrainedState&)>;

/// The evaluator's epsilon should match `specs` so the trace flags feasibility.
inline ConstrainedResult run_admm_constrained(Evaluator& evaluator, const AdmmConfig& config,
                                              const std::vector<ConstraintSpec>& specs,
                                              const ConstrainedHook& hook = {}) {
  config.validate();
  const SearchSpace& space = evaluator.space();
  if (auto violations = validate_space(space); !violations.empty()) {
    throw std::invalid_argument("invalid search space: " + violations.front());
  }
  ConstrainedResult result;
  ConstrainedState& state = result.state;
  state.epsilon = thresholds_of(specs);
  const std::size_t constraints = state.epsilon.size();
  state.base = initial_state(space, config);
  state.u.resize(constraints);
  for (std::size_t m = 0; m < constraints; ++m) state.u[m] = 0.5 * state.epsilon[m];
  state.mu.assign(constraints, 0.0);

  ThetaAugmentation theta_aug;
  theta_aug.extra.lower.assign(constraints, 0.0);
  theta_aug.extra.upper = state.epsilon;
  theta_aug.penalty = [&](const Evaluation& raw, std::span<const double> u) {
    return constraint_penalty(raw.constraints, u, state.mu, state.epsilon, state.base.rho);
  };
  const ZAugmentation z_aug = [&](const Evaluation& raw) {
    return constraint_penalty(raw.constraints, state.u, state.mu, state.epsilon, state.base.rho);
  };

  AdmmState& base = state.base;
  try {
    const auto initial = evaluator.surrogate(base.z, base.theta);
    state.g_latest = initial.constraint_values;
    for (int t = 0; t < config.max_iters; ++t) {
      base.t = t;
      const int budget = precision_at(config.schedule, t);
      const auto theta_step = theta_min_step(base, evaluator, config, budget, &theta_aug);
      if (theta_step.extra.size() == constraints) state.u = theta_step.extra;
      delta_min_step(base, space);
      const auto z_step = z_min_step(base, evaluator, config, budget, &z_aug);
      lambda_update(base);
      if (constraints > 0) {
        // g~ at (z^{t+1}, theta^{t+1}); z-min already evaluated it unless it fell back.
        std::vector<double> g;
        if (z_step.best_record && z_step.best_record->query.sel == base.z) {
          g = z_step.best_record->constraint_values;
        } else {
          g = evaluator.surrogate(base.z, base.theta).constraint_values;
        }
        state.g_latest = g;
        if (g.size() == constraints &&
            std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v); })) {
          mu_update(state.mu, g, state.u, state.epsilon, base.rho);
        }
      }
      ++result.iterations;
      if (hook) hook(state);
    }
  } catch (const budget_exhausted&) {
  }
  result.best = evaluator.best();
  result.best_value = evaluator.incumbent();
  result.best_feasible = evaluator.best_feasible();
  result.best_feasible_value = evaluator.incumbent_feasible();
  result.trace = evaluator.trace();
  return result;
}

}  // namespace cashadmm
