#pragma once

// Sub-problem solvers.
//
//   bo_minimize          GP + expected improvement over a box (theta-min)
//   random_minimize      seeded uniform search over a box (baseline, fallback)
//   bandit_z_minimize    Thompson-sampling combinatorial bandit (z-min)
//   exhaustive_z_minimize / random_z_minimize
//   jopt_minimize        BO over the joint relaxed (one-hot z, theta) space
//
// Every solver counts objective calls and never exceeds its budget. All are
// deterministic functions of their inputs and seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cashadmm/gp.hpp"
#include "cashadmm/objective.hpp"
#include "cashadmm/random.hpp"
#include "cashadmm/search_space.hpp"

namespace cashadmm {

/// A solver asked for more evaluations than its budget allows; a bug, never absorbed.
class budget_overrun : public std::logic_error {
 public:
  explicit budget_overrun(const std::string& where)
      : std::logic_error(where + " exceeded its evaluation budget") {}
};

using BoxObjective = std::function<double(std::span<const double>)>;
using SelectionScore = std::function<double(const Selection&)>;

struct SolveResult {
  std::vector<double> best_x;
  double best_value = kInf;
  SolverHistory history;  // warm points plus this call's finite evaluations
  int evaluations = 0;
};

struct BoOptions {
  std::uint64_t seed = 0;
  int candidates = 512;
  int perturbed_best = 8;
  double perturb_scale = 0.1;  // fraction of box width
  /// GP training cap; beyond it the best half plus the most recent are kept.
  std::size_t max_training_points = 128;
  double jitter = 1e-6;
};

namespace detail {

inline std::vector<double> uniform_point(rng_t& rng, const Box& box) {
  std::vector<double> x(box.dim());
  for (std::size_t d = 0; d < box.dim(); ++d) x[d] = uniform(rng, box.lower[d], box.upper[d]);
  return x;
}

/// Tracks the incumbent of one solver call; ties keep the first occurrence.
struct Incumbent {
  std::vector<double> x;
  double value = kInf;
  bool set = false;

  void offer(const std::vector<double>& candidate, double v) {
    if (!set || v < value) {
      x = candidate;
      value = v;
      set = true;
    }
  }
};

inline SolverHistory training_subset(const SolverHistory& history, std::size_t cap) {
  if (history.size() <= cap) return history;
  const std::size_t n = history.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return history.values[a] < history.values[b]; });
  std::vector<char> keep(n, 0);
  const std::size_t best_count = cap / 2;
  for (std::size_t r = 0; r < best_count; ++r) keep[order[r]] = 1;
  std::size_t kept = best_count;
  for (std::size_t p = n; p-- > 0 && kept < cap;) {
    if (!keep[p]) {
      keep[p] = 1;
      ++kept;
    }
  }
  SolverHistory subset{history.domain, {}, {}};
  for (std::size_t p = 0; p < n; ++p) {
    if (keep[p]) subset.add(history.points[p], history.values[p]);
  }
  return subset;
}

}  // namespace detail

/// Maximizes EI over seeded uniform candidates plus perturbations of the best
/// history points. Returns a point inside `domain`.
inline std::vector<double> propose_by_ei(const SolverHistory& history, const BoOptions& options,
                                         rng_t& rng) {
  const Box& domain = history.domain;
  const std::size_t dim = domain.dim();
  const GpModel model = gp_fit(detail::training_subset(history, options.max_training_points), options.jitter);

  std::vector<std::size_t> order(history.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return history.values[a] < history.values[b]; });
  const std::size_t perturbed = std::min<std::size_t>(static_cast<std::size_t>(options.perturbed_best), order.size());
  const auto total = static_cast<Eigen::Index>(options.candidates) + static_cast<Eigen::Index>(perturbed);

  Eigen::MatrixXd unit(total, static_cast<Eigen::Index>(dim));
  for (Eigen::Index c = 0; c < options.candidates; ++c) {
    for (std::size_t d = 0; d < dim; ++d) unit(c, static_cast<Eigen::Index>(d)) = uniform01(rng);
  }
  for (std::size_t r = 0; r < perturbed; ++r) {
    const auto& base = history.points[order[r]];
    const Eigen::Index row = options.candidates + static_cast<Eigen::Index>(r);
    for (std::size_t d = 0; d < dim; ++d) {
      const double u = detail::to_unit(base[d], domain.lower[d], domain.upper[d]);
      unit(row, static_cast<Eigen::Index>(d)) =
          std::clamp(u + options.perturb_scale * standard_normal(rng), 0.0, 1.0);
    }
  }

  Eigen::VectorXd mean, variance;
  gp_posterior_standardized(model, unit, mean, variance);
  Eigen::Index winner = 0;
  double best_ei = -1.0;
  for (Eigen::Index c = 0; c < total; ++c) {
    const double ei = expected_improvement(mean[c], variance[c], model.best_standardized);
    if (ei > best_ei) {
      best_ei = ei;
      winner = c;
    }
  }
  std::vector<double> x(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    x[d] = domain.lower[d] + domain.width(d) * unit(winner, static_cast<Eigen::Index>(d));
    x[d] = std::clamp(x[d], domain.lower[d], domain.upper[d]);
  }
  return x;
}

inline SolveResult bo_minimize(const BoxObjective& objective, const Box& domain, int budget,
                               const SolverHistory* warm, const BoOptions& options = {}) {
  if (budget < 1) throw std::invalid_argument("bo_minimize needs budget >= 1");
  rng_t rng(options.seed);
  SolveResult result;
  result.history.domain = domain;
  detail::Incumbent incumbent;
  if (warm != nullptr) {
    for (std::size_t p = 0; p < warm->size(); ++p) {
      if (!domain.contains(warm->points[p])) continue;
      result.history.add(warm->points[p], warm->values[p]);
      incumbent.offer(warm->points[p], warm->values[p]);
    }
  }

  auto evaluate = [&](std::vector<double> x) {
    const double v = objective(x);
    ++result.evaluations;
    incumbent.offer(x, v);
    result.history.add(std::move(x), v);
  };

  if (domain.dim() == 0) {
    evaluate({});
  } else {
    const int initial = std::max(3, (budget + 3) / 4);
    const int from_warm = static_cast<int>(std::min<std::size_t>(result.history.size(), static_cast<std::size_t>(initial)));
    const int random_points = std::min(budget, initial - from_warm);
    for (int e = 0; e < random_points; ++e) evaluate(detail::uniform_point(rng, domain));
    while (result.evaluations < budget) {
      if (result.history.empty()) {
        evaluate(detail::uniform_point(rng, domain));
      } else {
        evaluate(propose_by_ei(result.history, options, rng));
      }
    }
  }
  result.best_x = incumbent.x;
  result.best_value = incumbent.value;
  return result;
}

inline SolveResult random_minimize(const BoxObjective& objective, const Box& domain, int budget,
                                   std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("random_minimize called with an empty budget");
  rng_t rng(seed);
  SolveResult result;
  result.history.domain = domain;
  detail::Incumbent incumbent;
  for (int e = 0; e < budget; ++e) {
    auto x = detail::uniform_point(rng, domain);
    const double v = objective(x);
    ++result.evaluations;
    incumbent.offer(x, v);
    result.history.add(std::move(x), v);
    if (domain.dim() == 0) break;
  }
  result.best_x = incumbent.x;
  result.best_value = incumbent.value;
  return result;
}

// ---------------------------------------------------------------------------
// Discrete (z) solvers

struct ZResult {
  Selection best;
  double best_value = kInf;
  int evaluations = 0;
};

struct ArmPosterior {
  double mean = 0.0;
  double variance = 1.0;
  int pulls = 0;
};

/// One Normal posterior per (module, algorithm) arm over the standardized
/// negative score, plus running score statistics for the standardization.
struct BanditState {
  std::vector<std::vector<ArmPosterior>> arms;
  std::size_t score_count = 0;
  double score_mean = 0.0;
  double score_m2 = 0.0;

  static BanditState for_space(const SearchSpace& space) {
    BanditState state;
    state.arms.resize(space.num_modules());
    for (std::size_t i = 0; i < space.num_modules(); ++i) state.arms[i].resize(space.num_algorithms(i));
    return state;
  }

  double score_stddev() const {
    if (score_count < 2) return 0.0;
    return std::sqrt(score_m2 / static_cast<double>(score_count));
  }
};

inline constexpr double kBanditObservationNoise = 1.0;
inline constexpr double kBanditFailureReward = -3.0;

/// Thompson sampling; `state` persists across calls (warm bandit).
inline ZResult bandit_z_minimize(const SelectionScore& score, const SearchSpace& space, int budget,
                                 BanditState& state, std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("bandit_z_minimize needs budget >= 1");
  if (state.arms.size() != space.num_modules()) state = BanditState::for_space(space);
  rng_t rng(seed);
  ZResult result;
  bool have_best = false;
  for (int round = 0; round < budget; ++round) {
    Selection sel;
    sel.choice.resize(space.num_modules());
    for (std::size_t i = 0; i < space.num_modules(); ++i) {
      double best_draw = -kInf;
      for (std::size_t j = 0; j < state.arms[i].size(); ++j) {
        const auto& arm = state.arms[i][j];
        const double draw = arm.mean + std::sqrt(arm.variance) * standard_normal(rng);
        if (draw > best_draw) {
          best_draw = draw;
          sel.choice[i] = j;
        }
      }
    }
    const double value = score(sel);
    ++result.evaluations;
    if (!have_best || value < result.best_value) {
      result.best = sel;
      result.best_value = value;
      have_best = true;
    }

    double reward = kBanditFailureReward;
    if (std::isfinite(value)) {
      ++state.score_count;
      const double delta = value - state.score_mean;
      state.score_mean += delta / static_cast<double>(state.score_count);
      state.score_m2 += delta * (value - state.score_mean);
      const double sd = state.score_stddev();
      reward = -(value - state.score_mean) / (sd > 1e-12 ? sd : 1.0);
    }
    for (std::size_t i = 0; i < space.num_modules(); ++i) {
      auto& arm = state.arms[i][sel.choice[i]];
      const double precision = 1.0 / arm.variance + 1.0 / kBanditObservationNoise;
      arm.mean = (arm.mean / arm.variance + reward / kBanditObservationNoise) / precision;
      arm.variance = 1.0 / precision;
      ++arm.pulls;
    }
  }
  return result;
}

inline constexpr std::size_t kExhaustiveLimit = 10000;

/// Lexicographic enumeration (module 0 most significant); ties keep the
/// lexicographically smallest selection. `max_evaluations` truncates the walk.
inline ZResult exhaustive_z_minimize(const SelectionScore& score, const SearchSpace& space,
                                     std::optional<int> max_evaluations = std::nullopt) {
  if (space.num_combinations() > kExhaustiveLimit) {
    throw std::invalid_argument("search space too large for exhaustive z-minimization");
  }
  ZResult result;
  Selection sel;
  sel.choice.assign(space.num_modules(), 0);
  bool have_best = false;
  for (;;) {
    if (max_evaluations && result.evaluations >= *max_evaluations) break;
    const double value = score(sel);
    ++result.evaluations;
    if (!have_best || value < result.best_value) {
      result.best = sel;
      result.best_value = value;
      have_best = true;
    }
    std::size_t i = space.num_modules();
    while (i > 0) {
      --i;
      if (++sel.choice[i] < space.num_algorithms(i)) break;
      sel.choice[i] = 0;
      if (i == 0) return result;
    }
    if (space.num_modules() == 0) break;
  }
  return result;
}

inline ZResult random_z_minimize(const SelectionScore& score, const SearchSpace& space, int budget,
                                 std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("random_z_minimize called with an empty budget");
  rng_t rng(seed);
  ZResult result;
  for (int round = 0; round < budget; ++round) {
    Selection sel;
    for (std::size_t i = 0; i < space.num_modules(); ++i) {
      sel.choice.push_back(static_cast<std::size_t>(
          uniform_int(rng, 0, static_cast<std::int64_t>(space.num_algorithms(i)) - 1)));
    }
    const double value = score(sel);
    ++result.evaluations;
    if (round == 0 || value < result.best_value) {
      result.best = std::move(sel);
      result.best_value = value;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// JOPT: one BO run over the joint relaxed space

/// Joint box: sum K_i one-hot relaxations in [0,1], then every HP in flat order.
inline Box joint_domain(const SearchSpace& space) {
  Box box;
  for (std::size_t i = 0; i < space.num_modules(); ++i) {
    for (std::size_t j = 0; j < space.num_algorithms(i); ++j) {
      box.lower.push_back(0.0);
      box.upper.push_back(1.0);
    }
  }
  for (const auto& slot : space.slots()) {
    box.lower.push_back(slot.lower);
    box.upper.push_back(slot.upper);
  }
  return box;
}

/// Argmax per module block; ties go to the lowest index.
inline Selection decode_onehot(const SearchSpace& space, std::span<const double> x) {
  Selection sel;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < space.num_modules(); ++i) {
    const std::size_t k = space.num_algorithms(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (x[offset + j] > x[offset + best]) best = j;
    }
    sel.choice.push_back(best);
    offset += k;
  }
  return sel;
}

inline PipelineQuery decode_joint(const SearchSpace& space, std::span<const double> x) {
  PipelineQuery q;
  q.sel = decode_onehot(space, x);
  const std::size_t offset = space.total_algorithms();
  q.theta_c.resize(space.num_continuous());
  q.theta_d.resize(space.num_integer());
  for (const auto& slot : space.slots()) {
    const double value = x[offset + slot.flat];
    if (slot.kind == HpKind::continuous) {
      q.theta_c[slot.offset] = project_box(value, slot.lower, slot.upper);
    } else {
      q.theta_d[slot.offset] = project_integer(value, slot);
    }
  }
  return q;
}

struct JoptResult {
  std::optional<PipelineQuery> best;
  double best_value = kInf;
  int evaluations = 0;
};

/// Runs until `budget` evaluations or the evaluator's time budget.
inline JoptResult jopt_minimize(const SearchSpace& space, Evaluator& evaluator, int budget,
                                std::uint64_t seed, BoOptions options = {}) {
  if (budget < 1) throw std::invalid_argument("jopt_minimize needs budget >= 1");
  options.seed = derive_seed(seed, 0x6a6f7074ULL);
  const Box domain = joint_domain(space);
  JoptResult result;
  auto objective = [&](std::span<const double> x) {
    ++result.evaluations;
    return evaluator.evaluate(decode_joint(space, x)).objective;
  };
  try {
    bo_minimize(objective, domain, budget, nullptr, options);
  } catch (const budget_exhausted&) {
  }
  result.best = evaluator.best();
  result.best_value = evaluator.incumbent();
  return result;
}

}  // namespace cashadmm
