// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--only N[,N...]] [--budget EVALS] [--seeds R]
//        acceptance --dump-artificial   (helper for the cross-process check)

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cashadmm/cashadmm.hpp"

using namespace cashadmm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream out;
  out << std::setprecision(precision) << x;
  return out.str();
}

// ---------------------------------------------------------------------------
// Shared fixtures

// Logical-clock budget (evaluations) per run for the desk-scale experiments.
int g_budget = 1500;
int g_seeds = 10;

ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.admm.clock = ClockKind::logical;
  c.admm.time_budget = g_budget;
  c.admm.rho = 1.0;
  c.admm.max_iters = 100;
  return c;
}

std::map<std::string, std::vector<RunOutcome>> g_runs;

const std::vector<RunOutcome>& runs(const std::string& key, const std::function<void(ExperimentConfig&)>& tweak) {
  if (auto it = g_runs.find(key); it != g_runs.end()) return it->second;
  ExperimentConfig c = desk_config();
  c.label = key;
  tweak(c);
  std::vector<RunOutcome> out;
  for (int r = 0; r < g_seeds; ++r) out.push_back(run_single(c, r));
  return g_runs[key] = std::move(out);
}

const std::vector<RunOutcome>& adaptive_runs() {
  return runs("adadmm-f8", [](ExperimentConfig&) {});
}

double at_fraction(const RunOutcome& run, double fraction) {
  return incumbent_at(run.trace, fraction * g_budget).value_or(kInf);
}

// ---------------------------------------------------------------------------
// 1. delta-min exactness

Outcome criterion1() {
  std::size_t mismatches = 0;
  std::size_t checks = 0;
  for (std::int64_t lower : {-50LL, 0LL, 7LL}) {
    for (std::int64_t width = 0; width <= 100; ++width) {
      const std::int64_t upper = lower + width;
      const double lo = static_cast<double>(lower) - 5.0;
      const double hi = static_cast<double>(upper) + 5.0;
      for (int g = 0; g < 10000; ++g) {
        const double a = lo + (hi - lo) * g / 9999.0;
        std::int64_t best = lower;
        double best_distance = kInf;
        for (std::int64_t d = lower; d <= upper; ++d) {
          const double distance = (static_cast<double>(d) - a) * (static_cast<double>(d) - a);
          if (distance < best_distance || (distance == best_distance && d > best)) {
            best = d;
            best_distance = distance;
          }
        }
        ++checks;
        if (project_integer(a, lower, upper) != best) ++mismatches;
      }
    }
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in " + std::to_string(checks) + " checks"};
}

// ---------------------------------------------------------------------------
// 2. surrogate identity

Outcome criterion2() {
  const SearchSpace space = benchmark_space();
  const auto spec = make_artificial(space, 11);
  EvaluatorOptions options;
  options.use_cache = false;
  options.clock = ClockKind::logical;
  Evaluator evaluator(space, make_artificial_black_box(spec), options);
  rng_t rng(2024);
  std::size_t mismatches = 0;
  for (int k = 0; k < 1000; ++k) {
    auto [sel, theta] = sample_uniform(space, rng());
    for (std::size_t d = 0; d < theta.relaxed_int.size(); ++d) {
      const auto& slot = space.integer_slot(d);
      theta.relaxed_int[d] = uniform(rng, slot.lower, slot.upper);
    }
    PipelineQuery direct{sel, theta.cont, {}};
    for (std::size_t d = 0; d < theta.relaxed_int.size(); ++d) {
      const auto& slot = space.integer_slot(d);
      direct.theta_d.push_back(static_cast<std::int64_t>(
          std::clamp(std::floor(theta.relaxed_int[d] + 0.5), slot.lower, slot.upper)));
    }
    const double via_surrogate = evaluator.surrogate(sel, theta).objective;
    const double via_f = artificial_eval(spec, direct);
    if (std::bit_cast<std::uint64_t>(via_surrogate) != std::bit_cast<std::uint64_t>(via_f)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in 1000 draws"};
}

// ---------------------------------------------------------------------------
// 3. artificial-objective properties

std::vector<PipelineQuery> determinism_queries() {
  const SearchSpace space = benchmark_space();
  std::vector<PipelineQuery> queries;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const auto [sel, theta] = sample_uniform(space, derive_seed(77, k));
    queries.push_back(project_query(space, sel, theta));
  }
  return queries;
}

std::vector<std::uint64_t> determinism_values() {
  const auto spec = make_artificial(benchmark_space(), 5);
  std::vector<std::uint64_t> bits;
  for (const auto& q : determinism_queries()) bits.push_back(std::bit_cast<std::uint64_t>(artificial_eval(spec, q)));
  return bits;
}

int dump_artificial() {
  for (auto bits : determinism_values()) std::printf("%016llx\n", static_cast<unsigned long long>(bits));
  return 0;
}

std::string g_self;

Outcome criterion3() {
  std::vector<std::string> failures;

  // Bitwise determinism: 1000 repeats in process.
  const auto spec = make_artificial(benchmark_space(), 5);
  const auto queries = determinism_queries();
  const auto reference = determinism_values();
  const auto first = std::bit_cast<std::uint64_t>(artificial_eval(spec, queries[0]));
  for (int r = 0; r < 1000; ++r) {
    if (std::bit_cast<std::uint64_t>(artificial_eval(spec, queries[0])) != first) {
      failures.push_back("repeat mismatch");
      break;
    }
  }
  if (determinism_values() != reference) failures.push_back("suite mismatch");

  // Across two process invocations.
  for (int invocation = 0; invocation < 2; ++invocation) {
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen((g_self + " --dump-artificial").c_str(), "r"), pclose);
    if (!pipe) {
      failures.push_back("cannot spawn helper");
      break;
    }
    std::vector<std::uint64_t> other;
    unsigned long long bits = 0;
    while (std::fscanf(pipe.get(), "%llx", &bits) == 1) other.push_back(bits);
    if (other != reference) failures.push_back("cross-process mismatch (invocation " + std::to_string(invocation) + ")");
  }

  // Inactive-HP invariance on a 2x2 space, exhaustive over a 0.25 grid.
  const SearchSpace small({{"m1", {{"a", {{"x", HpKind::continuous, 0, 1}, {"y", HpKind::continuous, 0, 1}}},
                                   {"b", {{"x", HpKind::continuous, 0, 1}}}}},
                           {"m2", {{"c", {{"x", HpKind::continuous, 0, 1}}},
                                   {"d", {{"x", HpKind::continuous, 0, 1}, {"y", HpKind::continuous, 0, 1}}}}}});
  const auto small_spec = make_artificial(small, 9);
  const std::size_t dims = small.num_continuous();
  std::size_t grid_points = 1;
  for (std::size_t d = 0; d < dims; ++d) grid_points *= 5;
  std::size_t invariance_violations = 0;
  std::size_t negatives = 0;
  std::size_t evaluations = 0;
  for (std::size_t c0 = 0; c0 < 2; ++c0) {
    for (std::size_t c1 = 0; c1 < 2; ++c1) {
      const Selection sel{{c0, c1}};
      std::vector<char> active(dims, 0);
      for (std::size_t flat : active_set(small, sel)) active[small.slot(flat).offset] = 1;
      std::map<std::vector<double>, std::uint64_t> by_active;
      for (std::size_t code = 0; code < grid_points; ++code) {
        PipelineQuery q{sel, std::vector<double>(dims), {}};
        std::size_t rest = code;
        std::vector<double> key;
        for (std::size_t d = 0; d < dims; ++d) {
          q.theta_c[d] = 0.25 * static_cast<double>(rest % 5);
          rest /= 5;
          if (active[d]) key.push_back(q.theta_c[d]);
        }
        const double value = artificial_eval(small_spec, q);
        ++evaluations;
        if (!(value >= 0.0)) ++negatives;
        const auto bits = std::bit_cast<std::uint64_t>(value);
        auto [it, inserted] = by_active.emplace(key, bits);
        if (!inserted && it->second != bits) ++invariance_violations;
      }
    }
  }
  if (invariance_violations) failures.push_back(std::to_string(invariance_violations) + " invariance violations");

  // Non-negativity over the determinism suite too.
  for (auto bits : reference) {
    if (!(std::bit_cast<double>(bits) >= 0.0)) ++negatives;
  }
  if (negatives) failures.push_back(std::to_string(negatives) + " negative values");

  // v_i hand check: w = (0.5, -0.25), theta = (1, 1) -> |0.25 / 2| = 0.125.
  const SearchSpace one({{"m", {{"a", {{"p", HpKind::continuous, 0, 2}, {"q", HpKind::continuous, 0, 2}}}}}});
  auto hand = make_artificial(one, 1);
  hand.weights[0][0] = {0.5, -0.25};
  const double v = module_scale(hand, PipelineQuery{Selection{{0}}, {1.0, 1.0}, {}}, 0);
  if (v != 0.125) failures.push_back("v = " + fmt(v, 17) + " != 0.125");

  std::string detail = failures.empty() ? "" : failures.front() + "; ";
  detail += std::to_string(evaluations) + " grid evaluations, v = " + fmt(v);
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------------------
// 4. GP / EI oracle checks

Outcome criterion4() {
  double worst_interp = 0.0;
  for (int data = 0; data < 2; ++data) {
    SolverHistory history{{{0.0}, {1.0}}, {}, {}};
    const std::vector<double> xs = data == 0 ? std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}
                                             : std::vector<double>{0.0, 0.2, 0.45, 0.7, 1.0};
    for (double x : xs) history.add({x}, data == 0 ? x : std::sin(3.0 * x) + x);
    const auto model = gp_fit(history);
    for (std::size_t p = 0; p < xs.size(); ++p) {
      const double mean = gp_posterior(model, std::vector<double>{xs[p]}).first;
      worst_interp = std::max(worst_interp, std::abs(mean - history.values[p]));
    }
  }

  rng_t rng(31337);
  double worst_rel = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double mean = uniform(rng, -2.0, 2.0);
    const double sigma = uniform(rng, 0.1, 2.0);
    // Standardized improvement in [-0.5, 2] keeps EI well above Monte Carlo noise.
    const double best = mean + sigma * uniform(rng, -0.5, 2.0);
    const double closed = expected_improvement(mean, sigma * sigma, best);
    double sum = 0.0;
    const int samples = 100000;
    for (int s = 0; s < samples; ++s) sum += std::max(best - (mean + sigma * standard_normal(rng)), 0.0);
    const double mc = sum / samples;
    worst_rel = std::max(worst_rel, std::abs(closed - mc) / std::max(mc, 1e-300));
  }
  const bool pass = worst_interp <= 1e-6 && worst_rel <= 0.02;
  return {pass, "interpolation error " + fmt(worst_interp, 3) + " (<= 1e-6), EI vs MC worst rel " +
                    fmt(worst_rel, 3) + " (<= 0.02)"};
}

// ---------------------------------------------------------------------------
// 5. white-box ADMM convergence

Outcome criterion5() {
  const SearchSpace space({{"m", {{"a",
                                   {{"p", HpKind::integer, 0, 20},
                                    {"q", HpKind::integer, -10, 10},
                                    {"r", HpKind::integer, 0, 50}}}}}});
  const std::vector<double> c{3.0, -4.0, 17.0};
  const BlackBox f = [&](const PipelineQuery& q) {
    double sum = 0.0;
    for (std::size_t d = 0; d < c.size(); ++d) sum += (static_cast<double>(q.theta_d[d]) - c[d]) * (static_cast<double>(q.theta_d[d]) - c[d]);
    return Evaluation{sum, {}};
  };
  int successes = 0;
  std::string worst;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    AdmmConfig config;
    config.rho = 1.0;
    config.max_iters = 10;
    config.schedule = PrecisionSchedule::fixed(64);
    config.clock = ClockKind::logical;
    config.seed = seed;
    EvaluatorOptions options;
    options.clock = ClockKind::logical;
    Evaluator evaluator(space, f, options);
    double residual = kInf;
    bool converged = false;
    run_admm(evaluator, config, [&](const AdmmState& state, const ThetaStepResult&, const ZStepResult&) {
      residual = primal_residual(state);
      if (evaluator.incumbent() == 0.0 && residual <= 0.5) converged = true;
    });
    if (converged) {
      ++successes;
    } else {
      worst = "seed " + std::to_string(seed) + ": incumbent " + fmt(evaluator.incumbent()) + ", residual " + fmt(residual);
    }
  }
  return {successes == 10, std::to_string(successes) + "/10 seeds reach f = 0 with residual <= 0.5 in 10 iterations" +
                               (worst.empty() ? "" : "; " + worst)};
}

// ---------------------------------------------------------------------------
// 6. adaptive vs fixed precision

Outcome criterion6() {
  const auto& adaptive = adaptive_runs();
  const auto& fixed16 = runs("admm-i16", [](ExperimentConfig& c) { c.admm.schedule = PrecisionSchedule::fixed(16); });
  const auto& fixed256 = runs("admm-i256", [](ExperimentConfig& c) { c.admm.schedule = PrecisionSchedule::fixed(256); });
  int final_wins = 0;
  int early_wins = 0;
  for (int r = 0; r < g_seeds; ++r) {
    if (adaptive[r].best_value <= fixed16[r].best_value) ++final_wins;
    if (at_fraction(adaptive[r], 0.25) <= at_fraction(fixed256[r], 0.25)) ++early_wins;
  }
  const bool pass = final_wins >= 7 && early_wins >= 7;
  return {pass, "final AdADMM <= I16 in " + std::to_string(final_wins) + "/" + std::to_string(g_seeds) +
                    " (>= 7), AdADMM@25% <= I256@25% in " + std::to_string(early_wins) + "/" +
                    std::to_string(g_seeds) + " (>= 7)"};
}

// ---------------------------------------------------------------------------
// 7. split vs joint

Outcome criterion7() {
  const auto& admm = adaptive_runs();
  const auto& jopt = runs("jopt", [](ExperimentConfig& c) { c.method = Method::jopt; });
  std::vector<double> jopt_finals;
  for (const auto& run : jopt) jopt_finals.push_back(run.best_value);
  const double f_j = median(jopt_finals);
  int reached = 0;
  std::vector<double> admm_finals;
  for (const auto& run : admm) {
    admm_finals.push_back(run.best_value);
    const auto t = time_to_reach(run.trace, f_j);
    if (t && *t <= 0.5 * g_budget) ++reached;
  }
  return {reached >= 7, "AdADMM(BO,Ba) reaches JOPT median final " + fmt(f_j) + " within 50% budget in " +
                            std::to_string(reached) + "/" + std::to_string(g_seeds) + " (>= 7); AdADMM median final " +
                            fmt(median(admm_finals))};
}

// ---------------------------------------------------------------------------
// 8. warm vs cold starts

Outcome criterion8() {
  const auto& warm = adaptive_runs();
  const auto& cold = runs("admm-cold", [](ExperimentConfig& c) { c.admm.warm_start = false; });
  std::vector<double> warm_half, cold_half, warm_final, cold_final;
  for (int r = 0; r < g_seeds; ++r) {
    warm_half.push_back(at_fraction(warm[r], 0.5));
    cold_half.push_back(at_fraction(cold[r], 0.5));
    warm_final.push_back(warm[r].best_value);
    cold_final.push_back(cold[r].best_value);
  }
  const double wh = median(warm_half), ch = median(cold_half);
  const double wf = median(warm_final), cf = median(cold_final);
  const double gap = std::abs(wf - cf) / std::min(wf, cf);
  const bool pass = wh <= ch && gap <= 0.05;
  return {pass, "median@50% warm " + fmt(wh) + " vs cold " + fmt(ch) + "; final medians " + fmt(wf) + " vs " +
                    fmt(cf) + " (gap " + fmt(100 * gap, 3) + "% <= 5%)"};
}

// ---------------------------------------------------------------------------
// 9. constrained vs unconstrained

/// Per-constraint thresholds at the given quantile of g over uniform pipelines.
std::vector<double> synthetic_thresholds(double level) {
  ExperimentConfig c = desk_config();
  c.objective.synthetic_constraints = true;
  const BlackBox f = make_black_box(c);
  std::vector<std::vector<double>> samples(2);
  for (std::uint64_t k = 0; k < 10000; ++k) {
    const auto [sel, theta] = sample_uniform(c.space, derive_seed(4242, k));
    const auto value = f(project_query(c.space, sel, theta));
    for (std::size_t m = 0; m < 2; ++m) samples[m].push_back(value.constraints[m]);
  }
  return {quantile(samples[0], level), quantile(samples[1], level)};
}

Outcome criterion9() {
  const std::vector<double> levels{0.25, 0.5, 0.75};  // tightest first
  std::vector<std::vector<double>> thresholds;
  for (double level : levels) thresholds.push_back(synthetic_thresholds(level));

  ExperimentConfig c = desk_config();
  c.objective.synthetic_constraints = true;
  c.reps = g_seeds;
  c.label = "sweep";
  const auto rows = constraint_sweep(c, thresholds);

  bool pass = true;
  std::ostringstream detail;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    int fraction_wins = 0;
    for (int r = 0; r < g_seeds; ++r) {
      if (rows[k].cst.feasible_fraction[r] >= rows[k].ucst.feasible_fraction[r]) ++fraction_wins;
    }
    pass = pass && fraction_wins >= 8;
    detail << "q" << levels[k] << " eps=(" << fmt(thresholds[k][0]) << "," << fmt(thresholds[k][1])
           << ") frac wins " << fraction_wins << "/" << g_seeds << " [cst " << fmt(median(rows[k].cst.feasible_fraction), 3)
           << " ucst " << fmt(median(rows[k].ucst.feasible_fraction), 3) << "]; ";
  }
  int best_wins = 0;
  for (int r = 0; r < g_seeds; ++r) {
    if (rows[0].cst.best_feasible[r] <= rows[0].ucst.best_feasible[r]) ++best_wins;
  }
  pass = pass && best_wins >= 7;
  detail << "tightest best-feasible wins " << best_wins << "/" << g_seeds << " (>= 7) [cst "
         << fmt(median(rows[0].cst.best_feasible)) << " ucst " << fmt(median(rows[0].ucst.best_feasible)) << "]";
  return {pass, detail.str()};
}

// ---------------------------------------------------------------------------
// 10. rho robustness

Outcome criterion10() {
  std::vector<RhoSweepRow> rows;
  for (double rho : {0.1, 1.0, 10.0}) {
    const auto& set = rho == 1.0 ? adaptive_runs()
                                 : runs("rho" + fmt(rho), [rho](ExperimentConfig& c) { c.admm.rho = rho; });
    RhoSweepRow row{rho, {}};
    for (const auto& run : set) row.finals.push_back(run.best_value);
    rows.push_back(std::move(row));
  }
  const double spread = relative_spread(rows);
  return {spread <= 0.20, "medians rho=0.1: " + fmt(rows[0].median_final()) + ", 1: " + fmt(rows[1].median_final()) +
                              ", 10: " + fmt(rows[2].median_final()) + "; relative spread " + fmt(100 * spread, 3) +
                              "% (<= 20%)"};
}

// ---------------------------------------------------------------------------
// 11. budget accounting

Outcome criterion11() {
  std::size_t overruns = 0;
  std::size_t runs_checked = 0;
  const SearchSpace space = benchmark_space();
  const auto spec = make_artificial(space, 3);
  for (int budget : {1, 2, 3, 7, 16, 33, 64}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      int calls = 0;
      const Box box{{0.0, -1.0, 2.0}, {1.0, 1.0, 2.0}};
      auto f = [&](std::span<const double> x) {
        ++calls;
        return x[0] * x[0] + x[1];
      };
      BoOptions options;
      options.seed = seed;
      bo_minimize(f, box, budget, nullptr, options);
      overruns += calls > budget;
      calls = 0;
      random_minimize(f, box, budget, seed);
      overruns += calls > budget;

      int z_calls = 0;
      const auto [sel0, theta0] = sample_uniform(space, seed);
      auto score = [&](const Selection& sel) {
        ++z_calls;
        return artificial_eval(spec, project_query(space, sel, theta0));
      };
      auto bandit = BanditState::for_space(space);
      bandit_z_minimize(score, space, budget, bandit, seed);
      overruns += z_calls > budget;
      z_calls = 0;
      exhaustive_z_minimize(score, space, budget);
      overruns += z_calls > budget;
      z_calls = 0;
      random_z_minimize(score, space, budget, seed);
      overruns += z_calls > budget;
      runs_checked += 5;
    }
  }

  // ADMM sub-steps against their per-iteration schedule.
  std::size_t step_overruns = 0;
  {
    AdmmConfig config;
    config.clock = ClockKind::logical;
    config.time_budget = 600;
    EvaluatorOptions options;
    options.clock = ClockKind::logical;
    options.time_budget = 600;
    Evaluator evaluator(space, make_artificial_black_box(spec), options);
    run_admm(evaluator, config, [&](const AdmmState& state, const ThetaStepResult& theta, const ZStepResult& z) {
      const int budget = precision_at(config.schedule, state.t);
      step_overruns += theta.evaluations > budget;
      step_overruns += z.evaluations > budget;
    });
    if (evaluator.evaluations() > 600) ++step_overruns;
  }

  std::size_t schedule_mismatches = 0;
  const auto schedule = PrecisionSchedule::adaptive(16, 8, 256);
  for (int t = 0; t <= 40; ++t) {
    if (precision_at(schedule, t) != std::min(16 + 8 * t, 256)) ++schedule_mismatches;
  }
  const bool pass = overruns == 0 && step_overruns == 0 && schedule_mismatches == 0;
  return {pass, std::to_string(overruns) + " solver overruns in " + std::to_string(runs_checked) + " runs, " +
                    std::to_string(step_overruns) + " ADMM step overruns, " + std::to_string(schedule_mismatches) +
                    " schedule mismatches for t = 0..40"};
}

// ---------------------------------------------------------------------------
// 12. M = 0 reduction

bool same_trace(const std::vector<TraceRecord>& a, const std::vector<TraceRecord>& b) {
  if (a.size() != b.size()) return false;
  auto bits = [](double x) { return std::bit_cast<std::uint64_t>(x); };
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto& x = a[k];
    const auto& y = b[k];
    if (x.run_id != y.run_id || x.seed != y.seed || x.eval_index != y.eval_index ||
        bits(x.wall_seconds) != bits(y.wall_seconds) || bits(x.objective) != bits(y.objective) ||
        x.feasible != y.feasible || bits(x.incumbent) != bits(y.incumbent) ||
        bits(x.incumbent_feasible) != bits(y.incumbent_feasible) || x.constraints != y.constraints) {
      return false;
    }
  }
  return true;
}

Outcome criterion12() {
  int identical = 0;
  std::size_t records = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    ExperimentConfig c = desk_config();
    c.admm.time_budget = 400;
    c.seed = seed;
    c.label = "m0";
    c.method = Method::admm;
    const auto plain = run_single(c, 0);
    c.method = Method::admm_constrained;
    const auto constrained = run_single(c, 0);
    records += plain.trace.size();
    if (same_trace(plain.trace, constrained.trace)) ++identical;
  }
  return {identical == 3, std::to_string(identical) + "/3 seeds bit-identical (" + std::to_string(records) + " records)"};
}

}  // namespace

int main(int argc, char** argv) {
  g_self = argv[0];
  std::set<int> only;
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    if (arg == "--dump-artificial") return dump_artificial();
    if (arg == "--budget" && a + 1 < argc) {
      g_budget = std::stoi(argv[++a]);
    } else if (arg == "--seeds" && a + 1 < argc) {
      g_seeds = std::stoi(argv[++a]);
    } else if (arg == "--only" && a + 1 < argc) {
      std::stringstream list(argv[++a]);
      std::string item;
      while (std::getline(list, item, ',')) only.insert(std::stoi(item));
    } else {
      std::cerr << "unknown argument " << arg << '\n';
      return 2;
    }
  }

  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
      {"delta-min exactness", criterion1},
      {"surrogate identity", criterion2},
      {"artificial objective properties", criterion3},
      {"GP/EI oracle checks", criterion4},
      {"white-box ADMM convergence", criterion5},
      {"adaptive vs fixed precision", criterion6},
      {"split vs joint (ADMM vs JOPT)", criterion7},
      {"warm vs cold starts", criterion8},
      {"constrained vs unconstrained", criterion9},
      {"rho robustness", criterion10},
      {"budget accounting", criterion11},
      {"M=0 reduction", criterion12},
  };
  std::cout << "acceptance: logical budget " << g_budget << " evaluations/run, " << g_seeds << " seeds\n";
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[k].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += outcome.pass ? 0 : 1;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << id << "  " << criteria[k].first << ": "
              << outcome.detail << " [" << fmt(seconds, 3) << " s]" << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
  return failed == 0 ? 0 : 1;
}
