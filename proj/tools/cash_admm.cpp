// cash_admm: run, compare and sweep ADMM / JOPT experiments.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cashadmm/cashadmm.hpp"

namespace fs = std::filesystem;
using namespace cashadmm;

namespace {

struct Overrides {
  std::string config;
  std::string method;
  std::optional<double> rho;
  std::optional<int> max_iters;
  std::optional<double> time_budget;
  std::string schedule;
  std::string theta_solver;
  std::string z_solver;
  std::optional<int> reps;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string clock;
  std::optional<int> max_evals;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON experiment config");
  app->add_option("--method", o.method, "admm | admm_constrained | jopt | random");
  app->add_option("--rho", o.rho, "ADMM penalty parameter");
  app->add_option("--max-iters", o.max_iters, "maximum ADMM iterations");
  app->add_option("--time-budget", o.time_budget, "budget in seconds (wall) or evaluations (logical)");
  app->add_option("--schedule", o.schedule, "fixed:I or adaptive:I0:F:Imax");
  app->add_option("--theta-solver", o.theta_solver, "bo | random");
  app->add_option("--z-solver", o.z_solver, "bandit | exhaustive | random");
  app->add_option("--reps", o.reps, "repetitions");
  app->add_option("--seed", o.seed, "base seed; repetition r uses seed + r");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--clock", o.clock, "wall | logical");
  app->add_option("--max-evals", o.max_evals, "evaluation cap for jopt and random");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig config = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  nlohmann::json doc = nlohmann::json::object();
  if (!o.method.empty()) doc["method"] = o.method;
  if (o.rho) doc["rho"] = *o.rho;
  if (o.max_iters) doc["max_iters"] = *o.max_iters;
  if (o.time_budget) doc["time_budget"] = *o.time_budget;
  if (!o.schedule.empty()) doc["schedule"] = o.schedule;
  if (!o.theta_solver.empty()) doc["theta_solver"] = o.theta_solver;
  if (!o.z_solver.empty()) doc["z_solver"] = o.z_solver;
  if (o.reps) doc["reps"] = *o.reps;
  if (o.seed) doc["seed"] = *o.seed;
  if (!o.out.empty()) doc["out"] = o.out;
  if (!o.clock.empty()) doc["clock"] = o.clock;
  if (o.max_evals) doc["max_evals"] = *o.max_evals;
  apply_json(config, doc);
  config.validate();
  return config;
}

std::vector<std::vector<TraceRecord>> read_traces(const std::vector<std::string>& paths) {
  std::vector<std::vector<TraceRecord>> traces;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) traces.push_back(read_trace(f));
    } else {
      traces.push_back(read_trace(p));
    }
  }
  if (traces.empty()) throw config_error("no trace files found");
  return traces;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw config_error("not a number: '" + item + "'");
    }
  }
  return values;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ADMM for joint algorithm selection and hyper-parameter optimization"};
  app.require_subcommand(1);

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "run R seeded repetitions and write JSONL traces");
  add_common(run, run_opts);

  std::vector<std::string> admm_paths, jopt_paths;
  double compare_budget = 0.0;
  int grid_points = 50;
  std::string compare_csv;
  auto* cmp = app.add_subcommand("compare", "speedup and improvement of ADMM over JOPT from traces");
  cmp->add_option("--admm", admm_paths, "ADMM trace files or directories")->required();
  cmp->add_option("--jopt", jopt_paths, "JOPT trace files or directories")->required();
  cmp->add_option("--budget", compare_budget, "time budget the traces cover")->required();
  cmp->add_option("--grid-points", grid_points, "points on the incumbent-curve grid");
  cmp->add_option("--curves", compare_csv, "write incumbent curves CSV here");

  Overrides sweep_opts;
  std::vector<std::string> thresholds;
  std::string sweep_csv;
  auto* sweep = app.add_subcommand("sweep-constraints", "CST vs post-hoc filtered UCST over thresholds");
  add_common(sweep, sweep_opts);
  sweep->add_option("--thresholds", thresholds, "threshold vectors, e.g. 1.0,2.5 (one per constraint)")->required();
  sweep->add_option("--csv", sweep_csv, "write the summary CSV here");

  Overrides rho_opts;
  std::string rhos = "0.1,1,10";
  std::string rho_csv;
  auto* rho = app.add_subcommand("sweep-rho", "final incumbent medians across rho values");
  add_common(rho, rho_opts);
  rho->add_option("--rhos", rhos, "comma-separated rho values");
  rho->add_option("--csv", rho_csv, "write the summary CSV here");

  std::vector<std::string> series_specs;
  std::string plot_csv;
  int plot_points = 50;
  auto* plot = app.add_subcommand("plot-data", "median/IQR incumbent curves on a log time grid");
  plot->add_option("--series", series_specs, "name=path (file or directory); repeatable")->required();
  plot->add_option("--grid-points", plot_points, "grid size");
  plot->add_option("--csv", plot_csv, "output CSV (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      const auto config = resolve(run_opts);
      for (const auto& file : run_experiment(config)) std::cout << file.string() << '\n';
    } else if (*cmp) {
      const auto summary = compare(read_traces(admm_paths), read_traces(jopt_paths), compare_budget, grid_points);
      std::cout << to_json(summary).dump(2) << '\n';
      if (!compare_csv.empty()) write_or_print(compare_csv, summary.curves_csv);
    } else if (*sweep) {
      const auto config = resolve(sweep_opts);
      std::vector<std::vector<double>> eps;
      for (const auto& t : thresholds) eps.push_back(parse_list(t));
      write_or_print(sweep_csv, constraint_sweep_csv(constraint_sweep(config, eps)));
    } else if (*rho) {
      const auto config = resolve(rho_opts);
      const auto rows = rho_sweep(config, parse_list(rhos));
      write_or_print(rho_csv, rho_sweep_csv(rows));
      std::cout << "relative_spread " << relative_spread(rows) << '\n';
    } else if (*plot) {
      std::vector<PlotSeries> series;
      for (const auto& spec : series_specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw config_error("--series expects name=path, got '" + spec + "'");
        series.push_back({spec.substr(0, eq), read_traces({spec.substr(eq + 1)})});
      }
      write_or_print(plot_csv, emit_plot_data(series, default_grid(series, plot_points)));
    }
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
