#pragma once

// Gaussian-process surrogate used by the BO sub-solver.
//
// Inputs are rescaled to the unit box and outputs standardized. The kernel is
// squared-exponential with unit signal variance in standardized units and a
// per-dimension length-scale from the median pairwise distance, multiplied by
// sqrt(dim) so a typical pair sits about one length-scale apart regardless of
// dimensionality. No marginal-likelihood fitting.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace cashadmm {

/// Axis-aligned box; zero-width dims are allowed.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const noexcept { return lower.size(); }
  double width(std::size_t d) const { return upper[d] - lower[d]; }

  bool contains(std::span<const double> x) const {
    if (x.size() != dim()) return false;
    for (std::size_t d = 0; d < dim(); ++d) {
      if (!(x[d] >= lower[d] && x[d] <= upper[d])) return false;
    }
    return true;
  }
};

/// Finite evaluations of one sub-problem, all inside `domain`.
struct SolverHistory {
  Box domain;
  std::vector<std::vector<double>> points;
  std::vector<double> values;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  void add(std::vector<double> x, double value) {
    if (!std::isfinite(value)) return;
    points.push_back(std::move(x));
    values.push_back(value);
  }
};

struct GpModel {
  Box domain;
  Eigen::MatrixXd inputs;  // n x d, unit box
  Eigen::VectorXd lengthscales;
  double jitter = 1e-6;
  double y_mean = 0.0;
  double y_scale = 1.0;
  bool prior_only = true;
  Eigen::MatrixXd factor;  // lower Cholesky factor of K + jitter I
  Eigen::VectorXd alpha;   // refined K^-1 y_standardized
  double best_standardized = 0.0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(inputs.rows()); }
};

namespace detail {

inline double to_unit(double x, double lower, double upper) {
  const double width = upper - lower;
  return width > 0.0 ? (x - lower) / width : 0.0;
}

inline double median_of(std::vector<double>& values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

inline double se_kernel(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                        const Eigen::Ref<const Eigen::RowVectorXd>& b,
                        const Eigen::VectorXd& lengthscales) {
  double r2 = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double z = (a[d] - b[d]) / lengthscales[d];
    r2 += z * z;
  }
  return std::exp(-0.5 * r2);
}

}  // namespace detail

inline constexpr int kRefinementSteps = 4;

inline GpModel gp_fit(const SolverHistory& history, double jitter = 1e-6) {
  if (history.empty()) throw std::invalid_argument("gp_fit needs at least one finite point");
  const std::size_t n = history.size();
  const std::size_t dim = history.domain.dim();

  GpModel model;
  model.domain = history.domain;
  model.jitter = jitter;
  model.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t p = 0; p < n; ++p) {
    if (history.points[p].size() != dim) throw std::invalid_argument("history point has wrong dimension");
    for (std::size_t d = 0; d < dim; ++d) {
      model.inputs(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(d)) =
          detail::to_unit(history.points[p][d], history.domain.lower[d], history.domain.upper[d]);
    }
  }

  double mean = 0.0;
  for (double v : history.values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : history.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  model.y_mean = mean;
  model.y_scale = var > 1e-24 ? std::sqrt(var) : 1.0;

  // Median heuristic, per dim.
  model.lengthscales.resize(static_cast<Eigen::Index>(dim));
  bool any_spread = false;
  std::vector<double> gaps;
  gaps.reserve(n * (n - 1) / 2);
  for (std::size_t d = 0; d < dim; ++d) {
    gaps.clear();
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        const auto ia = static_cast<Eigen::Index>(a);
        const auto ib = static_cast<Eigen::Index>(b);
        const auto id = static_cast<Eigen::Index>(d);
        gaps.push_back(std::abs(model.inputs(ia, id) - model.inputs(ib, id)));
      }
    }
    if (std::any_of(gaps.begin(), gaps.end(), [](double g) { return g > 0.0; })) any_spread = true;
    double median = detail::median_of(gaps);
    if (!(median > 1e-6)) median = 0.5;
    model.lengthscales[static_cast<Eigen::Index>(d)] = median * std::sqrt(static_cast<double>(std::max<std::size_t>(dim, 1)));
  }

  model.best_standardized =
      (*std::min_element(history.values.begin(), history.values.end()) - model.y_mean) / model.y_scale;

  if (!any_spread) return model;  // all inputs identical: prior only

  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t p = 0; p < n; ++p) y[static_cast<Eigen::Index>(p)] = (history.values[p] - model.y_mean) / model.y_scale;

  Eigen::MatrixXd kernel(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index a = 0; a < kernel.rows(); ++a) {
    kernel(a, a) = 1.0;
    for (Eigen::Index b = 0; b < a; ++b) {
      const double k = detail::se_kernel(model.inputs.row(a), model.inputs.row(b), model.lengthscales);
      kernel(a, b) = k;
      kernel(b, a) = k;
    }
  }
  for (double scale = 1.0; scale <= 1e4; scale *= 10.0) {
    Eigen::MatrixXd shifted = kernel;
    shifted.diagonal().array() += jitter * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      model.jitter = jitter * scale;
      model.factor = llt.matrixL();
      // iterative refinement toward K^-1 y
      model.alpha = llt.solve(y);
      for (int step = 0; step < kRefinementSteps; ++step) {
        model.alpha += llt.solve(y - kernel * model.alpha);
      }
      model.prior_only = false;
      return model;
    }
  }
  return model;
}

/// Posterior mean and variance, in standardized output units, for each row of
/// `unit_points` (already mapped to the unit box).
inline void gp_posterior_standardized(const GpModel& model, const Eigen::MatrixXd& unit_points,
                                      Eigen::VectorXd& mean, Eigen::VectorXd& variance) {
  const Eigen::Index m = unit_points.rows();
  mean = Eigen::VectorXd::Zero(m);
  variance = Eigen::VectorXd::Ones(m);
  if (model.prior_only) return;
  const Eigen::Index n = model.inputs.rows();
  Eigen::MatrixXd cross(n, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    for (Eigen::Index p = 0; p < n; ++p) {
      cross(p, c) = detail::se_kernel(model.inputs.row(p), unit_points.row(c), model.lengthscales);
    }
  }
  mean = cross.transpose() * model.alpha;
  const Eigen::MatrixXd v = model.factor.triangularView<Eigen::Lower>().solve(cross);
  variance = (1.0 - v.colwise().squaredNorm().array()).max(0.0).matrix();
}

inline std::pair<double, double> gp_posterior(const GpModel& model, std::span<const double> x) {
  if (x.size() != model.domain.dim()) throw std::invalid_argument("gp_posterior: wrong dimension");
  Eigen::MatrixXd point(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t d = 0; d < x.size(); ++d) {
    point(0, static_cast<Eigen::Index>(d)) = detail::to_unit(x[d], model.domain.lower[d], model.domain.upper[d]);
  }
  Eigen::VectorXd mean, variance;
  gp_posterior_standardized(model, point, mean, variance);
  return {model.y_mean + model.y_scale * mean[0], model.y_scale * model.y_scale * variance[0]};
}

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Expected improvement below `best_so_far` (minimization).
inline double expected_improvement(double mean, double variance, double best_so_far) {
  const double improvement = best_so_far - mean;
  if (!(variance > 0.0)) return std::max(improvement, 0.0);
  const double sigma = std::sqrt(variance);
  const double z = improvement / sigma;
  return std::max(improvement * normal_cdf(z) + sigma * normal_pdf(z), 0.0);
}

}  // namespace cashadmm
