#ifndef RBETEL_SUMMARY_HPP_
#define RBETEL_SUMMARY_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbetel {

struct ParameterSummary {
  std::string name;
  double post_mean = 0.0;
  double post_sd = 0.0;
  double ts_se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct PosteriorSummary {
  std::vector<ParameterSummary> parameters;
  std::vector<double> inclusion_prob; // per observation, empty in BETEL mode
};

namespace detail {

// type-7 empirical quantile on a sorted copy
inline double quantile_type7(std::vector<double> sorted, double p) {
  const std::size_t m = sorted.size();
  const double h = (static_cast<double>(m) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, m - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace detail

// Batch-means time-series standard error with floor(sqrt(M)) equal batches;
// trailing draws that do not fill a batch are dropped.
inline double batch_means_se(const Eigen::VectorXd& draws) {
  const Eigen::Index m = draws.size();
  const Eigen::Index n_batch = static_cast<Eigen::Index>(std::floor(std::sqrt(static_cast<double>(m))));
  if (n_batch < 2) return 0.0;
  const Eigen::Index b = m / n_batch;
  const Eigen::Index used = n_batch * b;
  const double grand = draws.head(used).mean();
  double ss = 0.0;
  for (Eigen::Index j = 0; j < n_batch; ++j) {
    const double bm = draws.segment(j * b, b).mean();
    ss += (bm - grand) * (bm - grand);
  }
  const double var_bm = ss / static_cast<double>(n_batch - 1);
  return std::sqrt(var_bm / static_cast<double>(n_batch));
}

// Mean, unbiased SD, equal-tail credible interval (type-7 quantiles) and
// batch-means TS.SE for each column of a draw matrix.
inline PosteriorSummary summarize(const Eigen::MatrixXd& draws, double level = 0.95,
                                  const std::vector<std::string>& names = {}) {
  const Eigen::Index m = draws.rows();
  const Eigen::Index p = draws.cols();
  if (m < 100) throw std::invalid_argument("summarize: need at least 100 draws");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("summarize: bad level");

  PosteriorSummary out;
  out.parameters.resize(static_cast<std::size_t>(p));
  const double tail = 0.5 * (1.0 - level);
  for (Eigen::Index j = 0; j < p; ++j) {
    auto& ps = out.parameters[static_cast<std::size_t>(j)];
    ps.name = static_cast<std::size_t>(j) < names.size() ? names[static_cast<std::size_t>(j)]
                                                         : "theta" + std::to_string(j);
    const Eigen::VectorXd col = draws.col(j);
    ps.post_mean = col.mean();
    ps.post_sd = std::sqrt((col.array() - ps.post_mean).square().sum() / static_cast<double>(m - 1));
    ps.ts_se = batch_means_se(col);
    std::vector<double> sorted(col.data(), col.data() + m);
    std::sort(sorted.begin(), sorted.end());
    ps.ci_low = detail::quantile_type7(sorted, tail);
    ps.ci_high = detail::quantile_type7(std::move(sorted), 1.0 - tail);
  }
  return out;
}

// Per-observation inclusion probability: column means of the indicator
// draw matrix.
inline std::vector<double>
inclusion_probs(const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& s_draws) {
  const Eigen::Index m = s_draws.rows();
  const Eigen::Index n = s_draws.cols();
  if (m < 1) throw std::invalid_argument("inclusion_probs: empty draw matrix");
  std::vector<double> probs(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    long count = 0;
    for (Eigen::Index r = 0; r < m; ++r) count += (s_draws(r, i) != 0);
    probs[static_cast<std::size_t>(i)] = static_cast<double>(count) / static_cast<double>(m);
  }
  return probs;
}

struct DensityGrid {
  Eigen::VectorXd grid;
  Eigen::VectorXd density;
  bool spike = false;    // zero-variance draws: single point mass
  double spike_at = 0.0;
};

// Gaussian KDE with the Silverman rule-of-thumb bandwidth on a uniform grid
// spanning mean +- 4 sd.
inline DensityGrid density_grid(const Eigen::VectorXd& draws, int n_points = 512) {
  const Eigen::Index m = draws.size();
  if (m < 2) throw std::invalid_argument("density_grid: need at least two draws");
  DensityGrid out;
  const double mean = draws.mean();
  const double sd = std::sqrt((draws.array() - mean).square().sum() / static_cast<double>(m - 1));
  if (sd == 0.0) {
    out.spike = true;
    out.spike_at = mean;
    return out;
  }
  std::vector<double> sorted(draws.data(), draws.data() + m);
  std::sort(sorted.begin(), sorted.end());
  const double iqr = detail::quantile_type7(sorted, 0.75) - detail::quantile_type7(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd;
  const double h = 0.9 * spread * std::pow(static_cast<double>(m), -0.2);

  out.grid.resize(n_points);
  out.density.resize(n_points);
  const double lo = mean - 4.0 * sd, hi = mean + 4.0 * sd;
  const double dx = (hi - lo) / static_cast<double>(n_points - 1);
  const double norm = 1.0 / (static_cast<double>(m) * h * std::sqrt(2.0 * M_PI));
  for (int k = 0; k < n_points; ++k) {
    const double g = lo + k * dx;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double z = (g - draws[i]) / h;
      acc += std::exp(-0.5 * z * z);
    }
    out.grid[k] = g;
    out.density[k] = norm * acc;
  }
  return out;
}

// Trapezoidal integral of a density grid; near one for well-covered draws.
inline double grid_integral(const DensityGrid& d) {
  if (d.spike) return 1.0;
  double acc = 0.0;
  for (Eigen::Index k = 0; k + 1 < d.grid.size(); ++k)
    acc += 0.5 * (d.density[k] + d.density[k + 1]) * (d.grid[k + 1] - d.grid[k]);
  return acc;
}

} // namespace rbetel

#endif // RBETEL_SUMMARY_HPP_
