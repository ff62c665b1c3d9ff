#ifndef RBETEL_ROBUST_HPP_
#define RBETEL_ROBUST_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "rbetel/moments.hpp"
#include "rbetel/rng.hpp"

namespace rbetel {

enum class FitMethod { ols, mm };

struct RegressionFit {
  Eigen::Vector2d coefficients; // (intercept, slope)
  Eigen::Vector2d std_errors;
  double scale = 0.0; // residual scale estimate
  FitMethod method = FitMethod::ols;
};

// Ordinary least squares for a simple linear regression, with the
// conventional standard errors.
inline RegressionFit ols_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.size();
  if (n < 3 || y.size() != n) throw std::invalid_argument("ols_fit needs n >= 3 matched vectors");
  const double xbar = x.mean();
  const double ybar = y.mean();
  const double sxx = (x.array() - xbar).square().sum();
  if (sxx <= 0.0) throw std::invalid_argument("ols_fit: regressor is constant");
  const double sxy = ((x.array() - xbar) * (y.array() - ybar)).sum();

  RegressionFit fit;
  fit.method = FitMethod::ols;
  const double slope = sxy / sxx;
  const double intercept = ybar - slope * xbar;
  fit.coefficients << intercept, slope;

  const Eigen::ArrayXd resid = y.array() - intercept - slope * x.array();
  const double s2 = resid.square().sum() / static_cast<double>(n - 2);
  fit.scale = std::sqrt(s2);
  fit.std_errors << std::sqrt(s2 * (1.0 / static_cast<double>(n) + xbar * xbar / sxx)),
      std::sqrt(s2 / sxx);
  return fit;
}

struct MMConfig {
  int n_subsets = 500;     // random two-point elemental subsets
  int n_refine = 3;        // IRLS refinement steps per candidate
  double c0 = 1.5476;      // bisquare tuning of the S-stage (50% breakdown)
  double c1 = 4.685;       // bisquare tuning of the M-stage (95% efficiency)
  double breakdown = 0.5;  // target b in mean rho(r/s) = b
  int max_m_iterations = 500;
  double coef_tol = 1e-8;
  std::uint64_t seed = 0;
  bool squared_scale = true; // export scale^2 from robust_error_scale
};

namespace detail {

// Tukey bisquare rho scaled to sup rho = 1.
inline double bisquare_rho(double u, double c) {
  const double t = std::abs(u / c);
  if (t >= 1.0) return 1.0;
  const double q = 1.0 - t * t;
  return 1.0 - q * q * q;
}

// psi(u)/u weight for bisquare.
inline double bisquare_weight(double u, double c) {
  const double t = u / c;
  if (std::abs(t) >= 1.0) return 0.0;
  const double q = 1.0 - t * t;
  return q * q;
}

// M-scale: solve mean(rho(r/s)) = b by fixed point on s, to relative
// tolerance 1e-10.
inline double m_scale(const Eigen::ArrayXd& r, double c, double b) {
  const Eigen::Index n = r.size();
  std::vector<double> a(r.data(), r.data() + n);
  for (auto& v : a) v = std::abs(v);
  double s = median_of(a) / 0.6745;
  if (s <= 0.0) {
    s = r.abs().mean();
    if (s <= 0.0) return 0.0;
  }
  for (int it = 0; it < 300; ++it) {
    double mean_rho = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) mean_rho += bisquare_rho(r[i] / s, c);
    mean_rho /= static_cast<double>(n);
    const double s_new = s * std::sqrt(mean_rho / b);
    if (std::abs(s_new / s - 1.0) < 1e-10) return s_new;
    s = s_new;
  }
  return s;
}

// Weighted least squares for a simple regression; returns false when the
// weighted regressor is degenerate.
inline bool wls(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::ArrayXd& w,
                double& b0, double& b1) {
  const double sw = w.sum();
  if (!(sw > 0.0)) return false;
  const double xb = (w * x.array()).sum() / sw;
  const double yb = (w * y.array()).sum() / sw;
  const double sxx = (w * (x.array() - xb).square()).sum();
  if (!(sxx > 0.0)) return false;
  const double sxy = (w * (x.array() - xb) * (y.array() - yb)).sum();
  b1 = sxy / sxx;
  b0 = yb - b1 * xb;
  return true;
}

} // namespace detail

// MM-estimate for a simple linear regression: a high-breakdown S-stage over
// random two-point elemental fits (each refined by a few IRLS steps, best
// S-scale kept), followed by an efficient bisquare M-stage at the fixed
// S-scale.  Deterministic given config.seed.
inline RegressionFit mm_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            const MMConfig& config = {}) {
  const Eigen::Index n = x.size();
  if (n < 4 || y.size() != n) throw std::invalid_argument("mm_fit needs n >= 4 matched vectors");

  auto rng = make_stream(config.seed, 0x6d6d666974ULL);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);

  double best_scale = std::numeric_limits<double>::infinity();
  double best_b0 = 0.0, best_b1 = 0.0;
  bool found = false;

  for (int sub = 0; sub < config.n_subsets; ++sub) {
    Eigen::Index i = 0, j = 0;
    int guard = 0;
    do {
      i = pick(rng);
      j = pick(rng);
      if (++guard > 1000) break;
    } while (i == j || x[i] == x[j]);
    if (i == j || x[i] == x[j]) continue;

    double b1 = (y[j] - y[i]) / (x[j] - x[i]);
    double b0 = y[i] - b1 * x[i];

    for (int ref = 0; ref < config.n_refine; ++ref) {
      const Eigen::ArrayXd r = y.array() - b0 - b1 * x.array();
      const double s = detail::m_scale(r, config.c0, config.breakdown);
      if (!(s > 0.0)) break;
      Eigen::ArrayXd w(n);
      for (Eigen::Index k = 0; k < n; ++k) w[k] = detail::bisquare_weight(r[k] / s, config.c0);
      if (!detail::wls(x, y, w, b0, b1)) break;
    }

    const Eigen::ArrayXd r = y.array() - b0 - b1 * x.array();
    const double s = detail::m_scale(r, config.c0, config.breakdown);
    if (s >= 0.0 && s < best_scale) {
      best_scale = s;
      best_b0 = b0;
      best_b1 = b1;
      found = true;
    }
  }
  if (!found) throw std::runtime_error("mm_fit: no non-degenerate elemental subset found");

  // M-stage: IRLS with the wider bisquare at the fixed S-scale.
  double b0 = best_b0, b1 = best_b1;
  if (best_scale > 0.0) {
    for (int it = 0; it < config.max_m_iterations; ++it) {
      const Eigen::ArrayXd r = y.array() - b0 - b1 * x.array();
      Eigen::ArrayXd w(n);
      for (Eigen::Index k = 0; k < n; ++k) w[k] = detail::bisquare_weight(r[k] / best_scale, config.c1);
      double nb0 = b0, nb1 = b1;
      if (!detail::wls(x, y, w, nb0, nb1)) break;
      const double change = std::max(std::abs(nb0 - b0), std::abs(nb1 - b1));
      b0 = nb0;
      b1 = nb1;
      if (change < config.coef_tol) break;
    }
  }

  RegressionFit fit;
  fit.method = FitMethod::mm;
  fit.coefficients << b0, b1;
  fit.scale = best_scale;

  // Huber-type sandwich standard errors at the M-stage solution.
  {
    const Eigen::ArrayXd r = y.array() - b0 - b1 * x.array();
    const double s = best_scale > 0.0 ? best_scale : 1.0;
    double sum_psi2 = 0.0, sum_dpsi = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double t = r[k] / s;
      const double at = std::abs(t / config.c1);
      if (at < 1.0) {
        const double q = 1.0 - (t / config.c1) * (t / config.c1);
        const double psi = t * q * q;
        sum_psi2 += psi * psi;
        sum_dpsi += q * (q - 4.0 * (t / config.c1) * (t / config.c1));
      }
    }
    const double nn = static_cast<double>(n);
    const double denom = (sum_dpsi / nn) * (sum_dpsi / nn);
    const double kappa = denom > 0.0 ? (sum_psi2 / nn) / denom : 0.0;
    const double xbar = x.mean();
    const double sxx = (x.array() - xbar).square().sum();
    const double v = s * s * kappa;
    fit.std_errors << std::sqrt(v * (1.0 / nn + xbar * xbar / sxx)), std::sqrt(v / sxx);
  }
  return fit;
}

// Squared (by default) S-scale of the MM fit, the anchor consumed by the
// regression scale key condition.
inline double robust_error_scale(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                 const MMConfig& config = {}) {
  const RegressionFit fit = mm_fit(x, y, config);
  return config.squared_scale ? fit.scale * fit.scale : fit.scale;
}

} // namespace rbetel

#endif // RBETEL_ROBUST_HPP_
