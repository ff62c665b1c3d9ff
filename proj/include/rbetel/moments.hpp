#ifndef RBETEL_MOMENTS_HPP_
#define RBETEL_MOMENTS_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rbetel/etel.hpp"

namespace rbetel {

enum class Family { location, linear_regression, custom };

// Key conditions: moment restrictions valid for the good data but violated
// by outliers.  `third_moment` is the symmetry condition, `huber` the
// trimmed-location condition(s), `mad_scale` / `robust_scale` the
// scale-anchored conditions for the location / regression family.
struct KeySet {
  bool third_moment = false;
  bool huber = false;
  bool mad_scale = false;    // location family
  bool robust_scale = false; // regression family

  bool any() const { return third_moment || huber || mad_scale || robust_scale; }
};

struct Dataset {
  Eigen::VectorXd x;                // raw observations or regressors
  std::optional<Eigen::VectorXd> y; // regression response

  int n() const { return static_cast<int>(x.size()); }
};

// Huber's H: clipped linear ramp, odd, bounded in [-1, 1], continuous at
// +-eps0.
inline double huber(double eps, double eps0) {
  if (!(eps0 > 0.0)) throw std::invalid_argument("huber trim point must be positive");
  if (eps >= eps0) return 1.0;
  if (eps <= -eps0) return -1.0;
  return eps / eps0;
}

struct MadResult {
  double raw = 0.0;
  double scaled = 0.0;     // 1.4826 * raw (normal-consistent)
  bool degenerate = false; // constant input
};

namespace detail {

inline double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

} // namespace detail

// Median absolute deviation about the median.  The 1.4826 factor makes the
// scaled value consistent for the standard deviation at the normal.
inline MadResult scaled_mad(const Eigen::VectorXd& x) {
  if (x.size() < 2) throw std::invalid_argument("scaled_mad needs at least two observations");
  std::vector<double> v(x.data(), x.data() + x.size());
  const double med = detail::median_of(v);
  for (auto& e : v) e = std::abs(e - med);
  MadResult r;
  r.raw = detail::median_of(v);
  r.scaled = 1.4826 * r.raw;
  r.degenerate = (r.raw == 0.0);
  return r;
}

// Moment-function specification: family, selected key conditions, the Huber
// trim point and the statistics the keys anchor to (frozen before any
// sampling, computed from the full sample).
struct MomentModel {
  Family family = Family::location;
  KeySet keys;
  double eps0 = 1.5;
  double mad2 = 0.0;           // squared (scaled by default) MAD, location C3
  double robust_scale_T = 0.0; // squared robust error scale, regression key
  int theta_dim = 1;
  int g_dim = 1;

  using CustomG = std::function<GMatrix(const Dataset&, const Eigen::VectorXd&)>;
  CustomG custom_g;

  static MomentModel location(const KeySet& keys, double eps0 = 1.5, double mad2 = 0.0) {
    MomentModel m;
    m.family = Family::location;
    m.keys = keys;
    m.eps0 = eps0;
    m.mad2 = mad2;
    m.theta_dim = 1;
    m.g_dim = 1 + (keys.third_moment ? 1 : 0) + (keys.huber ? 1 : 0) + (keys.mad_scale ? 1 : 0);
    m.validate();
    return m;
  }

  static MomentModel regression(const KeySet& keys, double eps0 = 1.5, double robust_T = 0.0) {
    MomentModel m;
    m.family = Family::linear_regression;
    m.keys = keys;
    m.eps0 = eps0;
    m.robust_scale_T = robust_T;
    m.theta_dim = 2;
    m.g_dim = 2 + (keys.third_moment ? 1 : 0) + (keys.huber ? 2 : 0) + (keys.robust_scale ? 1 : 0);
    m.validate();
    return m;
  }

  static MomentModel custom(CustomG g, int theta_dim, int g_dim) {
    MomentModel m;
    m.family = Family::custom;
    m.custom_g = std::move(g);
    m.theta_dim = theta_dim;
    m.g_dim = g_dim;
    m.validate();
    return m;
  }

  void validate() const {
    if (g_dim < theta_dim)
      throw std::invalid_argument("identification requires g_dim >= theta_dim");
    if (keys.huber && !(eps0 > 0.0))
      throw std::invalid_argument("huber key requires eps0 > 0");
    if (family == Family::location && keys.robust_scale)
      throw std::invalid_argument("robust_scale key is a regression key");
    if (family == Family::linear_regression && keys.mad_scale)
      throw std::invalid_argument("mad_scale key is a location key");
  }

  GMatrix gmatrix(const Dataset& data, const Eigen::VectorXd& theta) const;
};

// Location-family rows, stacked in fixed order:
//   (x - mu) ; (x - mu)^3 ; (x - mu) - H(x - mu) ; (x - mu)^2 - MAD^2.
// Indicator masking is not applied here: the sampler extracts active rows,
// which is equivalent to the s_i-product form of the conditions.
inline GMatrix location_g(const Dataset& data, double mu, const MomentModel& model) {
  if (model.family != Family::location)
    throw std::invalid_argument("location_g requires a location model");
  if (model.keys.mad_scale && model.mad2 <= 0.0 && model.mad2 != 0.0)
    throw std::invalid_argument("mad_scale key requires a precomputed MAD");
  const int n = data.n();
  GMatrix g(n, model.g_dim);
  for (int i = 0; i < n; ++i) {
    const double e = data.x[i] - mu;
    int c = 0;
    g(i, c++) = e;
    if (model.keys.third_moment) g(i, c++) = e * e * e;
    if (model.keys.huber) g(i, c++) = e - huber(e, model.eps0);
    if (model.keys.mad_scale) g(i, c++) = e * e - model.mad2;
  }
  return g;
}

// Regression-family rows with residual e = y - d0 - d1 x, fixed order:
//   e ; e x ; e^3 ; e - H(e) ; e x - H(e) x ; e^2 - T.
inline GMatrix regression_g(const Dataset& data, const Eigen::VectorXd& delta,
                            const MomentModel& model) {
  if (model.family != Family::linear_regression)
    throw std::invalid_argument("regression_g requires a regression model");
  if (!data.y) throw std::invalid_argument("regression data needs a response");
  if (delta.size() != 2) throw std::invalid_argument("delta must be (d0, d1)");
  const int n = data.n();
  const Eigen::VectorXd& y = *data.y;
  GMatrix g(n, model.g_dim);
  for (int i = 0; i < n; ++i) {
    const double e = y[i] - delta[0] - delta[1] * data.x[i];
    const double xi = data.x[i];
    int c = 0;
    g(i, c++) = e;
    g(i, c++) = e * xi;
    if (model.keys.third_moment) g(i, c++) = e * e * e;
    if (model.keys.huber) {
      const double h = huber(e, model.eps0);
      g(i, c++) = e - h;
      g(i, c++) = e * xi - h * xi;
    }
    if (model.keys.robust_scale) g(i, c++) = e * e - model.robust_scale_T;
  }
  return g;
}

inline GMatrix MomentModel::gmatrix(const Dataset& data, const Eigen::VectorXd& theta) const {
  switch (family) {
    case Family::location:
      if (theta.size() != 1) throw std::invalid_argument("location theta must be scalar");
      return location_g(data, theta[0], *this);
    case Family::linear_regression:
      return regression_g(data, theta, *this);
    case Family::custom:
      if (!custom_g) throw std::invalid_argument("custom model without g function");
      return custom_g(data, theta);
  }
  throw std::logic_error("unreachable");
}

} // namespace rbetel

#endif // RBETEL_MOMENTS_HPP_
