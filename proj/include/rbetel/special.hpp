#ifndef RBETEL_SPECIAL_HPP_
#define RBETEL_SPECIAL_HPP_

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace rbetel {

inline double log_choose(int n, int k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return boost::math::lgamma(static_cast<double>(n) + 1.0) -
         boost::math::lgamma(static_cast<double>(k) + 1.0) -
         boost::math::lgamma(static_cast<double>(n - k) + 1.0);
}

inline double log_beta(double a, double b) {
  return boost::math::lgamma(a) + boost::math::lgamma(b) - boost::math::lgamma(a + b);
}

// Beta(a, b) truncated to (lower, 1].  The normalizer uses the regularized
// incomplete beta; sampling is by inverse CDF with a bisection fallback.
struct TruncatedBeta {
  double a = 1.0;
  double b = 1.0;
  double lower = 0.5;

  TruncatedBeta(double a_, double b_, double lower_ = 0.5) : a(a_), b(b_), lower(lower_) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta parameters must be positive");
    if (!(lower >= 0.0 && lower < 1.0)) throw std::invalid_argument("bad truncation point");
  }

  double mass_above_lower() const { return 1.0 - boost::math::ibeta(a, b, lower); }

  double log_pdf(double v) const {
    if (!(v > lower && v <= 1.0)) return -std::numeric_limits<double>::infinity();
    const double log_norm = log_beta(a, b) + std::log(mass_above_lower());
    return (a - 1.0) * std::log(v) + (b - 1.0) * std::log1p(-v) - log_norm;
  }

  double quantile(double p) const {
    const double lo = boost::math::ibeta(a, b, lower);
    const double target = lo + p * (1.0 - lo);
    try {
      const double v = boost::math::ibeta_inv(a, b, target);
      if (v > lower && v <= 1.0) return v;
    } catch (const std::exception&) {
      // fall through to bisection
    }
    double vl = lower, vh = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (vl + vh);
      if (boost::math::ibeta(a, b, mid) < target)
        vl = mid;
      else
        vh = mid;
    }
    return 0.5 * (vl + vh);
  }

  template <class URBG>
  double sample(URBG& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    return quantile(unif(rng));
  }

  // numerical mean of the truncated distribution (Gauss-Legendre on the
  // truncated support)
  double mean() const {
    // E[v | v > lower] = [B(a+1,b) * (1 - I_lower(a+1,b))] / [B(a,b) * (1 - I_lower(a,b))]
    const double num = std::exp(log_beta(a + 1.0, b) - log_beta(a, b)) *
                       (1.0 - boost::math::ibeta(a + 1.0, b, lower));
    return num / mass_above_lower();
  }
};

} // namespace rbetel

#endif // RBETEL_SPECIAL_HPP_
