#ifndef RBETEL_PROPOSALS_HPP_
#define RBETEL_PROPOSALS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "rbetel/etel.hpp"
#include "rbetel/special.hpp"

namespace rbetel {

namespace detail {

inline double log_sum_exp_vec(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

} // namespace detail

// --- q1: proposal for the active count K ---------------------------------
//
// Binomial(n, c*K_prev/n) restricted to the admissible counts
// { floor(n/2)+1, ..., n } and renormalized.  The support never includes
// K <= n/2, and for K_prev = n there is positive mass below n.

inline int q1_support_min(int n) { return n / 2 + 1; }

namespace detail {

inline std::vector<double> q1_log_masses(int K_prev, int n, double c) {
  if (K_prev <= n / 2 || K_prev > n) throw std::invalid_argument("q1: K_prev outside support");
  if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("q1: c must be in (0, 1]");
  const double p = c * static_cast<double>(K_prev) / static_cast<double>(n);
  const int kmin = q1_support_min(n);
  std::vector<double> lp(static_cast<std::size_t>(n - kmin + 1));
  for (int k = kmin; k <= n; ++k)
    lp[static_cast<std::size_t>(k - kmin)] =
        log_choose(n, k) + k * std::log(p) + (n - k) * std::log1p(-p);
  const double lz = log_sum_exp_vec(lp);
  for (auto& v : lp) v -= lz;
  return lp;
}

} // namespace detail

inline double q1_logpmf(int K_dagger, int K_prev, int n, double c) {
  const int kmin = q1_support_min(n);
  if (K_dagger < kmin || K_dagger > n) return -std::numeric_limits<double>::infinity();
  const auto lp = detail::q1_log_masses(K_prev, n, c);
  return lp[static_cast<std::size_t>(K_dagger - kmin)];
}

template <class URBG>
int q1_sample(int K_prev, int n, double c, URBG& rng) {
  const auto lp = detail::q1_log_masses(K_prev, n, c);
  const int kmin = q1_support_min(n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    acc += std::exp(lp[i]);
    if (u <= acc) return kmin + static_cast<int>(i);
  }
  return n;
}

// --- q2: conditional-Bernoulli proposal for the indicator vector ----------
//
// Target law: mass proportional to tau^(#stay) (1-tau)^(#switch) over all
// s with sum(s) = K_dagger, where #stay counts coordinates equal to s_prev.
// With a = sum(s_prev) the mass depends on s only through
// j = #{i : s_prev_i = 1 and s_i = 1}, since #stay = n - a - K_dagger + 2j.
// The normalizer is the sum over the feasible j window of
// C(a,j) C(n-a, K_dagger-j) tau^(#stay) (1-tau)^(#switch), so sampling can
// draw j exactly and then choose uniformly which members stay / enter.

namespace detail {

struct Q2JLaw {
  int j_min = 0;
  std::vector<double> log_w; // unnormalized per-j masses
  double log_z = 0.0;
};

inline Q2JLaw q2_j_law(int a, int K_dagger, int n, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("q2: tau must be in (0, 1)");
  Q2JLaw law;
  law.j_min = std::max(0, K_dagger - (n - a));
  const int j_max = std::min(a, K_dagger);
  if (j_max < law.j_min) throw std::invalid_argument("q2: infeasible (K_dagger, a) pair");
  const double lt = std::log(tau), l1t = std::log1p(-tau);
  law.log_w.resize(static_cast<std::size_t>(j_max - law.j_min + 1));
  for (int j = law.j_min; j <= j_max; ++j) {
    const int stay = n - a - K_dagger + 2 * j;
    law.log_w[static_cast<std::size_t>(j - law.j_min)] =
        log_choose(a, j) + log_choose(n - a, K_dagger - j) + stay * lt + (n - stay) * l1t;
  }
  law.log_z = log_sum_exp_vec(law.log_w);
  return law;
}

// draw k distinct elements of idx uniformly (partial Fisher-Yates on a copy)
template <class URBG>
inline void choose_uniform(std::vector<int>& idx, int k, URBG& rng, std::vector<int>& out) {
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(idx.size()) - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
    out.push_back(idx[static_cast<std::size_t>(i)]);
  }
}

} // namespace detail

inline double q2_logpmf(const IndicatorState& s_dagger, int K_dagger, const IndicatorState& s_prev,
                        double tau) {
  const int n = s_prev.n();
  if (s_dagger.n() != n) throw std::invalid_argument("q2: indicator lengths differ");
  if (s_dagger.K != K_dagger) throw std::invalid_argument("q2: s_dagger sum does not match K_dagger");
  const auto law = detail::q2_j_law(s_prev.K, K_dagger, n, tau);
  int stay = 0;
  for (int i = 0; i < n; ++i)
    stay += (s_dagger.s[static_cast<std::size_t>(i)] == s_prev.s[static_cast<std::size_t>(i)]);
  return stay * std::log(tau) + (n - stay) * std::log1p(-tau) - law.log_z;
}

template <class URBG>
IndicatorState q2_sample(int K_dagger, const IndicatorState& s_prev, double tau, URBG& rng) {
  const int n = s_prev.n();
  const int a = s_prev.K;
  const auto law = detail::q2_j_law(a, K_dagger, n, tau);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  int j = law.j_min + static_cast<int>(law.log_w.size()) - 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < law.log_w.size(); ++i) {
    acc += std::exp(law.log_w[i] - law.log_z);
    if (u <= acc) {
      j = law.j_min + static_cast<int>(i);
      break;
    }
  }

  std::vector<int> active, inactive;
  active.reserve(static_cast<std::size_t>(a));
  inactive.reserve(static_cast<std::size_t>(n - a));
  for (int i = 0; i < n; ++i)
    (s_prev.s[static_cast<std::size_t>(i)] ? active : inactive).push_back(i);

  std::vector<int> chosen;
  chosen.reserve(static_cast<std::size_t>(K_dagger));
  detail::choose_uniform(active, j, rng, chosen);
  detail::choose_uniform(inactive, K_dagger - j, rng, chosen);

  std::vector<std::uint8_t> flags(static_cast<std::size_t>(n), 0);
  for (int i : chosen) flags[static_cast<std::size_t>(i)] = 1;
  return IndicatorState(std::move(flags));
}

} // namespace rbetel

#endif // RBETEL_PROPOSALS_HPP_
