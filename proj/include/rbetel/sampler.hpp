#ifndef RBETEL_SAMPLER_HPP_
#define RBETEL_SAMPLER_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rbetel/etel.hpp"
#include "rbetel/moments.hpp"
#include "rbetel/proposals.hpp"
#include "rbetel/rng.hpp"
#include "rbetel/robust.hpp"
#include "rbetel/special.hpp"

namespace rbetel {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class Method { betel, rbetel };

// Independent normal prior per theta coordinate plus the truncated-Beta
// prior on the good-data probability v, supported on (0.5, 1].
struct Priors {
  Eigen::VectorXd theta_mean;
  Eigen::VectorXd theta_var;
  double alpha0 = 50.0;
  double beta0 = 5.0;

  static Priors flat_normal(int p, double var = 100.0, double alpha0 = 50.0, double beta0 = 5.0) {
    Priors pr;
    pr.theta_mean = Eigen::VectorXd::Zero(p);
    pr.theta_var = Eigen::VectorXd::Constant(p, var);
    pr.alpha0 = alpha0;
    pr.beta0 = beta0;
    return pr;
  }

  double log_theta_prior(const Eigen::VectorXd& theta) const {
    if (theta.size() != theta_mean.size())
      throw std::invalid_argument("theta dimension does not match prior");
    double lp = 0.0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double d = theta[i] - theta_mean[i];
      lp += -0.5 * d * d / theta_var[i] - 0.5 * std::log(2.0 * M_PI * theta_var[i]);
    }
    return lp;
  }

  TruncatedBeta v_prior() const { return TruncatedBeta(alpha0, beta0, 0.5); }

  double log_v_prior(double v) const { return v_prior().log_pdf(v); }
};

struct ChainConfig {
  int n_burnin = 4000;
  int n_keep = 8000;
  int thin = 1;
  Eigen::VectorXd rw_scale;  // initial random-walk SD per coordinate; empty = auto
  double tau = 0.8;          // q2 stickiness
  double c = 0.99;           // q1 shrink factor
  bool adapt = true;
  double target_accept = 0.3;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

// Current point of the chain with the cached kernel pieces.  log_kernel is
// finite for every state the chain ever holds.
struct ChainState {
  Eigen::VectorXd theta;
  IndicatorState indicators;
  double v = 0.9;
  double log_kernel = kNegInf;

  // cached pieces, consistent with the fields above
  double log_prior_theta = 0.0;
  double log_prior_v = 0.0;
  double log_etel = 0.0; // log R-tilde on the active subset
  TiltingSolution tilt;
  GMatrix g_full; // moment rows at the current theta
};

// log of the unnormalized joint density of (theta, s, v):
//   log pi(theta) + log pi(v) + K log v + (n-K) log(1-v) + log R-tilde,
// with -inf when K <= n/2, v is outside (0.5, 1], or the tilting problem
// has no solution on the active subset.
inline double log_posterior_kernel(const Eigen::VectorXd& theta, const IndicatorState& s, double v,
                                   const MomentModel& model, const Priors& priors,
                                   const Dataset& data, const SolverOptions& opts = {}) {
  const int n = s.n();
  if (2 * s.K <= n) return kNegInf;
  if (!(v > 0.5 && v <= 1.0)) return kNegInf;
  const double lpv = priors.log_v_prior(v);
  const double lpt = priors.log_theta_prior(theta);
  const GMatrix g = model.gmatrix(data, theta);
  const auto [tilt, letel] = log_etel_active(g, s, opts);
  if (!tilt.converged) return kNegInf;
  return lpt + lpv + s.K * std::log(v) + (n - s.K) * std::log1p(-v) + letel;
}

// BETEL kernel: prior times the full-sample log EL ratio.
inline double log_betel_kernel(const Eigen::VectorXd& theta, const MomentModel& model,
                               const Priors& priors, const Dataset& data,
                               const SolverOptions& opts = {}) {
  const double lpt = priors.log_theta_prior(theta);
  const GMatrix g = model.gmatrix(data, theta);
  const TiltingSolution tilt = solve_tilting(g, opts);
  if (!tilt.converged) return kNegInf;
  return lpt + tilt.log_etel;
}

namespace detail {

inline double binomial_term(int K, int n, double v) {
  return K * std::log(v) + (n - K) * std::log1p(-v);
}

// (Re)assemble the cached kernel after any piece changed.
inline void refresh_kernel(ChainState& st, Method method) {
  if (method == Method::betel) {
    st.log_kernel = st.log_prior_theta + st.log_etel;
  } else {
    const int n = st.indicators.n();
    st.log_kernel = st.log_prior_theta + st.log_prior_v +
                    binomial_term(st.indicators.K, n, st.v) + st.log_etel;
  }
}

} // namespace detail

struct StepResult {
  bool accepted = false;
  double accept_prob = 0.0;
};

// Random-walk MH update of theta; only the theta-dependent kernel terms
// enter the ratio.  Proposals whose tilting solve fails are rejected.
template <class URBG>
StepResult theta_step(ChainState& state, const MomentModel& model, const Priors& priors,
                      const Dataset& data, const Eigen::VectorXd& rw_scale, Method method,
                      const SolverOptions& opts, URBG& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd theta_new = state.theta;
  for (Eigen::Index i = 0; i < theta_new.size(); ++i) theta_new[i] += rw_scale[i] * gauss(rng);

  const double lpt_new = priors.log_theta_prior(theta_new);
  GMatrix g_new = model.gmatrix(data, theta_new);

  TiltingSolution tilt_new;
  double letel_new = kNegInf;
  if (method == Method::betel) {
    tilt_new = solve_tilting(g_new, opts);
    letel_new = tilt_new.converged ? tilt_new.log_etel : kNegInf;
  } else {
    auto res = log_etel_active(g_new, state.indicators, opts);
    tilt_new = std::move(res.first);
    letel_new = res.second;
  }

  StepResult out;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (std::isfinite(letel_new)) {
    const double log_ratio = (lpt_new + letel_new) - (state.log_prior_theta + state.log_etel);
    out.accept_prob = std::min(1.0, std::exp(std::min(0.0, log_ratio)));
    if (unif(rng) < out.accept_prob) {
      out.accepted = true;
      state.theta = std::move(theta_new);
      state.log_prior_theta = lpt_new;
      state.log_etel = letel_new;
      state.tilt = std::move(tilt_new);
      state.g_full = std::move(g_new);
      detail::refresh_kernel(state, method);
    }
  } else {
    unif(rng); // keep the draw stream aligned regardless of hull failures
  }
  return out;
}

// Gibbs update of v from the truncated Beta(K + alpha0, n - K + beta0)
// full conditional; does not depend on theta or on the data.
template <class URBG>
void v_step(ChainState& state, const Priors& priors, URBG& rng) {
  const int n = state.indicators.n();
  const int K = state.indicators.K;
  TruncatedBeta cond(K + priors.alpha0, n - K + priors.beta0, 0.5);
  state.v = cond.sample(rng);
  state.log_prior_v = priors.log_v_prior(state.v);
  detail::refresh_kernel(state, Method::rbetel);
}

// Joint (s, K) Metropolis move: K from the truncated binomial q1, then the
// indicator vector from the conditional-Bernoulli q2, accepted with the
// usual ratio including both proposal densities.  K itself is discarded
// after the move; only s is retained.
template <class URBG>
StepResult indicator_step(ChainState& state, const MomentModel& model, const Priors& priors,
                          const Dataset& data, double tau, double c, const SolverOptions& opts,
                          URBG& rng) {
  (void)model;
  (void)priors;
  (void)data;
  const int n = state.indicators.n();
  const int K_prev = state.indicators.K;

  const int K_dag = q1_sample(K_prev, n, c, rng);
  IndicatorState s_dag = q2_sample(K_dag, state.indicators, tau, rng);

  StepResult out;
  const auto [tilt_new, letel_new] = log_etel_active(state.g_full, s_dag, opts);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (std::isfinite(letel_new)) {
    const double target_new = detail::binomial_term(K_dag, n, state.v) + letel_new;
    const double target_old = detail::binomial_term(K_prev, n, state.v) + state.log_etel;
    const double log_fwd = q1_logpmf(K_dag, K_prev, n, c) + q2_logpmf(s_dag, K_dag, state.indicators, tau);
    const double log_rev = q1_logpmf(K_prev, K_dag, n, c) + q2_logpmf(state.indicators, K_prev, s_dag, tau);
    const double log_ratio = (target_new - target_old) + (log_rev - log_fwd);
    out.accept_prob = std::min(1.0, std::exp(std::min(0.0, log_ratio)));
    if (unif(rng) < out.accept_prob) {
      out.accepted = true;
      state.indicators = std::move(s_dag);
      state.log_etel = letel_new;
      state.tilt = tilt_new;
      detail::refresh_kernel(state, Method::rbetel);
    }
  } else {
    unif(rng);
  }
  return out;
}

struct ChainOutput {
  Method method = Method::rbetel;
  Eigen::MatrixXd theta; // kept draws x p
  Eigen::VectorXd v;     // kept draws (empty in BETEL mode)
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> s; // kept draws x n
  double accept_theta = 0.0;
  double accept_indicator = 0.0;
  Eigen::VectorXd final_rw_scale;
  std::vector<double> adapt_trace; // random-walk multiplier over burn-in
};

namespace detail {

inline Eigen::VectorXd default_rw_scale(const MomentModel& model, const Dataset& data) {
  // rough posterior-scale guesses; the burn-in adaptation does the rest
  switch (model.family) {
    case Family::location: {
      const double mad = scaled_mad(data.x).scaled;
      const double s = mad > 0.0 ? mad : 1.0;
      return Eigen::VectorXd::Constant(1, 2.5 * s / std::sqrt(static_cast<double>(data.n())));
    }
    case Family::linear_regression: {
      const RegressionFit f = ols_fit(data.x, *data.y);
      Eigen::VectorXd sc(2);
      sc << std::max(1e-3, f.std_errors[0]), std::max(1e-3, f.std_errors[1]);
      return 2.5 * sc;
    }
    case Family::custom:
      return Eigen::VectorXd::Constant(1, 0.1);
  }
  return Eigen::VectorXd::Constant(1, 0.1);
}

inline Eigen::VectorXd default_theta_init(const MomentModel& model, const Dataset& data,
                                          const Priors& priors, std::uint64_t seed) {
  switch (model.family) {
    case Family::location:
      return Eigen::VectorXd::Constant(1, median_of(std::vector<double>(
                                              data.x.data(), data.x.data() + data.x.size())));
    case Family::linear_regression: {
      MMConfig cfg;
      cfg.seed = seed;
      return mm_fit(data.x, *data.y, cfg).coefficients;
    }
    case Family::custom:
      return priors.theta_mean;
  }
  return priors.theta_mean;
}

} // namespace detail

// Run one chain with the sweep order theta -> (s, K) -> v.  BETEL mode
// freezes s at all-ones and skips the indicator and v updates.  The
// random-walk scale adapts by Robbins-Monro on its log during burn-in only.
// Deterministic given config.seed.
inline ChainOutput run_chain(const MomentModel& model, const Priors& priors, const Dataset& data,
                             const ChainConfig& config, Method method,
                             std::optional<Eigen::VectorXd> theta_init = std::nullopt) {
  if (config.n_burnin < 0 || config.n_keep < 1)
    throw std::invalid_argument("run_chain: need n_burnin >= 0 and n_keep >= 1");
  if (config.thin < 1) throw std::invalid_argument("run_chain: thin must be >= 1");

  const int n = data.n();
  auto rng = make_stream(config.seed, 0xc4a1u);

  ChainState st;
  st.indicators = IndicatorState::all_ones(n);
  st.v = priors.v_prior().mean();
  st.log_prior_v = priors.log_v_prior(st.v);

  Eigen::VectorXd theta0 =
      theta_init ? *theta_init : detail::default_theta_init(model, data, priors, config.seed);

  // find a finite-kernel starting point, jittering around the heuristic
  std::normal_distribution<double> gauss(0.0, 1.0);
  bool ok = false;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::VectorXd cand = theta0;
    if (attempt > 0) {
      const double spread = 0.05 * attempt;
      for (Eigen::Index i = 0; i < cand.size(); ++i)
        cand[i] += spread * (1.0 + std::abs(theta0[i])) * gauss(rng);
    }
    GMatrix g = model.gmatrix(data, cand);
    TiltingSolution tilt;
    double letel;
    if (method == Method::betel) {
      tilt = solve_tilting(g, config.solver);
      letel = tilt.converged ? tilt.log_etel : kNegInf;
    } else {
      auto res = log_etel_active(g, st.indicators, config.solver);
      tilt = std::move(res.first);
      letel = res.second;
    }
    if (std::isfinite(letel)) {
      st.theta = std::move(cand);
      st.g_full = std::move(g);
      st.tilt = std::move(tilt);
      st.log_etel = letel;
      st.log_prior_theta = priors.log_theta_prior(st.theta);
      detail::refresh_kernel(st, method);
      ok = true;
      break;
    }
  }
  if (!ok) throw std::runtime_error("run_chain: no finite-kernel initial state in 100 attempts");

  Eigen::VectorXd rw0 =
      config.rw_scale.size() > 0 ? config.rw_scale : detail::default_rw_scale(model, data);
  if (rw0.size() != st.theta.size())
    throw std::invalid_argument("run_chain: rw_scale dimension mismatch");

  const int total = config.n_burnin + config.n_keep;
  const int kept = (config.n_keep + config.thin - 1) / config.thin;

  ChainOutput out;
  out.method = method;
  out.theta.resize(kept, st.theta.size());
  if (method == Method::rbetel) {
    out.v.resize(kept);
    out.s.resize(kept, n);
  }

  double log_mult = 0.0;
  long acc_theta = 0, acc_ind = 0;
  int row = 0;

  for (int sweep = 0; sweep < total; ++sweep) {
    const Eigen::VectorXd rw = std::exp(log_mult) * rw0;
    const StepResult tr = theta_step(st, model, priors, data, rw, method, config.solver, rng);
    acc_theta += tr.accepted;

    if (config.adapt && sweep < config.n_burnin) {
      log_mult += (tr.accept_prob - config.target_accept) /
                  std::pow(1.0 + static_cast<double>(sweep), 0.6);
      if ((sweep & 0xff) == 0) out.adapt_trace.push_back(log_mult);
    }

    if (method == Method::rbetel) {
      const StepResult ir =
          indicator_step(st, model, priors, data, config.tau, config.c, config.solver, rng);
      acc_ind += ir.accepted;
      v_step(st, priors, rng);
    }

    const int post = sweep - config.n_burnin;
    if (post >= 0 && post % config.thin == 0) {
      out.theta.row(row) = st.theta;
      if (method == Method::rbetel) {
        out.v[row] = st.v;
        for (int i = 0; i < n; ++i) out.s(row, i) = st.indicators.s[static_cast<std::size_t>(i)];
      }
      ++row;
    }
  }

  out.accept_theta = static_cast<double>(acc_theta) / total;
  out.accept_indicator = method == Method::rbetel ? static_cast<double>(acc_ind) / total : 0.0;
  out.final_rw_scale = std::exp(log_mult) * rw0;
  return out;
}

} // namespace rbetel

#endif // RBETEL_SAMPLER_HPP_
