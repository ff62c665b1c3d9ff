#ifndef RBETEL_SIMLAB_HPP_
#define RBETEL_SIMLAB_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rbetel/moments.hpp"
#include "rbetel/rng.hpp"
#include "rbetel/robust.hpp"
#include "rbetel/sampler.hpp"
#include "rbetel/summary.hpp"

namespace rbetel {

// Contaminated-location design: the good component N(mu0, 1) with
// probability 1 - p_out, the outlier component N(xi0, 1) otherwise.
struct LocationDesign {
  int n = 1000;
  double mu0 = 1.0;
  double xi0 = 6.0;
  double p_out = 0.05;
  std::uint64_t seed = 0;
};

// Regression design: x ~ N(0, x_variance) sorted ascending, errors inflated
// by `inflation` with probability 1 - v_star, and the n_leverage
// largest-x responses shifted by leverage_shift.
struct RegressionDesign {
  int n = 1000;
  double delta0_star = 2.0;
  double delta1_star = 1.0;
  double v_star = 0.95;
  double x_variance = 5.0;
  double inflation = 3.0;
  double leverage_shift = -10.0;
  int n_leverage = 3;
  std::uint64_t seed = 0;
};

struct GeneratedLocation {
  Eigen::VectorXd y;
  std::vector<std::uint8_t> outlier_flag; // 1 when drawn from the xi0 component
};

struct GeneratedRegression {
  Dataset data;
  std::vector<std::uint8_t> outlier_flag; // inflated error or leverage-shifted
};

template <class URBG>
GeneratedLocation gen_location_data(const LocationDesign& d, URBG& rng) {
  if (d.n < 10) throw std::invalid_argument("location design: n too small");
  if (!(d.p_out >= 0.0 && d.p_out < 0.5)) throw std::invalid_argument("location design: bad p_out");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  GeneratedLocation out;
  out.y.resize(d.n);
  out.outlier_flag.resize(static_cast<std::size_t>(d.n), 0);
  for (int i = 0; i < d.n; ++i) {
    const bool bad = unif(rng) < d.p_out;
    out.outlier_flag[static_cast<std::size_t>(i)] = bad ? 1 : 0;
    out.y[i] = (bad ? d.xi0 : d.mu0) + gauss(rng);
  }
  return out;
}

template <class URBG>
GeneratedRegression gen_regression_data(const RegressionDesign& d, URBG& rng) {
  if (d.n < 10 + d.n_leverage) throw std::invalid_argument("regression design: n too small");
  if (!(d.v_star > 0.5 && d.v_star <= 1.0)) throw std::invalid_argument("regression design: bad v_star");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  GeneratedRegression out;
  out.data.x.resize(d.n);
  const double x_sd = std::sqrt(d.x_variance);
  for (int i = 0; i < d.n; ++i) out.data.x[i] = x_sd * gauss(rng);
  std::sort(out.data.x.data(), out.data.x.data() + d.n);

  Eigen::VectorXd y(d.n);
  out.outlier_flag.resize(static_cast<std::size_t>(d.n), 0);
  for (int i = 0; i < d.n; ++i) {
    const bool inflated = unif(rng) > d.v_star;
    out.outlier_flag[static_cast<std::size_t>(i)] = inflated ? 1 : 0;
    const double e = gauss(rng);
    y[i] = d.delta0_star + d.delta1_star * out.data.x[i] + (inflated ? d.inflation : 1.0) * e;
  }
  for (int i = d.n - d.n_leverage; i < d.n; ++i) {
    y[i] += d.leverage_shift;
    out.outlier_flag[static_cast<std::size_t>(i)] = 1;
  }
  out.data.y = std::move(y);
  return out;
}

// Fraction of intervals [lo, hi] containing the truth; boundaries count as
// covered.
inline double coverage(const std::vector<std::pair<double, double>>& ci_list, double truth) {
  if (ci_list.empty()) throw std::invalid_argument("coverage: empty interval list");
  int hits = 0;
  for (const auto& [lo, hi] : ci_list) hits += (lo <= truth && truth <= hi);
  return static_cast<double>(hits) / static_cast<double>(ci_list.size());
}

struct ReplicationReport {
  Method method = Method::rbetel;
  std::vector<std::string> parameter_names;
  Eigen::VectorXd av_post_mean;
  Eigen::VectorXd av_post_sd;
  Eigen::VectorXd av_ts_se;
  Eigen::VectorXd poc; // proportion of 95% CIs covering the designed value
  int n_replicates = 0;
  int n_failed = 0;
};

// What each replicate worker must do: produce a dataset (deterministic in
// the replicate stream), then both chains run on it.
struct ReplicateTask {
  Family family = Family::location;
  LocationDesign loc;
  RegressionDesign reg;
  KeySet keys;
  double eps0 = 1.5;
  Priors priors;
  ChainConfig chain;
  bool scaled_mad_stat = true;
  MMConfig mm; // for the regression robust scale anchor
};

namespace detail {

struct ReplicateResult {
  bool ok = false;
  // per method: parameter summaries
  std::vector<ParameterSummary> betel, rbetel;
};

inline ReplicateResult run_one_replicate(const ReplicateTask& task, std::uint64_t master_seed,
                                         int rep_id) {
  ReplicateResult res;
  try {
    auto rng = make_stream(master_seed, 0xd47aULL + static_cast<std::uint64_t>(rep_id));
    Dataset data;
    MomentModel rbetel_model, betel_model;
    if (task.family == Family::location) {
      GeneratedLocation gen = gen_location_data(task.loc, rng);
      data.x = std::move(gen.y);
      MadResult mad = scaled_mad(data.x);
      const double mad_stat = task.scaled_mad_stat ? mad.scaled : mad.raw;
      rbetel_model = MomentModel::location(task.keys, task.eps0, mad_stat * mad_stat);
      betel_model = MomentModel::location(KeySet{}, task.eps0, 0.0);
    } else {
      GeneratedRegression gen = gen_regression_data(task.reg, rng);
      data = std::move(gen.data);
      MMConfig mm = task.mm;
      mm.seed = mix64(master_seed ^ static_cast<std::uint64_t>(rep_id));
      const double T = robust_error_scale(data.x, *data.y, mm);
      rbetel_model = MomentModel::regression(task.keys, task.eps0, T);
      betel_model = MomentModel::regression(KeySet{}, task.eps0, 0.0);
    }

    ChainConfig cfg = task.chain;
    cfg.seed = mix64(master_seed) ^ static_cast<std::uint64_t>(rep_id);
    const ChainOutput bout = run_chain(betel_model, task.priors, data, cfg, Method::betel);
    cfg.seed = mix64(cfg.seed);
    const ChainOutput rout = run_chain(rbetel_model, task.priors, data, cfg, Method::rbetel);

    res.betel = summarize(bout.theta).parameters;
    res.rbetel = summarize(rout.theta).parameters;
    res.ok = true;
  } catch (const std::exception&) {
    res.ok = false;
  }
  return res;
}

inline ReplicationReport aggregate(const std::vector<std::vector<ParameterSummary>>& reps,
                                   const Eigen::VectorXd& truth, Method method, int n_failed) {
  ReplicationReport rep;
  rep.method = method;
  rep.n_failed = n_failed;
  rep.n_replicates = static_cast<int>(reps.size());
  const auto p = static_cast<Eigen::Index>(reps.front().size());
  rep.av_post_mean = Eigen::VectorXd::Zero(p);
  rep.av_post_sd = Eigen::VectorXd::Zero(p);
  rep.av_ts_se = Eigen::VectorXd::Zero(p);
  rep.poc = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    rep.parameter_names.push_back(reps.front()[static_cast<std::size_t>(j)].name);
    std::vector<std::pair<double, double>> cis;
    for (const auto& r : reps) {
      const auto& ps = r[static_cast<std::size_t>(j)];
      rep.av_post_mean[j] += ps.post_mean;
      rep.av_post_sd[j] += ps.post_sd;
      rep.av_ts_se[j] += ps.ts_se;
      cis.emplace_back(ps.ci_low, ps.ci_high);
    }
    const double nr = static_cast<double>(reps.size());
    rep.av_post_mean[j] /= nr;
    rep.av_post_sd[j] /= nr;
    rep.av_ts_se[j] /= nr;
    rep.poc[j] = coverage(cis, truth[j]);
  }
  return rep;
}

} // namespace detail

struct ReplicationPair {
  ReplicationReport betel;
  ReplicationReport rbetel;
};

// Run n_reps independent replicates of a design, each with its own RNG
// stream derived from (seed, replicate id), fanned out over `workers`
// threads.  Results are aggregated in replicate order, so the report does
// not depend on scheduling.  Failed replicates are excluded and counted;
// more than 10% failures is an error.
inline ReplicationPair replicate(const ReplicateTask& task, int n_reps, const Eigen::VectorXd& truth,
                                 int workers = 1) {
  if (n_reps < 2) throw std::invalid_argument("replicate: need n_reps >= 2");
  if (workers < 1) workers = 1;

  std::vector<detail::ReplicateResult> results(static_cast<std::size_t>(n_reps));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int id = next.fetch_add(1);
      if (id >= n_reps) return;
      results[static_cast<std::size_t>(id)] = detail::run_one_replicate(task, task.chain.seed, id);
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min(workers, n_reps);
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  std::vector<std::vector<ParameterSummary>> bs, rs;
  int failed = 0;
  for (const auto& r : results) {
    if (!r.ok) {
      ++failed;
      continue;
    }
    bs.push_back(r.betel);
    rs.push_back(r.rbetel);
  }
  if (failed * 10 > n_reps)
    throw std::runtime_error("replicate: more than 10% of replicates failed");
  if (bs.empty()) throw std::runtime_error("replicate: all replicates failed");

  ReplicationPair pair;
  pair.betel = detail::aggregate(bs, truth, Method::betel, failed);
  pair.rbetel = detail::aggregate(rs, truth, Method::rbetel, failed);
  return pair;
}

} // namespace rbetel

#endif // RBETEL_SIMLAB_HPP_
