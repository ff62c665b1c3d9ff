#ifndef RBETEL_ETEL_HPP_
#define RBETEL_ETEL_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rbetel {

// Rows of a GMatrix hold g(x_i; theta) for the active observations,
// one row per observation, one column per moment component.
using GMatrix = Eigen::MatrixXd;

struct SolverOptions {
  int max_iterations = 100;
  double grad_tol = 1e-10;       // infinity norm of the weighted moment
  double lambda_div_bound = 1e4; // ||lambda|| beyond this means the hull test failed
};

// Result of one exponential-tilting solve.  When `converged` the weights are
// strictly positive, sum to one and satisfy the moment constraint; when
// `hull_ok` is false the origin is not in the interior of the convex hull of
// the g-rows and the infimum is not attained.
struct TiltingSolution {
  Eigen::VectorXd lambda;
  Eigen::VectorXd weights;
  double log_etel = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  bool hull_ok = true;
};

// Binary inclusion vector with cached count and active index list.
struct IndicatorState {
  std::vector<std::uint8_t> s;
  int K = 0;

  IndicatorState() = default;

  explicit IndicatorState(std::vector<std::uint8_t> flags) : s(std::move(flags)) {
    K = 0;
    for (auto f : s) K += (f != 0);
  }

  static IndicatorState all_ones(int n) {
    return IndicatorState(std::vector<std::uint8_t>(static_cast<std::size_t>(n), 1));
  }

  int n() const { return static_cast<int>(s.size()); }

  std::vector<int> active_indices() const {
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(K));
    for (int i = 0; i < n(); ++i)
      if (s[static_cast<std::size_t>(i)]) idx.push_back(i);
    return idx;
  }
};

namespace detail {

inline void check_finite(const GMatrix& g) {
  if (g.rows() < 1 || g.cols() < 1)
    throw std::invalid_argument("GMatrix must have at least one row and column");
  if (!g.allFinite())
    throw std::invalid_argument("GMatrix contains non-finite entries");
}

// log(sum(exp(a_i))) with max subtraction; also exposes the stabilized
// exponentials and their sum for reuse.
inline double log_sum_exp(const Eigen::VectorXd& a, Eigen::VectorXd& scaled, double& scaled_sum) {
  const double m = a.maxCoeff();
  scaled = (a.array() - m).exp();
  scaled_sum = scaled.sum();
  return m + std::log(scaled_sum);
}

} // namespace detail

// Implied probabilities w_i = exp(lambda'g_i) / sum_j exp(lambda'g_j),
// evaluated in the log domain so large tilts cannot overflow.
inline Eigen::VectorXd implied_weights(const GMatrix& g, const Eigen::VectorXd& lambda) {
  detail::check_finite(g);
  if (!lambda.allFinite())
    throw std::invalid_argument("tilting vector contains non-finite entries");
  if (lambda.size() != g.cols())
    throw std::invalid_argument("tilting vector length does not match moment dimension");
  Eigen::VectorXd a = g * lambda;
  Eigen::VectorXd u;
  double su;
  detail::log_sum_exp(a, u, su);
  return u / su;
}

// log EL ratio: sum_i log(m * w_i).  Zero iff the weights are uniform,
// negative otherwise.
inline double log_el_ratio(const Eigen::VectorXd& weights) {
  const auto m = weights.size();
  if (m < 1) throw std::invalid_argument("empty weight vector");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double w = weights[i];
    if (!(w > 0.0)) throw std::invalid_argument("weights must be strictly positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("weights must sum to one");
  const double logm = std::log(static_cast<double>(m));
  double r = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) r += std::log(weights[i]) + logm;
  return r;
}

// Minimize Q(lambda) = sum_i exp(lambda'g_i) by damped Newton with Armijo
// backtracking, all arithmetic on log Q.  Q is smooth and strictly convex
// whenever the g-rows span; the minimum exists iff the origin lies in the
// interior of the convex hull of the rows.  Divergence (growing ||lambda||
// or a stalled line search with non-vanishing gradient) is reported as
// hull_ok = false rather than an exception.
inline TiltingSolution solve_tilting(const GMatrix& g, const SolverOptions& opts = {}) {
  detail::check_finite(g);
  const Eigen::Index m = g.rows();
  const Eigen::Index d = g.cols();

  TiltingSolution sol;
  sol.lambda = Eigen::VectorXd::Zero(d);

  Eigen::VectorXd a = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd u;
  double su;
  double f = detail::log_sum_exp(a, u, su);

  for (int it = 0; it < opts.max_iterations; ++it) {
    sol.iterations = it;
    const Eigen::VectorXd w = u / su;
    const Eigen::VectorXd grad = g.transpose() * w; // gradient of log Q
    const double gnorm = grad.lpNorm<Eigen::Infinity>();
    if (gnorm <= opts.grad_tol) {
      sol.converged = true;
      sol.weights = w;
      sol.log_etel = log_el_ratio(w);
      return sol;
    }

    // Newton direction from the (scaled) Hessian of Q; a tiny ridge keeps
    // the factorization defined under collinear moment components.
    Eigen::MatrixXd hess = g.transpose() * (u.asDiagonal() * g) / su;
    hess.diagonal().array() += 1e-10 * hess.trace() / static_cast<double>(d);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    Eigen::VectorXd step = ldlt.solve(-grad);
    if (!step.allFinite()) {
      sol.hull_ok = false;
      return sol;
    }

    const double slope = grad.dot(step);
    double t = 1.0;
    bool moved = false;
    Eigen::VectorXd lam_new, a_new, u_new;
    double su_new = 0.0, f_new = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      lam_new = sol.lambda + t * step;
      a_new = g * lam_new;
      f_new = detail::log_sum_exp(a_new, u_new, su_new);
      if (f_new <= f + 1e-4 * t * slope) {
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      // line search stalled while the gradient is still non-vanishing
      sol.hull_ok = false;
      return sol;
    }

    sol.lambda = lam_new;
    a.swap(a_new);
    u.swap(u_new);
    su = su_new;
    f = f_new;

    if (sol.lambda.norm() > opts.lambda_div_bound) {
      sol.hull_ok = false;
      return sol;
    }
  }

  // iteration budget exhausted: not converged, but no divergence proof
  sol.weights = u / su;
  return sol;
}

// Restrict g to the active rows of s, solve there, and return the solution
// together with the active-subset log ETEL, sum_{s_i=1} log(K * w_i).
// Weights for inactive observations are not defined and not produced.
inline std::pair<TiltingSolution, double>
log_etel_active(const GMatrix& g_full, const IndicatorState& s, const SolverOptions& opts = {}) {
  if (g_full.rows() != s.n())
    throw std::invalid_argument("indicator length does not match row count");
  if (s.K < 1) throw std::invalid_argument("active set is empty");

  GMatrix g_active(s.K, g_full.cols());
  int r = 0;
  for (int i = 0; i < s.n(); ++i)
    if (s.s[static_cast<std::size_t>(i)]) g_active.row(r++) = g_full.row(i);

  TiltingSolution sol = solve_tilting(g_active, opts);
  const double value = sol.converged ? sol.log_etel : -std::numeric_limits<double>::infinity();
  return {std::move(sol), value};
}

} // namespace rbetel

#endif // RBETEL_ETEL_HPP_
