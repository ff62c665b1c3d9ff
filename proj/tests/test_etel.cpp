#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "rbetel/etel.hpp"

using namespace rbetel;
using Catch::Approx;

namespace {

// Independent 1-D oracle: minimize Q(lambda) = sum exp(lambda * g_i) by
// golden-section search on a bracket, refined far below solver tolerance.
double oracle_min_1d(const Eigen::VectorXd& g, double lo = -50.0, double hi = 50.0) {
  auto q = [&](double lam) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) s += std::exp(lam * g[i]);
    return s;
  };
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  for (int it = 0; it < 400; ++it) {
    if (q(c) < q(d))
      b = d;
    else
      a = c;
    c = b - gr * (b - a);
    d = a + gr * (b - a);
  }
  return 0.5 * (a + b);
}

GMatrix rows1(std::initializer_list<double> v) {
  GMatrix g(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) g(i++, 0) = x;
  return g;
}

} // namespace

TEST_CASE("symmetric two-point problem has zero tilt") {
  const GMatrix g = rows1({-1.0, 1.0});
  const TiltingSolution sol = solve_tilting(g);
  REQUIRE(sol.converged);
  REQUIRE(sol.hull_ok);
  REQUIRE(sol.lambda[0] == Approx(0.0).margin(1e-12));
  REQUIRE(sol.weights[0] == Approx(0.5).margin(1e-12));
  REQUIRE(sol.weights[1] == Approx(0.5).margin(1e-12));
  REQUIRE(sol.log_etel == Approx(0.0).margin(1e-12));
}

TEST_CASE("three-point problem matches the closed-form stationary point") {
  // rows (-1, 0, 2): -e^{-lam} + 2 e^{2 lam} = 0  =>  lam = -(ln 2)/3.
  // Weights and log ETEL frozen from the closed form, cross-checked below
  // against the golden-section oracle.
  const GMatrix g = rows1({-1.0, 0.0, 2.0});
  const TiltingSolution sol = solve_tilting(g);
  REQUIRE(sol.converged);
  const double lam_exact = -std::log(2.0) / 3.0;
  REQUIRE(sol.lambda[0] == Approx(lam_exact).margin(1e-9));
  REQUIRE(sol.weights[0] == Approx(0.43597670605710632).margin(1e-9));
  REQUIRE(sol.weights[1] == Approx(0.34603494091434053).margin(1e-9));
  REQUIRE(sol.weights[2] == Approx(0.21798835302855316).margin(1e-9));
  REQUIRE(sol.log_etel == Approx(-0.11885876534688804).margin(1e-9));

  const double lam_oracle = oracle_min_1d(g.col(0));
  REQUIRE(sol.lambda[0] == Approx(lam_oracle).margin(1e-6));

  // weighted moment vanishes
  REQUIRE((sol.weights.transpose() * g).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("one-sided rows mean the origin is outside the hull") {
  const GMatrix g = rows1({1.0, 2.0, 3.0});
  const TiltingSolution sol = solve_tilting(g);
  REQUIRE_FALSE(sol.hull_ok);
  REQUIRE_FALSE(sol.converged);
}

TEST_CASE("implied weights: zero tilt is uniform, large tilt stays finite") {
  GMatrix g(4, 1);
  g << 0.3, -0.7, 1.2, 0.1;
  const Eigen::VectorXd w0 = implied_weights(g, Eigen::VectorXd::Zero(1));
  for (int i = 0; i < 4; ++i) REQUIRE(w0[i] == Approx(0.25).margin(1e-14));

  GMatrix g2(2, 1);
  g2 << 1.0, -1.0;
  Eigen::VectorXd lam(1);
  lam << 1000.0;
  const Eigen::VectorXd w = implied_weights(g2, lam);
  REQUIRE(std::isfinite(w[0]));
  REQUIRE(std::isfinite(w[1]));
  REQUIRE(w[0] == Approx(1.0).margin(1e-12));
  REQUIRE(w[1] == Approx(0.0).margin(1e-12));
}

TEST_CASE("log EL ratio: uniform weights give zero, hand values check out") {
  Eigen::VectorXd u = Eigen::VectorXd::Constant(10, 0.1);
  REQUIRE(log_el_ratio(u) == Approx(0.0).margin(1e-12));

  Eigen::VectorXd w(3);
  w << 0.5, 0.25, 0.25;
  const double expect = std::log(1.5) + 2.0 * std::log(0.75);
  REQUIRE(log_el_ratio(w) == Approx(expect).margin(1e-12));
  REQUIRE(log_el_ratio(w) == Approx(-0.16989).margin(1e-4));

  Eigen::VectorXd bad(2);
  bad << 1.0, -0.1;
  REQUIRE_THROWS_AS(log_el_ratio(bad), std::invalid_argument);
}

TEST_CASE("log EL ratio is nonpositive and zero only at uniformity") {
  std::mt19937_64 rng(7);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const int m = 2 + static_cast<int>(rng() % 8);
    Eigen::VectorXd w(m);
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
      w[i] = gamma(rng) + 1e-6;
      s += w[i];
    }
    w /= s;
    REQUIRE(log_el_ratio(w) <= 1e-12);
  }
}

TEST_CASE("active-subset evaluation equals the manual sub-solve bit for bit") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> gauss(0.0, 1.0);
  GMatrix g(8, 2);
  for (int i = 0; i < 8; ++i) {
    g(i, 0) = gauss(rng);
    g(i, 1) = gauss(rng);
  }
  g.rowwise() -= g.colwise().mean(); // origin strictly inside the hull

  IndicatorState s(std::vector<std::uint8_t>{1, 0, 1, 1, 0, 1, 1, 1});
  const auto [sol, letel] = log_etel_active(g, s, {});
  REQUIRE(sol.converged);

  GMatrix sub(s.K, 2);
  int r = 0;
  for (int i = 0; i < 8; ++i)
    if (s.s[static_cast<std::size_t>(i)]) sub.row(r++) = g.row(i);
  const TiltingSolution manual = solve_tilting(sub, {});
  REQUIRE(manual.converged);
  REQUIRE(manual.lambda == sol.lambda); // same options, same path
  REQUIRE(manual.log_etel == letel);
}

TEST_CASE("all-ones indicator reduces to the full-sample solve") {
  GMatrix g(4, 1);
  g << -2.0, -0.5, 0.7, 1.9;
  const auto [sol, letel] = log_etel_active(g, IndicatorState::all_ones(4), {});
  const TiltingSolution full = solve_tilting(g, {});
  REQUIRE(sol.converged);
  REQUIRE(letel == full.log_etel);
}

TEST_CASE("active-subset example: excluding the gross point recovers the 3-point solve") {
  // data {0,1,3,100}, mu = 1, moment x - mu; s drops the 100
  GMatrix g(4, 1);
  g << -1.0, 0.0, 2.0, 99.0;
  IndicatorState s(std::vector<std::uint8_t>{1, 1, 1, 0});
  const auto [sol, letel] = log_etel_active(g, s, {});
  REQUIRE(sol.converged);
  REQUIRE(letel == Approx(-0.11885876534688804).margin(1e-9));

  IndicatorState only_last(std::vector<std::uint8_t>{0, 0, 0, 1});
  const auto [sol2, letel2] = log_etel_active(g, only_last, {});
  REQUIRE_FALSE(sol2.hull_ok);
  REQUIRE(std::isinf(letel2));
}

TEST_CASE("converged solutions satisfy normalization and the moment constraint") {
  std::mt19937_64 rng(123);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const int m = 3 + static_cast<int>(rng() % 6);
    const int d = 1 + static_cast<int>(rng() % 2);
    GMatrix g(m, d);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = gauss(rng);
    g.rowwise() -= g.colwise().mean();
    const TiltingSolution sol = solve_tilting(g);
    if (!sol.converged) continue;
    REQUIRE(std::abs(sol.weights.sum() - 1.0) < 1e-10);
    REQUIRE((sol.weights.transpose() * g).cwiseAbs().maxCoeff() < 1e-8);
    REQUIRE(sol.weights.minCoeff() > 0.0);
  }
}

TEST_CASE("returned weights minimize the entropy objective (1-D dual grid)") {
  // grid over the scalar dual; any lambda gives feasible-direction weights,
  // the entropy sum w log w must be minimal at the solver's lambda
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const int m = 3 + static_cast<int>(rng() % 4);
    Eigen::VectorXd col(m);
    for (int i = 0; i < m; ++i) col[i] = gauss(rng);
    col.array() -= col.mean();
    GMatrix g = col;
    const TiltingSolution sol = solve_tilting(g);
    REQUIRE(sol.converged);
    auto entropy = [](const Eigen::VectorXd& w) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < w.size(); ++i) s += w[i] * std::log(w[i]);
      return s;
    };
    const double e_star = entropy(sol.weights);
    const double lam_oracle = oracle_min_1d(col);
    Eigen::VectorXd lo(1);
    lo << lam_oracle;
    REQUIRE(entropy(implied_weights(g, lo)) >= e_star - 1e-6);
    REQUIRE(std::abs(lam_oracle - sol.lambda[0]) < 1e-5);
  }
}

TEST_CASE("zero column means give zero tilt and uniform weights") {
  GMatrix g(5, 2);
  g << 1, 2, -1, -2, 0.5, 1.0, -0.5, -1.0, 0.0, 0.0;
  REQUIRE(g.colwise().mean().cwiseAbs().maxCoeff() == 0.0);
  const TiltingSolution sol = solve_tilting(g);
  REQUIRE(sol.converged);
  REQUIRE(sol.lambda.cwiseAbs().maxCoeff() < 1e-9);
  for (int i = 0; i < 5; ++i) REQUIRE(sol.weights[i] == Approx(0.2).margin(1e-9));
}

TEST_CASE("loss link: log EL ratio equals n log n minus the BETEL loss") {
  GMatrix g = rows1({-1.0, 0.0, 2.0});
  const TiltingSolution sol = solve_tilting(g);
  REQUIRE(sol.converged);
  const double n = 3.0;
  double loss = 0.0;
  for (int i = 0; i < 3; ++i) loss -= std::log(sol.weights[i]);
  REQUIRE(log_el_ratio(sol.weights) == Approx(-loss + n * std::log(n)).margin(1e-10));
}

TEST_CASE("non-finite inputs are rejected") {
  GMatrix g(2, 1);
  g << 1.0, std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(solve_tilting(g), std::invalid_argument);
  GMatrix g2(2, 1);
  g2 << 1.0, -1.0;
  Eigen::VectorXd lam(1);
  lam << std::numeric_limits<double>::infinity();
  REQUIRE_THROWS_AS(implied_weights(g2, lam), std::invalid_argument);
}
