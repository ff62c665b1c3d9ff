#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "rbetel/moments.hpp"

using namespace rbetel;
using Catch::Approx;

TEST_CASE("huber ramp: saturation, linear zone, sign") {
  REQUIRE(huber(2.0, 1.5) == 1.0);
  REQUIRE(huber(0.75, 1.5) == Approx(0.5));
  REQUIRE(huber(-3.0, 1.5) == -1.0);
  REQUIRE(huber(1.5, 1.5) == 1.0);   // continuous at the knot
  REQUIRE(huber(-1.5, 1.5) == -1.0);
  REQUIRE(huber(0.0, 1.5) == 0.0);
  REQUIRE_THROWS_AS(huber(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("huber is odd and 1-Lipschitz in eps/eps0") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  const double eps0 = 1.5;
  for (int i = 0; i < 500; ++i) {
    const double a = unif(rng), b = unif(rng);
    REQUIRE(huber(-a, eps0) == Approx(-huber(a, eps0)).margin(1e-15));
    REQUIRE(std::abs(huber(a, eps0) - huber(b, eps0)) <= std::abs(a - b) / eps0 + 1e-12);
    REQUIRE(std::abs(huber(a, eps0)) <= 1.0);
  }
}

TEST_CASE("scaled MAD on small vectors") {
  Eigen::VectorXd x(5);
  x << 1, 2, 3, 4, 5;
  const MadResult r = scaled_mad(x);
  REQUIRE(r.raw == Approx(1.0));
  REQUIRE(r.scaled == Approx(1.4826));
  REQUIRE_FALSE(r.degenerate);

  Eigen::VectorXd c = Eigen::VectorXd::Constant(3, 7.5);
  const MadResult rc = scaled_mad(c);
  REQUIRE(rc.raw == 0.0);
  REQUIRE(rc.degenerate);
}

TEST_CASE("scaled MAD is consistent for the normal SD") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd x(10000);
  for (int i = 0; i < 10000; ++i) x[i] = gauss(rng);
  const MadResult r = scaled_mad(x);
  REQUIRE(r.scaled > 0.95);
  REQUIRE(r.scaled < 1.05);
}

TEST_CASE("location rows stack base and key components in fixed order") {
  KeySet all;
  all.third_moment = all.huber = all.mad_scale = true;
  const double mad2 = 1.1;
  const MomentModel m = MomentModel::location(all, 1.5, mad2);
  REQUIRE(m.g_dim == 4);

  Dataset d;
  d.x = Eigen::VectorXd::Constant(1, 2.0);
  const GMatrix g0 = location_g(d, 2.0, m); // centered observation
  REQUIRE(g0(0, 0) == 0.0);
  REQUIRE(g0(0, 1) == 0.0);
  REQUIRE(g0(0, 2) == 0.0);
  REQUIRE(g0(0, 3) == Approx(-mad2));

  KeySet c2;
  c2.huber = true;
  const MomentModel m2 = MomentModel::location(c2, 1.5, 0.0);
  d.x[0] = 2.75;
  const GMatrix g1 = location_g(d, 2.0, m2); // linear zone
  REQUIRE(g1(0, 0) == Approx(0.75));
  REQUIRE(g1(0, 1) == Approx(0.25));

  d.x[0] = 5.0;
  const GMatrix g2 = location_g(d, 2.0, m2); // saturated
  REQUIRE(g2(0, 0) == Approx(3.0));
  REQUIRE(g2(0, 1) == Approx(2.0));
}

TEST_CASE("location rows: odd symmetry in C1/C2, even in C3") {
  KeySet all;
  all.third_moment = all.huber = all.mad_scale = true;
  const MomentModel m = MomentModel::location(all, 1.5, 0.8);
  Dataset d;
  d.x.resize(2);
  const double mu = 0.4, a = 1.7;
  d.x << mu + a, mu - a;
  const GMatrix g = location_g(d, mu, m);
  REQUIRE(g(0, 0) == Approx(-g(1, 0)));
  REQUIRE(g(0, 1) == Approx(-g(1, 1)));
  REQUIRE(g(0, 2) == Approx(-g(1, 2)));
  REQUIRE(g(0, 3) == Approx(g(1, 3)));
}

TEST_CASE("regression rows: hand-checked values") {
  Dataset d;
  d.x.resize(1);
  Eigen::VectorXd y(1);

  KeySet hub;
  hub.huber = true;
  const MomentModel mh = MomentModel::regression(hub, 1.5, 0.0);
  REQUIRE(mh.g_dim == 4);
  d.x[0] = 3.0;
  y[0] = 2.0 + 0.0 * 3.0 + 2.0; // residual 2 at delta = (2, 0)... set explicitly below
  Eigen::VectorXd delta(2);
  delta << 0.0, 0.0;
  d.y = y;
  // choose delta so e = 2, x = 3
  (*d.y)[0] = 2.0;
  const GMatrix g = regression_g(d, delta, mh);
  REQUIRE(g(0, 0) == Approx(2.0));
  REQUIRE(g(0, 1) == Approx(6.0));
  REQUIRE(g(0, 2) == Approx(1.0)); // 2 - H(2) = 2 - 1
  REQUIRE(g(0, 3) == Approx(3.0)); // 6 - 1*3

  KeySet all;
  all.third_moment = all.huber = all.robust_scale = true;
  const MomentModel ma = MomentModel::regression(all, 1.5, 1.0);
  REQUIRE(ma.g_dim == 6);
  d.x[0] = 1.0;
  (*d.y)[0] = 0.5;
  const GMatrix g2 = regression_g(d, delta, ma);
  REQUIRE(g2(0, 0) == Approx(0.5));
  REQUIRE(g2(0, 1) == Approx(0.5));
  REQUIRE(g2(0, 2) == Approx(0.125));
  REQUIRE(g2(0, 3) == Approx(0.5 - 1.0 / 3.0));
  REQUIRE(g2(0, 4) == Approx(0.5 - 1.0 / 3.0));
  REQUIRE(g2(0, 5) == Approx(-0.75));
}

TEST_CASE("zero-residual regression rows vanish except the scale anchor") {
  KeySet all;
  all.third_moment = all.huber = all.robust_scale = true;
  const double T = 0.6;
  const MomentModel m = MomentModel::regression(all, 1.5, T);
  Dataset d;
  d.x.resize(3);
  d.x << -1.0, 0.5, 2.0;
  Eigen::VectorXd delta(2);
  delta << 1.2, -0.7;
  Eigen::VectorXd y = delta[0] + (delta[1] * d.x.array());
  d.y = y;
  const GMatrix g = regression_g(d, delta, m);
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 5; ++c) REQUIRE(g(i, c) == Approx(0.0).margin(1e-12));
    REQUIRE(g(i, 5) == Approx(-T));
  }
}

TEST_CASE("masking equivalence: sub-dataset rows equal extracted full rows") {
  KeySet all;
  all.third_moment = all.huber = all.mad_scale = true;
  const MomentModel m = MomentModel::location(all, 1.5, 0.9);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset full;
  full.x.resize(12);
  for (int i = 0; i < 12; ++i) full.x[i] = gauss(rng);

  std::vector<std::uint8_t> flags = {1, 0, 1, 1, 0, 1, 0, 1, 1, 1, 0, 1};
  const IndicatorState s(flags);
  const GMatrix gf = location_g(full, 0.3, m);

  Dataset sub;
  sub.x.resize(s.K);
  int r = 0;
  for (int i = 0; i < 12; ++i)
    if (flags[static_cast<std::size_t>(i)]) sub.x[r++] = full.x[i];
  const GMatrix gs = location_g(sub, 0.3, m);

  r = 0;
  for (int i = 0; i < 12; ++i)
    if (flags[static_cast<std::size_t>(i)]) {
      REQUIRE((gf.row(i) - gs.row(r)).cwiseAbs().maxCoeff() == 0.0);
      ++r;
    }
}

TEST_CASE("model construction rejects bad configurations") {
  KeySet none;
  REQUIRE_NOTHROW(MomentModel::location(none, 1.5, 0.0));
  KeySet hub;
  hub.huber = true;
  REQUIRE_THROWS_AS(MomentModel::location(hub, -1.0, 0.0), std::invalid_argument);
  KeySet wrong;
  wrong.robust_scale = true;
  REQUIRE_THROWS_AS(MomentModel::location(wrong, 1.5, 0.0), std::invalid_argument);
  KeySet wrong2;
  wrong2.mad_scale = true;
  REQUIRE_THROWS_AS(MomentModel::regression(wrong2, 1.5, 0.0), std::invalid_argument);
}
