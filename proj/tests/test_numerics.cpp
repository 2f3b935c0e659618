#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "rotstar/numerics.hpp"

using namespace rotstar;

TEST_CASE("zero field keeps the initial state") {
  Vec y0(2);
  y0 << 1.0, 0.0;
  auto rhs = [](double, const Vec&, Vec& dy) { dy.setZero(); };
  const Trajectory tr = integrate_ivp(rhs, y0, 0.0, 3.0);
  for (double r : {0.0, 0.7, 2.9, 3.0}) {
    const Vec y = tr(r);
    CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(y[1]) < 1e-15);
  }
}

TEST_CASE("exponential growth reaches e at r = 1") {
  Vec y0(1);
  y0 << 1.0;
  auto rhs = [](double, const Vec& y, Vec& dy) { dy = y; };
  OdeOptions o;
  o.rtol = 1e-12;
  o.atol = 1e-14;
  const Trajectory tr = integrate_ivp(rhs, y0, 0.0, 1.0, {}, o);
  CHECK(std::abs(tr(1.0)[0] - std::exp(1.0)) < 1e-10);
  CHECK(std::abs(tr(0.37)[0] - std::exp(0.37)) < 1e-10);
}

namespace {
// u'' + (2/r) u' + 2 pi u = 0 from the series start; first zero at sqrt(pi/2).
Trajectory linear_lane_emden(double rtol, double event_tol = 1e-14) {
  const double rs = 1e-5;
  Vec y0(2);
  y0 << 1.0 - (kPi / 3) * rs * rs, -(2 * kPi / 3) * rs;
  auto rhs = [](double r, const Vec& y, Vec& dy) {
    dy[0] = y[1];
    dy[1] = -2 * y[1] / r - 2 * kPi * y[0];
  };
  OdeOptions o;
  o.rtol = rtol;
  o.atol = rtol * 1e-2;
  o.event_tol = event_tol;
  return integrate_ivp(rhs, y0, rs, 100.0, [](double, const Vec& y) { return y[0]; }, o);
}
}  // namespace

TEST_CASE("linear Lane-Emden event at sqrt(pi/2)") {
  const Trajectory tr = linear_lane_emden(1e-12);
  REQUIRE(tr.has_event);
  CHECK(std::abs(tr.r_event - std::sqrt(kPi / 2)) < 1e-10);
  const double k = std::sqrt(2 * kPi);
  for (double r : {0.1, 0.5, 1.0, 1.2}) {
    CHECK(std::abs(tr(r)[0] - std::sin(k * r) / (k * r)) < 1e-10);
  }
}

TEST_CASE("error decays at the nominal order in the step count") {
  const double k = std::sqrt(2 * kPi);
  auto err = [&](const Trajectory& tr) {
    double e = 0;
    for (int i = 1; i <= 50; ++i) {
      const double r = 1.2 * i / 50;
      e = std::max(e, std::abs(tr(r)[0] - std::sin(k * r) / (k * r)));
    }
    return e;
  };
  const Trajectory a = linear_lane_emden(1e-6), b = linear_lane_emden(1e-6 / 1024);
  const double order = std::log(err(a) / err(b)) /
                       std::log(static_cast<double>(b.steps()) / static_cast<double>(a.steps()));
  MESSAGE("observed order " << order);
  CHECK(order > 3.5);
  CHECK(order < 6.5);
}

TEST_CASE("missing event and step underflow are reported") {
  Vec y0(1);
  y0 << 1.0;
  auto grow = [](double, const Vec& y, Vec& dy) { dy = y; };
  CHECK_THROWS_WITH_AS(integrate_ivp(grow, y0, 0.0, 1.0, [](double, const Vec& y) { return y[0]; }),
                       doctest::Contains("no event"), SolverError);
  auto blow = [](double, const Vec& y, Vec& dy) { dy[0] = y[0] * y[0]; };
  CHECK_THROWS_WITH_AS(integrate_ivp(blow, y0, 0.0, 2.0), doctest::Contains("stiffness/singularity"),
                       SolverError);
}

TEST_CASE("Gauss-Legendre exactness") {
  CHECK(gauss_legendre([](double) { return 1.0; }, 0.0, 1.0, 1) == doctest::Approx(1.0));
  CHECK(std::abs(gauss_legendre([](double x) { return x * x * x; }, 0.0, 1.0, 2) - 0.25) < 1e-16);
  for (int n = 1; n <= 12; ++n) {
    const int deg = 2 * n - 1;
    const double q = gauss_legendre([&](double x) { return std::pow(x, deg); }, 0.0, 2.0, n);
    CHECK(q == doctest::Approx(std::pow(2.0, deg + 1) / (deg + 1)).epsilon(1e-13));
  }
  // t^0 sqrt(1-t) on [0,1] with t = 1 - s^2
  const double beta = gauss_legendre([](double s) { return 2 * s * s; }, 0.0, 1.0, 2);
  CHECK(std::abs(beta - 2.0 / 3.0) < 1e-15);
  const double scaled = gauss_legendre<long double>(
      [](long double x) { return x * x; }, 0.0L, 3.0L, 2);
  CHECK(std::abs(static_cast<double>(scaled) - 9.0) < 1e-14);
}

TEST_CASE("Gauss-Legendre names the abscissa of a non-finite value") {
  CHECK_THROWS_WITH_AS(gauss_legendre([](double x) { return 1.0 / (x - 0.5); }, 0.0, 1.0, 3),
                       doctest::Contains("x = 0.5"), SolverError);
}

TEST_CASE("Gauss-Jacobi moments") {
  for (double a : {-0.5, 0.5, 1.5})
    for (double b : {-0.25, 0.0, 1.0, 3.5}) {
      const GaussRule& g = gauss_jacobi_rule(6, a, b);
      for (int k = 0; k <= 11; ++k) {
        double sum = 0;
        for (int i = 0; i < 6; ++i) sum += g.w[i] * std::pow(1 + g.x[i], k);
        const double exact = std::pow(2.0, a + b + k + 1) * std::beta(a + 1, b + k + 1);
        CHECK(sum == doctest::Approx(exact).epsilon(1e-13));
      }
    }
  CHECK(gauss_jacobi_rule(5, 0.0, 0.0).x[1] == doctest::Approx(gauss_rule(5).x[1]).epsilon(1e-14));
  CHECK_THROWS_AS(gauss_jacobi_rule(4, -1.0, 0.0), DomainError);
}

TEST_CASE("smooth integrands converge under doubling") {
  auto f = [](double x) { return std::exp(x) * std::cos(3 * x); };
  const double a = gauss_legendre(f, -1.0, 2.0, 20), b = gauss_legendre(f, -1.0, 2.0, 40);
  CHECK(std::abs(a - b) < 1e-12);
}

TEST_CASE("clustered panels integrate polynomials exactly") {
  const PanelGrid g = clustered_panels(0.0, 2.0, 9, 4);
  CHECK(g.size() == 36);
  CHECK(g.weights.sum() == doctest::Approx(2.0).epsilon(1e-15));
  double s = 0;
  for (int i = 0; i < g.size(); ++i) s += g.weights[i] * std::pow(g.nodes[i], 7);
  CHECK(s == doctest::Approx(256.0 / 8).epsilon(1e-13));
  CHECK(g.breaks[1] - g.breaks[0] < g.breaks[5] - g.breaks[4]);
  CHECK(g.panel_of(0.0) == 0);
  CHECK(g.panel_of(2.0) == 8);
}

TEST_CASE("Lagrange basis reproduces polynomials") {
  const double x[4] = {0.1, 0.4, 0.5, 0.9};
  double w[4], dw[4];
  lagrange_basis(x, 4, 0.33, w);
  lagrange_basis_derivative(x, 4, 0.33, dw);
  double v = 0, dv = 0;
  for (int j = 0; j < 4; ++j) {
    v += w[j] * std::pow(x[j], 3);
    dv += dw[j] * std::pow(x[j], 3);
  }
  CHECK(v == doctest::Approx(std::pow(0.33, 3)).epsilon(1e-14));
  CHECK(dv == doctest::Approx(3 * 0.33 * 0.33).epsilon(1e-13));
}

TEST_CASE("Legendre polynomials and axisymmetric harmonics") {
  CHECK(legendre_P(1, 0.5) == 0.5);
  CHECK(legendre_P(2, 0.5) == doctest::Approx(-0.125));
  for (double th : {0.0, 0.4, 1.3, kPi / 2, 2.5}) {
    CHECK(harmonic_Y(0, th) == doctest::Approx(0.5 * std::sqrt(1 / kPi)).epsilon(1e-15));
    const double c = std::cos(th);
    CHECK(harmonic_Y(2, th) ==
          doctest::Approx(0.25 * std::sqrt(5 / kPi) * (3 * c * c - 1)).epsilon(1e-14));
  }
  double tab[7];
  legendre_table(6, 0.3, tab);
  for (int l = 0; l <= 6; ++l) CHECK(tab[l] == doctest::Approx(legendre_P(l, 0.3)).epsilon(1e-15));
}

TEST_CASE("harmonics are orthonormal on the sphere") {
  for (int l = 0; l <= 8; ++l) {
    for (int m = 0; m <= 8; ++m) {
      // 2 pi int_0^pi Y_l Y_m sin(theta) dtheta with mu = cos(theta)
      const double v = gauss_legendre(
          [&](double mu) {
            const double th = std::acos(mu);
            return 2 * kPi * harmonic_Y(l, th) * harmonic_Y(m, th);
          },
          -1.0, 1.0, 24);
      CHECK(std::abs(v - (l == m ? 1.0 : 0.0)) < 1e-10);
    }
  }
}

TEST_CASE("smallest singular value") {
  CHECK(smallest_singular_value(Mat::Identity(3, 3)).sigma == doctest::Approx(1.0).epsilon(1e-14));
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 1e-8;
  const SingularPair p = smallest_singular_value(d);
  CHECK(std::abs(p.sigma - 1e-8) < 1e-18);
  CHECK(std::abs(std::abs(p.vector[1]) - 1.0) < 1e-14);
  CHECK(p.vector.norm() == doctest::Approx(1.0));
  Mat bad = Mat::Identity(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(smallest_singular_value(bad), SolverError);
}

TEST_CASE("LU solve and parallel loop") {
  Mat a(3, 3);
  a << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  Vec x(3);
  x << 1, -2, 0.5;
  const Vec b = a * x;
  CHECK((lu_solve(a, b) - x).norm() < 1e-14);
  set_thread_count(3);
  std::vector<double> out(100, 0.0);
  parallel_for(out.size(), [&](std::size_t i) { out[i] = std::sqrt(static_cast<double>(i)); });
  set_thread_count(1);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == std::sqrt(static_cast<double>(i)));
}
