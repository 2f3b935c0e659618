#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "rotstar/rotating.hpp"

using namespace rotstar;

namespace {

const RadialStar& star15() {
  static const RadialStar s = solve_radial(EquationOfState::power_law(1.5), 1.0);
  return s;
}

const RotatingProblem& problem15() {
  static const RotatingProblem p(star15(), RotationProfile::uniform(1.0));
  return p;
}

// smooth x3-even field with random coefficients, scaled to X-norm `norm`
DeformationField random_field(std::mt19937_64& g, double R, double norm) {
  std::uniform_real_distribution<double> u(-1, 1);
  const double c[5] = {u(g), u(g), u(g), u(g), u(g)};
  auto z = [=](double r, double th) {
    const double s = r / R, m = std::cos(th);
    return r * r * (c[0] + c[1] * s * m * m + c[2] * s * s * (1 - m * m) + c[3] * std::pow(m, 4) + c[4] * s * s * s);
  };
  const DeformationField f = DeformationField::from_zeta(z, R);
  return f * (norm / f.x_norm());
}

}  // namespace

TEST_CASE("centrifugal forcing for constant rotation") {
  const CentrifugalField f = centrifugal_rhs(RotationProfile::uniform(1.0), star15());
  for (double r : {0.3, 1.0, 3.0}) {
    CHECK(f.mode(0, r) == doctest::Approx(r * r * (2.0 / 3.0) * std::sqrt(kPi)).epsilon(1e-13));
    CHECK(f.mode(2, r) == doctest::Approx(-r * r * (2.0 / 3.0) * std::sqrt(kPi / 5)).epsilon(1e-13));
    CHECK(std::abs(f.mode(4, r)) < 1e-14 * r * r);
    CHECK(f.mode(1, r) == 0.0);
    CHECK(f.value(r, 0.7) == doctest::Approx(0.5 * r * r * std::pow(std::sin(0.7), 2)).epsilon(1e-14));
  }
  const CentrifugalField z = centrifugal_rhs(RotationProfile::uniform(0.0), star15());
  CHECK(z.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("harmonic decomposition for omega^2 = s^2") {
  const CentrifugalField f = centrifugal_rhs(RotationProfile::power(1.0, 2.0), star15(), 16, 8);
  // (1 - mu^2)^2 = 8/15 P0 - 16/21 P2 + 8/35 P4
  const double c[3] = {8.0 / 15, -16.0 / 21, 8.0 / 35};
  for (double r : {0.5, 2.0}) {
    for (int k = 0; k < 3; ++k) {
      const int l = 2 * k;
      const double direct = 2 * kPi * std::pow(r, 4) / 4 * c[k] * std::sqrt((2 * l + 1) / (4 * kPi)) * 2 / (2 * l + 1);
      CHECK(std::abs(f.mode(l, r) - direct) < 1e-10);
    }
    CHECK(std::abs(f.mode(6, r)) < 1e-10);
  }
}

TEST_CASE("first-order shape is oblate") {
  for (double g : {1.4, 1.5, 1.7}) {
    const RadialStar st = solve_radial(EquationOfState::power_law(g), 1.0);
    const ShapeReport rep = first_order_shape(st, RotationProfile::uniform(1.0));
    CHECK(rep.xi_l.at(2) < 0);
    CHECK(rep.xi_l.at(2) <= rep.upper_bound_xi2);
    CHECK(rep.upper_bound_xi2 < 0);
    CHECK(rep.xi_l.at(4) == 0.0);
    CHECK(rep.xi_l.at(8) == 0.0);
    CHECK(rep.equatorial_radius(1e-3) > rep.polar_radius(1e-3));
    CHECK(rep.oblateness_rate() > 0);
  }
}

TEST_CASE("first-order shape refuses the degenerate gamma = 4/3 star") {
  const RadialStar st = solve_radial(EquationOfState::power_law(4.0 / 3.0), 1.0);
  CHECK_THROWS_WITH_AS(first_order_shape(st, RotationProfile::uniform(1.0)),
                       doctest::Contains("degenerate operator"), DegenerateOperator);
}

TEST_CASE("residual at the radial star") {
  const RotatingProblem& p = problem15();
  const DeformationField zero = DeformationField::zero(star15().R);
  const Vec f0 = evaluate_F(p, zero, 0.0);
  CHECK(f0.cwiseAbs().maxCoeff() < 1e-7);
  const Vec f1 = evaluate_F(p, zero, 0.01);
  for (int t = 0; t < p.size(); ++t) {
    const double r = p.radial().nodes[t / p.n_mu()], mu = p.mu()[t % p.n_mu()];
    CHECK(std::abs(f1[t] - f0[t] - 0.01 * 0.5 * r * r * (1 - mu * mu)) < 1e-14);
  }
}

TEST_CASE("uniform dilation against the closed form") {
  const RadialStar& st = star15();
  const RotatingProblem& p = problem15();
  const double c = 0.02;
  const Vec f = evaluate_F(p, DeformationField::from_zeta([c](double r, double) { return c * r * r; }, st.R), 0.0);
  const double factor = 1 / (1 + c) - std::pow(1 + c, -3 * 0.5);
  for (int t = 0; t < p.size(); t += 5) {
    const double r = p.radial().nodes[t / p.n_mu()];
    CHECK(std::abs(f[t] - (st.u(r) - st.u(0.0)) * factor) < 1e-9);
  }
}

TEST_CASE("Frechet derivative matches finite differences") {
  const RotatingProblem& p = problem15();
  std::mt19937_64 g(2024);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    const DeformationField z = random_field(g, star15().R, 0.05 * u(g));
    const DeformationField x = random_field(g, star15().R, 1.0);
    const double kappa = 0.01 * u(g);
    const Vec q = p.sample(z), dq = p.sample(x);
    const double s = 1e-5;
    const Vec fd = (p.residual(Vec(q + s * dq), kappa) - p.residual(Vec(q - s * dq), kappa)) / (2 * s);
    const Vec an = frechet_apply(p, z, kappa, x);
    worst = std::max(worst, (fd - an).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff());
  }
  MESSAGE("worst relative mismatch " << worst);
  CHECK(worst < 1e-4);
  const Vec zero = frechet_apply(p, DeformationField::zero(star15().R), 0.01, DeformationField::zero(star15().R));
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("derivative at the radial star is the mode operator") {
  const RadialStar& st = star15();
  const RotatingProblem& p = problem15();
  const PanelGrid& grid = p.radial();
  const int n = grid.size();
  const EquationOfState& eos = *st.eos;
  Vec diag(n), slope(n), rank(n), xi(n);
  for (int i = 0; i < n; ++i) {
    const double r = grid.nodes[i];
    diag[i] = st.up(r) / r;
    slope[i] = st.drho_over_r(r);
    rank[i] = eos.k(st.rho(r)) - eos.k(st.rho(0.0));
    xi[i] = r * r * (1 + 0.2 * r);
  }
  for (int l : {0, 2, 4}) {
    const ModeOperator op = assemble_mode_profiles(grid, l, diag, slope, rank, st.mass, st.R);
    const Vec lx = apply(op, xi);
    Vec dq(p.size());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p.n_mu(); ++j)
        dq[i * p.n_mu() + j] = xi[i] * harmonic_Y(l, std::acos(p.mu()[j])) / (grid.nodes[i] * grid.nodes[i]);
    const Vec d = p.frechet(Vec::Zero(p.size()), 0.0, dq);
    double err = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p.n_mu(); ++j)
        err = std::max(err, std::abs(d[i * p.n_mu() + j] - lx[i] * harmonic_Y(l, std::acos(p.mu()[j]))));
    CHECK(err < 1e-6 * lx.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("doubling the mode truncation barely moves the residual") {
  std::mt19937_64 g(5);
  RotatingOptions o;
  o.l_max = 16;
  const RotatingProblem wide(star15(), RotationProfile::uniform(1.0), o);
  const DeformationField z = random_field(g, star15().R, 0.01);
  const Vec a = evaluate_F(problem15(), z, 0.001), b = evaluate_F(wide, z, 0.001);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("fold is reported") {
  const RotatingProblem& p = problem15();
  const DeformationField z =
      DeformationField::from_zeta([](double r, double) { return -0.5 * r * r * r; }, star15().R);
  CHECK_THROWS_WITH_AS(evaluate_F(p, z, 0.0), doctest::Contains("fold"), SolverError);
}

TEST_CASE("Newton continuation in kappa") {
  const RadialStar& st = star15();
  const RotatingProblem& p = problem15();
  const ContinuationResult res = newton_continue(p, {0.0, 5e-4, 1e-3});
  REQUIRE(res.complete);
  REQUIRE(res.solutions.size() == 3);
  // the discrete kappa = 0 solution is zero up to the quadrature error of F(0, 0)
  CHECK(res.solutions[0].q.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(res.solutions[0].newton_iters <= 1);
  for (const auto& s : res.solutions) {
    CHECK(std::abs(s.mass_check - st.mass) < 1e-6 * st.mass);
    CHECK(s.residual < 1e-8);
    for (std::size_t k = 1; k < s.residual_history.size(); ++k)
      if (s.residual_history[k - 1] < 1e-2 && s.residual_history[k - 1] > 1e-11) CHECK(s.residual_history[k] < 0.5 * s.residual_history[k - 1]);
  }
  const RotatingSolution& s = res.solutions[2];
  CHECK(s.R_eq > s.R_pole);
  const ShapeReport rep = first_order_shape(st, RotationProfile::uniform(1.0));
  const double rate = (s.R_eq - s.R_pole) / s.kappa;
  MESSAGE("nonlinear rate " << rate << ", first order " << rep.oblateness_rate());
  CHECK(std::abs(rate / rep.oblateness_rate() - 1) < 0.05);

  // remainder after the first-order term is quadratic in kappa
  const Vec xi = first_order_nodal(p, res.solutions[0].q);
  const double e1 = p.x_norm(Vec(res.solutions[1].q - res.solutions[0].q - 5e-4 * xi));
  const double e2 = p.x_norm(Vec(res.solutions[2].q - res.solutions[0].q - 1e-3 * xi));
  MESSAGE("remainder ratio " << e2 / e1);
  CHECK(e2 / e1 > 3.6);
  CHECK(e2 / e1 < 4.4);
}

TEST_CASE("continuation stops at the deformation cap") {
  const ContinuationResult res = newton_continue(problem15(), {1e-3, 2e-3, 3e-3});
  CHECK_FALSE(res.complete);
  CHECK(res.stop_reason.find("deformation cap") != std::string::npos);
  CHECK(res.solutions.size() == 1);
}
