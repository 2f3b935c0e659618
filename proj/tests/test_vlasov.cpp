#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "rotstar/vlasov.hpp"

using namespace rotstar;

namespace {

const VlasovStar& star_of(double mu, double c2) {
  static std::map<std::pair<double, double>, VlasovStar> cache;
  auto it = cache.find({mu, c2});
  if (it == cache.end())
    it = cache.emplace(std::make_pair(mu, c2), solve_vp_radial(VlasovAnsatz::quadratic(mu, c2), 1.0)).first;
  return it->second;
}

const VlasovProblem& rotating0() {
  static const VlasovProblem p(star_of(0.0, 1.0));
  return p;
}

DeformationField random_field(std::mt19937_64& g, double R, double norm) {
  std::uniform_real_distribution<double> u(-1, 1);
  const double c[4] = {u(g), u(g), u(g), u(g)};
  auto z = [=](double r, double th) {
    const double s = r / R, m = std::cos(th);
    return r * r * (c[0] + c[1] * s * m * m + c[2] * s * s * (1 - m * m) + c[3] * std::pow(m, 4));
  };
  const DeformationField f = DeformationField::from_zeta(z, R);
  return f * (norm / f.x_norm());
}

}  // namespace

TEST_CASE("G closed form and quadrature") {
  const VlasovAnsatz f0 = VlasovAnsatz::constant(0.0);
  CHECK(G_of_u(f0, 1.0) == doctest::Approx(8 * std::sqrt(2.0) * kPi / 3).epsilon(1e-14));
  CHECK(G_of_u(f0, 1.0) == doctest::Approx(11.8477).epsilon(1e-5));
  for (double mu : {-1.0, 0.25})
    for (double u : {0.01, 0.5, 1.0, 7.0}) {
      const VlasovAnsatz f = VlasovAnsatz::constant(mu);
      CHECK(std::abs(G_quadrature(f, u) / G_of_u(f, u) - 1) < 1e-10);
    }
  CHECK(G_of_u(f0, 0.0) == 0.0);
  CHECK(G_of_u(f0, -2.0) == 0.0);
  CHECK(w_eval(f0, 0.3, 0.5, -1.0).w == 0.0);
  CHECK_THROWS_AS(G_of_u(VlasovAnsatz::constant(1.0), 1.0), DomainError);
  CHECK_THROWS_AS(G_quadrature(VlasovAnsatz::constant(1.5), 1.0), DomainError);
}

TEST_CASE("G is sub- and superlinear at the ends") {
  for (double mu : {-1.0, 0.0, 0.25, 0.45}) {
    const VlasovAnsatz f = VlasovAnsatz::constant(mu);
    // G(u)/u = G(1) u^{1/2 - mu}
    const double lo = G_of_u(f, 1e-6) / 1e-6, hi = G_of_u(f, 1e6) / 1e6, one = G_of_u(f, 1.0);
    CHECK(lo < G_of_u(f, 1e-3) / 1e-3);
    CHECK(lo / one == doctest::Approx(std::pow(1e-6, 0.5 - mu)).epsilon(1e-12));
    CHECK(hi > G_of_u(f, 1e3) / 1e3);
    CHECK(hi / one == doctest::Approx(std::pow(1e6, 0.5 - mu)).epsilon(1e-12));
  }
}

TEST_CASE("w at zero rotation, symmetry and quadrature") {
  for (double mu : {-1.0, 0.0, 0.25}) {
    const VlasovAnsatz f = VlasovAnsatz::quadratic(mu, 1.0);
    for (double u : {0.1, 1.0}) {
      CHECK(std::abs(w_eval(f, 0.0, 0.7, u).w - G_of_u(f, u)) < 1e-10 * G_of_u(f, u));
      const WSample p = w_eval(f, 0.4, 0.7, u), m = w_eval(f, -0.4, 0.7, u);
      CHECK(p.w == doctest::Approx(m.w).epsilon(1e-14));
      CHECK(p.w > G_of_u(f, u));
      const WSample q = w_quadrature(f, 0.4, 0.7, u);
      CHECK(std::abs(q.w - p.w) < 1e-12 * p.w);
      CHECK(std::abs(q.w_r - p.w_r) < 1e-12 * p.w);
      CHECK(std::abs(q.w_u - p.w_u) < 1e-12 * p.w_u);
      CHECK(std::abs(q.w_kappa - p.w_kappa) < 1e-12 * p.w);
      // second kappa derivative at 0 against the central difference of the closed form
      const double h = 1e-3;
      const double fd = (w_eval(f, h, 0.7, u).w - 2 * G_of_u(f, u) + w_eval(f, -h, 0.7, u).w) / (h * h);
      CHECK(w_kappa2_at_zero(f, 0.7, u) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("w derivatives against finite differences") {
  const VlasovAnsatz f = VlasovAnsatz::polytropic(0.25, {1.0, 0.5, 0.2});
  const double k = 0.3, r = 0.6, u = 0.8, h = 1e-5;
  const WSample s = w_eval(f, k, r, u);
  CHECK(s.w_r == doctest::Approx((w_eval(f, k, r + h, u).w - w_eval(f, k, r - h, u).w) / (2 * h)).epsilon(1e-7));
  CHECK(s.w_u == doctest::Approx((w_eval(f, k, r, u + h).w - w_eval(f, k, r, u - h).w) / (2 * h)).epsilon(1e-7));
  CHECK(s.w_kappa ==
        doctest::Approx((w_eval(f, k + h, r, u).w - w_eval(f, k - h, r, u).w) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("sampled regularity of w") {
  for (double mu : {-1.0, 0.0, 0.25}) {
    const WRegularity reg = w_regularity(VlasovAnsatz::quadratic(mu, 1.0), 1.0, 1.0, 1.0);
    CHECK(std::isfinite(reg.C_r));
    CHECK(std::isfinite(reg.C_lip));
    CHECK(reg.C_r > 0);
    MESSAGE("mu " << mu << ": C_r " << reg.C_r << ", C_lip " << reg.C_lip << ", nu " << reg.nu);
  }
  const WRegularity reg = w_regularity(VlasovAnsatz::quadratic(0.25, 1.0), 1.0, 1.0, 1.0);
  CHECK(std::abs(reg.nu / 0.25 - 1) < 0.1);
}

TEST_CASE("custom ansatz") {
  auto reg = [](double E, double L) { return std::exp(E) * (1 + L * L); };
  auto reg_L = [](double E, double L) { return std::exp(E) * 2 * L; };
  auto reg_LL = [](double E, double) { return 2 * std::exp(E); };
  const VlasovAnsatz f = VlasovAnsatz::custom(0.0, reg, reg_L, reg_LL, "exp");
  CHECK(!f.polynomial());
  // G(1) = 4 pi sqrt2 int_0^1 e^{-t} sqrt(1 - t) dt
  const double ref = 4 * kPi * std::sqrt(2.0) *
                     gauss_legendre([](double s) { return 2 * s * s * std::exp(s * s - 1); }, 0.0, 1.0, 30);
  CHECK(G_of_u(f, 1.0) == doctest::Approx(ref).epsilon(1e-12));
  CHECK(w_eval(f, 0.0, 0.3, 1.0).w == doctest::Approx(ref).epsilon(1e-12));

  auto tilted = [](double E, double L) { return std::exp(E) * (1 + L); };
  CHECK_THROWS_WITH_AS(VlasovAnsatz::custom(0.0, tilted, reg_L, reg_LL), doctest::Contains("must vanish"),
                       DomainError);
}

TEST_CASE("radial solutions: flux and rescaling identities") {
  for (double mu : {-1.0, 0.0, 0.25}) {
    const VlasovStar& s = star_of(mu, 1.0);
    CHECK(s.flux_residual() < 1e-8);
    CHECK(s.U0(s.R()) == doctest::Approx(0.0));
    for (double x : {0.1, 0.5, 0.9, 1.5}) CHECK(s.U0p(x * s.R()) < 0);
    CHECK(s.U0(2 * s.R()) == doctest::Approx(-s.M() / (2 * s.R())).epsilon(1e-9));
    const ScalingIdentity id = scaling_identity(s);
    MESSAGE("mu " << mu << ": R " << s.R() << ", M " << s.M() << ", identities " << id.interior_residual << " "
                  << id.boundary_residual);
    CHECK(id.interior_residual < 1e-7);
    CHECK(id.boundary_residual < 1e-7);
  }
  CHECK(star_of(0.0, 1.0).R() == doctest::Approx(0.29945).epsilon(1e-4));
}

TEST_CASE("polytropic ansatz and barotropic star have the same profile") {
  for (double mu : {-1.0, 0.0, 0.25}) {
    const VlasovStar& vp = star_of(mu, 1.0);
    const EquationOfState eos = EquationOfState::power_law(VlasovAnsatz::constant(mu).polytropic_gamma());
    const RadialStar ep = solve_radial(eos, 1.0);
    double diff = 0;
    for (int i = 0; i <= 200; ++i) {
      const double x = i / 200.0;
      diff = std::max(diff, std::abs(vp.rho0(x * vp.R()) / vp.rho0(0) - ep.rho(x * ep.R) / ep.rho(0)));
    }
    MESSAGE("mu " << mu << ": profile difference " << diff);
    CHECK(diff < 1e-6);
  }
  CHECK(VlasovAnsatz::constant(0.0).polytropic_gamma() == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("ansatz exponent range") {
  CHECK_THROWS_AS(VlasovAnsatz::constant(-3.6), DomainError);
  CHECK(!VlasovAnsatz::constant(0.7).admissible());
  CHECK(VlasovAnsatz::constant(-3.4).admissible());
  // n = 3/2 - mu = 4.9, just below the Plummer index: still a finite ball
  const VlasovStar s = solve_vp_radial(VlasovAnsatz::constant(-3.4), 1.0);
  CHECK(s.R() > 5);
  CHECK(s.flux_residual() < 1e-8);
}

TEST_CASE("mode operator has no kernel") {
  for (double mu : {-1.0, 0.0, 0.25}) {
    const VlasovStar& s = star_of(mu, 0.0);
    for (int l : {0, 2}) {
      const double a = kernel_margin(assemble_vp_mode(s, l, 128)).sigma;
      const double b = kernel_margin(assemble_vp_mode(s, l, 256)).sigma;
      const double c = kernel_margin(assemble_vp_mode(s, l, 512)).sigma;
      MESSAGE("mu " << mu << " l " << l << ": " << a << " " << b << " " << c);
      CHECK(c > 0.1);
      CHECK(std::abs(c / b - 1) < 0.01);
      CHECK(std::abs(b / a - 1) < 0.01);
    }
  }
}

TEST_CASE("higher modes coincide with the barotropic blocks") {
  const VlasovStar& s = star_of(0.0, 1.0);
  for (int l : {1, 2, 4}) {
    const ModeOperator op = assemble_vp_mode(s, l, 128);
    const int n = op.size();
    Vec diag(n), slope(n);
    for (int i = 0; i < n; ++i) {
      const double r = op.grid.nodes[i];
      diag[i] = s.U0p(r) / r;
      slope[i] = s.radial.drho_over_r(r);
    }
    const ModeOperator ep = assemble_mode_profiles(op.grid, l, diag, slope, Vec::Zero(n), s.M(), s.R());
    CHECK((op.matrix - ep.matrix).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(apply(op, Vec::Zero(n)).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(assemble_vp_mode(s, 0, 64).label == "vp " + s.ansatz->name() + " l=0");
}

TEST_CASE("rotational response starts at second order") {
  const VlasovProblem& p = rotating0();
  const Vec z = Vec::Zero(p.size());
  CHECK(p.kappa_derivative(*p.state(z, 0.0)).cwiseAbs().maxCoeff() < 1e-10);

  for (double mu : {-1.0, 0.0, 0.25}) {
    const ShapeReport rep = vp_rotation_response(star_of(mu, 1.0));
    CHECK(rep.order == 2);
    MESSAGE("mu " << mu << ": xi_2(R) " << rep.xi_l.at(2) << ", xi_0(R) " << rep.xi_l.at(0));
    CHECK(rep.xi_l.at(2) < 0);
    CHECK(rep.oblateness_rate() > 0);
    const ShapeReport flat = vp_rotation_response(star_of(mu, 0.0));
    for (const auto& [l, v] : flat.xi_l) CHECK(v == 0.0);
  }
}

TEST_CASE("Frechet derivative matches finite differences") {
  const VlasovProblem& p = rotating0();
  const double R = p.star().R();
  std::mt19937_64 g(77);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    const DeformationField z = random_field(g, R, 0.05 * u(g));
    const DeformationField x = random_field(g, R, 1.0);
    const double kappa = 0.05 * u(g);
    const Vec q = p.sample(z), dq = p.sample(x);
    const double s = 1e-5;
    const Vec fd = (p.residual(Vec(q + s * dq), kappa) - p.residual(Vec(q - s * dq), kappa)) / (2 * s);
    const Vec an = vp_frechet_apply(p, z, kappa, x);
    worst = std::max(worst, (fd - an).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff());
  }
  MESSAGE("worst relative mismatch " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("Newton continuation conserves mass and scales as kappa squared") {
  const VlasovProblem& p = rotating0();
  const double M = p.star().M();
  const ContinuationResult res = vp_newton(p, {0.0, 1e-2, 2e-2});
  REQUIRE(res.complete);
  REQUIRE(res.solutions.size() == 3);
  CHECK(p.x_norm(res.solutions[0].q) < 1e-6);
  for (const auto& s : res.solutions) {
    CHECK(std::abs(s.mass_check - M) < 1e-8 * M);
    CHECK(s.residual < 1e-8);
  }
  const Vec& q0 = res.solutions[0].q;
  const double d1 = p.x_norm(Vec(res.solutions[1].q - q0)), d2 = p.x_norm(Vec(res.solutions[2].q - q0));
  MESSAGE("ratio " << d2 / d1);
  CHECK(std::abs(d2 / d1 / 4 - 1) < 0.1);

  const RotatingSolution& s = res.solutions[2];
  CHECK(s.R_eq > s.R_pole);
  const ShapeReport rep = vp_rotation_response(p.star());
  const double rate = (s.R_eq - s.R_pole) / (s.kappa * s.kappa);
  MESSAGE("nonlinear rate " << rate << ", second order " << rep.oblateness_rate());
  CHECK(std::abs(rate / rep.oblateness_rate() - 1) < 0.05);
}
