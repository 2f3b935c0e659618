#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rotstar/eos.hpp"
#include "rotstar/errors.hpp"

using namespace rotstar;

namespace {
EquationOfState quadrature_power(double g) {
  return EquationOfState::custom([g](double s) { return std::pow(s, g); },
                                 [g](double s) { return g * std::pow(s, g - 1); },
                                 [g](double s) { return g * (g - 1) * std::pow(s, g - 2); });
}
}  // namespace

TEST_CASE("power law closed forms") {
  const auto e = EquationOfState::power_law(1.5);
  CHECK(e.enthalpy(1.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(e.inverse_enthalpy(3.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(e.gamma() == 1.5);
  CHECK(e.gamma_star() == 1.5);
  const auto w = EquationOfState::power_law(4.0 / 3.0);
  for (double s : {0.01, 0.5, 2.0, 40.0}) {
    CHECK(w.enthalpy(s) == doctest::Approx(4 * std::cbrt(s)).epsilon(1e-14));
    CHECK(w.inverse_enthalpy(s) == doctest::Approx(std::pow(s / 4, 3)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(EquationOfState::power_law(1.0), DomainError);
  CHECK_THROWS_AS(EquationOfState::power_law(0.7), DomainError);
}

TEST_CASE("enthalpy vanishes at zero density") {
  for (const auto& e : {EquationOfState::power_law(1.5),
                        EquationOfState::power_sum({{1, 1.5}, {1, 1.8}}), quadrature_power(1.4)}) {
    CHECK(e.enthalpy(0.0) == 0.0);
    CHECK(e.inverse_enthalpy(0.0) == 0.0);
    // one-sided difference quotient of h^-1 at zero
    CHECK(e.inverse_enthalpy(1e-8) / 1e-8 < 1e-4);
  }
}

TEST_CASE("power sum enthalpy matches the term-wise closed form") {
  const auto e = EquationOfState::power_sum({{1, 1.5}, {1, 1.8}});
  CHECK(std::abs(e.enthalpy(1.0) - 5.25) < 1e-10 * 5.25);
  for (double s : {1e-6, 1e-3, 0.2, 7.0, 1e4}) {
    const double exact = 3 * std::pow(s, 0.5) + 2.25 * std::pow(s, 0.8);
    CHECK(std::abs(e.enthalpy(s) - exact) < 1e-10 * exact);
  }
  CHECK(e.gamma() == 1.5);
  CHECK(e.gamma_star() == 1.8);
}

TEST_CASE("quadrature enthalpy agrees with the closed form for power laws") {
  for (double g : {1.3, 1.5, 1.7}) {
    const auto q = quadrature_power(g);
    const auto c = EquationOfState::power_law(g);
    for (double s : {1e-8, 1e-4, 0.3, 1.0, 17.0, 1e5, 1e8}) {
      CHECK(std::abs(q.enthalpy(s) - c.enthalpy(s)) < 1e-10 * c.enthalpy(s));
    }
    CHECK(std::abs(q.gamma() - g) < 1e-12);
  }
}

TEST_CASE("inverse enthalpy round trip on a log grid") {
  for (const auto& e : {EquationOfState::power_law(1.5),
                        EquationOfState::power_sum({{1, 1.5}, {1, 1.8}}),
                        EquationOfState::power_sum({{2, 1.3}, {0.5, 1.9}})}) {
    double prev = -1;
    for (double s : log_grid(1e-8, 1e8, 97)) {
      const double h = e.enthalpy(s);
      CHECK(h > prev);
      prev = h;
      CHECK(std::abs(e.inverse_enthalpy(h) - s) < 1e-10 * s);
      CHECK(std::abs(e.enthalpy(e.inverse_enthalpy(s)) - s) < 1e-10 * s);
    }
  }
}

TEST_CASE("derivative of the inverse enthalpy") {
  const auto e = EquationOfState::power_sum({{1, 1.5}, {1, 1.8}});
  for (double u : {0.01, 1.0, 30.0}) {
    const double d = 1e-6 * u;
    const double fd = (e.inverse_enthalpy(u + d) - e.inverse_enthalpy(u - d)) / (2 * d);
    CHECK(e.dinverse_enthalpy(u) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("k(s)/h(s) tends to 2 - gamma") {
  for (double g : {1.3, 1.5, 1.7}) {
    CHECK(std::abs(EquationOfState::power_law(g).k(1e-6) / EquationOfState::power_law(g).enthalpy(1e-6) -
                   (2 - g)) < 1e-3);
    const auto q = quadrature_power(g);
    CHECK(std::abs(q.k(1e-6) / q.enthalpy(1e-6) - (2 - g)) < 1e-3);
  }
}

TEST_CASE("assumption report") {
  const auto ok = validate_assumptions(EquationOfState::power_law(1.5));
  CHECK(ok.all_pass());
  CHECK(ok.small_exponent == doctest::Approx(0.5));
  CHECK(ok.large_exponent == doctest::Approx(0.5));

  const auto lin = EquationOfState::custom([](double s) { return s; }, [](double) { return 1.0; },
                                           [](double) { return 0.0; }, "linear");
  const auto bad = validate_assumptions(lin);
  CHECK_FALSE(bad.all_pass());
  CHECK(bad.monotone);
  CHECK_FALSE(bad.checks[1].pass);
  CHECK_THROWS_WITH_AS(lin.enthalpy(1.0), doctest::Contains("non-integrable enthalpy"), SolverError);

  const auto two = validate_assumptions(EquationOfState::power_sum({{1, 1.5}, {1, 1.9}}));
  CHECK(two.all_pass());
  CHECK(std::abs(two.small_exponent - 0.5) < 1e-2);
  CHECK(std::abs(two.large_exponent - 0.9) < 1e-2);
}

TEST_CASE("mass condition (b)") {
  const auto grid = log_grid(1e-6, 1e6, 121);
  const auto a = check_mass_condition_b(EquationOfState::power_law(1.5), grid);
  CHECK(a.holds);
  CHECK(std::abs(a.right_margin) < 1e-12);
  CHECK(a.left_margin == doctest::Approx(1.0));
  const auto b = check_mass_condition_b(EquationOfState::power_law(1.25), grid);
  CHECK_FALSE(b.holds);
  CHECK(b.right_margin == doctest::Approx(-2.0));
  CHECK(b.g3_margin < 0);
  const auto c = check_mass_condition_b(EquationOfState::power_sum({{1, 1.5}, {1, 1.8}}), grid);
  CHECK(c.holds);
  CHECK(c.g1_margin > 0);
}

TEST_CASE("rotation profiles") {
  const auto u = RotationProfile::uniform(1.0);
  for (double r : {0.0, 0.3, 1.7, 25.0}) CHECK(u.J(r) == doctest::Approx(0.5 * r * r).epsilon(1e-14));
  const auto p = RotationProfile::power(1.0, 2.0);
  for (double r : {0.3, 1.7, 25.0}) CHECK(p.J(r) == doctest::Approx(std::pow(r, 4) / 4).epsilon(1e-13));
  const auto z = RotationProfile::uniform(0.0);
  CHECK(z.J(2.0) == 0.0);
}
