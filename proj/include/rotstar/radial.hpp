#ifndef ROTSTAR_RADIAL_HPP
#define ROTSTAR_RADIAL_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rotstar/eos.hpp"
#include "rotstar/numerics.hpp"

namespace rotstar {

// Density as a function of the potential value: rho = f(u), f = 0 for u <= 0.
struct DensityLaw {
  std::string name;
  std::function<double(double)> rho;
  std::function<double(double)> drho;
};

std::shared_ptr<const DensityLaw> density_from_eos(const EquationOfState& eos);

struct RadialGrid {
  std::vector<double> nodes;  // nodes[0] = 0, nodes.back() = R
  double R = 0.0;
};

// Non-rotating equilibrium u'' + (2/r)u' + 4 pi f(u) = 0, u(0) = a, u'(0) = 0, cut at the
// first zero R. The variational solution v_a = du/da is carried along.
class RadialStar {
 public:
  double a = 0.0;
  double R = 0.0;
  double mass = 0.0;
  double mass_prime = 0.0;  // -R^2 v_a'(R)
  RadialGrid grid;
  Vec u0, u0p, rho0;
  std::shared_ptr<const DensityLaw> law;
  std::optional<EquationOfState> eos;

  // Smooth evaluation. Beyond R the harmonic continuation M/r - M/R is used.
  double u(double r) const;
  double up(double r) const;
  double upp(double r) const;
  double rho(double r) const;
  double drho(double r) const;  // d rho0 / dr
  double va(double r) const;
  double vap(double r) const;
  // rho0'(r)/r, finite at r = 0
  double drho_over_r(double r) const;

  struct Dense;
  std::shared_ptr<const Dense> dense;
};

struct RadialOptions {
  double rtol = 1e-12;
  double atol = 1e-15;
  int output_nodes = 401;
  double r_max_factor = 1e3;
  std::string unbounded_message = "unbounded star";
};

RadialStar solve_radial(const EquationOfState& eos, double a, const RadialOptions& opts = {});
RadialStar solve_profile(std::shared_ptr<const DensityLaw> law, double a,
                         const RadialOptions& opts = {});

struct MassDerivative {
  double value = 0.0;
  std::vector<double> r;
  Vec va, vap;
};

MassDerivative mass_derivative(const EquationOfState& eos, const RadialStar& star);

struct IdentityResidual {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  bool absolute = false;  // residual normalized by |u0'(R)| because rhs vanishes
};

// a * 2(gamma-1) v_a'(R) = (3 gamma - 4) u0'(R) for p = s^gamma; the scaling identity
// obtained by differentiating the power-law rescaling of the radial problem.
IdentityResidual gamma_43_identity_check(const EquationOfState& eos, const RadialStar& star);

struct MassSample {
  double a, R, M, Mprime;
};

struct MassCurve {
  std::vector<MassSample> samples;
};

// n log-spaced samples of a in [a_lo, a_hi].
MassCurve mass_curve(const EquationOfState& eos, double a_lo, double a_hi, int n,
                     const RadialOptions& opts = {});

// Power-law rescaling exponent 2(gamma-1)/(2-gamma).
double scaling_exponent(double gamma);

}  // namespace rotstar

#endif
