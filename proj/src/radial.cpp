#include "rotstar/radial.hpp"

#include <cmath>
#include <sstream>

#include "rotstar/errors.hpp"

namespace rotstar {

struct RadialStar::Dense {
  Trajectory traj;
  double r_start = 0.0;
  double rho_a = 0.0, drho_a = 0.0;
};

std::shared_ptr<const DensityLaw> density_from_eos(const EquationOfState& eos) {
  auto law = std::make_shared<DensityLaw>();
  law->name = eos.name();
  law->rho = [eos](double u) { return eos.inverse_enthalpy(u); };
  law->drho = [eos](double u) { return eos.dinverse_enthalpy(u); };
  return law;
}

namespace {
// state: v, v', m, v_a, v_a'
enum { V = 0, VP = 1, MASS = 2, VA = 3, VAP = 4 };
}  // namespace

double RadialStar::u(double r) const {
  if (r > R) return mass / r - mass / R;
  if (r < dense->r_start) return a - (2 * kPi / 3) * dense->rho_a * r * r;
  return dense->traj(r)[V];
}

double RadialStar::up(double r) const {
  if (r > R) return -mass / (r * r);
  if (r < dense->r_start) return -(4 * kPi / 3) * dense->rho_a * r;
  return dense->traj(r)[VP];
}

double RadialStar::upp(double r) const {
  if (r > R) return 2 * mass / (r * r * r);
  if (r < dense->r_start) return -(4 * kPi / 3) * dense->rho_a;
  return -2 * up(r) / r - 4 * kPi * law->rho(u(r));
}

double RadialStar::rho(double r) const { return r >= R ? 0.0 : law->rho(u(r)); }

double RadialStar::drho(double r) const { return r >= R ? 0.0 : law->drho(u(r)) * up(r); }

double RadialStar::drho_over_r(double r) const {
  if (r >= R) return 0.0;
  if (r < dense->r_start) return -(4 * kPi / 3) * dense->rho_a * law->drho(u(r));
  return law->drho(u(r)) * up(r) / r;
}

double RadialStar::va(double r) const {
  if (r < dense->r_start) return 1 - (2 * kPi / 3) * dense->drho_a * r * r;
  return dense->traj(std::min(r, R))[VA];
}

double RadialStar::vap(double r) const {
  if (r < dense->r_start) return -(4 * kPi / 3) * dense->drho_a * r;
  return dense->traj(std::min(r, R))[VAP];
}

RadialStar solve_profile(std::shared_ptr<const DensityLaw> law, double a, const RadialOptions& o) {
  if (!(a > 0)) throw DomainError("solve_radial: central value a must be positive");
  const DensityLaw& f = *law;
  const double rho_a = f.rho(a), drho_a = f.drho(a);
  if (!(rho_a > 0) || !std::isfinite(drho_a)) {
    throw DomainError("solve_radial: density law must be positive and differentiable at a");
  }
  const double R_guess = kPi * std::sqrt(a / (4 * kPi * rho_a));
  const double rs = 1e-4 * R_guess;

  Vec y0(5);
  y0[V] = a - (2 * kPi / 3) * rho_a * rs * rs;
  y0[VP] = -(4 * kPi / 3) * rho_a * rs;
  y0[MASS] = (4 * kPi / 3) * rho_a * rs * rs * rs;
  y0[VA] = 1 - (2 * kPi / 3) * drho_a * rs * rs;
  y0[VAP] = -(4 * kPi / 3) * drho_a * rs;

  auto rhs = [&f](double r, const Vec& y, Vec& dy) {
    const double v = y[V];
    const double rv = f.rho(v), drv = v > 0 ? f.drho(v) : 0.0;
    dy[V] = y[VP];
    dy[VP] = -2 * y[VP] / r - 4 * kPi * rv;
    dy[MASS] = 4 * kPi * rv * r * r;
    dy[VA] = y[VAP];
    dy[VAP] = -2 * y[VAP] / r - 4 * kPi * drv * y[VA];
  };
  auto stop = [](double, const Vec& y) { return y[V]; };

  OdeOptions oo;
  oo.rtol = o.rtol;
  oo.atol = o.atol * std::max(1.0, a);
  oo.event_tol = 1e-13 * R_guess;
  oo.h_init = rs;

  auto dense = std::make_shared<RadialStar::Dense>();
  dense->r_start = rs;
  dense->rho_a = rho_a;
  dense->drho_a = drho_a;
  try {
    dense->traj = integrate_ivp(rhs, y0, rs, o.r_max_factor * R_guess, stop, oo);
  } catch (const SolverError& e) {
    const std::string what = e.what();
    if (what.rfind("no event", 0) == 0) {
      std::ostringstream m;
      m << o.unbounded_message << ": no zero crossing before r_max = " << o.r_max_factor * R_guess
        << " (a = " << a << ")";
      throw SolverError(m.str());
    }
    std::ostringstream m;
    m << "radial integration failed for a = " << a << ": " << what;
    throw SolverError(m.str());
  }

  RadialStar s;
  s.a = a;
  s.law = law;
  s.dense = dense;
  s.R = dense->traj.r_event;
  const Vec& ye = dense->traj.y_event;
  s.mass = ye[MASS];
  s.mass_prime = -s.R * s.R * ye[VAP];

  const int n = std::max(o.output_nodes, 2);
  s.grid.R = s.R;
  s.grid.nodes.resize(n);
  s.u0.resize(n);
  s.u0p.resize(n);
  s.rho0.resize(n);
  for (int i = 0; i < n; ++i) {
    const double r = (i == n - 1) ? s.R : s.R * i / (n - 1);
    s.grid.nodes[i] = r;
    s.u0[i] = (i == n - 1) ? 0.0 : s.u(r);
    s.u0p[i] = s.up(r);
    s.rho0[i] = (i == n - 1) ? 0.0 : f.rho(s.u0[i]);
  }
  return s;
}

RadialStar solve_radial(const EquationOfState& eos, double a, const RadialOptions& opts) {
  RadialStar s = solve_profile(density_from_eos(eos), a, opts);
  s.eos = eos;
  return s;
}

MassDerivative mass_derivative(const EquationOfState& eos, const RadialStar& star) {
  MassDerivative md;
  md.value = star.mass_prime;
  if (!std::isfinite(md.value)) {
    std::ostringstream m;
    m << "variational equation diverged near the surface; (h^-1)' local exponent "
      << (2 - eos.gamma()) / (eos.gamma() - 1);
    throw SolverError(m.str());
  }
  const int n = static_cast<int>(star.grid.nodes.size());
  md.r = star.grid.nodes;
  md.va.resize(n);
  md.vap.resize(n);
  for (int i = 0; i < n; ++i) {
    md.va[i] = star.va(md.r[i]);
    md.vap[i] = star.vap(md.r[i]);
  }
  return md;
}

IdentityResidual gamma_43_identity_check(const EquationOfState& eos, const RadialStar& star) {
  if (!eos.is_power_law()) {
    throw DomainError("gamma_43_identity_check: unsupported for non-power-law equations of state");
  }
  const double g = eos.gamma();
  IdentityResidual out;
  const double vpR = star.up(star.R);
  out.lhs = star.a * 2 * (g - 1) * star.vap(star.R);
  out.rhs = (3 * g - 4) * vpR;
  const double diff = std::abs(out.lhs - out.rhs);
  if (std::abs(3 * g - 4) < 1e-6) {
    out.absolute = true;
    out.residual = diff / std::abs(vpR);
  } else {
    out.residual = diff / std::abs(out.rhs);
  }
  return out;
}

MassCurve mass_curve(const EquationOfState& eos, double a_lo, double a_hi, int n,
                     const RadialOptions& opts) {
  if (n < 2 || !(a_lo > 0) || !(a_hi > a_lo)) throw DomainError("mass_curve: bad range");
  const auto as = log_grid(a_lo, a_hi, n);
  MassCurve c;
  c.samples.resize(n);
  parallel_for(as.size(), [&](std::size_t i) {
    try {
      const RadialStar s = solve_radial(eos, as[i], opts);
      c.samples[i] = {as[i], s.R, s.mass, s.mass_prime};
    } catch (const SolverError& e) {
      std::ostringstream m;
      m.precision(12);
      m << "mass_curve sample a = " << as[i] << ": " << e.what();
      throw SolverError(m.str());
    }
  });
  return c;
}

double scaling_exponent(double gamma) { return 2 * (gamma - 1) / (2 - gamma); }

}  // namespace rotstar
