#include "rotstar/rotating.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "deformed_potential.hpp"
#include "rotstar/errors.hpp"

namespace rotstar {

// ---------------------------------------------------------------------------------------------
// Centrifugal forcing and first-order shape

double CentrifugalField::value(double r, double theta) const { return profile.J(r * std::sin(theta)); }

double CentrifugalField::mode(int l, double r) const {
  if (l % 2 != 0) return 0.0;  // J(r sin theta) is even in mu
  // 2 pi int_0^pi J(r sin th) Y_l0(th) sin th dth, folded onto [0, pi/2]
  const double v = gauss_legendre(
      [&](double th) { return profile.J(r * std::sin(th)) * harmonic_Y(l, th) * std::sin(th); }, 0.0,
      kPi / 2, 64);
  return 4 * kPi * v;
}

CentrifugalField centrifugal_rhs(const RotationProfile& profile, const RadialStar& star, int n_r,
                                 int n_theta) {
  if (n_r < 2 || n_theta < 2) throw DomainError("centrifugal_rhs: grid too small");
  CentrifugalField f{profile, star.R, {}, {}, Mat(n_r, n_theta)};
  for (int i = 0; i < n_r; ++i) f.r.push_back(star.R * i / (n_r - 1));
  for (int j = 0; j < n_theta; ++j) f.theta.push_back(0.5 * kPi * j / (n_theta - 1));
  for (int i = 0; i < n_r; ++i)
    for (int j = 0; j < n_theta; ++j) f.values(i, j) = f.value(f.r[i], f.theta[j]);
  return f;
}

double ShapeReport::boundary_radius(double kappa, double theta) const {
  double d = 0;
  for (const auto& [l, x] : xi_l) d += x * harmonic_Y(l, theta);
  return R + std::pow(kappa, order) * d / R;
}

double ShapeReport::oblateness_rate() const { return equatorial_radius(1.0) - polar_radius(1.0); }

ShapeReport first_order_shape(const RadialStar& star, const RotationProfile& profile,
                              const ShapeOptions& opts) {
  if (!star.eos) throw DomainError("first_order_shape: star has no equation of state");
  const CentrifugalField cf = centrifugal_rhs(profile, star, 2, 2);
  const EquationOfState& eos = *star.eos;
  ShapeReport rep;
  rep.R = star.R;
  const double R = star.R, upR = star.up(R);
  double scale = 0;
  for (int l = 0; l <= opts.l_max; l += 2) {
    const ModeOperator op = assemble_mode(star, l, opts.n, opts.linop);
    if (l == 0) {
      rep.grid = op.grid;
      rep.sigma_min_l0 = kernel_margin(op).sigma;
    }
    Vec rhs(op.size());
    for (int i = 0; i < op.size(); ++i) rhs[i] = -cf.mode(l, op.grid.nodes[i]);
    if (l == 0) scale = rhs.cwiseAbs().maxCoeff();
    if (rhs.cwiseAbs().maxCoeff() <= 1e-13 * scale) {
      // no forcing in this mode
      rep.profiles[l] = Vec::Zero(op.size());
      rep.xi_l[l] = 0.0;
      continue;
    }
    const Vec xi = solve(op, rhs, opts.linop);
    // Nystrom trace at r = R: (u0'/r) xi = rhs + potential - mass term
    double rank = 0;
    if (l == 0) {
      double m = 0;
      for (int j = 0; j < op.size(); ++j) {
        const double s = op.grid.nodes[j];
        m += 4 * kPi * op.grid.weights[j] * op.density_slope[j] * s * s * xi[j];
      }
      rank = (eos.k(0.0) - eos.k(star.rho(0.0))) / star.mass * m;
    }
    rep.xi_l[l] = (R / upR) * (-cf.mode(l, R) + mode_potential(op, xi, R) - rank);
    rep.profiles[l] = xi;
  }
  if (profile.is_uniform()) {
    rep.upper_bound_xi2 = (R / upR) * (2.0 / 3.0) * std::sqrt(kPi / 5) * R * R * profile.omega_sq(0.0);
  } else {
    rep.upper_bound_xi2 = std::nan("");
  }
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Discretized problem

struct RotatingProblem::State : detail::PotentialState {
  double Mf = 1.0;
};

RotatingProblem::RotatingProblem(const RadialStar& star, RotationProfile profile, RotatingOptions opts)
    : star_(star), profile_(std::move(profile)), opts_(opts) {
  if (!star_.eos) throw DomainError("RotatingProblem: star has no equation of state");
  grid_ = std::make_shared<const detail::PotentialGrid>(star_.R, opts_);
  rho_.resize(grid_->n_r);
  for (int i = 0; i < grid_->n_r; ++i) rho_[i] = star_.rho(grid_->grid.nodes[i]);
}

int RotatingProblem::size() const { return grid_->size(); }
int RotatingProblem::n_r() const { return grid_->n_r; }
int RotatingProblem::n_mu() const { return grid_->n_mu; }
const PanelGrid& RotatingProblem::radial() const { return grid_->grid; }
const std::vector<double>& RotatingProblem::mu() const { return grid_->mu; }

std::shared_ptr<const RotatingProblem::State> RotatingProblem::state(const Vec& q) const {
  auto st = std::make_shared<State>();
  const RadialStar& star = star_;
  detail::build_state(*grid_, q, [&star](double s, double) { return detail::DensitySample{star.rho(s)}; }, *st);
  st->Mf = star_.mass / st->wsum;
  return st;
}

double RotatingProblem::mass_factor(const State& s) const { return s.Mf; }

Vec RotatingProblem::residual(const State& s, double kappa) const {
  const EquationOfState& eos = *star_.eos;
  const int N = size(), n_mu = grid_->n_mu;
  const double h0 = eos.enthalpy(s.Mf * star_.rho(0.0));
  Vec F(N);
  for (int t = 0; t < N; ++t) {
    const int it = t / n_mu, jt = t % n_mu;
    F[t] = s.Mf * s.F1[t] + kappa * profile_.J(s.T[t] * grid_->sin_th[jt]) - eos.enthalpy(s.Mf * rho_[it]) + h0;
  }
  return F;
}

Vec RotatingProblem::centrifugal(const Vec& q) const {
  if (q.size() != size()) throw DomainError("RotatingProblem: unknown vector has the wrong size");
  const int n_mu = grid_->n_mu;
  Vec f(size());
  for (int t = 0; t < size(); ++t)
    f[t] = profile_.J(grid_->grid.nodes[t / n_mu] * (1 + q[t]) * grid_->sin_th[t % n_mu]);
  return f;
}

Vec RotatingProblem::frechet(const State& s, double kappa, const Vec& dq) const {
  return frechet_impl(s, kappa, dq, true);
}

Vec RotatingProblem::frechet_impl(const State& s, double kappa, const Vec& dq, bool parallel) const {
  const int N = size(), n_mu = grid_->n_mu;
  if (dq.size() != N) throw DomainError("RotatingProblem: direction has the wrong size");
  const EquationOfState& eos = *star_.eos;
  const detail::PotentialVariation v = detail::vary(*grid_, s, dq, 0.0, parallel);
  const double dMf = -s.Mf * v.dwsum / s.wsum;
  const double c0 = eos.dpressure(s.Mf * star_.rho(0.0)) / s.Mf;
  Vec out(N);
  for (int t = 0; t < N; ++t) {
    const int it = t / n_mu, jt = t % n_mu;
    const double sin_th = grid_->sin_th[jt];
    const double dT = grid_->grid.nodes[it] * dq[t];
    const double rc = s.T[t] * sin_th;
    const double f2 = kappa * profile_.omega_sq(rc) * rc * sin_th * dT;
    const double f3 = (-eos.dpressure(s.Mf * rho_[it]) / s.Mf + c0) * dMf;
    out[t] = dMf * s.F1[t] + s.Mf * v.dF1[t] + f2 + f3;
  }
  return out;
}

Mat RotatingProblem::jacobian(const State& s, double kappa) const {
  const int N = size();
  Mat J(N, N);
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t k) {
    Vec e = Vec::Zero(N);
    e[static_cast<int>(k)] = 1.0;
    J.col(static_cast<int>(k)) = frechet_impl(s, kappa, e, false);
  });
  return J;
}

double RotatingProblem::ratio_at(const Vec& q, double r, double theta) const {
  return grid_->ratio_at(q, r, theta);
}

Vec RotatingProblem::sample(const DeformationField& zeta) const { return grid_->sample(zeta); }

DeformationField RotatingProblem::to_field(const Vec& q) const {
  return grid_->to_field(q, opts_.field_nr, opts_.field_ntheta);
}

double RotatingProblem::x_norm(const Vec& q) const { return to_field(q).x_norm(); }

Vec evaluate_F(const RotatingProblem& prob, const DeformationField& zeta, double kappa) {
  return prob.residual(prob.sample(zeta), kappa);
}

Vec frechet_apply(const RotatingProblem& prob, const DeformationField& zeta, double kappa,
                  const DeformationField& xi) {
  return prob.frechet(prob.sample(zeta), kappa, prob.sample(xi));
}

Vec first_order_nodal(const RotatingProblem& prob, const Vec& q0) {
  const auto s = prob.state(q0);
  return lu_solve(prob.jacobian(*s, 0.0), -prob.centrifugal(q0));
}

// ---------------------------------------------------------------------------------------------
// Continuation

namespace {

class EulerPoint : public detail::NewtonPoint {
 public:
  EulerPoint(const RotatingProblem& p, const Vec& q, double kappa) : p_(p), s_(p.state(q)), kappa_(kappa) {}
  Vec residual() const override { return p_.residual(*s_, kappa_); }
  Mat jacobian() const override { return p_.jacobian(*s_, kappa_); }
  Vec kappa_derivative() const override { return p_.centrifugal(s_->q); }

 private:
  const RotatingProblem& p_;
  std::shared_ptr<const RotatingProblem::State> s_;
  double kappa_;
};

}  // namespace

ContinuationResult newton_continue(const RotatingProblem& prob, const std::vector<double>& kappa_targets) {
  const RadialStar& st = prob.star();
  detail::NewtonModel model;
  model.size = prob.size();
  model.scale = std::max(1.0, std::abs(st.u(0.0)));
  model.mass = st.mass;
  model.opts = prob.options();
  model.at = [&prob](const Vec& q, double kappa) { return std::make_unique<EulerPoint>(prob, q, kappa); };
  model.x_norm = [&prob](const Vec& q) { return prob.x_norm(q); };
  model.package = [&prob, &st](const Vec& q, double kappa) {
    RotatingSolution sol;
    sol.kappa = kappa;
    sol.q = q;
    sol.zeta = prob.to_field(q);
    sol.x_norm = sol.zeta.x_norm();
    sol.mass_factor = prob.mass_factor(*prob.state(q));
    const DilationMap map(sol.zeta, prob.options().cap);
    sol.mass_check = sol.mass_factor * deformed_mass(map, [&](double r) { return st.rho(r); }, st.R);
    sol.R_eq = st.R * (1 + prob.ratio_at(q, st.R, kPi / 2));
    sol.R_pole = st.R * (1 + prob.ratio_at(q, st.R, 0.0));
    return sol;
  };
  return detail::continue_in_kappa(model, kappa_targets);
}

}  // namespace rotstar
