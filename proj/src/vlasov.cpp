#include "rotstar/vlasov.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "deformed_potential.hpp"
#include "rotstar/errors.hpp"

namespace rotstar {

namespace {

void require_integrable(const VlasovAnsatz& f) {
  if (!(f.mu() < 1)) {
    std::ostringstream m;
    m << "phi is non-integrable at E = 0 for mu = " << f.mu() << " (need mu < 1)";
    throw DomainError(m.str());
  }
}

// int_0^1 t^{-mu} (1 - t)^alpha g(t) dt
template <class G>
double jacobi01(int n, double alpha, double mu, G&& g) {
  const GaussRule& r = gauss_jacobi_rule(n, alpha, -mu);
  double s = 0;
  for (int i = 0; i < n; ++i) s += r.w[i] * g(0.5 * (1 + r.x[i]));
  return std::pow(2.0, mu - alpha - 1) * s;
}

// 4 pi 2^{k+1/2}/(2k+1) B(1 - mu, k + 3/2): w = sum_k c_k (kappa r)^{2k} A_k u^{k + 3/2 - mu}
double poly_coefficient(int k, double mu) {
  return 4 * kPi * std::pow(2.0, k + 0.5) / (2 * k + 1) * std::beta(1 - mu, k + 1.5);
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Ansatz

VlasovAnsatz VlasovAnsatz::polytropic(double mu, std::vector<double> psi_even) {
  if (!std::isfinite(mu) || !(mu > -3.5)) throw DomainError("VlasovAnsatz: mu must lie above -7/2");
  if (psi_even.empty() || !(psi_even[0] > 0)) throw DomainError("VlasovAnsatz: psi(0) must be positive");
  for (double c : psi_even)
    if (!(c >= 0) || !std::isfinite(c)) throw DomainError("VlasovAnsatz: psi coefficients must be nonnegative");
  VlasovAnsatz f;
  f.mu_ = mu;
  f.coeffs_ = psi_even;
  std::ostringstream name;
  name << "mu=" << mu;
  if (psi_even.size() == 1 && psi_even[0] == 1.0) {
    name << " psi=const";
  } else if (psi_even.size() == 2 && psi_even[0] == 1.0) {
    name << " psi=quadratic(" << psi_even[1] << ")";
  } else {
    name << " psi=poly";
  }
  f.name_ = name.str();
  const std::vector<double> c = psi_even;
  f.reg_ = [c](double, double L) {
    double s = 0, p = 1;
    for (double ck : c) {
      s += ck * p;
      p *= L * L;
    }
    return s;
  };
  f.reg_L_ = [c](double, double L) {
    double s = 0;
    for (std::size_t k = 1; k < c.size(); ++k) s += c[k] * 2.0 * k * std::pow(L, 2 * k - 1);
    return s;
  };
  f.reg_LL_ = [c](double, double L) {
    double s = 0;
    for (std::size_t k = 1; k < c.size(); ++k) s += c[k] * 2.0 * k * (2.0 * k - 1) * std::pow(L, 2 * k - 2);
    return s;
  };
  return f;
}

VlasovAnsatz VlasovAnsatz::custom(double mu, Fn reg, Fn reg_L, Fn reg_LL, std::string name) {
  if (!std::isfinite(mu) || !(mu > -3.5)) throw DomainError("VlasovAnsatz: mu must lie above -7/2");
  if (!reg || !reg_L || !reg_LL) throw DomainError("VlasovAnsatz: custom ansatz needs phi and two L-derivatives");
  for (double E : {-0.1, -1.0, -10.0}) {
    const double v = reg(E, 0.0);
    if (!(v > 0)) throw DomainError("VlasovAnsatz: phi(E, 0) must be positive for E < 0");
    const double h = 1e-4;
    const double dq = (reg(E, h) - reg(E, -h)) / (2 * h);
    if (std::abs(dq) > 1e-6 * std::max(1.0, std::abs(v))) {
      std::ostringstream m;
      m << "VlasovAnsatz: d phi/dL (E, 0) must vanish, difference quotient " << dq << " at E = " << E;
      throw DomainError(m.str());
    }
  }
  VlasovAnsatz f;
  f.mu_ = mu;
  f.name_ = std::move(name);
  f.reg_ = std::move(reg);
  f.reg_L_ = std::move(reg_L);
  f.reg_LL_ = std::move(reg_LL);
  return f;
}

double VlasovAnsatz::phi(double E, double L) const {
  if (!(E < 0)) return 0.0;
  return std::pow(-E, -mu_) * reg_(E, L);
}

// ---------------------------------------------------------------------------------------------
// Macroscopic integrals

double G_quadrature(const VlasovAnsatz& f, double u, int n) {
  require_integrable(f);
  if (!(u > 0)) return 0.0;
  const double mu = f.mu();
  const double J = jacobi01(n, 0.5, mu, [&](double t) { return f.reg(-u * t, 0.0); });
  return 4 * kPi * std::sqrt(2.0) * std::pow(u, 1.5 - mu) * J;
}

double G_of_u(const VlasovAnsatz& f, double u) {
  require_integrable(f);
  if (!(u > 0)) return 0.0;
  if (!f.polynomial()) return G_quadrature(f, u);
  const double mu = f.mu();
  return f.psi_coefficients()[0] * poly_coefficient(0, mu) * std::pow(u, 1.5 - mu);
}

double dG_of_u(const VlasovAnsatz& f, double u) {
  require_integrable(f);
  if (!(u > 0)) return 0.0;
  if (!f.polynomial()) return w_quadrature(f, 0.0, 0.0, u).w_u;
  const double mu = f.mu();
  return f.psi_coefficients()[0] * poly_coefficient(0, mu) * (1.5 - mu) * std::pow(u, 0.5 - mu);
}

WSample w_quadrature(const VlasovAnsatz& f, double kappa, double r, double u, int n_E, int n_s) {
  require_integrable(f);
  if (r < 0) throw DomainError("w: cylindrical radius must be nonnegative");
  WSample out;
  if (!(u > 0)) return out;
  const double mu = f.mu();
  const GaussRule& gs = gauss_rule(n_s);
  // inner s-integrals at E = -u t, s = S x, S = sqrt(2 u (1 - t))
  auto inner = [&](double t, bool derivative) {
    const double E = -u * t, S = std::sqrt(2 * u * (1 - t));
    double v = 0;
    for (int i = 0; i < n_s; ++i) {
      const double x = gs.x[i], L = kappa * r * S * x;
      v += gs.w[i] * (derivative ? f.reg_L(E, L) * x : f.reg(E, L));
    }
    return v;
  };
  out.w = 2 * kPi * std::sqrt(2.0) * std::pow(u, 1.5 - mu) * jacobi01(n_E, 0.5, mu, [&](double t) { return inner(t, false); });
  // the odd inner integral carries one more factor sqrt(1 - t)
  const double J1 = jacobi01(n_E, 1.5, mu, [&](double t) { return inner(t, true) / std::sqrt(1 - t); });
  out.w_r = 4 * kPi * kappa * std::pow(u, 2 - mu) * J1;
  out.w_kappa = 4 * kPi * r * std::pow(u, 2 - mu) * J1;
  out.w_u = kPi * std::sqrt(2.0) * std::pow(u, 0.5 - mu) * jacobi01(n_E, -0.5, mu, [&](double t) {
              const double E = -u * t, L = kappa * r * std::sqrt(2 * u * (1 - t));
              return f.reg(E, L) + f.reg(E, -L);
            });
  return out;
}

WSample w_eval(const VlasovAnsatz& f, double kappa, double r, double u) {
  if (!f.polynomial()) return w_quadrature(f, kappa, r, u);
  require_integrable(f);
  if (r < 0) throw DomainError("w: cylindrical radius must be nonnegative");
  WSample out;
  if (!(u > 0)) return out;
  const double mu = f.mu();
  const std::vector<double>& c = f.psi_coefficients();
  const double kr2 = kappa * kappa * r * r;
  double p = 1;  // (kappa r)^{2k}
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double A = c[k] * poly_coefficient(static_cast<int>(k), mu);
    const double base = A * std::pow(u, k + 1.5 - mu);
    out.w += base * p;
    out.w_u += A * (k + 1.5 - mu) * std::pow(u, k + 0.5 - mu) * p;
    if (k >= 1) {
      out.w_r += base * 2.0 * k * std::pow(kappa, 2 * k) * std::pow(r, 2 * k - 1);
      out.w_kappa += base * 2.0 * k * std::pow(kappa, 2 * k - 1) * std::pow(r, 2 * k);
    }
    p *= kr2;
  }
  return out;
}

double w_kappa2_at_zero(const VlasovAnsatz& f, double r, double u, int n_E) {
  require_integrable(f);
  if (!(u > 0)) return 0.0;
  const double mu = f.mu();
  const double J = jacobi01(n_E, 1.5, mu, [&](double t) { return f.reg_LL(-u * t, 0.0); });
  return 2 * kPi * r * r * (2.0 / 3.0) * std::pow(2.0, 1.5) * std::pow(u, 2.5 - mu) * J;
}

WRegularity w_regularity(const VlasovAnsatz& f, double kappa_max, double r_max, double u_max, int samples,
                         unsigned seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> K(-kappa_max, kappa_max), Rr(0.0, r_max), U(0.0, u_max);
  WRegularity out;
  for (int i = 0; i < samples; ++i) {
    const double k1 = K(g), k2 = K(g), r = Rr(g), u1 = U(g), u2 = U(g);
    if (r <= 0) continue;
    const WSample a = w_eval(f, k1, r, u1), b = w_eval(f, k2, r, u2);
    out.C_r = std::max(out.C_r, std::abs(a.w_r) / r);
    const double d = std::abs(k1 - k2) * r + std::abs(u1 - u2);
    if (d > 0) out.C_lip = std::max(out.C_lip, std::abs(a.w - b.w) / d);
  }
  // d_u w(u) - d_u w(0) against u on a geometric ladder towards 0; least-squares slope in log-log
  const double k = 0.5 * kappa_max, r = 0.5 * r_max;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int e = 4; e <= 8; ++e) {
    const double u = u_max * std::pow(10.0, -e);
    const double x = std::log(u), y = std::log(std::abs(w_eval(f, k, r, u).w_u));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  out.nu = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Radial solutions

double VlasovStar::flux_residual() const {
  return std::abs(radial.R * radial.R * radial.up(radial.R) + radial.mass) / radial.mass;
}

VlasovStar solve_vp_radial(const VlasovAnsatz& f, double a, const RadialOptions& opts) {
  require_integrable(f);
  auto ansatz = std::make_shared<const VlasovAnsatz>(f);
  auto law = std::make_shared<DensityLaw>();
  law->name = "vp " + f.name();
  law->rho = [ansatz](double u) { return G_of_u(*ansatz, u); };
  law->drho = [ansatz](double u) { return dG_of_u(*ansatz, u); };
  RadialOptions o = opts;
  o.unbounded_message = "unbounded system";
  VlasovStar s;
  s.ansatz = ansatz;
  s.radial = solve_profile(law, a, o);
  return s;
}

ScalingIdentity scaling_identity(const VlasovStar& star, int samples) {
  const VlasovAnsatz& f = *star.ansatz;
  const double R = star.R(), a = star.a();
  const double g0 = G_of_u(f, a);
  const double rs = 1e-4 * R;
  enum { V, VP, S, SP };
  Vec y0(4);
  y0[V] = a - (2 * kPi / 3) * g0 * rs * rs;
  y0[VP] = -(4 * kPi / 3) * g0 * rs;
  y0[S] = -(2 * kPi / 3) * g0 * rs * rs;
  y0[SP] = -(4 * kPi / 3) * g0 * rs;
  auto rhs = [&f](double r, const Vec& y, Vec& dy) {
    const double G = G_of_u(f, y[V]), dG = dG_of_u(f, y[V]);
    dy[V] = y[VP];
    dy[VP] = -2 * y[VP] / r - 4 * kPi * G;
    dy[S] = y[SP];
    dy[SP] = -2 * y[SP] / r - 4 * kPi * dG * y[S] - 4 * kPi * G;
  };
  OdeOptions oo;
  oo.rtol = 1e-12;
  oo.atol = 1e-15 * std::max(1.0, a);
  oo.h_init = rs;
  const Trajectory tr = integrate_ivp(rhs, y0, rs, R, {}, oo);

  ScalingIdentity out;
  const int n = std::max(samples, 2);
  out.r.resize(n);
  out.v_S.resize(n);
  out.v_S_prime.resize(n);
  for (int i = 0; i < n; ++i) {
    const double r = R * i / (n - 1);
    out.r[i] = r;
    if (r < rs) {
      out.v_S[i] = -(2 * kPi / 3) * g0 * r * r;
      out.v_S_prime[i] = -(4 * kPi / 3) * g0 * r;
    } else {
      const Vec y = tr(r);
      out.v_S[i] = y[S];
      out.v_S_prime[i] = y[SP];
    }
    out.interior_residual = std::max(out.interior_residual, std::abs(r * star.U0p(r) - 2 * out.v_S[i]));
  }
  out.boundary_residual = std::abs(2 * out.v_S_prime[n - 1] + star.U0p(R));
  return out;
}

// ---------------------------------------------------------------------------------------------
// Linearized operator and rotational response

ModeOperator assemble_vp_mode(const VlasovStar& star, int l, int n, const LinopOptions& opts) {
  if (l < 0) throw DomainError("assemble_vp_mode: l must be nonnegative");
  if (n < 64) throw DomainError("assemble_vp_mode: need n >= 64");
  const int order = opts.panel_order;
  const int panels = (n + order - 1) / order;
  const PanelGrid grid = clustered_panels(0.0, star.R(), panels, order, opts.clustering);
  const int m = grid.size();
  Vec diag(m), slope(m), rank(m);
  const RadialStar& rs = star.radial;
  for (int i = 0; i < m; ++i) {
    const double r = grid.nodes[i];
    diag[i] = rs.up(r) / r;
    slope[i] = rs.drho_over_r(r);
    rank[i] = rs.u(r) - rs.a;
  }
  ModeOperator op = assemble_mode_profiles(grid, l, diag, slope, rank, rs.mass, rs.R);
  std::ostringstream lab;
  lab << "vp " << star.ansatz->name() << " l=" << l;
  op.label = lab.str();
  return op;
}

namespace {

// (4 pi/(2l+1)) int_0^R K_l(r, s) h(s) s^2 ds, minus 4 pi int h(s) s ds for l = 0.
double radial_potential(int l, const std::function<double(double)>& h, double r, double R) {
  auto piece = [&](double lo, double hi, bool below) {
    if (hi <= lo) return 0.0;
    double s = 0;
    const int panels = 8;
    for (int p = 0; p < panels; ++p) {
      const double a = lo + (hi - lo) * p / panels, b = lo + (hi - lo) * (p + 1) / panels;
      s += gauss_legendre(
          [&](double x) {
            const double K = below ? std::pow(x / r, l) / r : std::pow(r / x, l) / x;
            return K * h(x) * x * x;
          },
          a, b, 16);
    }
    return s;
  };
  const double rr = std::min(r, R);
  double v = 4 * kPi / (2 * l + 1) * (piece(0.0, rr, true) + piece(rr, R, false));
  if (l == 0) {
    double m = 0;
    for (int p = 0; p < 8; ++p)
      m += gauss_legendre([&](double x) { return h(x) * x; }, R * p / 8, R * (p + 1) / 8, 16);
    v -= 4 * kPi * m;
  }
  return v;
}

}  // namespace

ShapeReport vp_rotation_response(const VlasovStar& star, const ShapeOptions& opts) {
  const VlasovAnsatz& f = *star.ansatz;
  const RadialStar& rs = star.radial;
  const double R = rs.R, M = rs.mass, a = rs.a, upR = rs.up(R);
  // d^2 w/d kappa^2 (0, r_cyl, U0) = r_cyl^2 c2(U0) = h(s) sin^2 theta with h = s^2 c2(U0(s))
  auto h = [&](double s) { return w_kappa2_at_zero(f, s, star.U0(std::min(s, R))); };
  double m2 = 0;  // int d^2 w/d kappa^2 dy
  for (int p = 0; p < 8; ++p)
    m2 += gauss_legendre([&](double x) { return h(x) * x * x; }, R * p / 8, R * (p + 1) / 8, 16);
  m2 *= 8 * kPi / 3;
  const double y0 = std::sqrt(4 * kPi), y2 = std::sqrt(4 * kPi / 5);
  // Y_l0 coefficient of d^2 F/d kappa^2 (0, 0)
  auto forcing = [&](int l, double r) {
    if (l == 0) return (2.0 / 3.0) * y0 * radial_potential(0, h, r, R) - (m2 / M) * y0 * (rs.u(r) - a);
    if (l == 2) return -(2.0 / 3.0) * y2 * radial_potential(2, h, r, R);
    return 0.0;
  };

  ShapeReport rep;
  rep.R = R;
  rep.order = 2;
  rep.upper_bound_xi2 = std::nan("");
  double scale = 0;
  for (int l = 0; l <= opts.l_max; l += 2) {
    const ModeOperator op = assemble_vp_mode(star, l, opts.n, opts.linop);
    if (l == 0) {
      rep.grid = op.grid;
      rep.sigma_min_l0 = kernel_margin(op).sigma;
    }
    Vec rhs(op.size());
    for (int i = 0; i < op.size(); ++i) rhs[i] = -0.5 * forcing(l, op.grid.nodes[i]);
    if (l == 0) scale = rhs.cwiseAbs().maxCoeff();
    if (rhs.cwiseAbs().maxCoeff() <= 1e-13 * scale) {
      rep.profiles[l] = Vec::Zero(op.size());
      rep.xi_l[l] = 0.0;
      continue;
    }
    const Vec xi = solve(op, rhs, opts.linop);
    // Nystrom trace at r = R: (U0'/r) xi = rhs + potential - mass term
    double rank = 0;
    if (l == 0) {
      double m = 0;
      for (int j = 0; j < op.size(); ++j) {
        const double s = op.grid.nodes[j];
        m += 4 * kPi * op.grid.weights[j] * op.density_slope[j] * s * s * xi[j];
      }
      rank = (rs.u(R) - a) / M * m;
    }
    rep.xi_l[l] = (R / upR) * (-0.5 * forcing(l, R) + mode_potential(op, xi, R) - rank);
    rep.profiles[l] = xi;
  }
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Nonlinear problem

RotatingOptions vp_rotating_options() {
  RotatingOptions o;
  o.clustering = 0.85;
  return o;
}

struct VlasovProblem::State : detail::PotentialState {
  double kappa = 0.0;
  double Mf = 1.0;
};

VlasovProblem::VlasovProblem(const VlasovStar& star, RotatingOptions opts) : star_(star), opts_(opts) {
  grid_ = std::make_shared<const detail::PotentialGrid>(star_.R(), opts_);
  u_.resize(grid_->n_r);
  for (int i = 0; i < grid_->n_r; ++i) u_[i] = star_.U0(grid_->grid.nodes[i]);
}

int VlasovProblem::size() const { return grid_->size(); }
int VlasovProblem::n_r() const { return grid_->n_r; }
int VlasovProblem::n_mu() const { return grid_->n_mu; }
const PanelGrid& VlasovProblem::radial() const { return grid_->grid; }
const std::vector<double>& VlasovProblem::mu() const { return grid_->mu; }

std::shared_ptr<const VlasovProblem::State> VlasovProblem::state(const Vec& q, double kappa) const {
  auto st = std::make_shared<State>();
  st->kappa = kappa;
  const VlasovStar& star = star_;
  const double R = star_.R();
  detail::build_state(
      *grid_, q,
      [&star, kappa, R](double s, double rc) {
        const WSample w = w_eval(*star.ansatz, kappa, rc, star.U0(std::min(s, R)));
        return detail::DensitySample{w.w, w.w_r, w.w_kappa};
      },
      *st);
  st->Mf = star_.M() / st->wsum;
  return st;
}

double VlasovProblem::mass_factor(const State& s) const { return s.Mf; }

Vec VlasovProblem::residual(const State& s) const {
  const int N = size(), n_mu = grid_->n_mu;
  const double a = star_.a();
  Vec F(N);
  for (int t = 0; t < N; ++t) F[t] = -u_[t / n_mu] + a + s.Mf * s.F1[t];
  return F;
}

Vec VlasovProblem::frechet_impl(const State& s, const Vec& dq, double dkappa, bool parallel) const {
  const detail::PotentialVariation v = detail::vary(*grid_, s, dq, dkappa, parallel);
  const double dMf = -s.Mf * v.dwsum / s.wsum;
  return dMf * s.F1 + s.Mf * v.dF1;
}

Vec VlasovProblem::frechet(const State& s, const Vec& dq) const {
  if (dq.size() != size()) throw DomainError("VlasovProblem: direction has the wrong size");
  return frechet_impl(s, dq, 0.0, true);
}

Vec VlasovProblem::kappa_derivative(const State& s) const {
  return frechet_impl(s, Vec::Zero(size()), 1.0, true);
}

Mat VlasovProblem::jacobian(const State& s) const {
  const int N = size();
  Mat J(N, N);
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t k) {
    Vec e = Vec::Zero(N);
    e[static_cast<int>(k)] = 1.0;
    J.col(static_cast<int>(k)) = frechet_impl(s, e, 0.0, false);
  });
  return J;
}

Vec VlasovProblem::sample(const DeformationField& zeta) const { return grid_->sample(zeta); }

DeformationField VlasovProblem::to_field(const Vec& q) const {
  return grid_->to_field(q, opts_.field_nr, opts_.field_ntheta);
}

double VlasovProblem::ratio_at(const Vec& q, double r, double theta) const {
  return grid_->ratio_at(q, r, theta);
}

double VlasovProblem::x_norm(const Vec& q) const { return to_field(q).x_norm(); }

Vec evaluate_vp_F(const VlasovProblem& prob, const DeformationField& zeta, double kappa) {
  return prob.residual(prob.sample(zeta), kappa);
}

Vec vp_frechet_apply(const VlasovProblem& prob, const DeformationField& zeta, double kappa,
                     const DeformationField& xi) {
  return prob.frechet(prob.sample(zeta), kappa, prob.sample(xi));
}

namespace {

class VlasovPoint : public detail::NewtonPoint {
 public:
  VlasovPoint(const VlasovProblem& p, const Vec& q, double kappa) : p_(p), s_(p.state(q, kappa)) {}
  Vec residual() const override { return p_.residual(*s_); }
  Mat jacobian() const override { return p_.jacobian(*s_); }
  Vec kappa_derivative() const override { return p_.kappa_derivative(*s_); }

 private:
  const VlasovProblem& p_;
  std::shared_ptr<const VlasovProblem::State> s_;
};

}  // namespace

ContinuationResult vp_newton(const VlasovProblem& prob, const std::vector<double>& kappa_targets) {
  const VlasovStar& st = prob.star();
  detail::NewtonModel model;
  model.size = prob.size();
  model.scale = std::max(1.0, std::abs(st.a()));
  model.mass = st.M();
  model.opts = prob.options();
  model.at = [&prob](const Vec& q, double kappa) { return std::make_unique<VlasovPoint>(prob, q, kappa); };
  model.x_norm = [&prob](const Vec& q) { return prob.x_norm(q); };
  model.package = [&prob, &st](const Vec& q, double kappa) {
    RotatingSolution sol;
    sol.kappa = kappa;
    sol.q = q;
    sol.zeta = prob.to_field(q);
    sol.x_norm = sol.zeta.x_norm();
    sol.mass_factor = prob.mass_factor(*prob.state(q, kappa));
    const DilationMap map(sol.zeta, prob.options().cap);
    const VlasovAnsatz& f = *st.ansatz;
    sol.mass_check =
        sol.mass_factor * deformed_mass(
                              map,
                              [&](double r0, double y, double th) {
                                return w_eval(f, kappa, y * std::sin(th), st.U0(r0)).w;
                              },
                              st.R());
    sol.R_eq = st.R() * (1 + prob.ratio_at(q, st.R(), kPi / 2));
    sol.R_pole = st.R() * (1 + prob.ratio_at(q, st.R(), 0.0));
    return sol;
  };
  return detail::continue_in_kappa(model, kappa_targets);
}

}  // namespace rotstar
