#ifndef ROTSTAR_VLASOV_HPP
#define ROTSTAR_VLASOV_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rotstar/dilation.hpp"
#include "rotstar/linop.hpp"
#include "rotstar/radial.hpp"
#include "rotstar/rotating.hpp"

namespace rotstar {

// Microscopic ansatz phi(E, L) = (-E)_+^{-mu} reg(E, L). For the polytropic family reg = psi(L),
// an even polynomial sum_k c_k L^{2k}.
class VlasovAnsatz {
 public:
  using Fn = std::function<double(double E, double L)>;

  static VlasovAnsatz polytropic(double mu, std::vector<double> psi_even = {1.0});
  static VlasovAnsatz constant(double mu) { return polytropic(mu, {1.0}); }
  static VlasovAnsatz quadratic(double mu, double c) { return polytropic(mu, {1.0, c}); }
  // reg must be smooth up to E = 0 and come with its first two L-derivatives.
  static VlasovAnsatz custom(double mu, Fn reg, Fn reg_L, Fn reg_LL, std::string name = "custom");

  double mu() const { return mu_; }
  const std::string& name() const { return name_; }
  bool polynomial() const { return !coeffs_.empty(); }
  const std::vector<double>& psi_coefficients() const { return coeffs_; }

  double phi(double E, double L) const;
  double reg(double E, double L) const { return reg_(E, L); }
  double reg_L(double E, double L) const { return reg_L_(E, L); }
  double reg_LL(double E, double L) const { return reg_LL_(E, L); }

  // -7/2 < mu < 1/2
  bool admissible() const { return mu_ > -3.5 && mu_ < 0.5; }
  // exponent of the barotropic law with the same density-potential relation
  double polytropic_gamma() const { return 1 + 1 / (1.5 - mu_); }

 private:
  VlasovAnsatz() = default;
  double mu_ = 0.0;
  std::string name_;
  std::vector<double> coeffs_;
  Fn reg_, reg_L_, reg_LL_;
};

// G(u) = w(0, 0, u). Closed form for the polytropic family, quadrature otherwise.
double G_of_u(const VlasovAnsatz& f, double u);
double dG_of_u(const VlasovAnsatz& f, double u);
// E = -u t with Gauss-Jacobi weights t^{-mu} (1 - t)^{1/2}.
double G_quadrature(const VlasovAnsatz& f, double u, int n = 24);

struct WSample {
  double w = 0.0;
  double w_r = 0.0;
  double w_u = 0.0;
  double w_kappa = 0.0;
};

// w(kappa, r, u) = 2 pi int_{-u}^0 int_{-sqrt(2(E+u))}^{sqrt(2(E+u))} phi(E, kappa r s) ds dE and its
// partial derivatives. Closed form for the polytropic family, nested quadrature otherwise.
WSample w_eval(const VlasovAnsatz& f, double kappa, double r, double u);
WSample w_quadrature(const VlasovAnsatz& f, double kappa, double r, double u, int n_E = 24, int n_s = 24);
// d^2 w / d kappa^2 at kappa = 0, by quadrature of d_L^2 phi(E, 0).
double w_kappa2_at_zero(const VlasovAnsatz& f, double r, double u, int n_E = 24);

struct WRegularity {
  double C_r = 0.0;    // max |d_r w| / r
  double C_lip = 0.0;  // max |w1 - w2| / (|kappa1 - kappa2| r + |u1 - u2|)
  double nu = 0.0;     // fitted Hoelder exponent of d_u w at u -> 0
};
// Sampled on [-kappa_max, kappa_max] x (0, r_max] x (0, u_max].
WRegularity w_regularity(const VlasovAnsatz& f, double kappa_max, double r_max, double u_max, int samples = 2000,
                         unsigned seed = 11);

// Radial solution of -Delta U0 = 4 pi G(U0), U0(0) = a. The harmonic continuation
// U0(r) = U0'(R) R (1 - R/r) beyond R is what RadialStar::u returns there.
struct VlasovStar {
  std::shared_ptr<const VlasovAnsatz> ansatz;
  RadialStar radial;

  double a() const { return radial.a; }
  double R() const { return radial.R; }
  double M() const { return radial.mass; }
  double U0(double r) const { return radial.u(r); }
  double U0p(double r) const { return radial.up(r); }
  double rho0(double r) const { return radial.rho(r); }
  // |R^2 U0'(R) + M| / M
  double flux_residual() const;
};

VlasovStar solve_vp_radial(const VlasovAnsatz& f, double a, const RadialOptions& opts = {});

// v_S = dv/dS of v'' + (2/r) v' + 4 pi S G(v) = 0 at S = 1, and the rescaling identities.
struct ScalingIdentity {
  std::vector<double> r;
  Vec v_S, v_S_prime;
  double interior_residual = 0.0;  // max |r U0' - 2 v_S|
  double boundary_residual = 0.0;  // |2 v_S'(R) + U0'(R)|
};
ScalingIdentity scaling_identity(const VlasovStar& star, int samples = 401);

// Mode operator with the mass term (U0(r) - U0(0))/M int rho0'(|y|)/|y| xi dy.
ModeOperator assemble_vp_mode(const VlasovStar& star, int l, int n, const LinopOptions& opts = {});

// Leading rotational response. d F/d kappa (0, 0) vanishes when d_L phi(E, 0) = 0, so the
// response is xi = -(1/2) L^{-1} d^2 F/d kappa^2 (0, 0) and the report has order 2.
ShapeReport vp_rotation_response(const VlasovStar& star, const ShapeOptions& opts = {});

// RotatingOptions with panels pulled harder towards r = R, where rho0 ~ (R - r)^{3/2 - mu}.
RotatingOptions vp_rotating_options();

// Discretized F(zeta, kappa) = -U0 + U0(0) + (M/D) int w(kappa, r(y), U0(g^{-1} y)) [1/|g(x)-y| - 1/|y|] dy
// on the same Nystrom unknowns as RotatingProblem.
class VlasovProblem {
 public:
  explicit VlasovProblem(const VlasovStar& star, RotatingOptions opts = vp_rotating_options());

  int size() const;
  int n_r() const;
  int n_mu() const;
  const PanelGrid& radial() const;
  const std::vector<double>& mu() const;
  const VlasovStar& star() const { return star_; }
  const RotatingOptions& options() const { return opts_; }

  struct State;
  std::shared_ptr<const State> state(const Vec& q, double kappa) const;

  Vec residual(const State& s) const;
  Vec frechet(const State& s, const Vec& dq) const;
  Mat jacobian(const State& s) const;
  Vec kappa_derivative(const State& s) const;
  double mass_factor(const State& s) const;  // M / D(kappa, U0 o g^{-1})

  Vec residual(const Vec& q, double kappa) const { return residual(*state(q, kappa)); }
  Vec frechet(const Vec& q, double kappa, const Vec& dq) const { return frechet(*state(q, kappa), dq); }

  Vec sample(const DeformationField& zeta) const;
  DeformationField to_field(const Vec& q) const;
  double ratio_at(const Vec& q, double r, double theta) const;
  double x_norm(const Vec& q) const;

 private:
  Vec frechet_impl(const State& s, const Vec& dq, double dkappa, bool parallel) const;

  VlasovStar star_;
  RotatingOptions opts_;
  std::shared_ptr<const detail::PotentialGrid> grid_;
  std::vector<double> u_;  // U0 at radial nodes
};

Vec evaluate_vp_F(const VlasovProblem& prob, const DeformationField& zeta, double kappa);
Vec vp_frechet_apply(const VlasovProblem& prob, const DeformationField& zeta, double kappa,
                     const DeformationField& xi);

// Same continuation as newton_continue; mass_check integrates (M/D) w over the deformed star.
ContinuationResult vp_newton(const VlasovProblem& prob, const std::vector<double>& kappa_targets);

}  // namespace rotstar

#endif
