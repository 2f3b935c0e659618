#ifndef ROTSTAR_ROTATING_HPP
#define ROTSTAR_ROTATING_HPP

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rotstar/dilation.hpp"
#include "rotstar/eos.hpp"
#include "rotstar/linop.hpp"
#include "rotstar/radial.hpp"

namespace rotstar {

namespace detail {
struct PotentialGrid;
}

// J(r sin theta) and its axisymmetric harmonic coefficients.
struct CentrifugalField {
  RotationProfile profile;
  double R = 0.0;
  std::vector<double> r, theta;  // field grid, theta in [0, pi/2]
  Mat values;                    // J(r sin theta) on the grid

  double value(double r, double theta) const;
  // 2 pi int_{-1}^{1} J(r sqrt(1 - mu^2)) Y_l0(mu) dmu
  double mode(int l, double r) const;
};

CentrifugalField centrifugal_rhs(const RotationProfile& profile, const RadialStar& star, int n_r = 128,
                                 int n_theta = 64);

struct ShapeOptions {
  int l_max = 8;
  int n = 256;  // radial unknowns per mode
  LinopOptions linop;
};

struct ShapeReport {
  std::map<int, double> xi_l;          // xi_l(R), even l
  std::map<int, Vec> profiles;         // xi_l at the mode grid nodes
  PanelGrid grid;
  double R = 0.0;
  double upper_bound_xi2 = 0.0;        // (R/u0'(R)) (2/3) sqrt(pi/5) R^2, for constant rotation
  double sigma_min_l0 = 0.0;
  int order = 1;  // power of kappa multiplying xi

  double boundary_radius(double kappa, double theta) const;  // R + kappa^order sum_l xi_l(R) Y_l0 / R
  double equatorial_radius(double kappa) const { return boundary_radius(kappa, kPi / 2); }
  double polar_radius(double kappa) const { return boundary_radius(kappa, 0.0); }
  // (R_eq - R_pole)/kappa^order at leading order
  double oblateness_rate() const;
};

// xi = -L^{-1} dF/dkappa(0,0), mode by mode.
ShapeReport first_order_shape(const RadialStar& star, const RotationProfile& profile,
                              const ShapeOptions& opts = {});

struct RotatingOptions {
  int panels = 10;          // radial panels on [0, R]
  int order = 6;            // Gauss nodes per panel
  int n_mu = 6;             // angular nodes in (0, 1]
  int l_max = 8;            // even Legendre modes kept in the potential
  int split_order = 8;      // Gauss nodes on each side of a split panel
  double clustering = 0.5;
  double tol = 1e-8;        // sup-norm residual
  int max_iter = 8;         // Newton iterations before the kappa step halves
  int max_halvings = 6;
  double max_step = 0.05;   // largest kappa increment
  double cap = kDeformationCap;
  int field_nr = 128;
  int field_ntheta = 64;
};

// Discretized F(zeta, kappa) on B_R. Unknowns are q = zeta/r^2 at (radial node i, angular node j),
// flattened as i * n_mu + j.
class RotatingProblem {
 public:
  RotatingProblem(const RadialStar& star, RotationProfile profile, RotatingOptions opts = {});

  int size() const;
  int n_r() const;
  int n_mu() const;
  const PanelGrid& radial() const;
  const std::vector<double>& mu() const;
  const RadialStar& star() const { return star_; }
  const RotationProfile& profile() const { return profile_; }
  const RotatingOptions& options() const { return opts_; }

  // Linearization point: everything in F and F' that depends on q but not on the direction.
  struct State;
  std::shared_ptr<const State> state(const Vec& q) const;

  Vec residual(const State& s, double kappa) const;
  Vec frechet(const State& s, double kappa, const Vec& dq) const;
  Mat jacobian(const State& s, double kappa) const;
  double mass_factor(const State& s) const;

  Vec residual(const Vec& q, double kappa) const { return residual(*state(q), kappa); }
  Vec frechet(const Vec& q, double kappa, const Vec& dq) const { return frechet(*state(q), kappa, dq); }

  // dF/dkappa at q.
  Vec centrifugal(const Vec& q) const;

  Vec sample(const DeformationField& zeta) const;  // q at the nodes
  DeformationField to_field(const Vec& q) const;
  double ratio_at(const Vec& q, double r, double theta) const;
  double x_norm(const Vec& q) const;

 private:
  Vec frechet_impl(const State& s, double kappa, const Vec& dq, bool parallel) const;

  RadialStar star_;
  RotationProfile profile_;
  RotatingOptions opts_;
  std::shared_ptr<const detail::PotentialGrid> grid_;
  std::vector<double> rho_;  // rho0 at radial nodes
};

// Field-valued wrappers.
Vec evaluate_F(const RotatingProblem& prob, const DeformationField& zeta, double kappa);
Vec frechet_apply(const RotatingProblem& prob, const DeformationField& zeta, double kappa,
                  const DeformationField& xi);

struct RotatingSolution {
  double kappa = 0.0;
  Vec q;                    // nodal zeta/r^2
  DeformationField zeta;
  double mass_factor = 1.0;
  double mass_check = 0.0;  // int rho_kappa over the deformed star
  double residual = 0.0;
  int newton_iters = 0;
  std::vector<double> residual_history;
  double x_norm = 0.0;
  double R_eq = 0.0, R_pole = 0.0;
};

struct ContinuationResult {
  std::vector<RotatingSolution> solutions;
  bool complete = true;
  std::string stop_reason;  // empty when every target was reached
};

ContinuationResult newton_continue(const RotatingProblem& prob, const std::vector<double>& kappa_targets);

// Linearization of the discrete problem at q = q0: -F_q^{-1} F_kappa.
Vec first_order_nodal(const RotatingProblem& prob, const Vec& q0);

}  // namespace rotstar

#endif
