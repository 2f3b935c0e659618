#ifndef ROTSTAR_SRC_DEFORMED_POTENTIAL_HPP
#define ROTSTAR_SRC_DEFORMED_POTENTIAL_HPP

// Nystrom evaluation of int W(y) [1/|g(x) - y| - 1/|y|] dy over a deformed ball, pulled back to
// B_R, together with its variation in the deformation and the rotation parameter. Shared by the
// Euler-Poisson and Vlasov-Poisson solvers.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rotstar/dilation.hpp"
#include "rotstar/numerics.hpp"
#include "rotstar/rotating.hpp"

namespace rotstar::detail {

// Source density at pulled-back radius s whose image has cylindrical radius rc.
struct DensitySample {
  double w = 0.0;
  double w_rc = 0.0;     // d w / d rc
  double w_kappa = 0.0;  // d w / d kappa
};
using SourceDensity = std::function<DensitySample(double s, double rc)>;

struct PotentialGrid {
  PotentialGrid(double R, const RotatingOptions& opts);

  double R = 0.0;
  int order = 0, split_order = 0, km = 0;  // km = l_max / 2
  PanelGrid grid;
  int n_r = 0, n_mu = 0;
  std::vector<double> mu, mu_w, sin_th;
  std::vector<Mat> diff;  // per-panel differentiation at the panel nodes
  Mat pl_mu;              // P_{2k}(mu_j)

  int size() const { return n_r * n_mu; }
  double ratio_at(const Vec& q, double r, double theta) const;
  Vec sample(const DeformationField& zeta) const;
  DeformationField to_field(const Vec& q, int n_r_field, int n_theta_field) const;
};

struct SplitPanel {
  int panel = -1;  // -1: every source lies below the target radius
  std::vector<double> s, geom;  // sub-nodes and 4 pi w_mu w s^2
  Mat L, dL;  // Lagrange basis and derivative at the sub-nodes
  std::vector<double> a, b, D, rg;
  std::vector<DensitySample> dens;
};

struct PotentialState {
  Vec q, qr, a, b, D, rg, geom, W;
  std::vector<DensitySample> dens;
  double wsum = 0.0, phi0_origin = 0.0;
  Vec T;   // |g(x)| at the targets
  Vec F1;  // sum W [1/|g(x) - y| - 1/|y|]
  Mat phi, dphi;  // mode sums and their derivative in T, target x mode
  std::vector<SplitPanel> split;  // target * n_mu + source angle
};

// Throws SolverError("fold: ...") when det Dg is not positive at a node.
void build_state(const PotentialGrid& g, const Vec& q, const SourceDensity& dens, PotentialState& s);

struct PotentialVariation {
  Vec dF1;
  double dwsum = 0.0;
};

// Directional derivative along (dq, dkappa).
PotentialVariation vary(const PotentialGrid& g, const PotentialState& s, const Vec& dq, double dkappa,
                        bool parallel);

// Damped Newton continuation in kappa with tangent prediction and step halving.
class NewtonPoint {
 public:
  virtual ~NewtonPoint() = default;
  virtual Vec residual() const = 0;
  virtual Mat jacobian() const = 0;
  virtual Vec kappa_derivative() const = 0;
};

struct NewtonModel {
  int size = 0;
  double scale = 1.0;  // residual tolerance is tol * scale
  double mass = 0.0;
  RotatingOptions opts;
  std::function<std::unique_ptr<NewtonPoint>(const Vec& q, double kappa)> at;
  std::function<double(const Vec& q)> x_norm;
  // fills everything except the Newton bookkeeping
  std::function<RotatingSolution(const Vec& q, double kappa)> package;
};

ContinuationResult continue_in_kappa(const NewtonModel& model, const std::vector<double>& kappa_targets);

}  // namespace rotstar::detail

#endif
