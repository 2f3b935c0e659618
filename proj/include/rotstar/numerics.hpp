#ifndef ROTSTAR_NUMERICS_HPP
#define ROTSTAR_NUMERICS_HPP

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "rotstar/errors.hpp"

namespace rotstar {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------- ODE

using OdeRhs = std::function<void(double r, const Vec& y, Vec& dydr)>;
// Stop when the returned value first becomes <= 0.
using EventFn = std::function<double(double r, const Vec& y)>;

struct OdeOptions {
  double rtol = 1e-11;
  double atol = 1e-13;
  double h_init = 0.0;       // 0: pick from the local scale
  double h_min_rel = 1e-14;  // underflow threshold relative to max(1, |r|)
  double event_tol = 1e-13;  // absolute bracketing width for the event abscissa
  std::size_t max_steps = 2000000;
};

// Dormand-Prince 5(4) trajectory with continuous extension.
class Trajectory {
 public:
  double r_begin() const { return r_.front(); }
  double r_end() const { return r_.back(); }
  std::size_t steps() const { return r_.size() - 1; }
  const std::vector<double>& knots() const { return r_; }
  const Vec& state_at_knot(std::size_t i) const { return y_[i]; }

  Vec operator()(double r) const;

  bool has_event = false;
  double r_event = std::numeric_limits<double>::quiet_NaN();
  Vec y_event;

 private:
  friend Trajectory integrate_ivp(const OdeRhs&, const Vec&, double, double, const EventFn&,
                                  const OdeOptions&);
  std::vector<double> r_;
  std::vector<Vec> y_;
  std::vector<std::array<Vec, 5>> cont_;
};

// Integrates from r0 towards r_end. With a stop function, r_end acts as r_max and
// reaching it without a sign change is an error.
Trajectory integrate_ivp(const OdeRhs& rhs, const Vec& y0, double r0, double r_end,
                         const EventFn& stop = {}, const OdeOptions& opts = {});

// ---------------------------------------------------------- quadrature

struct GaussRule {
  std::vector<double> x;  // nodes on [-1, 1], increasing
  std::vector<double> w;
};

// Cached n-point Gauss-Legendre rule.
const GaussRule& gauss_rule(int n);

// Cached n-point Gauss-Jacobi rule for the weight (1 - x)^alpha (1 + x)^beta on [-1, 1],
// alpha, beta > -1. Golub-Welsch.
const GaussRule& gauss_jacobi_rule(int n, double alpha, double beta);

template <class Scalar = double, class F>
Scalar gauss_legendre(F&& f, Scalar a, Scalar b, int n) {
  if (n < 1) throw DomainError("gauss_legendre: need n >= 1");
  const GaussRule& g = gauss_rule(n);
  const Scalar c = (b + a) / 2, d = (b - a) / 2;
  Scalar sum = 0;
  for (int i = 0; i < n; ++i) {
    const Scalar x = c + d * Scalar(g.x[i]);
    const Scalar fx = f(x);
    if (!std::isfinite(static_cast<double>(fx))) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "gauss_legendre: non-finite integrand at x = " << static_cast<double>(x);
      throw SolverError(msg.str());
    }
    sum += Scalar(g.w[i]) * fx;
  }
  return d * sum;
}

// Composite Gauss-Legendre nodes on [a, b] with panels refined towards both ends.
struct PanelGrid {
  std::vector<double> breaks;  // n_panels + 1 endpoints
  int order = 0;               // nodes per panel
  Vec nodes;
  Vec weights;

  int panels() const { return static_cast<int>(breaks.size()) - 1; }
  int size() const { return static_cast<int>(nodes.size()); }
  int panel_of(double r) const;
};

// clustering in [0, 1): 0 gives uniform panels, values near 1 shrink the end panels.
PanelGrid clustered_panels(double a, double b, int n_panels, int order, double clustering = 0.8);

// Barycentric Lagrange weights of the points x[0..m) evaluated at t.
void lagrange_basis(const double* x, int m, double t, double* out);
// Derivative of the Lagrange basis at t.
void lagrange_basis_derivative(const double* x, int m, double t, double* out);

// ----------------------------------------------------- harmonic helpers

template <class Scalar = double>
Scalar legendre_P(int l, Scalar x) {
  if (l < 0) throw DomainError("legendre_P: l must be nonnegative");
  if (l == 0) return Scalar(1);
  Scalar p0 = 1, p1 = x;
  for (int k = 2; k <= l; ++k) {
    const Scalar p2 = (Scalar(2 * k - 1) * x * p1 - Scalar(k - 1) * p0) / Scalar(k);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// Values P_0..P_lmax at x.
void legendre_table(int lmax, double x, double* out);

// Axisymmetric spherical harmonic Y_l0 at polar angle theta.
template <class Scalar = double>
Scalar harmonic_Y(int l, Scalar theta) {
  using std::cos;
  using std::sqrt;
  return sqrt(Scalar(2 * l + 1) / (Scalar(4) * Scalar(kPi))) * legendre_P(l, cos(theta));
}

// -------------------------------------------------------- dense algebra

struct SingularPair {
  double sigma = 0.0;
  Vec vector;  // right singular vector, unit length
};

SingularPair smallest_singular_value(const Mat& a);

// LU with partial pivoting.
Vec lu_solve(const Mat& a, const Vec& b);

bool all_finite(const Mat& a);

// ------------------------------------------------------------ threads

void set_thread_count(int n);
int thread_count();
// Runs body(i) for i in [0, n). Deterministic: each index is independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rotstar

#endif
