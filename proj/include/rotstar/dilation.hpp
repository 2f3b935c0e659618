#ifndef ROTSTAR_DILATION_HPP
#define ROTSTAR_DILATION_HPP

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rotstar/numerics.hpp"
#include "rotstar/radial.hpp"

namespace rotstar {

using Point = Eigen::Vector3d;

// Cap on the X-norm for all map operations.
inline constexpr double kDeformationCap = 0.1;

struct RatioSample {
  double q = 0.0;      // zeta/|x|^2
  double q_r = 0.0;
  double q_theta = 0.0;
};

// Axisymmetric, x3-even scalar field zeta on {0 <= r <= R_dom, 0 <= theta <= pi/2}.
// Stored as q = zeta/r^2 with tensor cubic splines: not-a-knot in r, zero end slopes in theta.
class DeformationField {
 public:
  DeformationField();  // zero field on the unit ball, 128 x 64 nodes

  // zeta(r, theta) sampled on a uniform grid; q at r = 0 from the quadratic Taylor coefficient.
  static DeformationField from_zeta(const std::function<double(double, double)>& zeta, double R_dom,
                                    int n_r = 128, int n_theta = 64);
  static DeformationField from_ratio(const std::function<double(double, double)>& q, double R_dom,
                                     int n_r = 128, int n_theta = 64);
  static DeformationField zero(double R_dom, int n_r = 128, int n_theta = 64);

  double R_dom() const { return r_.back(); }
  const std::vector<double>& r_nodes() const { return r_; }
  const std::vector<double>& theta_nodes() const { return th_; }
  const Mat& ratio_values() const { return q_; }  // n_r x n_theta
  Mat zeta_values() const;

  // theta anywhere in [0, pi]; r in [0, R_dom].
  RatioSample ratio(double r, double theta) const;
  double zeta(double r, double theta) const;
  double zeta(const Point& x) const;

  // sup |grad zeta|/|x| over the grid nodes.
  double x_norm() const;

  DeformationField operator+(const DeformationField& o) const;
  DeformationField operator*(double c) const;

  std::string header_json() const;
  void write_csv(std::ostream& os) const;

 private:
  friend DeformationField extend(const DeformationField& zeta);
  DeformationField(std::vector<double> r, std::vector<double> th, Mat q);
  void build();

  std::vector<double> r_, th_;
  Mat q_, qr_, qt_, qrt_;
};

// Higher-order reflection across r = R with a smooth cutoff; result lives on B_{2R} and keeps
// the original nodes. Linear in zeta; vanishes for r >= 2R.
DeformationField extend(const DeformationField& zeta);

class DilationMap {
 public:
  explicit DilationMap(DeformationField zeta, double cap = kDeformationCap);

  const DeformationField& field() const { return zeta_; }
  double norm() const { return norm_; }

  Point apply(const Point& x) const;
  Point invert(const Point& y) const;
  // radial coordinate along a ray: |g(x)| for |x| = r, and its inverse
  double apply_radius(double r, double theta) const;
  double invert_radius(double rho, double theta) const;

  // det Dg = (1+q)^2 (1+q+r q_r); throws "fold" when non-positive.
  double jacobian_det(double r, double theta) const;
  double jacobian_det(const Point& x) const;

 private:
  DeformationField zeta_;
  double norm_ = 0.0;
};

// M / int_{B_R} rho0 det Dg dx.
double mass_factor(const DilationMap& map, const std::function<double(double)>& rho, double mass,
                   double R);
double mass_factor(const DilationMap& map, const RadialStar& star);

// int rho0(g^{-1}(y)) dy over g(B_R), integrated along rays in the deformed frame.
double deformed_mass(const DilationMap& map, const std::function<double(double)>& rho, double R);
// Density that also sees the image point: rho(|g^{-1}(y)|, |y|, theta).
double deformed_mass(const DilationMap& map, const std::function<double(double, double, double)>& rho,
                     double R);

// mass_factor * deformed_mass
double eulerian_mass(const DilationMap& map, const std::function<double(double)>& rho, double mass,
                     double R);

struct LipschitzFit {
  double constant = 0.0;  // max |(g(x)-g(x')) - (x-x')| / (|zeta|_X |x-x'|)
  int pairs = 0;
};
LipschitzFit fit_lipschitz(const DilationMap& map, int pairs = 10000, unsigned seed = 7);

}  // namespace rotstar

#endif
