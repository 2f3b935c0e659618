#ifndef ROTSTAR_LINOP_HPP
#define ROTSTAR_LINOP_HPP

#include <functional>
#include <string>

#include "rotstar/numerics.hpp"
#include "rotstar/radial.hpp"

namespace rotstar {

struct LinopOptions {
  int panel_order = 2;      // Gauss nodes per radial panel
  double clustering = 0.6;  // panel refinement towards r = 0 and r = R
  double floor = 1e-8;      // degeneracy threshold on the weighted sigma_min
};

// Restriction of the linearized operator to xi(x) = xi_l(r) Y_l0(theta), discretized by
// collocation at composite Gauss nodes with product integration across r = s.
struct ModeOperator {
  int l = 0;
  double R = 0.0;
  double mass = 0.0;
  PanelGrid grid;
  Mat matrix;
  Vec diagonal;  // u0'(r)/r at the nodes
  Vec density_slope;  // rho0'(r)/r at the nodes
  Vec rank_one;  // radial coefficient of the l = 0 mass term, zero for l >= 1
  std::string label;

  int size() const { return grid.size(); }
};

// Assembly from nodal profiles. rank_coeff multiplies (1/M) int rho0'(|y|)/|y| xi dy for l = 0.
ModeOperator assemble_mode_profiles(const PanelGrid& grid, int l, const Vec& diagonal,
                                    const Vec& density_slope, const Vec& rank_coeff, double mass,
                                    double R);

// Euler-Poisson mode operator; the mass term uses k(rho0(r)) - k(rho0(0)).
ModeOperator assemble_mode(const RadialStar& star, int l, int n, const LinopOptions& opts = {});

Vec apply(const ModeOperator& op, const Vec& xi);

// Nonlocal (potential) part of the operator at an arbitrary radius:
// (4 pi/(2l+1)) int K_l(r, s) rho0'(s)/s xi(s) s^2 ds, minus the 1/s monopole for l = 0.
double mode_potential(const ModeOperator& op, const Vec& xi, double r);

// Smallest singular value of W^{1/2} A W^{-1/2} with W the quadrature weights.
SingularPair kernel_margin(const ModeOperator& op);

// LU solve guarded by the degeneracy floor.
Vec solve(const ModeOperator& op, const Vec& rhs, const LinopOptions& opts = {});

// Quadrature-weighted L2 norm on the operator grid.
double weighted_norm(const ModeOperator& op, const Vec& v);

// Radial kernel element of the l = 0 block built from the variational solution v_a:
// xi = (r/u0') (v_a + C (u0 - k(rho0))), C fixed by xi(0) = 0. Nontrivial kernel for gamma = 4/3.
Vec kernel_witness(const RadialStar& star, const ModeOperator& op);

}  // namespace rotstar

#endif
