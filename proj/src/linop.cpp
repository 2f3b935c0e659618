#include "rotstar/linop.hpp"

#include <cmath>
#include <sstream>

#include "rotstar/errors.hpp"

namespace rotstar {

namespace {

constexpr int kMomentNodes = 32;

// int_{lo}^{hi} L_j(s) s^k ds for the Lagrange basis of the panel nodes x[0..m)
void lagrange_moments(const double* x, int m, double lo, double hi, double k, double* out) {
  for (int j = 0; j < m; ++j) out[j] = 0.0;
  if (!(hi > lo)) return;
  const GaussRule& g = gauss_rule(kMomentNodes);
  const double c = 0.5 * (lo + hi), d = 0.5 * (hi - lo);
  std::vector<double> basis(m);
  for (int q = 0; q < kMomentNodes; ++q) {
    const double s = c + d * g.x[q];
    lagrange_basis(x, m, s, basis.data());
    const double wk = d * g.w[q] * std::pow(s, k);
    for (int j = 0; j < m; ++j) out[j] += wk * basis[j];
  }
}

// Weights c_j such that sum_j c_j g(s_j) approximates int_0^r g(s) s^k ds (below) or
// int_r^R g(s) s^k ds (above), for r inside panel p.
void cumulative_rows(const PanelGrid& grid, double r, double k_below, double k_above,
                     Eigen::Ref<Eigen::RowVectorXd> below, Eigen::Ref<Eigen::RowVectorXd> above) {
  const int m = grid.order;
  const int p = grid.panel_of(r);
  below.setZero();
  above.setZero();
  for (int q = 0; q < grid.panels(); ++q) {
    for (int j = 0; j < m; ++j) {
      const int idx = q * m + j;
      const double s = grid.nodes[idx], w = grid.weights[idx];
      if (q < p) below[idx] = w * std::pow(s, k_below);
      if (q > p) above[idx] = w * std::pow(s, k_above);
    }
  }
  std::vector<double> tmp(m);
  const double* xs = grid.nodes.data() + p * m;
  lagrange_moments(xs, m, grid.breaks[p], r, k_below, tmp.data());
  for (int j = 0; j < m; ++j) below[p * m + j] += tmp[j];
  lagrange_moments(xs, m, r, grid.breaks[p + 1], k_above, tmp.data());
  for (int j = 0; j < m; ++j) above[p * m + j] += tmp[j];
}

// Row of the potential integral at radius r acting on g = (rho0'/s) xi at the nodes.
Eigen::RowVectorXd potential_row(const PanelGrid& grid, int l, double r) {
  const int n = grid.size();
  Eigen::RowVectorXd below(n), above(n), row(n);
  if (r >= grid.breaks.back()) {
    // all sources inside r
    for (int j = 0; j < n; ++j) {
      const double s = grid.nodes[j], w = grid.weights[j];
      if (l == 0) {
        row[j] = w * (s * s / r - s);
      } else {
        row[j] = w * std::pow(s, l + 2) / std::pow(r, l + 1);
      }
    }
    return (4 * kPi / (2 * l + 1)) * row;
  }
  if (l == 0) {
    Eigen::RowVectorXd b1(n), a1(n);
    cumulative_rows(grid, r, 2.0, 0.0, below, above);
    cumulative_rows(grid, r, 1.0, 0.0, b1, a1);
    row = below / r - b1;
  } else {
    cumulative_rows(grid, r, l + 2.0, 1.0 - l, below, above);
    row = below / std::pow(r, l + 1) + above * std::pow(r, l);
  }
  return (4 * kPi / (2 * l + 1)) * row;
}

}  // namespace

ModeOperator assemble_mode_profiles(const PanelGrid& grid, int l, const Vec& diagonal,
                                    const Vec& density_slope, const Vec& rank_coeff, double mass,
                                    double R) {
  if (l < 0) throw DomainError("assemble_mode: l must be nonnegative");
  const int n = grid.size();
  ModeOperator op;
  op.l = l;
  op.R = R;
  op.mass = mass;
  op.grid = grid;
  op.diagonal = diagonal;
  op.density_slope = density_slope;
  op.rank_one = (l == 0) ? rank_coeff : Vec::Zero(n);
  op.matrix = Mat::Zero(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
    const int i = static_cast<int>(ii);
    const Eigen::RowVectorXd row = potential_row(grid, l, grid.nodes[i]);
    op.matrix.row(i) = -row.cwiseProduct(density_slope.transpose());
    op.matrix(i, i) += diagonal[i];
  });
  if (l == 0) {
    // (c(r)/M) * 4 pi int rho0'(s)/s xi(s) s^2 ds
    Eigen::RowVectorXd mass_row(n);
    for (int j = 0; j < n; ++j) {
      const double s = grid.nodes[j];
      mass_row[j] = 4 * kPi * grid.weights[j] * density_slope[j] * s * s;
    }
    op.matrix += (rank_coeff / mass) * mass_row;
  }
  if (!op.matrix.allFinite()) throw SolverError("assemble_mode: non-finite operator entries");
  return op;
}

ModeOperator assemble_mode(const RadialStar& star, int l, int n, const LinopOptions& opts) {
  if (l < 0) throw DomainError("assemble_mode: l must be nonnegative");
  if (n < 64) throw DomainError("assemble_mode: need n >= 64");
  if (!star.eos) throw DomainError("assemble_mode: star has no equation of state");
  const int order = opts.panel_order;
  const int panels = (n + order - 1) / order;
  const PanelGrid grid = clustered_panels(0.0, star.R, panels, order, opts.clustering);
  const int m = grid.size();
  Vec diag(m), slope(m), rank(m);
  const EquationOfState& eos = *star.eos;
  const double k0 = eos.k(star.rho(0.0));
  for (int i = 0; i < m; ++i) {
    const double r = grid.nodes[i];
    diag[i] = star.up(r) / r;
    slope[i] = star.drho_over_r(r);
    rank[i] = eos.k(star.rho(r)) - k0;
  }
  ModeOperator op = assemble_mode_profiles(grid, l, diag, slope, rank, star.mass, star.R);
  std::ostringstream lab;
  lab << "ep " << eos.name() << " l=" << l;
  op.label = lab.str();
  return op;
}

Vec apply(const ModeOperator& op, const Vec& xi) {
  if (xi.size() != op.size()) throw DomainError("apply: grid mismatch");
  return op.matrix * xi;
}

double mode_potential(const ModeOperator& op, const Vec& xi, double r) {
  if (xi.size() != op.size()) throw DomainError("mode_potential: grid mismatch");
  const Eigen::RowVectorXd row = potential_row(op.grid, op.l, r);
  return row.dot(op.density_slope.cwiseProduct(xi));
}

double weighted_norm(const ModeOperator& op, const Vec& v) {
  return std::sqrt((op.grid.weights.array() * v.array().square()).sum());
}

SingularPair kernel_margin(const ModeOperator& op) {
  const Vec sw = op.grid.weights.array().sqrt();
  const Mat scaled = sw.asDiagonal() * op.matrix * sw.cwiseInverse().asDiagonal();
  return smallest_singular_value(scaled);
}

Vec solve(const ModeOperator& op, const Vec& rhs, const LinopOptions& opts) {
  if (rhs.size() != op.size()) throw DomainError("solve: grid mismatch");
  const SingularPair sp = kernel_margin(op);
  if (sp.sigma < opts.floor) {
    std::ostringstream m;
    m << "degenerate operator (mass condition violated?): sigma_min = " << sp.sigma
      << " below floor " << opts.floor << " for " << op.label;
    throw DegenerateOperator(m.str());
  }
  const Vec xi = lu_solve(op.matrix, rhs);
  const double res = (op.matrix * xi - rhs).norm();
  if (res > 1e-10 * std::max(rhs.norm(), 1e-300)) {
    std::ostringstream m;
    m << "solve: residual " << res << " exceeds tolerance";
    throw SolverError(m.str());
  }
  return xi;
}

Vec kernel_witness(const RadialStar& star, const ModeOperator& op) {
  if (!star.eos) throw DomainError("kernel_witness: star has no equation of state");
  const EquationOfState& eos = *star.eos;
  const double c = 1.0 / eos.dpressure(star.rho(0.0));
  Vec xi(op.size());
  for (int i = 0; i < op.size(); ++i) {
    const double r = op.grid.nodes[i];
    const double alpha = star.va(r) - c * (star.u(r) - eos.k(star.rho(r)));
    xi[i] = r / star.up(r) * alpha;
  }
  return xi;
}

}  // namespace rotstar
