#include "deformed_potential.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rotstar/errors.hpp"

namespace rotstar::detail {

namespace {

constexpr double kFourPi = 4 * kPi;

// K_l(t, rho) for even l = 2k, k = 0..kmax, and its partial derivatives.
inline void kernels(double t, double rho, int kmax, double* K, double* dK_t, double* dK_rho) {
  const bool inside = t < rho;
  const double hi = inside ? rho : t, lo = inside ? t : rho;
  const double x = lo / hi, x2 = x * x;
  double k = 1.0 / hi;
  for (int m = 0; m <= kmax; ++m) {
    const int l = 2 * m;
    K[m] = k;
    if (inside) {
      if (dK_t) dK_t[m] = t > 0 ? l * k / t : 0.0;
      if (dK_rho) dK_rho[m] = -(l + 1) * k / rho;
    } else {
      if (dK_t) dK_t[m] = -(l + 1) * k / t;
      if (dK_rho) dK_rho[m] = l * k / rho;
    }
    k *= x2;
  }
}

}  // namespace

PotentialGrid::PotentialGrid(double R_, const RotatingOptions& o)
    : R(R_), order(o.order), split_order(o.split_order), km(o.l_max / 2) {
  if (o.l_max < 0 || o.l_max % 2 != 0) throw DomainError("rotating grid: l_max must be even");
  if (o.order < 2 || o.panels < 1 || o.n_mu < 1 || o.split_order < 1)
    throw DomainError("rotating grid: grid too small");
  grid = clustered_panels(0.0, R, o.panels, o.order, o.clustering);
  n_r = grid.size();
  n_mu = o.n_mu;
  const GaussRule& g = gauss_rule(2 * n_mu);
  for (int k = 0; k < 2 * n_mu; ++k) {
    if (g.x[k] > 0) {
      mu.push_back(g.x[k]);
      mu_w.push_back(g.w[k]);
      sin_th.push_back(std::sqrt(1 - g.x[k] * g.x[k]));
    }
  }
  const int m = order;
  diff.resize(grid.panels());
  std::vector<double> row(m);
  for (int p = 0; p < grid.panels(); ++p) {
    Mat d(m, m);
    const double* x = grid.nodes.data() + p * m;
    for (int i = 0; i < m; ++i) {
      lagrange_basis_derivative(x, m, x[i], row.data());
      for (int j = 0; j < m; ++j) d(i, j) = row[j];
    }
    diff[p] = d;
  }
  pl_mu.resize(km + 1, n_mu);
  for (int k = 0; k <= km; ++k)
    for (int j = 0; j < n_mu; ++j) pl_mu(k, j) = legendre_P(2 * k, mu[j]);
}

double PotentialGrid::ratio_at(const Vec& q, double r, double theta) const {
  if (q.size() != size()) throw DomainError("rotating grid: unknown vector has the wrong size");
  const int m = order;
  r = std::clamp(r, 0.0, R);
  const int p = grid.panel_of(r);
  std::vector<double> basis(m);
  lagrange_basis(grid.nodes.data() + p * m, m, r, basis.data());
  const double c = std::cos(theta);
  // even Legendre interpolation through the angular nodes
  double v = 0;
  for (int j = 0; j < n_mu; ++j) {
    double rad = 0;
    for (int k = 0; k < m; ++k) rad += basis[k] * q[(p * m + k) * n_mu + j];
    double wj = 0;
    for (int k = 0; k < n_mu; ++k) wj += (4 * k + 1) * mu_w[j] * legendre_P(2 * k, mu[j]) * legendre_P(2 * k, c);
    v += wj * rad;
  }
  return v;
}

Vec PotentialGrid::sample(const DeformationField& zeta) const {
  Vec q(size());
  for (int i = 0; i < n_r; ++i)
    for (int j = 0; j < n_mu; ++j) q[i * n_mu + j] = zeta.ratio(grid.nodes[i], std::acos(mu[j])).q;
  return q;
}

DeformationField PotentialGrid::to_field(const Vec& q, int n_r_field, int n_theta_field) const {
  return DeformationField::from_ratio([&](double r, double th) { return ratio_at(q, r, th); }, R, n_r_field,
                                      n_theta_field);
}

void build_state(const PotentialGrid& g, const Vec& q, const SourceDensity& dens, PotentialState& s) {
  const int N = g.size(), m = g.order, km = g.km, so = g.split_order, n_mu = g.n_mu;
  if (q.size() != N) throw DomainError("rotating grid: unknown vector has the wrong size");
  if (!q.allFinite()) throw SolverError("rotating grid: non-finite deformation");
  s.q = q;
  s.qr.resize(N);
  s.a.resize(N);
  s.b.resize(N);
  s.D.resize(N);
  s.rg.resize(N);
  s.geom.resize(N);
  s.W.resize(N);
  s.dens.assign(N, DensitySample{});
  for (int p = 0; p < g.grid.panels(); ++p) {
    for (int j = 0; j < n_mu; ++j) {
      for (int i = 0; i < m; ++i) {
        double d = 0;
        for (int k = 0; k < m; ++k) d += g.diff[p](i, k) * q[(p * m + k) * n_mu + j];
        s.qr[(p * m + i) * n_mu + j] = d;
      }
    }
  }
  for (int i = 0; i < g.n_r; ++i) {
    const double r = g.grid.nodes[i];
    for (int j = 0; j < n_mu; ++j) {
      const int id = i * n_mu + j;
      s.a[id] = 1 + q[id];
      s.b[id] = s.a[id] + r * s.qr[id];
      s.D[id] = s.a[id] * s.a[id] * s.b[id];
      if (!(s.D[id] > 0)) {
        std::ostringstream msg;
        msg << "fold: det Dg = " << s.D[id] << " at r = " << r << ", mu = " << g.mu[j];
        throw SolverError(msg.str());
      }
      s.rg[id] = r * s.a[id];
      s.geom[id] = kFourPi * g.mu_w[j] * g.grid.weights[i] * r * r;
      s.dens[id] = dens(r, s.rg[id] * g.sin_th[j]);
      s.W[id] = s.geom[id] * s.dens[id].w * s.D[id];
    }
  }
  s.wsum = s.W.sum();
  s.phi0_origin = (s.W.array() / s.rg.array()).sum();

  // deformed radius at the panel ends, per source angle
  const int P = g.grid.panels();
  Mat rg_lo(P, n_mu), rg_hi(P, n_mu);
  std::vector<double> bl(m), br(m);
  for (int p = 0; p < P; ++p) {
    const double* x = g.grid.nodes.data() + p * m;
    lagrange_basis(x, m, g.grid.breaks[p], bl.data());
    lagrange_basis(x, m, g.grid.breaks[p + 1], br.data());
    for (int j = 0; j < n_mu; ++j) {
      double ql = 0, qh = 0;
      for (int k = 0; k < m; ++k) {
        ql += bl[k] * q[(p * m + k) * n_mu + j];
        qh += br[k] * q[(p * m + k) * n_mu + j];
      }
      rg_lo(p, j) = g.grid.breaks[p] * (1 + ql);
      rg_hi(p, j) = g.grid.breaks[p + 1] * (1 + qh);
    }
  }

  s.T.resize(N);
  s.F1.resize(N);
  s.phi = Mat::Zero(N, km + 1);
  s.dphi = Mat::Zero(N, km + 1);
  s.split.assign(static_cast<std::size_t>(N) * n_mu, SplitPanel{});
  const GaussRule& gs = gauss_rule(so);

  parallel_for(static_cast<std::size_t>(N), [&](std::size_t tt) {
    const int t = static_cast<int>(tt);
    const int it = t / n_mu, jt = t % n_mu;
    const double T = g.grid.nodes[it] * s.a[t];
    s.T[t] = T;
    std::vector<double> K(km + 1), dKt(km + 1), basis(m), dbasis(m);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(km + 1), dacc = Eigen::VectorXd::Zero(km + 1);
    for (int j = 0; j < n_mu; ++j) {
      SplitPanel& sp = s.split[static_cast<std::size_t>(t) * n_mu + j];
      int kp = -1;
      for (int p = 0; p < P; ++p) {
        if (rg_hi(p, j) >= T) {
          kp = p;
          break;
        }
      }
      sp.panel = kp;
      if (kp >= 0) {
        // locate s* with s (1 + q(s)) = T inside the panel; the map is increasing
        const double* x = g.grid.nodes.data() + kp * m;
        auto rg_at = [&](double r) {
          lagrange_basis(x, m, r, basis.data());
          double qq = 0;
          for (int k = 0; k < m; ++k) qq += basis[k] * q[(kp * m + k) * n_mu + j];
          return r * (1 + qq);
        };
        double lo = g.grid.breaks[kp], hi = g.grid.breaks[kp + 1], sstar;
        if (rg_at(lo) >= T) {
          sstar = lo;
        } else {
          for (int iter = 0; iter < 200 && hi - lo > 1e-15 * hi; ++iter) {
            const double mid = 0.5 * (lo + hi);
            (rg_at(mid) < T ? lo : hi) = mid;
          }
          sstar = 0.5 * (lo + hi);
        }
        const double ends[3] = {g.grid.breaks[kp], sstar, g.grid.breaks[kp + 1]};
        sp.L.resize(2 * so, m);
        sp.dL.resize(2 * so, m);
        for (int side = 0; side < 2; ++side) {
          const double c = 0.5 * (ends[side] + ends[side + 1]), d = 0.5 * (ends[side + 1] - ends[side]);
          for (int k = 0; k < so; ++k) {
            const double r = c + d * gs.x[k];
            const int row = side * so + k;
            lagrange_basis(x, m, r, basis.data());
            lagrange_basis_derivative(x, m, r, dbasis.data());
            double qq = 0, qd = 0;
            for (int n = 0; n < m; ++n) {
              sp.L(row, n) = basis[n];
              sp.dL(row, n) = dbasis[n];
              qq += basis[n] * q[(kp * m + n) * n_mu + j];
              qd += dbasis[n] * q[(kp * m + n) * n_mu + j];
            }
            const double av = 1 + qq, bv = av + r * qd;
            sp.s.push_back(r);
            sp.geom.push_back(kFourPi * g.mu_w[j] * d * gs.w[k] * r * r);
            sp.a.push_back(av);
            sp.b.push_back(bv);
            sp.D.push_back(av * av * bv);
            sp.rg.push_back(r * av);
            sp.dens.push_back(dens(r, r * av * g.sin_th[j]));
          }
        }
      }
      // accumulate Phi_l(T) over this source angle
      for (int p = 0; p < P; ++p) {
        if (p == kp) {
          for (std::size_t k = 0; k < sp.s.size(); ++k) {
            kernels(T, sp.rg[k], km, K.data(), dKt.data(), nullptr);
            const double w = sp.geom[k] * sp.dens[k].w * sp.D[k];
            for (int l = 0; l <= km; ++l) {
              acc[l] += w * g.pl_mu(l, j) * K[l];
              dacc[l] += w * g.pl_mu(l, j) * dKt[l];
            }
          }
        } else {
          for (int i = p * m; i < (p + 1) * m; ++i) {
            const int id = i * n_mu + j;
            kernels(T, s.rg[id], km, K.data(), dKt.data(), nullptr);
            for (int l = 0; l <= km; ++l) {
              acc[l] += s.W[id] * g.pl_mu(l, j) * K[l];
              dacc[l] += s.W[id] * g.pl_mu(l, j) * dKt[l];
            }
          }
        }
      }
    }
    double f1 = -s.phi0_origin;
    for (int l = 0; l <= km; ++l) {
      s.phi(t, l) = acc[l];
      s.dphi(t, l) = dacc[l];
      f1 += g.pl_mu(l, jt) * acc[l];
    }
    s.F1[t] = f1;
  });
}

PotentialVariation vary(const PotentialGrid& g, const PotentialState& s, const Vec& dq, double dkappa,
                        bool parallel) {
  const int N = g.size(), m = g.order, km = g.km, P = g.grid.panels(), n_mu = g.n_mu;
  if (dq.size() != N) throw DomainError("rotating grid: direction has the wrong size");

  // per-node variations; blocks are (panel, source angle)
  std::vector<char> active(static_cast<std::size_t>(P) * n_mu, 0);
  Vec dW = Vec::Zero(N), drg = Vec::Zero(N);
  for (int p = 0; p < P; ++p) {
    for (int j = 0; j < n_mu; ++j) {
      bool any = dkappa != 0.0;
      for (int i = 0; i < m; ++i) any = any || dq[(p * m + i) * n_mu + j] != 0.0;
      if (!any) continue;
      active[p * n_mu + j] = 1;
      for (int i = 0; i < m; ++i) {
        const int id = (p * m + i) * n_mu + j;
        double dqr = 0;
        for (int k = 0; k < m; ++k) dqr += g.diff[p](i, k) * dq[(p * m + k) * n_mu + j];
        const double r = g.grid.nodes[p * m + i];
        const double da = dq[id], db = dq[id] + r * dqr;
        const double dD = 2 * s.a[id] * da * s.b[id] + s.a[id] * s.a[id] * db;
        const DensitySample& ds = s.dens[id];
        drg[id] = r * dq[id];
        const double dw = ds.w_rc * drg[id] * g.sin_th[j] + ds.w_kappa * dkappa;
        dW[id] = s.geom[id] * (ds.w * dD + s.D[id] * dw);
      }
    }
  }
  PotentialVariation out;
  out.dwsum = dW.sum();
  double dphi0 = 0;
  for (int id = 0; id < N; ++id) {
    if (dW[id] != 0.0 || drg[id] != 0.0)
      dphi0 += dW[id] / s.rg[id] - s.W[id] * drg[id] / (s.rg[id] * s.rg[id]);
  }

  out.dF1.resize(N);
  auto row = [&](std::size_t tt) {
    const int t = static_cast<int>(tt);
    const int it = t / n_mu, jt = t % n_mu;
    const double T = s.T[t];
    const double dT = g.grid.nodes[it] * dq[t];
    std::vector<double> K(km + 1), dKr(km + 1);
    std::vector<double> acc(km + 1, 0.0);
    for (int l = 0; l <= km; ++l) acc[l] = s.dphi(t, l) * dT;
    for (int p = 0; p < P; ++p) {
      for (int j = 0; j < n_mu; ++j) {
        if (!active[p * n_mu + j]) continue;
        const SplitPanel& sp = s.split[static_cast<std::size_t>(t) * n_mu + j];
        if (sp.panel == p) {
          for (std::size_t k = 0; k < sp.s.size(); ++k) {
            double v = 0, vd = 0;
            for (int n = 0; n < m; ++n) {
              const double d = dq[(p * m + n) * n_mu + j];
              v += sp.L(k, n) * d;
              vd += sp.dL(k, n) * d;
            }
            const double x = sp.s[k];
            const double dD = 2 * sp.a[k] * v * sp.b[k] + sp.a[k] * sp.a[k] * (v + x * vd);
            const DensitySample& ds = sp.dens[k];
            const double dr = x * v;
            const double dw = sp.geom[k] * (ds.w * dD + sp.D[k] * (ds.w_rc * dr * g.sin_th[j] + ds.w_kappa * dkappa));
            const double w = sp.geom[k] * ds.w * sp.D[k];
            kernels(T, sp.rg[k], km, K.data(), nullptr, dKr.data());
            for (int l = 0; l <= km; ++l) acc[l] += g.pl_mu(l, j) * (dw * K[l] + w * dKr[l] * dr);
          }
        } else {
          for (int i = p * m; i < (p + 1) * m; ++i) {
            const int id = i * n_mu + j;
            kernels(T, s.rg[id], km, K.data(), nullptr, dKr.data());
            for (int l = 0; l <= km; ++l)
              acc[l] += g.pl_mu(l, j) * (dW[id] * K[l] + s.W[id] * dKr[l] * drg[id]);
          }
        }
      }
    }
    double dF1 = -dphi0;
    for (int l = 0; l <= km; ++l) dF1 += g.pl_mu(l, jt) * acc[l];
    out.dF1[t] = dF1;
  };
  if (parallel) {
    parallel_for(static_cast<std::size_t>(N), row);
  } else {
    for (int t = 0; t < N; ++t) row(static_cast<std::size_t>(t));
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Continuation

namespace {

struct NewtonOutcome {
  bool converged = false;
  bool capped = false;
  Vec q, kappa_derivative;
  Mat jacobian;
  int iters = 0;
  double residual = 0;
  std::vector<double> history;
  std::string message;
};

NewtonOutcome newton(const NewtonModel& model, Vec q, double kappa) {
  const RotatingOptions& o = model.opts;
  NewtonOutcome out;
  for (int it = 0;; ++it) {
    std::unique_ptr<NewtonPoint> pt;
    Vec F;
    try {
      pt = model.at(q, kappa);
      F = pt->residual();
    } catch (const SolverError& e) {
      out.message = e.what();
      return out;
    }
    const double res = F.cwiseAbs().maxCoeff();
    out.history.push_back(res);
    out.residual = res;
    out.iters = it;
    if (!std::isfinite(res)) {
      out.message = "non-finite residual";
      return out;
    }
    // one correction is always taken so the kappa = 0 point is the discrete solution, not 0
    if (res < o.tol * model.scale && it > 0) {
      out.converged = true;
      out.q = q;
      out.jacobian = pt->jacobian();
      out.kappa_derivative = pt->kappa_derivative();
      return out;
    }
    if (it >= o.max_iter) {
      out.message = "Newton did not converge";
      return out;
    }
    q += lu_solve(pt->jacobian(), -F);
    if (model.x_norm(q) >= o.cap) {
      out.capped = true;
      out.q = q;
      out.message = "deformation cap";
      return out;
    }
  }
}

}  // namespace

ContinuationResult continue_in_kappa(const NewtonModel& model, const std::vector<double>& kappa_targets) {
  const RotatingOptions& o = model.opts;
  ContinuationResult res;
  Vec q = Vec::Zero(model.size);
  Vec tangent = Vec::Zero(model.size);
  double kappa = 0.0;
  bool have_tangent = false;
  for (double target : kappa_targets) {
    while (true) {
      double step = target - kappa;
      const bool full = std::abs(step) <= o.max_step;
      if (!full) step = std::copysign(o.max_step, step);
      NewtonOutcome nw;
      int halvings = 0;
      double next = full ? target : kappa + step;
      for (;;) {
        const Vec guess = have_tangent ? Vec(q + step * tangent) : q;
        nw = newton(model, guess, next);
        if (nw.converged || nw.capped || halvings >= o.max_halvings) break;
        step *= 0.5;
        next = kappa + step;
        ++halvings;
      }
      if (nw.capped) {
        res.complete = false;
        res.stop_reason = "deformation cap: |zeta|_X reached the cap before kappa = " + std::to_string(target);
        return res;
      }
      if (!nw.converged) {
        res.complete = false;
        std::ostringstream m;
        m << "Newton divergence near kappa = " << next << " (" << nw.message << ", residual " << nw.residual
          << ")";
        res.stop_reason = m.str();
        return res;
      }
      // tangent dq/dkappa at the accepted point
      tangent = lu_solve(nw.jacobian, -nw.kappa_derivative);
      have_tangent = true;
      q = nw.q;
      kappa = next;
      if (kappa == target) {
        RotatingSolution sol;
        try {
          sol = model.package(q, kappa);
        } catch (const DomainError& e) {
          res.complete = false;
          res.stop_reason = std::string("deformation cap: ") + e.what();
          return res;
        }
        sol.residual = nw.residual;
        sol.newton_iters = nw.iters;
        sol.residual_history = nw.history;
        res.solutions.push_back(sol);
        if (std::abs(sol.mass_check - model.mass) > 1e-6 * model.mass) {
          res.complete = false;
          std::ostringstream m;
          m << "mass invariance violated at kappa = " << kappa << ": " << sol.mass_check << " vs " << model.mass;
          res.stop_reason = m.str();
          return res;
        }
        break;
      }
    }
  }
  return res;
}

}  // namespace rotstar::detail
