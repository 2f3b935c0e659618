#include "rotstar/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <tuple>

#include <Eigen/Eigenvalues>

namespace rotstar {

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

double error_norm(const Vec& err, const Vec& y0, const Vec& y1, const OdeOptions& o) {
  double s = 0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = o.atol + o.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double e = err[i] / sc;
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(err.size()));
}

std::string where(double r) {
  std::ostringstream m;
  m.precision(17);
  m << r;
  return m.str();
}

}  // namespace

Vec Trajectory::operator()(double r) const {
  if (r_.size() < 2) return y_.front();
  std::size_t i;
  if (r <= r_.front()) {
    i = 0;
  } else if (r >= r_.back()) {
    i = r_.size() - 2;
  } else {
    i = static_cast<std::size_t>(std::upper_bound(r_.begin(), r_.end(), r) - r_.begin()) - 1;
  }
  const double h = r_[i + 1] - r_[i];
  const double t = (r - r_[i]) / h, t1 = 1.0 - t;
  const auto& c = cont_[i];
  return c[0] + t * (c[1] + t1 * (c[2] + t * (c[3] + t1 * c[4])));
}

Trajectory integrate_ivp(const OdeRhs& rhs, const Vec& y0, double r0, double r_end,
                         const EventFn& stop, const OdeOptions& o) {
  if (!(r_end > r0)) throw DomainError("integrate_ivp: need r_end > r0");
  if (!(o.rtol > 0) || !(o.atol > 0)) throw DomainError("integrate_ivp: tolerances must be positive");
  const Eigen::Index n = y0.size();
  Trajectory tr;
  tr.r_.push_back(r0);
  tr.y_.push_back(y0);

  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), y1(n), err(n);
  double r = r0;
  Vec y = y0;
  rhs(r, y, k1);

  double h = o.h_init;
  if (h <= 0) {
    double d0 = 0, d1n = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = o.atol + o.rtol * std::abs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1n += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / n);
    d1n = std::sqrt(d1n / n);
    h = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h = std::min(h, 0.01 * (r_end - r0));
  }

  double g_prev = stop ? stop(r, y) : 1.0;
  if (stop && g_prev <= 0) {
    tr.has_event = true;
    tr.r_event = r0;
    tr.y_event = y0;
    return tr;
  }

  for (std::size_t step = 0; step < o.max_steps; ++step) {
    const double h_min = o.h_min_rel * std::max(1.0, std::abs(r));
    if (h < h_min) {
      throw SolverError("stiffness/singularity: step size underflow at r = " + where(r));
    }
    if (r + h > r_end) h = r_end - r;

    yt = y + h * a21 * k1;
    rhs(r + c2 * h, yt, k2);
    yt = y + h * (a31 * k1 + a32 * k2);
    rhs(r + c3 * h, yt, k3);
    yt = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(r + c4 * h, yt, k4);
    yt = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(r + c5 * h, yt, k5);
    yt = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(r + h, yt, k6);
    y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    rhs(r + h, y1, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const double en = error_norm(err, y, y1, o);
    if (!std::isfinite(en)) {
      h *= 0.25;
      continue;
    }
    if (en > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      continue;
    }

    std::array<Vec, 5> c;
    c[0] = y;
    c[1] = y1 - y;
    c[2] = h * k1 - c[1];
    c[3] = c[1] - h * k7 - c[2];
    c[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
    tr.cont_.push_back(std::move(c));
    const double r_new = (r + h >= r_end) ? r_end : r + h;
    tr.r_.push_back(r_new);
    tr.y_.push_back(y1);

    if (stop) {
      const double g_new = stop(r_new, y1);
      if (g_new <= 0) {
        double lo = r, hi = r_new;
        while (hi - lo > o.event_tol) {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          if (stop(mid, tr(mid)) > 0) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        const double re = 0.5 * (lo + hi);
        tr.has_event = true;
        tr.r_event = re;
        tr.y_event = tr(re);
        return tr;
      }
      g_prev = g_new;
    }

    r = r_new;
    y = y1;
    k1 = k7;
    if (r >= r_end) {
      if (stop) throw SolverError("no event before r_max = " + where(r_end));
      return tr;
    }
    const double fac = (en == 0.0) ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(en, -0.2)));
    h *= fac;
  }
  throw SolverError("stiffness/singularity: step budget exhausted at r = " + where(r));
}

const GaussRule& gauss_rule(int n) {
  if (n < 1) throw DomainError("gauss_rule: need n >= 1");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;
  auto g = std::make_unique<GaussRule>();
  g->x.assign(n, 0.0);
  g->w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1, p2 = 0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p1 = 1, p2 = 0;
    for (int j = 0; j < n; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
    }
    pp = n * (z * p1 - p2) / (z * z - 1.0);
    g->x[i] = -z;
    g->x[n - 1 - i] = z;
    g->w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    g->w[n - 1 - i] = g->w[i];
  }
  if (n % 2 == 1) g->x[n / 2] = 0.0;
  auto& ref = *g;
  cache.emplace(n, std::move(g));
  return ref;
}

const GaussRule& gauss_jacobi_rule(int n, double alpha, double beta) {
  if (n < 1) throw DomainError("gauss_jacobi_rule: need n >= 1");
  if (!(alpha > -1) || !(beta > -1)) throw DomainError("gauss_jacobi_rule: exponents must exceed -1");
  static std::mutex mu;
  static std::map<std::tuple<int, double, double>, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_tuple(n, alpha, beta);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;

  // symmetric Jacobi matrix of the monic recurrence
  const double ab = alpha + beta;
  Mat J = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + ab;
    J(k, k) = (k == 0) ? (beta - alpha) / (ab + 2) : (beta * beta - alpha * alpha) / (s * (s + 2));
  }
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + ab;
    const double b = (k == 1) ? 4 * (1 + alpha) * (1 + beta) / ((2 + ab) * (2 + ab) * (3 + ab))
                              : 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1) * (s - 1));
    J(k, k - 1) = J(k - 1, k) = std::sqrt(b);
  }
  const Eigen::SelfAdjointEigenSolver<Mat> es(J);
  const double mu0 = std::exp((ab + 1) * std::log(2.0) + std::lgamma(alpha + 1) + std::lgamma(beta + 1) -
                              std::lgamma(ab + 2));
  auto g = std::make_unique<GaussRule>();
  g->x.resize(n);
  g->w.resize(n);
  for (int k = 0; k < n; ++k) {
    g->x[k] = es.eigenvalues()[k];
    const double v = es.eigenvectors()(0, k);
    g->w[k] = mu0 * v * v;
  }
  auto& ref = *g;
  cache.emplace(key, std::move(g));
  return ref;
}

int PanelGrid::panel_of(double r) const {
  const int p = panels();
  if (r <= breaks.front()) return 0;
  if (r >= breaks.back()) return p - 1;
  const auto it = std::upper_bound(breaks.begin(), breaks.end(), r);
  return std::min(p - 1, static_cast<int>(it - breaks.begin()) - 1);
}

PanelGrid clustered_panels(double a, double b, int n_panels, int order, double clustering) {
  if (!(b > a) || n_panels < 1 || order < 1) throw DomainError("clustered_panels: bad arguments");
  if (clustering < 0 || clustering >= 1) throw DomainError("clustered_panels: clustering in [0,1)");
  PanelGrid g;
  g.order = order;
  g.breaks.resize(n_panels + 1);
  for (int k = 0; k <= n_panels; ++k) {
    const double t = static_cast<double>(k) / n_panels;
    const double phi = t - clustering * std::sin(2 * kPi * t) / (2 * kPi);
    g.breaks[k] = a + (b - a) * phi;
  }
  g.breaks.front() = a;
  g.breaks.back() = b;
  const GaussRule& q = gauss_rule(order);
  g.nodes.resize(n_panels * order);
  g.weights.resize(n_panels * order);
  for (int k = 0; k < n_panels; ++k) {
    const double c = 0.5 * (g.breaks[k] + g.breaks[k + 1]);
    const double d = 0.5 * (g.breaks[k + 1] - g.breaks[k]);
    for (int i = 0; i < order; ++i) {
      g.nodes[k * order + i] = c + d * q.x[i];
      g.weights[k * order + i] = d * q.w[i];
    }
  }
  return g;
}

void lagrange_basis(const double* x, int m, double t, double* out) {
  for (int j = 0; j < m; ++j) {
    if (t == x[j]) {
      for (int k = 0; k < m; ++k) out[k] = (k == j) ? 1.0 : 0.0;
      return;
    }
  }
  for (int j = 0; j < m; ++j) {
    double v = 1.0;
    for (int k = 0; k < m; ++k) {
      if (k != j) v *= (t - x[k]) / (x[j] - x[k]);
    }
    out[j] = v;
  }
}

void lagrange_basis_derivative(const double* x, int m, double t, double* out) {
  for (int j = 0; j < m; ++j) {
    double sum = 0.0;
    for (int i = 0; i < m; ++i) {
      if (i == j) continue;
      double prod = 1.0 / (x[j] - x[i]);
      for (int k = 0; k < m; ++k) {
        if (k != j && k != i) prod *= (t - x[k]) / (x[j] - x[k]);
      }
      sum += prod;
    }
    out[j] = sum;
  }
}

void legendre_table(int lmax, double x, double* out) {
  out[0] = 1.0;
  if (lmax >= 1) out[1] = x;
  for (int k = 2; k <= lmax; ++k) {
    out[k] = ((2.0 * k - 1.0) * x * out[k - 1] - (k - 1.0) * out[k - 2]) / k;
  }
}

bool all_finite(const Mat& a) { return a.allFinite(); }

SingularPair smallest_singular_value(const Mat& a) {
  if (a.size() == 0) throw DomainError("smallest_singular_value: empty matrix");
  if (!a.allFinite()) throw SolverError("smallest_singular_value: non-finite matrix entries");
  SingularPair out;
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const Eigen::Index k = s.size() - 1;
  out.sigma = s[k];
  out.vector = svd.matrixV().col(k);
  out.vector.normalize();
  return out;
}

Vec lu_solve(const Mat& a, const Vec& b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) throw DomainError("lu_solve: shape mismatch");
  return Eigen::PartialPivLU<Mat>(a).solve(b);
}

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads = std::max(1, n); }
int thread_count() { return g_threads; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const int t = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex fail_mu;
  std::vector<std::thread> pool;
  for (int k = 0; k < t; ++k) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(fail_mu);
          if (!failure) failure = std::current_exception();
          next = n;
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace rotstar
