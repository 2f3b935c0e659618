#include "rotstar/dilation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "rotstar/errors.hpp"

namespace rotstar {

namespace {

// Node slopes of the cubic spline through the columns of y.
Mat spline_slopes(const std::vector<double>& x, const Mat& y, bool not_a_knot) {
  const int n = static_cast<int>(x.size());
  Mat a = Mat::Zero(n, n), rhs = Mat::Zero(n, y.cols());
  auto h = [&](int i) { return x[i + 1] - x[i]; };
  auto delta = [&](int i) { return ((y.row(i + 1) - y.row(i)) / h(i)).eval(); };
  for (int i = 1; i + 1 < n; ++i) {
    a(i, i - 1) = h(i);
    a(i, i) = 2 * (h(i - 1) + h(i));
    a(i, i + 1) = h(i - 1);
    rhs.row(i) = 3 * (h(i) * delta(i - 1) + h(i - 1) * delta(i));
  }
  if (not_a_knot) {
    // continuous third derivative across the second and second-to-last nodes
    const double h0 = h(0), h1 = h(1), g0 = h(n - 3), g1 = h(n - 2);
    a(0, 0) = 1 / (h0 * h0);
    a(0, 1) = 1 / (h0 * h0) - 1 / (h1 * h1);
    a(0, 2) = -1 / (h1 * h1);
    rhs.row(0) = 2 * delta(0) / (h0 * h0) - 2 * delta(1) / (h1 * h1);
    a(n - 1, n - 3) = 1 / (g0 * g0);
    a(n - 1, n - 2) = 1 / (g0 * g0) - 1 / (g1 * g1);
    a(n - 1, n - 1) = -1 / (g1 * g1);
    rhs.row(n - 1) = 2 * delta(n - 3) / (g0 * g0) - 2 * delta(n - 2) / (g1 * g1);
  } else {
    a(0, 0) = 1;
    a(n - 1, n - 1) = 1;
  }
  return Eigen::PartialPivLU<Mat>(a).solve(rhs);
}

std::vector<double> uniform_nodes(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  v.back() = hi;
  return v;
}

int locate(const std::vector<double>& x, double t) {
  const auto it = std::upper_bound(x.begin(), x.end(), t);
  int i = static_cast<int>(it - x.begin()) - 1;
  return std::clamp(i, 0, static_cast<int>(x.size()) - 2);
}

struct Hermite {
  double h0, h1, d0, d1;      // value basis for f(0), f(1), f'(0), f'(1) (slopes unscaled)
  double dh0, dh1, dd0, dd1;  // derivatives in t
};

Hermite hermite(double t) {
  const double t2 = t * t, t3 = t2 * t;
  return {2 * t3 - 3 * t2 + 1, -2 * t3 + 3 * t2, t3 - 2 * t2 + t, t3 - t2,
          6 * t2 - 6 * t,      -6 * t2 + 6 * t,  3 * t2 - 4 * t + 1, 3 * t2 - 2 * t};
}

// Quintic step: 1 for t <= lo, 0 for t >= hi.
double cutoff(double t, double lo, double hi) {
  if (t <= lo) return 1.0;
  if (t >= hi) return 0.0;
  const double s = (t - lo) / (hi - lo);
  return 1.0 - s * s * s * (10 - 15 * s + 6 * s * s);
}

}  // namespace

DeformationField::DeformationField()
    : DeformationField(uniform_nodes(0, 1, 128), uniform_nodes(0, kPi / 2, 64), Mat::Zero(128, 64)) {}

DeformationField::DeformationField(std::vector<double> r, std::vector<double> th, Mat q)
    : r_(std::move(r)), th_(std::move(th)), q_(std::move(q)) {
  build();
}

void DeformationField::build() {
  if (r_.size() < 4 || th_.size() < 4) throw DomainError("DeformationField: need at least 4 x 4 nodes");
  if (!q_.allFinite()) throw DomainError("DeformationField: non-finite values");
  qr_ = spline_slopes(r_, q_, true);
  qt_ = spline_slopes(th_, q_.transpose(), false).transpose();
  qrt_ = spline_slopes(th_, qr_.transpose(), false).transpose();
}

DeformationField DeformationField::from_ratio(const std::function<double(double, double)>& q,
                                              double R_dom, int n_r, int n_theta) {
  if (!(R_dom > 0)) throw DomainError("DeformationField: R_dom must be positive");
  auto r = uniform_nodes(0, R_dom, n_r);
  auto th = uniform_nodes(0, kPi / 2, n_theta);
  Mat v(n_r, n_theta);
  for (int i = 0; i < n_r; ++i)
    for (int j = 0; j < n_theta; ++j) v(i, j) = q(r[i], th[j]);
  return DeformationField(std::move(r), std::move(th), std::move(v));
}

DeformationField DeformationField::from_zeta(const std::function<double(double, double)>& zeta,
                                             double R_dom, int n_r, int n_theta) {
  if (!(R_dom > 0)) throw DomainError("DeformationField: R_dom must be positive");
  if (n_r < 4) throw DomainError("DeformationField: need at least 4 radial nodes");
  auto r = uniform_nodes(0, R_dom, n_r);
  auto th = uniform_nodes(0, kPi / 2, n_theta);
  Mat v(n_r, n_theta);
  for (int j = 0; j < n_theta; ++j) {
    for (int i = 1; i < n_r; ++i) v(i, j) = zeta(r[i], th[j]) / (r[i] * r[i]);
    // quadratic extrapolation of zeta/r^2 from r = h, 2h, 3h
    v(0, j) = 3 * v(1, j) - 3 * v(2, j) + v(3, j);
  }
  return DeformationField(std::move(r), std::move(th), std::move(v));
}

DeformationField DeformationField::zero(double R_dom, int n_r, int n_theta) {
  return from_ratio([](double, double) { return 0.0; }, R_dom, n_r, n_theta);
}

Mat DeformationField::zeta_values() const {
  Mat z = q_;
  for (std::size_t i = 0; i < r_.size(); ++i) z.row(i) *= r_[i] * r_[i];
  return z;
}

RatioSample DeformationField::ratio(double r, double theta) const {
  if (!(r >= 0) || r > R_dom() * (1 + 1e-12)) {
    std::ostringstream m;
    m << "DeformationField: r = " << r << " outside [0, " << R_dom() << "]";
    throw DomainError(m.str());
  }
  r = std::min(r, R_dom());
  double sign = 1.0;
  theta = std::fmod(std::abs(theta), 2 * kPi);
  if (theta > kPi) theta = 2 * kPi - theta;
  if (theta > kPi / 2) {
    theta = kPi - theta;
    sign = -1.0;
  }
  const int i = locate(r_, r), j = locate(th_, theta);
  const double hr = r_[i + 1] - r_[i], ht = th_[j + 1] - th_[j];
  const Hermite a = hermite((r - r_[i]) / hr), b = hermite((theta - th_[j]) / ht);
  const double va[2] = {a.h0, a.h1}, sa[2] = {a.d0 * hr, a.d1 * hr};
  const double dva[2] = {a.dh0 / hr, a.dh1 / hr}, dsa[2] = {a.dd0, a.dd1};
  const double vb[2] = {b.h0, b.h1}, sb[2] = {b.d0 * ht, b.d1 * ht};
  const double dvb[2] = {b.dh0 / ht, b.dh1 / ht}, dsb[2] = {b.dd0, b.dd1};
  RatioSample s;
  for (int p = 0; p < 2; ++p) {
    for (int k = 0; k < 2; ++k) {
      const int ii = i + p, jj = j + k;
      const double f = q_(ii, jj), fr = qr_(ii, jj), ft = qt_(ii, jj), frt = qrt_(ii, jj);
      s.q += va[p] * (vb[k] * f + sb[k] * ft) + sa[p] * (vb[k] * fr + sb[k] * frt);
      s.q_r += dva[p] * (vb[k] * f + sb[k] * ft) + dsa[p] * (vb[k] * fr + sb[k] * frt);
      s.q_theta += va[p] * (dvb[k] * f + dsb[k] * ft) + sa[p] * (dvb[k] * fr + dsb[k] * frt);
    }
  }
  s.q_theta *= sign;
  return s;
}

double DeformationField::zeta(double r, double theta) const { return r * r * ratio(r, theta).q; }

double DeformationField::zeta(const Point& x) const {
  const double r = x.norm();
  if (r == 0) return 0.0;
  return zeta(r, std::acos(std::clamp(x[2] / r, -1.0, 1.0)));
}

double DeformationField::x_norm() const {
  // |grad zeta|/|x| = sqrt((2q + r q_r)^2 + q_theta^2)
  double m = 0;
  for (std::size_t i = 0; i < r_.size(); ++i) {
    for (std::size_t j = 0; j < th_.size(); ++j) {
      const double radial = 2 * q_(i, j) + r_[i] * qr_(i, j);
      m = std::max(m, std::hypot(radial, qt_(i, j)));
    }
  }
  return m;
}

DeformationField DeformationField::operator+(const DeformationField& o) const {
  if (r_ != o.r_ || th_ != o.th_) throw DomainError("DeformationField: grid mismatch");
  return DeformationField(r_, th_, q_ + o.q_);
}

DeformationField DeformationField::operator*(double c) const { return DeformationField(r_, th_, c * q_); }

std::string DeformationField::header_json() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "{\"kind\": \"deformation_field\", \"R_dom\": " << R_dom() << ", \"n_r\": " << r_.size()
     << ", \"n_theta\": " << th_.size() << ", \"r\": [0, " << R_dom()
     << "], \"theta\": [0, 1.5707963267948966], \"spacing\": \"uniform\", \"x_norm\": " << x_norm()
     << ", \"columns\": [\"r\", \"theta\", \"zeta\"], \"order\": \"r-major\"}";
  return os.str();
}

void DeformationField::write_csv(std::ostream& os) const {
  os << "r,theta,zeta\n" << std::setprecision(17);
  for (std::size_t i = 0; i < r_.size(); ++i)
    for (std::size_t j = 0; j < th_.size(); ++j)
      os << r_[i] << ',' << th_[j] << ',' << r_[i] * r_[i] * q_(i, j) << '\n';
}

DeformationField extend(const DeformationField& z) {
  const auto& r = z.r_nodes();
  const double R = z.R_dom();
  const int n = static_cast<int>(r.size());
  std::vector<double> rr(r);
  const double h = R / (n - 1);
  for (int k = 1; k < n; ++k) rr.push_back(R + k * h);
  rr.back() = 2 * R;
  const int m = static_cast<int>(z.theta_nodes().size());
  Mat q = Mat::Zero(rr.size(), m);
  q.topRows(n) = z.ratio_values();
  for (int k = 1; k < n; ++k) {
    const double t = rr[n - 1 + k] - R;
    const double chi = cutoff(t, 0.25 * R, 0.75 * R);
    if (chi == 0.0) continue;
    for (int j = 0; j < m; ++j) {
      const double th = z.theta_nodes()[j];
      const double v = chi * (4 * z.zeta(R - 0.5 * t, th) - 3 * z.zeta(R - t, th));
      q(n - 1 + k, j) = v / (rr[n - 1 + k] * rr[n - 1 + k]);
    }
  }
  return DeformationField(rr, z.theta_nodes(), q);
}

DilationMap::DilationMap(DeformationField zeta, double cap) : zeta_(std::move(zeta)) {
  norm_ = zeta_.x_norm();
  if (!(norm_ < cap)) {
    std::ostringstream m;
    m << "deformation too large: |zeta|_X = " << norm_ << " exceeds cap " << cap;
    throw DomainError(m.str());
  }
}

double DilationMap::apply_radius(double r, double theta) const {
  return r * (1 + zeta_.ratio(r, theta).q);
}

double DilationMap::invert_radius(double rho, double theta) const {
  if (rho == 0) return 0.0;
  const double rmax = zeta_.R_dom();
  if (rho > apply_radius(rmax, theta) * (1 + 1e-12)) throw DomainError("invert: point outside the deformed domain");
  double r = rho;
  for (int it = 0; it < 200; ++it) {
    const double next = std::min(rho / (1 + zeta_.ratio(std::min(r, rmax), theta).q), rmax);
    if (std::abs(next - r) <= 1e-14 * rho) return next;
    r = next;
  }
  throw SolverError("deformation too large: inversion did not converge in 200 iterations");
}

Point DilationMap::apply(const Point& x) const {
  const double r = x.norm();
  if (r == 0) return x;
  return (1 + zeta_.ratio(r, std::acos(std::clamp(x[2] / r, -1.0, 1.0))).q) * x;
}

Point DilationMap::invert(const Point& y) const {
  const double rho = y.norm();
  if (rho == 0) return y;
  const double r = invert_radius(rho, std::acos(std::clamp(y[2] / rho, -1.0, 1.0)));
  return (r / rho) * y;
}

double DilationMap::jacobian_det(double r, double theta) const {
  const RatioSample s = zeta_.ratio(r, theta);
  const double a = 1 + s.q;
  const double d = a * a * (a + r * s.q_r);
  if (!(d > 0)) {
    std::ostringstream m;
    m << "fold: det Dg = " << d << " at r = " << r << ", theta = " << theta;
    throw SolverError(m.str());
  }
  return d;
}

double DilationMap::jacobian_det(const Point& x) const {
  const double r = x.norm();
  return jacobian_det(r, r == 0 ? 0.0 : std::acos(std::clamp(x[2] / r, -1.0, 1.0)));
}

namespace {

// Radial nodes aligned with the field knots on [0, R], the last interval graded towards R.
void radial_rule(const std::vector<double>& knots, double R, std::vector<double>& x, std::vector<double>& w) {
  const GaussRule& g = gauss_rule(8);
  std::vector<double> br;
  for (double k : knots)
    if (k < R) br.push_back(k);
  const double last = br.back();
  for (int k = 1; k <= 8; ++k) br.push_back(R - (R - last) * std::pow(0.5, 9 - k));
  br.back() = R;
  for (std::size_t p = 0; p + 1 < br.size(); ++p) {
    const double c = 0.5 * (br[p] + br[p + 1]), d = 0.5 * (br[p + 1] - br[p]);
    for (int q = 0; q < 8; ++q) {
      x.push_back(c + d * g.x[q]);
      w.push_back(d * g.w[q]);
    }
  }
}

void angular_rule(const std::vector<double>& knots, std::vector<double>& x, std::vector<double>& w) {
  const GaussRule& g = gauss_rule(6);
  for (std::size_t p = 0; p + 1 < knots.size(); ++p) {
    const double c = 0.5 * (knots[p] + knots[p + 1]), d = 0.5 * (knots[p + 1] - knots[p]);
    for (int q = 0; q < 6; ++q) {
      x.push_back(c + d * g.x[q]);
      w.push_back(d * g.w[q]);
    }
  }
}

}  // namespace

double mass_factor(const DilationMap& map, const std::function<double(double)>& rho, double mass,
                   double R) {
  if (R > map.field().R_dom() * (1 + 1e-12)) throw DomainError("mass_factor: star extends past the field");
  std::vector<double> rx, rw, tx, tw;
  radial_rule(map.field().r_nodes(), R, rx, rw);
  angular_rule(map.field().theta_nodes(), tx, tw);
  std::vector<double> rho_r(rx.size());
  for (std::size_t i = 0; i < rx.size(); ++i) rho_r[i] = rho(rx[i]);
  std::vector<double> partial(tx.size());
  parallel_for(tx.size(), [&](std::size_t j) {
    double s = 0;
    for (std::size_t i = 0; i < rx.size(); ++i)
      s += rw[i] * rho_r[i] * map.jacobian_det(rx[i], tx[j]) * rx[i] * rx[i];
    partial[j] = s * std::sin(tx[j]) * tw[j];
  });
  double total = 0;
  for (double p : partial) total += p;
  return mass / (4 * kPi * total);  // 2 pi azimuth, factor 2 from x3-evenness
}

double mass_factor(const DilationMap& map, const RadialStar& star) {
  return mass_factor(map, [&](double r) { return star.rho(r); }, star.mass, star.R);
}

double deformed_mass(const DilationMap& map, const std::function<double(double)>& rho, double R) {
  return deformed_mass(map, [&rho](double r0, double, double) { return rho(r0); }, R);
}

double deformed_mass(const DilationMap& map, const std::function<double(double, double, double)>& rho,
                     double R) {
  std::vector<double> tx, tw;
  angular_rule(map.field().theta_nodes(), tx, tw);
  std::vector<double> partial(tx.size());
  parallel_for(tx.size(), [&](std::size_t j) {
    const double th = tx[j];
    const double edge = map.apply_radius(R, th);
    const PanelGrid g = clustered_panels(0.0, edge, 48, 10, 0.5);
    double s = 0;
    for (int i = 0; i < g.size(); ++i) {
      const double y = g.nodes[i];
      s += g.weights[i] * rho(std::min(map.invert_radius(y, th), R), y, th) * y * y;
    }
    partial[j] = s * std::sin(th) * tw[j];
  });
  double total = 0;
  for (double p : partial) total += p;
  return 4 * kPi * total;
}

double eulerian_mass(const DilationMap& map, const std::function<double(double)>& rho, double mass,
                     double R) {
  return mass_factor(map, rho, mass, R) * deformed_mass(map, rho, R);
}

LipschitzFit fit_lipschitz(const DilationMap& map, int pairs, unsigned seed) {
  std::mt19937_64 gen(seed);
  const double R = map.field().R_dom();
  std::uniform_real_distribution<double> u(-R, R);
  auto draw = [&] {
    for (;;) {
      Point p(u(gen), u(gen), u(gen));
      if (p.norm() <= R) return p;
    }
  };
  LipschitzFit fit;
  fit.pairs = pairs;
  if (map.norm() == 0) return fit;
  for (int k = 0; k < pairs; ++k) {
    const Point x = draw(), y = draw();
    const double d = (x - y).norm();
    if (d == 0) continue;
    const double dev = ((map.apply(x) - map.apply(y)) - (x - y)).norm();
    fit.constant = std::max(fit.constant, dev / (map.norm() * d));
  }
  return fit;
}

}  // namespace rotstar
