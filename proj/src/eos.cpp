#include "rotstar/eos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rotstar/errors.hpp"
#include "rotstar/numerics.hpp"

namespace rotstar {

struct EquationOfState::Impl {
  std::function<double(double)> p, dp, d2p;
  std::string name;
  bool power = false;
  double pg = 0.0;  // exponent of the pure power law
  std::vector<PowerTerm> terms;
  double gamma = 0.0, gamma_star = 0.0, c0 = 0.0, c1 = 0.0;

  // Cumulative enthalpy table on t = ln s.
  double t0 = 0.0, dt = 0.05;
  std::vector<double> H;
  double e0 = 0.0;  // tail exponent below exp(t0)
  std::string table_error;

  double segment(double ta, double tb) const {
    // int_{ta}^{tb} p'(e^t) dt
    return gauss_legendre([&](double t) { return dp(std::exp(t)); }, ta, tb, 10);
  }

  void build_table() {
    const double s0 = 1e-16;
    t0 = std::log(s0);
    const double t1 = std::log(1e16);
    const int n = static_cast<int>(std::ceil((t1 - t0) / dt));
    const double d1 = dp(s0), d2 = d2p(s0);
    e0 = s0 * d2 / d1;
    if (!(d1 > 0) || !(e0 > 0) || !std::isfinite(e0)) {
      std::ostringstream m;
      m << "non-integrable enthalpy: p'(s)/s is not integrable at s = 0 (local exponent of p' = "
        << e0 << ")";
      table_error = m.str();
      return;
    }
    H.resize(n + 1);
    H[0] = d1 / e0;
    for (int k = 0; k < n; ++k) H[k + 1] = H[k] + segment(t0 + k * dt, t0 + (k + 1) * dt);
  }

  double h_at_t(double t) const {
    if (t < t0) return H[0] * std::exp(e0 * (t - t0));
    const int n = static_cast<int>(H.size()) - 1;
    int k = static_cast<int>(std::floor((t - t0) / dt));
    if (k < n) return H[k] + segment(t0 + k * dt, t);
    double acc = H[n];
    double ta = t0 + n * dt;
    while (t - ta > dt) {
      acc += segment(ta, ta + dt);
      ta += dt;
    }
    return acc + segment(ta, t);
  }

  void require_table() const {
    if (!table_error.empty()) throw SolverError(table_error);
  }
};

namespace {

double local_exponent(const EquationOfState::Impl& im, double s) {
  return s * im.d2p(s) / im.dp(s);
}

void fill_metadata(EquationOfState::Impl& im) {
  const double lo = 1e-12, hi = 1e12;
  const double el = local_exponent(im, lo), eh = local_exponent(im, hi);
  im.gamma = 1.0 + el;
  im.gamma_star = 1.0 + eh;
  im.c0 = im.dp(lo) / std::pow(lo, el);
  im.c1 = im.dp(hi) / std::pow(hi, eh);
}

}  // namespace

EquationOfState EquationOfState::power_law(double gamma) {
  if (!(gamma > 1.0)) throw DomainError("power_law: gamma must exceed 1");
  if (gamma > 2.0) throw DomainError("power_law: gamma must not exceed 2");
  auto im = std::make_shared<Impl>();
  im->power = true;
  im->pg = gamma;
  im->terms = {{1.0, gamma}};
  im->p = [gamma](double s) { return s > 0 ? std::pow(s, gamma) : 0.0; };
  im->dp = [gamma](double s) { return s > 0 ? gamma * std::pow(s, gamma - 1) : 0.0; };
  im->d2p = [gamma](double s) {
    return s > 0 ? gamma * (gamma - 1) * std::pow(s, gamma - 2) : 0.0;
  };
  std::ostringstream nm;
  nm.precision(12);
  nm << "power(" << gamma << ")";
  im->name = nm.str();
  im->gamma = im->gamma_star = gamma;
  im->c0 = im->c1 = gamma;
  return EquationOfState(im);
}

EquationOfState EquationOfState::power_sum(std::vector<PowerTerm> terms) {
  if (terms.empty()) throw DomainError("power_sum: need at least one term");
  for (const auto& t : terms) {
    if (!(t.coef > 0) || !(t.gamma > 1.0)) {
      throw DomainError("power_sum: coefficients must be positive and exponents exceed 1");
    }
  }
  std::sort(terms.begin(), terms.end(), [](auto& a, auto& b) { return a.gamma < b.gamma; });
  auto im = std::make_shared<Impl>();
  im->terms = terms;
  im->p = [terms](double s) {
    double v = 0;
    if (s > 0)
      for (auto& t : terms) v += t.coef * std::pow(s, t.gamma);
    return v;
  };
  im->dp = [terms](double s) {
    double v = 0;
    if (s > 0)
      for (auto& t : terms) v += t.coef * t.gamma * std::pow(s, t.gamma - 1);
    return v;
  };
  im->d2p = [terms](double s) {
    double v = 0;
    if (s > 0)
      for (auto& t : terms) v += t.coef * t.gamma * (t.gamma - 1) * std::pow(s, t.gamma - 2);
    return v;
  };
  std::ostringstream nm;
  nm.precision(12);
  nm << "power-sum(";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    nm << (i ? "," : "") << terms[i].coef << "*s^" << terms[i].gamma;
  }
  nm << ")";
  im->name = nm.str();
  im->gamma = terms.front().gamma;
  im->gamma_star = terms.back().gamma;
  im->c0 = terms.front().coef * terms.front().gamma;
  im->c1 = terms.back().coef * terms.back().gamma;
  im->build_table();
  return EquationOfState(im);
}

EquationOfState EquationOfState::custom(std::function<double(double)> p,
                                        std::function<double(double)> dp,
                                        std::function<double(double)> d2p, std::string name) {
  auto im = std::make_shared<Impl>();
  im->p = std::move(p);
  im->dp = std::move(dp);
  im->d2p = std::move(d2p);
  im->name = std::move(name);
  fill_metadata(*im);
  im->build_table();
  return EquationOfState(im);
}

double EquationOfState::pressure(double s) const { return impl_->p(s); }
double EquationOfState::dpressure(double s) const { return impl_->dp(s); }
double EquationOfState::d2pressure(double s) const { return impl_->d2p(s); }

double EquationOfState::enthalpy(double rho) const {
  if (rho <= 0) return 0.0;
  const Impl& im = *impl_;
  if (im.power) return im.pg / (im.pg - 1) * std::pow(rho, im.pg - 1);
  im.require_table();
  return im.h_at_t(std::log(rho));
}

double EquationOfState::denthalpy(double rho) const {
  const Impl& im = *impl_;
  if (im.power) {
    if (rho <= 0) return im.pg == 2.0 ? 2.0 : std::numeric_limits<double>::infinity();
    return im.pg * std::pow(rho, im.pg - 2);
  }
  return im.dp(rho) / rho;
}

double EquationOfState::d2enthalpy(double rho) const {
  const Impl& im = *impl_;
  if (im.power) return im.pg * (im.pg - 2) * std::pow(rho, im.pg - 3);
  return (im.d2p(rho) * rho - im.dp(rho)) / (rho * rho);
}

double EquationOfState::inverse_enthalpy(double u) const {
  if (u <= 0) return 0.0;
  const Impl& im = *impl_;
  if (im.power) return std::pow((im.pg - 1) * u / im.pg, 1.0 / (im.pg - 1));
  im.require_table();
  const auto& H = im.H;
  if (u <= H[0]) return std::exp(im.t0) * std::pow(u / H[0], 1.0 / im.e0);
  double ta, tb;
  const int n = static_cast<int>(H.size()) - 1;
  if (u >= H[n]) {
    ta = im.t0 + n * im.dt;
    tb = ta + im.dt;
    while (im.h_at_t(tb) < u) {
      ta = tb;
      tb += im.dt;
      if (tb > 700) throw SolverError("inverse_enthalpy: value out of range");
    }
  } else {
    const int k = static_cast<int>(std::upper_bound(H.begin(), H.end(), u) - H.begin()) - 1;
    ta = im.t0 + k * im.dt;
    tb = ta + im.dt;
  }
  double t = 0.5 * (ta + tb);
  for (int it = 0; it < 100; ++it) {
    const double f = im.h_at_t(t) - u;
    if (std::abs(f) <= 1e-15 * u) break;
    if (f > 0) {
      tb = t;
    } else {
      ta = t;
    }
    const double fp = im.dp(std::exp(t));
    double tn = t - f / fp;
    if (!(tn > ta && tn < tb)) tn = 0.5 * (ta + tb);
    if (std::abs(tn - t) < 1e-16 * std::max(1.0, std::abs(t))) {
      t = tn;
      break;
    }
    t = tn;
  }
  return std::exp(t);
}

double EquationOfState::dinverse_enthalpy(double u) const {
  if (u < 0) return 0.0;
  const Impl& im = *impl_;
  if (im.power) {
    const double g = im.pg;
    return std::pow((g - 1) * u / g, (2 - g) / (g - 1)) / g;
  }
  if (u == 0) return 0.0;
  const double rho = inverse_enthalpy(u);
  return rho / im.dp(rho);
}

double EquationOfState::k(double s) const {
  if (s <= 0) return 0.0;
  const Impl& im = *impl_;
  if (im.power) return im.pg * (2 - im.pg) / (im.pg - 1) * std::pow(s, im.pg - 1);
  return enthalpy(s) - im.dp(s);
}

double EquationOfState::gamma() const { return impl_->gamma; }
double EquationOfState::gamma_star() const { return impl_->gamma_star; }
double EquationOfState::c0() const { return impl_->c0; }
double EquationOfState::c1() const { return impl_->c1; }
bool EquationOfState::is_power_law() const { return impl_->power; }
const std::vector<PowerTerm>& EquationOfState::terms() const { return impl_->terms; }
const std::string& EquationOfState::name() const { return impl_->name; }

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0) || !(hi > lo) || n < 2) throw DomainError("log_grid: bad range");
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * i / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

bool AssumptionReport::all_pass() const {
  if (!monotone) return false;
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

AssumptionReport validate_assumptions(const EquationOfState& eos, const SampleSpec& spec) {
  AssumptionReport rep;
  const auto s = log_grid(spec.s_min, spec.s_max, spec.n);
  rep.monotone = true;
  double p_prev = -std::numeric_limits<double>::infinity();
  for (double x : s) {
    const double p = eos.pressure(x), dp = eos.dpressure(x);
    if (!(dp > 0) || !(p > p_prev)) rep.monotone = false;
    p_prev = p;
  }
  rep.small_exponent = s.front() * eos.d2pressure(s.front()) / eos.dpressure(s.front());
  rep.large_exponent = s.back() * eos.d2pressure(s.back()) / eos.dpressure(s.back());

  AssumptionCheck mono{"pressure increasing", rep.monotone, rep.monotone ? 1.0 : 0.0, 1.0, 0.0};
  rep.checks.push_back(mono);

  AssumptionCheck small{"small-density exponent of p' in (0,1)", false, rep.small_exponent,
                        eos.gamma() - 1, 0.0};
  small.drift = std::abs(small.measured - small.expected);
  small.pass = rep.small_exponent > 0 && rep.small_exponent < 1;
  rep.checks.push_back(small);

  AssumptionCheck large{"large-density exponent of p' in (1/5,1)", false, rep.large_exponent,
                        eos.gamma_star() - 1, 0.0};
  large.drift = std::abs(large.measured - large.expected);
  large.pass = rep.large_exponent > 0.2 && rep.large_exponent < 1;
  rep.checks.push_back(large);
  return rep;
}

MassConditionReport check_mass_condition_b(const EquationOfState& eos,
                                           const std::vector<double>& s_grid) {
  MassConditionReport rep;
  const double inf = std::numeric_limits<double>::infinity();
  rep.left_margin = rep.right_margin = inf;
  rep.inverse_left_margin = rep.inverse_right_margin = inf;
  rep.g1_margin = rep.g2_margin = rep.g3_margin = inf;
  for (double s : s_grid) {
    if (!(s > 0)) throw DomainError("check_mass_condition_b: grid must be positive");
    const double h = eos.enthalpy(s), dp = eos.dpressure(s);
    rep.left_margin = std::min(rep.left_margin, (h - dp) / dp);
    rep.right_margin = std::min(rep.right_margin, (2 * dp - h) / dp);
    // inverse form at u = h(s)
    const double u = h;
    const double hi = eos.inverse_enthalpy(u), dhi = eos.dinverse_enthalpy(u);
    rep.inverse_left_margin = std::min(rep.inverse_left_margin, (u * dhi - hi) / hi);
    rep.inverse_right_margin = std::min(rep.inverse_right_margin, (2 * hi - u * dhi) / hi);
  }
  // g(w, r) = 4 pi r h^-1(w/r) on a (w, r) grid with w/r covering h(s_grid)
  const std::vector<double> radii = {0.05, 0.1, 0.25, 0.5, 0.75, 1.0};
  for (double r : radii) {
    for (double s : s_grid) {
      const double sigma = eos.enthalpy(s);
      const double w = sigma * r;
      const double hi = eos.inverse_enthalpy(sigma), dhi = eos.dinverse_enthalpy(sigma);
      const double g = 4 * kPi * r * hi;
      const double gw = 4 * kPi * dhi;
      const double gr = 4 * kPi * hi - 4 * kPi * sigma * dhi;
      rep.g1_margin = std::min(rep.g1_margin, -(g - w * gw) / g);
      rep.g2_margin = std::min(rep.g2_margin, -gr / g);
      rep.g3_margin = std::min(rep.g3_margin, (r * gr + 3 * g - w * gw) / g);
    }
  }
  const double tol = 1e-10;
  rep.holds = rep.left_margin > 0 && rep.right_margin >= -tol && rep.inverse_left_margin > 0 &&
              rep.inverse_right_margin >= -tol && rep.g1_margin > 0 && rep.g2_margin >= -tol &&
              rep.g3_margin >= -tol;
  return rep;
}

// ------------------------------------------------------------ rotation

RotationProfile::RotationProfile(std::function<double(double)> w2, std::string name, bool uniform)
    : w2_(std::move(w2)), name_(std::move(name)), uniform_(uniform) {
  const int n = 400;
  auto tab = std::make_shared<std::vector<double>>(n + 1, 0.0);
  for (int k = 0; k < n; ++k) {
    const double a = k * step_, b = a + step_;
    (*tab)[k + 1] = (*tab)[k] + gauss_legendre([&](double s) { return w2_(s) * s; }, a, b, 8);
  }
  table_ = tab;
}

RotationProfile RotationProfile::uniform(double omega) {
  const double w2 = omega * omega;
  std::ostringstream nm;
  nm << "uniform(" << omega << ")";
  return RotationProfile([w2](double) { return w2; }, nm.str(), true);
}

RotationProfile RotationProfile::power(double coef, double exponent) {
  if (exponent < 0) throw DomainError("rotation power: exponent must be nonnegative");
  std::ostringstream nm;
  nm << "power(" << coef << "," << exponent << ")";
  return RotationProfile([coef, exponent](double s) { return coef * std::pow(s, exponent); },
                         nm.str(), false);
}

RotationProfile RotationProfile::custom(std::function<double(double)> omega_sq, std::string name) {
  return RotationProfile(std::move(omega_sq), std::move(name), false);
}

double RotationProfile::omega_sq(double r) const { return w2_(r); }

double RotationProfile::J(double r) const {
  if (r <= 0) return 0.0;
  const auto& tab = *table_;
  const int n = static_cast<int>(tab.size()) - 1;
  int k = static_cast<int>(std::floor(r / step_));
  auto seg = [&](double a, double b) {
    return gauss_legendre([&](double s) { return w2_(s) * s; }, a, b, 8);
  };
  if (k < n) return tab[k] + seg(k * step_, r);
  double acc = tab[n], a = n * step_;
  while (r - a > step_) {
    acc += seg(a, a + step_);
    a += step_;
  }
  return acc + seg(a, r);
}

}  // namespace rotstar
