#ifndef ROTSTAR_EOS_HPP
#define ROTSTAR_EOS_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace rotstar {

struct PowerTerm {
  double coef;
  double gamma;
};

// Barotropic pressure law p(rho) with enthalpy h(rho) = int_0^rho p'(a)/a da.
// Immutable; copies share the cached enthalpy table.
class EquationOfState {
 public:
  // p(s) = s^gamma with closed-form enthalpy.
  static EquationOfState power_law(double gamma);
  // p(s) = sum coef_i s^gamma_i, enthalpy by quadrature.
  static EquationOfState power_sum(std::vector<PowerTerm> terms);
  // Arbitrary law given p, p', p''. Enthalpy by quadrature.
  static EquationOfState custom(std::function<double(double)> p, std::function<double(double)> dp,
                                std::function<double(double)> d2p, std::string name = "custom");

  double pressure(double s) const;
  double dpressure(double s) const;
  double d2pressure(double s) const;

  double enthalpy(double rho) const;
  double denthalpy(double rho) const;   // p'(rho)/rho
  double d2enthalpy(double rho) const;
  double inverse_enthalpy(double u) const;   // 0 for u <= 0
  double dinverse_enthalpy(double u) const;  // 0 for u < 0
  // k(s) = h(s) - s h'(s)
  double k(double s) const;

  double gamma() const;
  double gamma_star() const;
  double c0() const;
  double c1() const;
  bool is_power_law() const;
  // Nonempty for power_law and power_sum.
  const std::vector<PowerTerm>& terms() const;
  const std::string& name() const;

  struct Impl;

 private:
  explicit EquationOfState(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

struct AssumptionCheck {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double expected = 0.0;
  double drift = 0.0;
};

struct AssumptionReport {
  bool monotone = false;
  double small_exponent = 0.0;  // local exponent of p' at the smallest sample
  double large_exponent = 0.0;  // local exponent of p' at the largest sample
  std::vector<AssumptionCheck> checks;
  bool all_pass() const;
};

struct SampleSpec {
  double s_min = 1e-8;
  double s_max = 1e8;
  int n = 161;
};

AssumptionReport validate_assumptions(const EquationOfState& eos, const SampleSpec& spec = {});

struct MassConditionReport {
  // min over samples of (h - p')/p' and (2p' - h)/p'
  double left_margin = 0.0;
  double right_margin = 0.0;
  // the same chain in inverse form, min of (s(h^-1)' - h^-1)/h^-1 and (2h^-1 - s(h^-1)')/h^-1
  double inverse_left_margin = 0.0;
  double inverse_right_margin = 0.0;
  // g(w, r) = 4 pi r h^-1(w/r): min of -(g - w g_w)/g, -g_r/g, (r g_r + 3g - w g_w)/g
  double g1_margin = 0.0;
  double g2_margin = 0.0;
  double g3_margin = 0.0;
  bool holds = false;
};

MassConditionReport check_mass_condition_b(const EquationOfState& eos,
                                           const std::vector<double>& s_grid);

std::vector<double> log_grid(double lo, double hi, int n);

// omega^2(r) and J(r) = int_0^r omega^2(s) s ds
class RotationProfile {
 public:
  static RotationProfile uniform(double omega);
  // omega^2(s) = coef * s^exponent
  static RotationProfile power(double coef, double exponent);
  static RotationProfile custom(std::function<double(double)> omega_sq, std::string name = "custom");

  double omega_sq(double r) const;
  double J(double r) const;
  const std::string& name() const { return name_; }
  bool is_uniform() const { return uniform_; }

 private:
  RotationProfile(std::function<double(double)> w2, std::string name, bool uniform);
  std::function<double(double)> w2_;
  std::shared_ptr<const std::vector<double>> table_;
  double step_ = 0.05;
  std::string name_;
  bool uniform_ = false;
};

}  // namespace rotstar

#endif
