#ifndef ROTSTAR_TOOLS_CONFIG_HPP
#define ROTSTAR_TOOLS_CONFIG_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rotstar/eos.hpp"

namespace rotstar::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat "key = value" lines; '#' starts a comment. Lists are comma separated.
struct RunConfig {
  std::string model = "ep";  // ep | vp

  // barotropic law: power_law with gamma, or power_sum with terms "coef:gamma, ..."
  std::string eos = "power_law";
  double gamma = 1.5;
  std::vector<PowerTerm> terms;

  // Vlasov ansatz: psi = const | quadratic(c)
  double mu = 0.0;
  std::string psi = "const";
  double psi_c = 0.0;

  double a = 1.0;

  // omega^2(r): uniform with omega, or power with omega_sq_coef * r^omega_sq_exp
  std::string rotation = "uniform";
  double omega = 1.0;
  double omega_sq_coef = 1.0;
  double omega_sq_exp = 0.0;

  std::vector<double> kappa = {0.0};

  // mass-curve
  double a_min = 0.5, a_max = 2.0;
  int a_samples = 16;

  // mode operators
  int l_max = 8;
  int n = 256;
  std::vector<int> ladder = {128, 256, 512};
  int margin_l_max = 4;

  // rotating solver; clustering falls back to the model default when unset
  int panels = 10;
  int order = 6;
  int n_mu = 6;
  std::optional<double> clustering;
  double tol = 1e-8;
  double rtol = 1e-12;

  // eos-check sample range
  double s_min = 1e-8, s_max = 1e8;
  int s_samples = 161;

  int theta_samples = 91;
  std::string out = "out";
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace rotstar::cli

#endif
