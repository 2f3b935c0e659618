#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "config.hpp"
#include "output.hpp"
#include "rotstar/eos.hpp"
#include "rotstar/errors.hpp"
#include "rotstar/linop.hpp"
#include "rotstar/radial.hpp"
#include "rotstar/rotating.hpp"
#include "rotstar/vlasov.hpp"

using namespace rotstar;
using namespace rotstar::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kDegenerate = 4 };

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

EquationOfState make_eos(const RunConfig& c) {
  if (c.eos == "power_sum") return EquationOfState::power_sum(c.terms);
  if (c.gamma == 2.0) std::cerr << "warning: gamma = 2 sits on the edge of the admissible range\n";
  return EquationOfState::power_law(c.gamma);
}

VlasovAnsatz make_ansatz(const RunConfig& c) {
  return c.psi == "quadratic" ? VlasovAnsatz::quadratic(c.mu, c.psi_c) : VlasovAnsatz::constant(c.mu);
}

RotationProfile make_rotation(const RunConfig& c) {
  if (c.rotation == "power") return RotationProfile::power(c.omega_sq_coef, c.omega_sq_exp);
  return RotationProfile::uniform(c.omega);
}

RadialOptions radial_options(const RunConfig& c) {
  RadialOptions o;
  o.rtol = c.rtol;
  return o;
}

RotatingOptions rotating_options(const RunConfig& c, RotatingOptions o) {
  o.panels = c.panels;
  o.order = c.order;
  o.n_mu = c.n_mu;
  o.l_max = c.l_max;
  o.tol = c.tol;
  if (c.clustering) o.clustering = *c.clustering;
  return o;
}

json radial_json(const RadialStar& s) {
  json j;
  j["a"] = s.a;
  j["R"] = s.R;
  j["M"] = s.mass;
  j["M_prime"] = s.mass_prime;
  j["law"] = s.law ? s.law->name : "";
  j["r"] = s.grid.nodes;
  j["u0"] = std::vector<double>(s.u0.data(), s.u0.data() + s.u0.size());
  j["rho0"] = std::vector<double>(s.rho0.data(), s.rho0.data() + s.rho0.size());
  return j;
}

// ------------------------------------------------------------------- radial

int cmd_radial(const RunConfig& c, const fs::path& out) {
  const EquationOfState eos = make_eos(c);
  const RadialStar s = solve_radial(eos, c.a, radial_options(c));
  write_atomic(out / "star.json", radial_json(s).dump(1) + "\n");
  std::string cond = "mass condition ok";
  if (std::abs(s.mass_prime) < 1e-6 * s.mass / s.a)
    cond = eos.is_power_law() && std::abs(eos.gamma() - 4.0 / 3.0) < 1e-12 ? "mass condition FAILED (γ=4/3)"
                                                                           : "mass condition FAILED (M'(a) = 0)";
  std::cout << "radial " << eos.name() << " a = " << c.a << ": R = " << fmt("%.10f", s.R)
            << ", M = " << fmt("%.10f", s.mass) << ", M' = " << fmt("%.6e", s.mass_prime) << "; " << cond << "\n";
  return kOk;
}

int cmd_vp_radial(const RunConfig& c, const fs::path& out) {
  const VlasovStar s = solve_vp_radial(make_ansatz(c), c.a, radial_options(c));
  const ScalingIdentity id = scaling_identity(s);
  json j = radial_json(s.radial);
  j["mu"] = c.mu;
  j["ansatz"] = s.ansatz->name();
  j["flux_residual"] = s.flux_residual();
  j["scaling_interior_residual"] = id.interior_residual;
  j["scaling_boundary_residual"] = id.boundary_residual;
  write_atomic(out / "star.json", j.dump(1) + "\n");
  std::cout << "vp-radial " << s.ansatz->name() << " a = " << c.a << ": R = " << fmt("%.10f", s.R())
            << ", M = " << fmt("%.10f", s.M()) << ", flux identity residual = " << fmt("%.3e", s.flux_residual())
            << ", scaling identity residuals = " << fmt("%.3e", id.interior_residual) << " / "
            << fmt("%.3e", id.boundary_residual) << "\n";
  return kOk;
}

int cmd_mass_curve(const RunConfig& c, const fs::path& out) {
  const EquationOfState eos = make_eos(c);
  const MassCurve mc = mass_curve(eos, c.a_min, c.a_max, c.a_samples, radial_options(c));
  CsvTable t({{"a", "U"}, {"R", "L"}, {"M", "M"}, {"M_prime", "M/U"}});
  for (const auto& s : mc.samples) t.add_row({s.a, s.R, s.M, s.Mprime});
  write_atomic(out / "mass_curve.csv", t.str());
  std::cout << "mass-curve " << eos.name() << ": " << mc.samples.size() << " samples on [" << c.a_min << ", "
            << c.a_max << "]\n";
  return kOk;
}

int cmd_eos_check(const RunConfig& c, const fs::path& out) {
  const EquationOfState eos = make_eos(c);
  const AssumptionReport ar = validate_assumptions(eos, {c.s_min, c.s_max, c.s_samples});
  const MassConditionReport mc = check_mass_condition_b(eos, log_grid(c.s_min, c.s_max, c.s_samples));
  json j;
  j["eos"] = eos.name();
  j["monotone"] = ar.monotone;
  j["small_exponent"] = ar.small_exponent;
  j["large_exponent"] = ar.large_exponent;
  for (const auto& ch : ar.checks)
    j["checks"].push_back(
        {{"name", ch.name}, {"pass", ch.pass}, {"measured", ch.measured}, {"expected", ch.expected}, {"drift", ch.drift}});
  j["mass_condition_b"] = {{"holds", mc.holds},
                           {"left_margin", mc.left_margin},
                           {"right_margin", mc.right_margin},
                           {"inverse_left_margin", mc.inverse_left_margin},
                           {"inverse_right_margin", mc.inverse_right_margin},
                           {"g1_margin", mc.g1_margin},
                           {"g2_margin", mc.g2_margin},
                           {"g3_margin", mc.g3_margin}};
  write_atomic(out / "eos_check.json", j.dump(1) + "\n");
  std::cout << "eos-check " << eos.name() << ": assumptions " << (ar.all_pass() ? "pass" : "FAIL")
            << ", mass condition (b) " << (mc.holds ? "holds" : "does not hold") << "\n";
  for (const auto& ch : ar.checks)
    if (!ch.pass) std::cout << "  failed: " << ch.name << " measured " << ch.measured << " expected " << ch.expected << "\n";
  return kOk;
}

// ------------------------------------------------------------ kernel margin

int cmd_kernel_margin(const RunConfig& c, const fs::path& out) {
  const bool vp = c.model == "vp";
  std::optional<RadialStar> ep;
  std::optional<VlasovStar> vs;
  if (vp)
    vs = solve_vp_radial(make_ansatz(c), c.a, radial_options(c));
  else
    ep = solve_radial(make_eos(c), c.a, radial_options(c));

  std::vector<Column> cols = {{"l", "1"}, {"n", "1"}, {"sigma_min", "1/L^2"}};
  if (vp) cols.push_back({"mu", "1"});
  CsvTable t(cols);
  std::cout << "kernel-margin " << (vp ? vs->ansatz->name() : ep->eos->name()) << " a = " << c.a << "\n";
  for (int l = 0; l <= c.margin_l_max; ++l) {
    std::vector<double> sig;
    for (int n : c.ladder) {
      const ModeOperator op = vp ? assemble_vp_mode(*vs, l, n) : assemble_mode(*ep, l, n);
      sig.push_back(kernel_margin(op).sigma);
      std::vector<double> row = {double(l), double(n), sig.back()};
      if (vp) row.push_back(c.mu);
      t.add_row(row);
    }
    const double drift = sig.back() / sig.front();
    std::string verdict = std::abs(drift - 1) < 0.1 ? "stable" : (drift < 0.5 ? "decaying" : "drifting");
    if (l == 1) verdict += " (translation mode)";
    std::cout << "  l = " << l << ": sigma_min " << fmt("%.6e", sig.front()) << " -> " << fmt("%.6e", sig.back())
              << " " << verdict << "\n";
  }
  write_atomic(out / "kernel_margin.csv", t.str());
  return kOk;
}

// ---------------------------------------------------------------- perturb

int write_shape(const RunConfig& c, const fs::path& out, const ShapeReport& rep, const std::string& title) {
  std::vector<Column> cols = {{"theta", "rad"}, {"displacement_per_kappa" + std::to_string(rep.order), "L"}};
  if (c.model == "vp") cols.push_back({"mu", "1"});
  CsvTable shape(cols);
  double best = -INFINITY, at = 0;
  for (int i = 0; i < c.theta_samples; ++i) {
    const double th = kPi * i / (c.theta_samples - 1);
    const double d = rep.boundary_radius(1.0, th) - rep.R;
    std::vector<double> row = {th, d};
    if (c.model == "vp") row.push_back(c.mu);
    shape.add_row(row);
    if (d > best) best = d, at = th;
  }
  CsvTable modes({{"l", "1"}, {"xi_l_at_R", "L^3"}});
  for (const auto& [l, x] : rep.xi_l) modes.add_row({double(l), x});
  write_atomic(out / "shape.csv", shape.str());
  write_atomic(out / "modes.csv", modes.str());
  std::cout << title << ": xi_2(R) = " << fmt("%.6e", rep.xi_l.count(2) ? rep.xi_l.at(2) : 0.0)
            << ", oblateness rate = " << fmt("%.6e", rep.oblateness_rate()) << " per kappa^" << rep.order
            << ", max displacement at theta = " << fmt("%.4f", at) << "\n";
  return kOk;
}

ShapeOptions shape_options(const RunConfig& c) {
  ShapeOptions o;
  o.l_max = c.l_max;
  o.n = c.n;
  return o;
}

int cmd_perturb(const RunConfig& c, const fs::path& out) {
  const RadialStar s = solve_radial(make_eos(c), c.a, radial_options(c));
  const ShapeReport rep = first_order_shape(s, make_rotation(c), shape_options(c));
  return write_shape(c, out, rep, "perturb " + s.eos->name());
}

int cmd_vp_perturb(const RunConfig& c, const fs::path& out) {
  RunConfig cv = c;
  cv.model = "vp";
  const VlasovStar s = solve_vp_radial(make_ansatz(c), c.a, radial_options(c));
  const ShapeReport rep = vp_rotation_response(s, shape_options(c));
  return write_shape(cv, out, rep, "vp-perturb " + s.ansatz->name());
}

// ------------------------------------------------------------- continuation

int write_continuation(const RunConfig& c, const fs::path& out, const ContinuationResult& res, double M,
                       const PanelGrid& grid, const std::vector<double>& mu, bool vp) {
  std::vector<Column> cols = {{"kappa", "1"},       {"R_eq", "L"},     {"R_pole", "L"},
                              {"mass", "M"},        {"mass_factor", "1"}, {"x_norm", "1"},
                              {"residual", "U"},    {"newton_iters", "1"}};
  if (vp) cols.push_back({"mu", "1"});
  CsvTable t(cols);
  int k = 0;
  for (const auto& s : res.solutions) {
    std::vector<double> row = {s.kappa, s.R_eq, s.R_pole, s.mass_check, s.mass_factor, s.x_norm, s.residual,
                               double(s.newton_iters)};
    if (vp) row.push_back(c.mu);
    t.add_row(row);
    json j;
    j["kappa"] = s.kappa;
    j["R_eq"] = s.R_eq;
    j["R_pole"] = s.R_pole;
    j["mass"] = s.mass_check;
    j["mass_factor"] = s.mass_factor;
    j["residual"] = s.residual;
    j["residual_history"] = s.residual_history;
    j["radial_nodes"] = std::vector<double>(grid.nodes.data(), grid.nodes.data() + grid.nodes.size());
    j["mu_nodes"] = mu;
    j["zeta_over_r2"] = std::vector<double>(s.q.data(), s.q.data() + s.q.size());
    char name[32];
    std::snprintf(name, sizeof name, "kappa_%03d.json", k++);
    write_atomic(out / name, j.dump(1) + "\n");
  }
  write_atomic(out / "continuation.csv", t.str());
  double drift = 0;
  for (const auto& s : res.solutions) drift = std::max(drift, std::abs(s.mass_check - M) / M);
  std::cout << "continue: " << res.solutions.size() << " of " << c.kappa.size() << " kappa values, max mass drift "
            << fmt("%.3e", drift) << "\n";
  if (!res.complete) {
    std::cerr << "stopped: " << res.stop_reason << "\n";
    return kSolver;
  }
  return kOk;
}

int cmd_continue(const RunConfig& c, const fs::path& out) {
  const RadialStar s = solve_radial(make_eos(c), c.a, radial_options(c));
  const RotatingProblem p(s, make_rotation(c), rotating_options(c, {}));
  return write_continuation(c, out, newton_continue(p, c.kappa), s.mass, p.radial(), p.mu(), false);
}

int cmd_vp_continue(const RunConfig& c, const fs::path& out) {
  const VlasovStar s = solve_vp_radial(make_ansatz(c), c.a, radial_options(c));
  const VlasovProblem p(s, rotating_options(c, vp_rotating_options()));
  return write_continuation(c, out, vp_newton(p, c.kappa), s.M(), p.radial(), p.mu(), true);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotating self-gravitating equilibria: radial stars, mode operators, rotating shapes"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int threads = 0;
  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--threads", threads, "worker threads (default: ROTSTAR_THREADS or 1)")->check(CLI::PositiveNumber);

  using Cmd = int (*)(const RunConfig&, const fs::path&);
  const std::vector<std::tuple<std::string, std::string, Cmd>> cmds = {
      {"radial", "barotropic radial star", cmd_radial},
      {"mass-curve", "M(a) and M'(a) over a range of central values", cmd_mass_curve},
      {"kernel-margin", "smallest singular value of each mode operator under refinement", cmd_kernel_margin},
      {"perturb", "first-order rotating shape", cmd_perturb},
      {"continue", "Newton continuation in kappa", cmd_continue},
      {"eos-check", "pressure-law assumptions and mass condition (b)", cmd_eos_check},
      {"vp-radial", "radial Vlasov-Poisson star", cmd_vp_radial},
      {"vp-perturb", "second-order Vlasov-Poisson rotating shape", cmd_vp_perturb},
      {"vp-continue", "Vlasov-Poisson Newton continuation in kappa", cmd_vp_continue},
  };
  for (const auto& [name, help, fn] : cmds) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (threads == 0) {
    if (const char* env = std::getenv("ROTSTAR_THREADS")) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        threads = 0;
      }
      if (threads < 1) {
        std::cerr << "config error: ROTSTAR_THREADS must be a positive integer\n";
        return kConfig;
      }
    }
  }
  set_thread_count(threads > 0 ? threads : 1);

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }
  const fs::path out = out_dir.empty() ? fs::path(cfg.out) : fs::path(out_dir);

  for (const auto& [name, help, fn] : cmds) {
    if (!app.got_subcommand(name)) continue;
    if (name.rfind("vp-", 0) == 0) cfg.model = "vp";
    try {
      return fn(cfg, out);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kConfig;
    } catch (const DomainError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kConfig;
    } catch (const DegenerateOperator& e) {
      std::cerr << "degenerate operator: " << e.what() << "\n";
      return kDegenerate;
    } catch (const SolverError& e) {
      std::cerr << "solver error: " << e.what() << "\n";
      return kSolver;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kSolver;
    }
  }
  return kConfig;
}
