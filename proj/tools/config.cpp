#include "config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace rotstar::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& s) {
  double v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

int to_int(const std::string& s) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) throw ConfigError("not an integer: '" + s + "'");
  return v;
}

void parse_psi(const std::string& v, RunConfig& c) {
  if (v == "const") {
    c.psi = v;
    c.psi_c = 0.0;
    return;
  }
  const std::string head = "quadratic(";
  if (v.rfind(head, 0) == 0 && v.back() == ')') {
    c.psi = "quadratic";
    c.psi_c = to_double(trim(v.substr(head.size(), v.size() - head.size() - 1)));
    return;
  }
  throw ConfigError("psi must be const or quadratic(c), got '" + v + "'");
}

void validate(const RunConfig& c) {
  if (c.model != "ep" && c.model != "vp") throw ConfigError("model must be ep or vp");
  if (c.eos != "power_law" && c.eos != "power_sum") throw ConfigError("eos must be power_law or power_sum");
  if (c.eos == "power_sum" && c.terms.empty()) throw ConfigError("power_sum needs terms");
  if (c.rotation != "uniform" && c.rotation != "power") throw ConfigError("rotation must be uniform or power");
  if (c.kappa.empty() || c.kappa.front() != 0.0) throw ConfigError("kappa schedule must start at 0");
  for (std::size_t i = 1; i < c.kappa.size(); ++i)
    if (!(c.kappa[i] > c.kappa[i - 1])) throw ConfigError("kappa schedule must increase");
  if (!(c.tol > 0) || !(c.rtol > 0)) throw ConfigError("tolerances must be positive");
  if (!(c.a > 0)) throw ConfigError("a must be positive");
  if (!(c.a_min > 0) || !(c.a_max > c.a_min) || c.a_samples < 2) throw ConfigError("bad a range for mass-curve");
  if (!(c.s_min > 0) || !(c.s_max > c.s_min) || c.s_samples < 2) throw ConfigError("bad s range for eos-check");
  if (c.l_max < 0 || c.margin_l_max < 0) throw ConfigError("l_max must be nonnegative");
  if (c.n < 4 || c.panels < 1 || c.order < 1 || c.n_mu < 1 || c.theta_samples < 2)
    throw ConfigError("grid sizes too small");
  if (c.ladder.empty()) throw ConfigError("ladder must not be empty");
  for (int n : c.ladder)
    if (n < 4) throw ConfigError("ladder sizes must be at least 4");
  if (c.clustering && !(*c.clustering >= 0 && *c.clustering < 1)) throw ConfigError("clustering must lie in [0, 1)");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  using Setter = std::function<void(const std::string&)>;
  auto dbl = [](double& x) -> Setter { return [&x](const std::string& v) { x = to_double(v); }; };
  auto num = [](int& x) -> Setter { return [&x](const std::string& v) { x = to_int(v); }; };
  auto str = [](std::string& x) -> Setter { return [&x](const std::string& v) { x = v; }; };
  const std::map<std::string, Setter> keys = {
      {"model", str(c.model)},
      {"eos", str(c.eos)},
      {"gamma", dbl(c.gamma)},
      {"terms",
       [&c](const std::string& v) {
         c.terms.clear();
         for (const auto& t : split(v, ',')) {
           const auto pair = split(t, ':');
           if (pair.size() != 2) throw ConfigError("terms entries are coef:gamma, got '" + t + "'");
           c.terms.push_back({to_double(pair[0]), to_double(pair[1])});
         }
       }},
      {"mu", dbl(c.mu)},
      {"psi", [&c](const std::string& v) { parse_psi(v, c); }},
      {"a", dbl(c.a)},
      {"rotation", str(c.rotation)},
      {"omega", dbl(c.omega)},
      {"omega_sq_coef", dbl(c.omega_sq_coef)},
      {"omega_sq_exp", dbl(c.omega_sq_exp)},
      {"kappa",
       [&c](const std::string& v) {
         c.kappa.clear();
         for (const auto& t : split(v, ',')) c.kappa.push_back(to_double(t));
       }},
      {"a_min", dbl(c.a_min)},
      {"a_max", dbl(c.a_max)},
      {"a_samples", num(c.a_samples)},
      {"l_max", num(c.l_max)},
      {"n", num(c.n)},
      {"ladder",
       [&c](const std::string& v) {
         c.ladder.clear();
         for (const auto& t : split(v, ',')) c.ladder.push_back(to_int(t));
       }},
      {"margin_l_max", num(c.margin_l_max)},
      {"panels", num(c.panels)},
      {"order", num(c.order)},
      {"n_mu", num(c.n_mu)},
      {"clustering", [&c](const std::string& v) { c.clustering = to_double(v); }},
      {"tol", dbl(c.tol)},
      {"rtol", dbl(c.rtol)},
      {"s_min", dbl(c.s_min)},
      {"s_max", dbl(c.s_max)},
      {"s_samples", num(c.s_samples)},
      {"theta_samples", num(c.theta_samples)},
      {"out", str(c.out)},
  };

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    try {
      it->second(value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + key + ": " + e.what());
    }
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace rotstar::cli
