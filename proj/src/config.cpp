#include "pminres/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace pminres {

namespace {

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_error(const std::string& source, int line, const std::string& field, const std::string& what) {
  std::ostringstream os;
  os << source;
  if (line > 0) os << ":" << line;
  if (!field.empty()) os << ": " << field;
  os << ": " << what;
  return os.str();
}

// Setting errors are thrown as invalid_argument and given a location by the caller.
double to_double(const std::string& v) {
  double x = 0.0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("expected a number, got '" + v + "'");
  return x;
}

int to_int(const std::string& v) {
  int x = 0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("expected an integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::string s = v;
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

using Setter = std::function<void(ProblemConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"p", [](ProblemConfig& c, const std::string& v) { c.p_target = to_double(v); }},
      {"sigma", [](ProblemConfig& c, const std::string& v) { c.sigma = to_double(v); }},
      {"x0",
       [](ProblemConfig& c, const std::string& v) {
         const auto parts = split_list(v);
         if (parts.size() != 2) throw std::invalid_argument("expected two coordinates, got '" + v + "'");
         c.x0 = {to_double(parts[0]), to_double(parts[1])};
       }},
      {"initial_n", [](ProblemConfig& c, const std::string& v) { c.initial_n = to_int(v); }},
      {"initial_uniform", [](ProblemConfig& c, const std::string& v) { c.initial_uniform = to_int(v); }},
      {"strategy", [](ProblemConfig& c, const std::string& v) { c.strategy = parse_strategy(v); }},
      {"theta", [](ProblemConfig& c, const std::string& v) { c.theta = to_double(v); }},
      {"levels", [](ProblemConfig& c, const std::string& v) { c.max_levels = to_int(v); }},
      {"pre_adapt_steps", [](ProblemConfig& c, const std::string& v) { c.pre_adapt_steps = to_int(v); }},
      {"newton_tol", [](ProblemConfig& c, const std::string& v) { c.solver.newton_tol = to_double(v); }},
      {"max_newton", [](ProblemConfig& c, const std::string& v) { c.solver.max_newton = to_int(v); }},
      {"continuation_step",
       [](ProblemConfig& c, const std::string& v) { c.solver.continuation_step = to_double(v); }},
      {"min_step", [](ProblemConfig& c, const std::string& v) { c.solver.min_step = to_double(v); }},
      {"damping", [](ProblemConfig& c, const std::string& v) { c.solver.damping.enabled = to_bool(v); }},
      {"max_halvings", [](ProblemConfig& c, const std::string& v) { c.solver.damping.max_halvings = to_int(v); }},
      {"regularization", [](ProblemConfig& c, const std::string& v) { c.solver.regularization = to_double(v); }},
      {"linear_solver",
       [](ProblemConfig& c, const std::string& v) {
         if (v == "direct")
           c.solver.linear.method = LinearMethod::Direct;
         else if (v == "minres")
           c.solver.linear.method = LinearMethod::Minres;
         else
           throw std::invalid_argument("expected direct or minres, got '" + v + "'");
       }},
      {"linear_tol", [](ProblemConfig& c, const std::string& v) { c.solver.linear.rel_tol = to_double(v); }},
      {"linear_max_iterations",
       [](ProblemConfig& c, const std::string& v) { c.solver.linear.max_iterations = to_int(v); }},
      {"warm_start", [](ProblemConfig& c, const std::string& v) { c.warm_start = to_bool(v); }},
      {"load_quad_degree", [](ProblemConfig& c, const std::string& v) { c.load_quad_degree = to_int(v); }},
      {"error_quad_degree", [](ProblemConfig& c, const std::string& v) { c.error_quad_degree = to_int(v); }},
      {"localization_radius",
       [](ProblemConfig& c, const std::string& v) { c.localization_radius = to_double(v); }},
      {"output_dir", [](ProblemConfig& c, const std::string& v) { c.output_dir = v; }},
      {"snapshot_levels",
       [](ProblemConfig& c, const std::string& v) {
         c.snapshot_levels.clear();
         for (const auto& s : split_list(v)) c.snapshot_levels.push_back(to_int(s));
       }},
      {"write_vtk", [](ProblemConfig& c, const std::string& v) { c.write_vtk = to_bool(v); }},
      {"telemetry", [](ProblemConfig& c, const std::string& v) { c.telemetry = to_bool(v); }},
  };
  return table;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& field, const std::string& what)
    : std::runtime_error(format_error(source, line, field, what)), line_(line), field_(field) {}

void apply_setting(ProblemConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("<override>", 0, key, "unknown key");
  try {
    it->second(cfg, trim(value));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("<override>", 0, key, e.what());
  }
}

ProblemConfig parse_config(std::istream& in, const std::string& source, ProblemConfig base) {
  std::map<std::string, int> seen;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, lineno, "", "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(source, lineno, "", "missing key");
    if (auto it = seen.find(key); it != seen.end())
      throw ConfigError(source, lineno, key, "duplicate key (first set on line " + std::to_string(it->second) + ")");
    seen[key] = lineno;
    if (key == "version") {
      int v = 0;
      try {
        v = to_int(value);
      } catch (const std::exception& e) {
        throw ConfigError(source, lineno, key, e.what());
      }
      if (v != kConfigVersion)
        throw ConfigError(source, lineno, key,
                          "unsupported version " + value + " (expected " + std::to_string(kConfigVersion) + ")");
      continue;
    }
    const auto& table = setters();
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError(source, lineno, key, "unknown key");
    try {
      it->second(base, value);
    } catch (const std::exception& e) {
      throw ConfigError(source, lineno, key, e.what());
    }
  }
  try {
    base.validate();
  } catch (const std::exception& e) {
    throw ConfigError(source, 0, "", e.what());
  }
  return base;
}

ProblemConfig load_config(const std::string& path, ProblemConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "", "cannot open file");
  return parse_config(in, path, std::move(base));
}

void write_config(const ProblemConfig& cfg, std::ostream& os) {
  std::ostringstream o;
  o << "version = " << kConfigVersion << "\n";
  o << "p = " << num(cfg.p_target) << "\n";
  o << "sigma = " << num(cfg.sigma) << "\n";
  o << "x0 = " << num(cfg.x0.x) << ", " << num(cfg.x0.y) << "\n";
  o << "initial_n = " << cfg.initial_n << "\n";
  o << "initial_uniform = " << cfg.initial_uniform << "\n";
  o << "strategy = " << to_string(cfg.strategy) << "\n";
  o << "theta = " << num(cfg.theta) << "\n";
  o << "levels = " << cfg.max_levels << "\n";
  o << "pre_adapt_steps = " << cfg.pre_adapt_steps << "\n";
  o << "newton_tol = " << num(cfg.solver.newton_tol) << "\n";
  o << "max_newton = " << cfg.solver.max_newton << "\n";
  o << "continuation_step = " << num(cfg.solver.continuation_step) << "\n";
  o << "min_step = " << num(cfg.solver.min_step) << "\n";
  o << "damping = " << (cfg.solver.damping.enabled ? "true" : "false") << "\n";
  o << "max_halvings = " << cfg.solver.damping.max_halvings << "\n";
  o << "regularization = " << num(cfg.solver.regularization) << "\n";
  o << "linear_solver = " << (cfg.solver.linear.method == LinearMethod::Direct ? "direct" : "minres") << "\n";
  o << "linear_tol = " << num(cfg.solver.linear.rel_tol) << "\n";
  o << "linear_max_iterations = " << cfg.solver.linear.max_iterations << "\n";
  o << "warm_start = " << (cfg.warm_start ? "true" : "false") << "\n";
  o << "load_quad_degree = " << cfg.load_quad_degree << "\n";
  o << "error_quad_degree = " << cfg.error_quad_degree << "\n";
  o << "localization_radius = " << num(cfg.localization_radius) << "\n";
  if (!cfg.output_dir.empty()) o << "output_dir = " << cfg.output_dir << "\n";
  o << "snapshot_levels =";
  for (std::size_t i = 0; i < cfg.snapshot_levels.size(); ++i) o << (i ? ", " : " ") << cfg.snapshot_levels[i];
  o << "\n";
  o << "write_vtk = " << (cfg.write_vtk ? "true" : "false") << "\n";
  o << "telemetry = " << (cfg.telemetry ? "true" : "false") << "\n";
  os << o.str();
}

}  // namespace pminres
