#include "gaugeforge/run_config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>

#include "gaugeforge/errors.hpp"

namespace gaugeforge::config {

namespace {

using Value = std::variant<double, std::string, std::vector<double>>;

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Strips a trailing comment, respecting double quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

double parse_number(const std::string& tok, const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw ConfigError("config key '" + key + "': expected a number, got '" + tok + "'");
  return v;
}

Value parse_value(const std::string& raw, const std::string& key) {
  const std::string tok = trim(raw);
  if (tok.empty()) throw ConfigError("config key '" + key + "' has no value");
  if (tok.front() == '[') {
    if (tok.back() != ']') throw ConfigError("config key '" + key + "': unterminated array");
    std::vector<double> vals;
    std::string body = tok.substr(1, tok.size() - 2);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) {
        if (vals.empty() && trim(body).empty()) break;  // allow []
        throw ConfigError("config key '" + key + "': empty array element");
      }
      vals.push_back(parse_number(item, key));
    }
    return vals;
  }
  if (tok.front() == '"') {
    if (tok.size() < 2 || tok.back() != '"')
      throw ConfigError("config key '" + key + "': unterminated string");
    return tok.substr(1, tok.size() - 2);
  }
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() && *end == '\0') return v;
  return tok;  // bare string
}

double want_number(const Value& v, const std::string& key) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  throw ConfigError("config key '" + key + "' expects a number");
}

int want_int(const Value& v, const std::string& key) {
  const double d = want_number(v, key);
  const double r = std::round(d);
  if (std::fabs(d - r) > 1e-9) throw ConfigError("config key '" + key + "' expects an integer");
  return static_cast<int>(r);
}

std::uint64_t want_seed(const Value& v, const std::string& key) {
  const double d = want_number(v, key);
  if (d < 0.0 || std::fabs(d - std::round(d)) > 1e-9)
    throw ConfigError("config key '" + key + "' expects a nonnegative integer");
  return static_cast<std::uint64_t>(std::llround(d));
}

std::string want_string(const Value& v, const std::string& key) {
  if (const std::string* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError("config key '" + key + "' expects a string");
}

std::vector<double> want_array(const Value& v, const std::string& key) {
  if (const auto* a = std::get_if<std::vector<double>>(&v)) return *a;
  throw ConfigError("config key '" + key + "' expects an array");
}

using Setter = std::function<void(RunConfig&, const Value&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"m", [](RunConfig& c, const Value& v, const std::string& k) { c.m = want_int(v, k); }},
      {"n", [](RunConfig& c, const Value& v, const std::string& k) { c.n = want_int(v, k); }},
      {"N", [](RunConfig& c, const Value& v, const std::string& k) { c.N = want_int(v, k); }},
      {"output_dir",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.output_dir = want_string(v, k);
       }},
      {"omega.kind",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.omega.kind = want_string(v, k);
       }},
      {"omega.seed",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.omega.seed = want_seed(v, k);
       }},
      {"omega.target_norm",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.omega.target_norm = want_number(v, k);
       }},
      {"omega.smoothness_passes",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.omega.smoothness_passes = want_int(v, k);
       }},
      {"omega.sweep_norms",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.omega.sweep_norms = want_array(v, k);
       }},
      {"boundary.kind",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.boundary.kind = want_string(v, k);
       }},
      {"boundary.file",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.boundary.file = want_string(v, k);
       }},
      {"solver.tol",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.solver.tol = want_number(v, k);
       }},
      {"solver.newton_tol",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.solver.newton_tol = want_number(v, k);
       }},
      {"solver.steps",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.solver.steps = want_int(v, k);
       }},
      {"solver.newton_max",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.solver.newton_max = want_int(v, k);
       }},
      {"monitors.eps0",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.monitors.eps0 = want_number(v, k);
       }},
      {"monitors.eps1",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.monitors.eps1 = want_number(v, k);
       }},
      {"experiment.lambda",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.experiment.lambda = want_number(v, k);
       }},
      {"experiment.centers",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.experiment.centers = want_array(v, k);
       }},
      {"experiment.radii",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.experiment.radii = want_array(v, k);
       }},
      {"experiment.exponents",
       [](RunConfig& c, const Value& v, const std::string& k) {
         c.experiment.exponents = want_array(v, k);
       }},
  };
  return table;
}

void assign(RunConfig& cfg, const std::string& key, const Value& value) {
  auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, value, key);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_array(const std::vector<double>& a) {
  std::string s = "[";
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) s += ", ";
    s += fmt_double(a[i]);
  }
  return s + "]";
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;  // struct initializers are the defaults
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    assign(cfg, key, parse_value(line.substr(eq + 1), key));
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string key = trim(assignment.substr(0, eq));
  assign(cfg, key, parse_value(assignment.substr(eq + 1), key));
}

void validate(const RunConfig& cfg) {
  if (cfg.m < 3 || cfg.m > 5) throw ConfigError("m must lie in [3, 5]");
  if (cfg.n < 2 || cfg.n > 8) throw ConfigError("n must lie in [2, 8]");
  if (cfg.N < 9 || cfg.N % 2 == 0) throw ConfigError("N must be odd and >= 9");
  if (cfg.omega.kind != "zero" && cfg.omega.kind != "constant" && cfg.omega.kind != "random")
    throw ConfigError("omega.kind must be zero, constant, or random");
  if (!(cfg.omega.target_norm >= 0.0)) throw ConfigError("omega.target_norm must be >= 0");
  if (cfg.omega.smoothness_passes < 1)
    throw ConfigError("omega.smoothness_passes must be >= 1");
  for (double s : cfg.omega.sweep_norms)
    if (!(s > 0.0)) throw ConfigError("omega.sweep_norms entries must be positive");
  if (cfg.boundary.kind != "linear" && cfg.boundary.kind != "trig" &&
      cfg.boundary.kind != "file")
    throw ConfigError("boundary.kind must be linear, trig, or file");
  if (cfg.boundary.kind == "file" && cfg.boundary.file.empty())
    throw ConfigError("boundary.kind = file needs boundary.file");
  for (double t : {cfg.solver.tol, cfg.solver.newton_tol})
    if (!(t > 1e-14 && t < 1e-4))
      throw ConfigError("solver tolerances must lie in (1e-14, 1e-4)");
  if (cfg.solver.steps < 1) throw ConfigError("solver.steps must be >= 1");
  if (cfg.solver.newton_max < 1) throw ConfigError("solver.newton_max must be >= 1");
  if (!(cfg.monitors.eps0 > 0.0) || !(cfg.monitors.eps1 > 0.0))
    throw ConfigError("monitor thresholds must be positive");
  if (!(cfg.experiment.lambda > 0.0 && cfg.experiment.lambda < 1.0))
    throw ConfigError("experiment.lambda must lie in (0, 1)");
  if (cfg.experiment.centers.empty() ||
      cfg.experiment.centers.size() % static_cast<std::size_t>(cfg.m) != 0)
    throw ConfigError("experiment.centers must hold groups of m coordinates");
  if (cfg.experiment.radii.empty()) throw ConfigError("experiment.radii must not be empty");
  for (double r : cfg.experiment.radii)
    if (!(r > 0.0 && r <= 0.25)) throw ConfigError("experiment.radii must lie in (0, 0.25]");
  for (double p : cfg.experiment.exponents)
    if (!(p >= 1.0)) throw ConfigError("experiment.exponents must be >= 1");
  if (cfg.output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

std::string to_text(const RunConfig& cfg) {
  std::string s;
  s += "N = " + std::to_string(cfg.N) + "\n";
  s += "boundary.file = \"" + cfg.boundary.file + "\"\n";
  s += "boundary.kind = \"" + cfg.boundary.kind + "\"\n";
  s += "experiment.centers = " + fmt_array(cfg.experiment.centers) + "\n";
  s += "experiment.exponents = " + fmt_array(cfg.experiment.exponents) + "\n";
  s += "experiment.lambda = " + fmt_double(cfg.experiment.lambda) + "\n";
  s += "experiment.radii = " + fmt_array(cfg.experiment.radii) + "\n";
  s += "m = " + std::to_string(cfg.m) + "\n";
  s += "monitors.eps0 = " + fmt_double(cfg.monitors.eps0) + "\n";
  s += "monitors.eps1 = " + fmt_double(cfg.monitors.eps1) + "\n";
  s += "n = " + std::to_string(cfg.n) + "\n";
  s += "omega.kind = \"" + cfg.omega.kind + "\"\n";
  s += "omega.seed = " + std::to_string(cfg.omega.seed) + "\n";
  s += "omega.smoothness_passes = " + std::to_string(cfg.omega.smoothness_passes) + "\n";
  s += "omega.sweep_norms = " + fmt_array(cfg.omega.sweep_norms) + "\n";
  s += "omega.target_norm = " + fmt_double(cfg.omega.target_norm) + "\n";
  s += "output_dir = \"" + cfg.output_dir + "\"\n";
  s += "solver.newton_max = " + std::to_string(cfg.solver.newton_max) + "\n";
  s += "solver.newton_tol = " + fmt_double(cfg.solver.newton_tol) + "\n";
  s += "solver.steps = " + std::to_string(cfg.solver.steps) + "\n";
  s += "solver.tol = " + fmt_double(cfg.solver.tol) + "\n";
  return s;
}

std::vector<std::vector<double>> centers_points(const RunConfig& cfg) {
  std::vector<std::vector<double>> pts;
  const std::size_t m = static_cast<std::size_t>(cfg.m);
  for (std::size_t i = 0; i + m <= cfg.experiment.centers.size(); i += m)
    pts.emplace_back(cfg.experiment.centers.begin() + static_cast<std::ptrdiff_t>(i),
                     cfg.experiment.centers.begin() + static_cast<std::ptrdiff_t>(i + m));
  return pts;
}

}  // namespace gaugeforge::config
