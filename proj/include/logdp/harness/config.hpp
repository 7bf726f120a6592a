#pragma once

// Experiment configuration: flat `key = value` lines with dotted keys, '#' comments.
//
//   name = example_i_64
//   domain.x_min = 0          domain.x_max = 1     domain.y_min = 0   domain.y_max = 1
//   domain.mask = 1           (optional; elements with mask(barycenter) > 0 are kept)
//   mesh.nx = 64              mesh.ny = 64
//   exponents.p = 2.6         exponents.q = 2.6    exponents.mu = 0.5   (expressions in x, y)
//   rhs.name = example_i      rhs.eps = 0.6        (any further rhs.* keys are numeric parameters)
//   fixed.source = 1          (source f(x) for mode=fixed)
//   solver.tol_residual, solver.tol_fiber, solver.max_iters, solver.c1, solver.backtrack,
//   solver.seed, solver.preconditioner, solver.newton_polish, solver.newton_switch,
//   solver.probe_estimate
//   output.dir = runs/example_i_64
//   output.formats = csv,json,dat

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "logdp/errors.hpp"
#include "logdp/fem_grid.hpp"
#include "logdp/harness/expression.hpp"
#include "logdp/operator_energy.hpp"
#include "logdp/solvers.hpp"

namespace logdp {

struct ExperimentConfig {
  std::string name = "run";
  Rect domain{};
  std::optional<Expression> mask;
  int nx = 32;
  int ny = 32;
  Expression p{2.0};
  Expression q{2.0};
  Expression mu{0.0};
  std::string rhs_name = "zero";
  std::map<std::string, double> rhs_params;
  Expression source{1.0};
  SolverConfig solver{};
  std::string output_dir = "out";
  std::vector<std::string> formats{"csv", "json", "dat"};

  bool operator==(const ExperimentConfig&) const = default;

  [[nodiscard]] bool wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, value));
  }
  return out;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& value) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError(fmt::format("{}: '{}' is not an integer", key, value));
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, value));
}

inline Expression parse_expression(const std::string& key, const std::string& value) {
  try {
    return Expression::parse(value);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", key, e.what()));
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(fmt::format("line {}: empty key", line_no));
    if (seen.contains(key)) throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no, key));
    seen[key] = line_no;
    auto& s = cfg.solver;
    if (key == "name") {
      cfg.name = value;
    } else if (key == "domain.x_min") {
      cfg.domain.x_min = detail::parse_double(key, value);
    } else if (key == "domain.x_max") {
      cfg.domain.x_max = detail::parse_double(key, value);
    } else if (key == "domain.y_min") {
      cfg.domain.y_min = detail::parse_double(key, value);
    } else if (key == "domain.y_max") {
      cfg.domain.y_max = detail::parse_double(key, value);
    } else if (key == "domain.mask") {
      cfg.mask = detail::parse_expression(key, value);
    } else if (key == "mesh.nx") {
      cfg.nx = detail::parse_int<int>(key, value);
    } else if (key == "mesh.ny") {
      cfg.ny = detail::parse_int<int>(key, value);
    } else if (key == "exponents.p") {
      cfg.p = detail::parse_expression(key, value);
    } else if (key == "exponents.q") {
      cfg.q = detail::parse_expression(key, value);
    } else if (key == "exponents.mu") {
      cfg.mu = detail::parse_expression(key, value);
    } else if (key == "rhs.name") {
      cfg.rhs_name = value;
    } else if (key.starts_with("rhs.")) {
      cfg.rhs_params[key.substr(4)] = detail::parse_double(key, value);
    } else if (key == "fixed.source") {
      cfg.source = detail::parse_expression(key, value);
    } else if (key == "solver.tol_residual") {
      s.tol_residual = detail::parse_double(key, value);
    } else if (key == "solver.tol_fiber") {
      s.tol_fiber = detail::parse_double(key, value);
    } else if (key == "solver.max_iters") {
      s.max_iters = detail::parse_int<int>(key, value);
    } else if (key == "solver.c1") {
      s.c1 = detail::parse_double(key, value);
    } else if (key == "solver.backtrack") {
      s.backtrack = detail::parse_double(key, value);
    } else if (key == "solver.seed") {
      s.seed = detail::parse_int<std::uint64_t>(key, value);
    } else if (key == "solver.preconditioner") {
      try {
        s.preconditioner = preconditioner_from_string(value);
      } catch (const InvalidArgument& e) {
        throw ConfigError(fmt::format("{}: {}", key, e.what()));
      }
    } else if (key == "solver.newton_polish") {
      s.newton_polish = detail::parse_bool(key, value);
    } else if (key == "solver.newton_switch") {
      s.newton_switch = detail::parse_double(key, value);
    } else if (key == "solver.probe_estimate") {
      s.probe_estimate = detail::parse_bool(key, value);
    } else if (key == "output.dir") {
      cfg.output_dir = value;
    } else if (key == "output.formats") {
      cfg.formats.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = detail::trim(item);
        if (item != "csv" && item != "json" && item != "dat") {
          throw ConfigError(fmt::format("output.formats: unknown format '{}'", item));
        }
        cfg.formats.push_back(item);
      }
    } else {
      throw ConfigError(fmt::format("line {}: unknown key '{}'", line_no, key));
    }
  }
  if (cfg.nx < 1 || cfg.ny < 1) throw ConfigError("mesh.nx and mesh.ny must be positive");
  if (!(cfg.domain.width() > 0.0 && cfg.domain.height() > 0.0)) throw ConfigError("domain: empty rectangle");
  try {
    cfg.solver.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Inverse of parse_config; numbers use the shortest round-trip representation.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  const auto line = [&](const std::string& key, const auto& value) { out += fmt::format("{} = {}\n", key, value); };
  const auto& s = cfg.solver;
  line("name", cfg.name);
  line("domain.x_min", cfg.domain.x_min);
  line("domain.x_max", cfg.domain.x_max);
  line("domain.y_min", cfg.domain.y_min);
  line("domain.y_max", cfg.domain.y_max);
  if (cfg.mask) line("domain.mask", cfg.mask->source());
  line("mesh.nx", cfg.nx);
  line("mesh.ny", cfg.ny);
  line("exponents.p", cfg.p.source());
  line("exponents.q", cfg.q.source());
  line("exponents.mu", cfg.mu.source());
  line("rhs.name", cfg.rhs_name);
  for (const auto& [k, v] : cfg.rhs_params) line("rhs." + k, v);
  line("fixed.source", cfg.source.source());
  line("solver.tol_residual", s.tol_residual);
  line("solver.tol_fiber", s.tol_fiber);
  line("solver.max_iters", s.max_iters);
  line("solver.c1", s.c1);
  line("solver.backtrack", s.backtrack);
  line("solver.seed", s.seed);
  line("solver.preconditioner", to_string(s.preconditioner));
  line("solver.newton_polish", s.newton_polish ? "true" : "false");
  line("solver.newton_switch", s.newton_switch);
  line("solver.probe_estimate", s.probe_estimate ? "true" : "false");
  line("output.dir", cfg.output_dir);
  std::string formats;
  for (const auto& f : cfg.formats) formats += (formats.empty() ? "" : ",") + f;
  line("output.formats", formats);
  return out;
}

// ---------------------------------------------------------------------------

/// Mesh, exponents and (optional) rhs built from a config.
struct Problem {
  Mesh mesh;
  ExponentField exps;
  std::optional<RhsSpec> rhs;
};

/// Assumption required by a solve mode.
enum class Requirement { h, h2, h3 };

/// Raised when an exponent assumption needed by the requested mode fails.
class AssumptionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Builds the discrete problem. Exponent samples violating 1 < p <= q, mu >= 0 raise
/// ConfigError; rhs construction errors are reported the same way.
inline Problem build_problem(const ExperimentConfig& cfg) {
  Problem prob;
  try {
    std::function<bool(Point)> keep;
    if (cfg.mask) keep = [&](Point x) { return (*cfg.mask)(x) > 0.0; };
    prob.mesh = build_rect_mesh(cfg.domain, cfg.nx, cfg.ny, keep);
    prob.exps = ExponentField::from_functions(prob.mesh, cfg.p, cfg.q, cfg.mu);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  for (double v : prob.exps.p_at) {
    if (!std::isfinite(v)) throw ConfigError("exponents.p: non-finite sample");
  }
  for (double v : prob.exps.q_at) {
    if (!std::isfinite(v)) throw ConfigError("exponents.q: non-finite sample");
  }
  try {
    prob.rhs = builtin_rhs(cfg.rhs_name, cfg.rhs_params, prob.exps);
  } catch (const InvalidArgument& e) {
    throw ConfigError(fmt::format("rhs: {}", e.what()));
  }
  return prob;
}

/// Throws AssumptionError naming (H), (H2) or (H3) when the requirement fails.
inline void check_requirement(const ExponentField& exps, Requirement req) {
  if (!exps.satisfies_h()) throw AssumptionError("assumption (H) violated: q(x) < p*(x) fails");
  if (req != Requirement::h && !exps.satisfies_h2()) {
    throw AssumptionError(fmt::format("assumption (H2) violated: q+ = {} >= p*_- = {}", exps.q_plus,
                                      critical_exponent(exps.p_minus)));
  }
  if (req == Requirement::h3 && !exps.satisfies_h3()) {
    throw AssumptionError(fmt::format("assumption (H3) violated: q+ + 1 = {} >= p*_- = {}", exps.q_plus + 1.0,
                                      critical_exponent(exps.p_minus)));
  }
}

}  // namespace logdp
