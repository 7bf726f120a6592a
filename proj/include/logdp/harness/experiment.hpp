#pragma once

// `logdp solve` and `logdp norm`: run a configured instance and write its artifacts.
//
// Run directory layout (formats permitting):
//   nodes.csv, elements.csv        mesh
//   u.csv | u0.csv v0.csv w0.csv   nodal solutions, 17 significant digits
//   profile_<id>.dat               fibering profile t, theta(t) at 200 log-spaced t
//   summary.json                   see validate_summary for the schema

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "logdp/harness/config.hpp"
#include "logdp/modular_space.hpp"
#include "logdp/operator_energy.hpp"
#include "logdp/solvers.hpp"

namespace logdp {

inline constexpr const char* kSummarySchema = "logdp.summary/1";

enum class SolveMode { fixed, positive, negative, nodal, all };

inline SolveMode solve_mode_from_string(const std::string& s) {
  if (s == "fixed") return SolveMode::fixed;
  if (s == "positive") return SolveMode::positive;
  if (s == "negative") return SolveMode::negative;
  if (s == "nodal") return SolveMode::nodal;
  if (s == "all") return SolveMode::all;
  throw ConfigError(fmt::format("unknown mode '{}'", s));
}

inline std::string to_string(SolveMode m) {
  switch (m) {
    case SolveMode::fixed: return "fixed";
    case SolveMode::positive: return "positive";
    case SolveMode::negative: return "negative";
    case SolveMode::nodal: return "nodal";
    default: return "all";
  }
}

inline Requirement requirement_for(SolveMode m) {
  switch (m) {
    case SolveMode::fixed: return Requirement::h;
    case SolveMode::positive:
    case SolveMode::negative: return Requirement::h2;
    default: return Requirement::h3;
  }
}

struct SolveOptions {
  SolveMode mode = SolveMode::all;
  bool force = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

struct SolveOutcome {
  /// 0 when every solve converged (and, for mode all, the structural checks hold), else 1.
  int exit_code = 0;
  std::string output_dir;
  nlohmann::json summary;
};

namespace detail {

inline double sup_value(const DiscreteFunction& u) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : u.values()) m = std::max(m, v);
  return m;
}

inline double inf_value(const DiscreteFunction& u) {
  double m = std::numeric_limits<double>::infinity();
  for (double v : u.values()) m = std::min(m, v);
  return m;
}

inline nlohmann::json json_number(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

inline void write_profile(const std::string& path, const std::vector<std::pair<double, double>>& profile) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument(fmt::format("cannot write {}", path));
  out << "# t theta(t)\n";
  for (const auto& [t, v] : profile) out << fmt::format("{:.17g} {:.17g}\n", t, v);
}

}  // namespace detail

/// Runs the configured instance. Throws ConfigError (or AssumptionError) for exit code 2.
inline SolveOutcome cmd_solve(ExperimentConfig cfg, const SolveOptions& opt) {
  if (opt.seed) cfg.solver.seed = *opt.seed;
  if (opt.out_dir) cfg.output_dir = *opt.out_dir;
  try {
    cfg.solver.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  const Problem prob = build_problem(cfg);
  const Mesh& mesh = prob.mesh;
  const ExponentField& exps = prob.exps;
  const RhsSpec& rhs = *prob.rhs;

  std::vector<std::string> warnings;
  try {
    check_requirement(exps, requirement_for(opt.mode));
  } catch (const AssumptionError& e) {
    if (!opt.force) throw;
    warnings.push_back(fmt::format("forced: {}", e.what()));
  }
  if (opt.mode != SolveMode::fixed && cfg.rhs_name == "zero") {
    throw ConfigError(fmt::format("mode {} needs a nonzero rhs", to_string(opt.mode)));
  }

  nlohmann::json assumptions = nlohmann::json::array();
  if (opt.mode != SolveMode::fixed) {
    const AssumptionReport report = validate_assumptions(exps, rhs, mesh);
    assumptions = report;
    for (const auto& c : report.checks) {
      if (c.claimed && !c.holds) warnings.push_back(fmt::format("assumption {} not satisfied: {}", c.name, c.detail));
    }
  }

  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  const bool csv = cfg.wants("csv");
  const bool dat = cfg.wants("dat");
  if (csv) write_mesh_csv(mesh, (dir / "nodes.csv").string(), (dir / "elements.csv").string());

  nlohmann::json solutions = nlohmann::json::object();
  bool ok = true;
  const auto record = [&](const std::string& id, const SolverResult& r, const RhsSpec* profile_rhs) {
    nlohmann::json j = r;
    j["file"] = id + ".csv";
    j["sup"] = detail::json_number(detail::sup_value(r.u));
    j["inf"] = detail::json_number(detail::inf_value(r.u));
    solutions[id] = std::move(j);
    ok = ok && r.status == SolverStatus::converged;
    if (csv) write_solution_csv(r.u, (dir / (id + ".csv")).string());
    if (dat && profile_rhs && !r.u.is_zero()) {
      detail::write_profile((dir / ("profile_" + id + ".dat")).string(),
                            fibering_profile(r.u, exps, mesh, *profile_rhs, 0.05, 3.0, 200));
    }
  };

  const auto guarded = [&](const std::string& id, auto&& run) -> std::optional<SolverResult> {
    try {
      return run();
    } catch (const std::exception& e) {
      solutions[id] = {{"status", "failed"}, {"message", e.what()}};
      ok = false;
      return std::nullopt;
    }
  };

  std::optional<SolverResult> u0, v0, w0;
  if (opt.mode == SolveMode::fixed) {
    const auto res =
        guarded("u", [&] { return solve_fixed_rhs(std::function<double(Point)>(cfg.source), exps, mesh, cfg.solver); });
    if (res) record("u", *res, nullptr);
  }
  if (opt.mode == SolveMode::positive || opt.mode == SolveMode::all) {
    u0 = guarded("u0", [&] { return solve_constant_sign(Sign::plus, exps, mesh, rhs, cfg.solver); });
    if (u0) record("u0", *u0, &rhs);
  }
  if (opt.mode == SolveMode::negative || opt.mode == SolveMode::all) {
    v0 = guarded("v0", [&] { return solve_constant_sign(Sign::minus, exps, mesh, rhs, cfg.solver); });
    if (v0) record("v0", *v0, &rhs);
  }
  if (opt.mode == SolveMode::nodal || opt.mode == SolveMode::all) {
    w0 = guarded("w0", [&] { return solve_sign_changing(exps, mesh, rhs, cfg.solver); });
    if (w0) record("w0", *w0, &rhs);
  }

  nlohmann::json ordering = nullptr;
  if (opt.mode == SolveMode::all && u0 && v0 && w0) {
    const double top = std::max(u0->energy, v0->energy);
    const bool ordered = w0->energy > top && top > 0.0;
    const bool nodal_ok = w0->nodal == std::pair<int, int>{1, 1};
    ordering = {{"phi_u0", u0->energy},
                {"phi_v0", v0->energy},
                {"phi_w0", w0->energy},
                {"w0_minus_max", w0->energy - top},
                {"ordered", ordered},
                {"w0_two_nodal_domains", nodal_ok}};
    ok = ok && ordered && nodal_ok;
  }

  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : cfg.rhs_params) params[k] = v;
  nlohmann::json summary{
      {"schema", kSummarySchema},
      {"name", cfg.name},
      {"mode", to_string(opt.mode)},
      {"seed", cfg.solver.seed},
      {"config", serialize_config(cfg)},
      {"mesh",
       {{"nx", cfg.nx}, {"ny", cfg.ny}, {"n_nodes", mesh.n_nodes()}, {"n_elements", mesh.n_elements()}, {"h", mesh.max_diameter()}}},
      {"exponents",
       {{"p_minus", exps.p_minus},
        {"p_plus", exps.p_plus},
        {"q_minus", exps.q_minus},
        {"q_plus", exps.q_plus},
        {"mu_sup", exps.mu_sup},
        {"H", exps.satisfies_h()},
        {"H2", exps.satisfies_h2()},
        {"H3", exps.satisfies_h3()}}},
      {"rhs", {{"name", cfg.rhs_name}, {"params", params}}},
      {"assumptions", assumptions},
      {"warnings", warnings},
      {"solutions", solutions},
      {"energy_ordering", ordering},
      {"status", ok ? "ok" : "failed"}};
  if (cfg.wants("json")) {
    std::ofstream out(dir / "summary.json");
    if (!out) throw InvalidArgument(fmt::format("cannot write {}", (dir / "summary.json").string()));
    out << summary.dump(2) << '\n';
  }
  return {ok ? 0 : 1, dir.string(), std::move(summary)};
}

/// Schema problems of a summary document; empty when it validates.
inline std::vector<std::string> validate_summary(const nlohmann::json& j) {
  std::vector<std::string> errors;
  const auto need = [&](const nlohmann::json& obj, const std::string& key, auto predicate, const char* type,
                        const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) {
      errors.push_back(fmt::format("{}{}: missing", where, key));
      return false;
    }
    if (!predicate(obj.at(key))) {
      errors.push_back(fmt::format("{}{}: expected {}", where, key, type));
      return false;
    }
    return true;
  };
  const auto is_string = [](const nlohmann::json& v) { return v.is_string(); };
  const auto is_number = [](const nlohmann::json& v) { return v.is_number(); };
  const auto is_number_or_null = [](const nlohmann::json& v) { return v.is_number() || v.is_null(); };
  const auto is_int = [](const nlohmann::json& v) { return v.is_number_integer(); };
  const auto is_bool = [](const nlohmann::json& v) { return v.is_boolean(); };
  const auto is_object = [](const nlohmann::json& v) { return v.is_object(); };
  const auto is_array = [](const nlohmann::json& v) { return v.is_array(); };

  if (!j.is_object()) return {"document: expected object"};
  if (need(j, "schema", is_string, "string", "") && j.at("schema") != kSummarySchema) {
    errors.push_back(fmt::format("schema: expected '{}'", kSummarySchema));
  }
  need(j, "name", is_string, "string", "");
  if (need(j, "mode", is_string, "string", "")) {
    try {
      solve_mode_from_string(j.at("mode").get<std::string>());
    } catch (const ConfigError&) {
      errors.push_back("mode: unknown value");
    }
  }
  need(j, "seed", is_int, "integer", "");
  need(j, "config", is_string, "string", "");
  if (need(j, "mesh", is_object, "object", "")) {
    for (const char* k : {"nx", "ny", "n_nodes", "n_elements"}) need(j["mesh"], k, is_int, "integer", "mesh.");
    need(j["mesh"], "h", is_number, "number", "mesh.");
  }
  if (need(j, "exponents", is_object, "object", "")) {
    for (const char* k : {"p_minus", "p_plus", "q_minus", "q_plus", "mu_sup"}) {
      need(j["exponents"], k, is_number, "number", "exponents.");
    }
    for (const char* k : {"H", "H2", "H3"}) need(j["exponents"], k, is_bool, "boolean", "exponents.");
  }
  if (need(j, "rhs", is_object, "object", "")) {
    need(j["rhs"], "name", is_string, "string", "rhs.");
    need(j["rhs"], "params", is_object, "object", "rhs.");
  }
  if (need(j, "assumptions", is_array, "array", "")) {
    for (const auto& c : j["assumptions"]) {
      need(c, "name", is_string, "string", "assumptions[].");
      need(c, "holds", is_bool, "boolean", "assumptions[].");
    }
  }
  if (need(j, "warnings", is_array, "array", "")) {
    for (const auto& w : j["warnings"]) {
      if (!w.is_string()) errors.push_back("warnings[]: expected string");
    }
  }
  if (need(j, "solutions", is_object, "object", "")) {
    for (const auto& [id, s] : j["solutions"].items()) {
      const std::string where = "solutions." + id + ".";
      if (!need(s, "status", is_string, "string", where)) continue;
      if (s["status"] == "failed") {
        need(s, "message", is_string, "string", where);
        continue;
      }
      for (const char* k : {"energy", "residual"}) need(s, k, is_number, "number", where);
      for (const char* k : {"residual_probe", "sup", "inf"}) need(s, k, is_number_or_null, "number or null", where);
      for (const char* k : {"iterations", "newton_iterations", "restarts"}) need(s, k, is_int, "integer", where);
      need(s, "file", is_string, "string", where);
      if (need(s, "nodal", is_array, "array", where) && s["nodal"].size() != 2) {
        errors.push_back(where + "nodal: expected two counts");
      }
    }
  }
  if (!j.contains("energy_ordering")) {
    errors.push_back("energy_ordering: missing");
  } else if (!j["energy_ordering"].is_null()) {
    for (const char* k : {"phi_u0", "phi_v0", "phi_w0", "w0_minus_max"}) {
      need(j["energy_ordering"], k, is_number, "number", "energy_ordering.");
    }
    for (const char* k : {"ordered", "w0_two_nodal_domains"}) {
      need(j["energy_ordering"], k, is_bool, "boolean", "energy_ordering.");
    }
  }
  if (need(j, "status", is_string, "string", "") && j["status"] != "ok" && j["status"] != "failed") {
    errors.push_back("status: expected 'ok' or 'failed'");
  }
  return errors;
}

// ---------------------------------------------------------------------------

struct NormReport {
  ModularReport modular;
  double norm = 0.0;
  double low_exponent = 0.0;
  double high_exponent = 0.0;
  SandwichBounds bounds;
  bool sandwich_pass = true;

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"p_part", modular.p_part},
            {"logq_part", modular.logq_part},
            {"modular", modular.total},
            {"norm", norm},
            {"low_exponent", low_exponent},
            {"high_exponent", high_exponent},
            {"lower", bounds.lower},
            {"upper", bounds.upper},
            {"sandwich_pass", sandwich_pass}};
  }

  [[nodiscard]] std::string text() const {
    std::string out;
    out += fmt::format("p_part     {:.17g}\n", modular.p_part);
    out += fmt::format("logq_part  {:.17g}\n", modular.logq_part);
    out += fmt::format("modular    {:.17g}\n", modular.total);
    out += fmt::format("norm       {:.17g}\n", norm);
    out += fmt::format("sandwich   min(|u|^{:.6g}, |u|^{:.6g}) = {:.6e} <= {:.6e} <= {:.6e} = max(...)  {}\n",
                       low_exponent, high_exponent, bounds.lower, modular.total, bounds.upper,
                       sandwich_pass ? "PASS" : "FAIL");
    return out;
  }
};

/// Gradient modular and norm of a nodal field stored as id,x,y,value on the config's mesh.
/// A field that does not match the mesh raises ConfigError.
inline NormReport cmd_norm(const ExperimentConfig& cfg, const std::string& field_path) {
  const Problem prob = build_problem(cfg);
  const DiscreteFunction u = [&] {
    try {
      return read_solution_csv(prob.mesh, field_path);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    } catch (const std::logic_error& e) {
      throw ConfigError(fmt::format("{}: malformed field file ({})", field_path, e.what()));
    }
  }();
  NormReport rep;
  rep.modular = modular_hlog(gradient_magnitudes(prob.mesh, u.values()), prob.exps, prob.mesh);
  rep.norm = norm_grad(u, prob.exps, prob.mesh);
  rep.low_exponent = prob.exps.p_minus;
  rep.high_exponent = prob.exps.q_plus + kappa();
  if (rep.norm > 0.0) {
    rep.bounds = hlog_sandwich(rep.norm, prob.exps);
    rep.sandwich_pass = rep.bounds.relative_slack(rep.modular.total) >= -1e-9;
  }
  return rep;
}

}  // namespace logdp
