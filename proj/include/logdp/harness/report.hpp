#pragma once

// `logdp report`: aggregate the summary.json files below a directory.
//
// Writes into that directory:
//   report.json        rows plus the list of unreadable summaries
//   energy_vs_h.dat    family, h, nx, ny, phi_u0, phi_v0, phi_w0, phi_u (one block per family)
//   fibering.dat       every profile_<id>.dat found, one gnuplot index block each

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "logdp/errors.hpp"
#include "logdp/harness/experiment.hpp"

namespace logdp {

struct ReportRow {
  std::string instance;
  std::string name;
  std::string mode;
  /// Same config apart from mesh size, name and output directory.
  int family = 0;
  int nx = 0;
  int ny = 0;
  double h = 0.0;
  /// Keyed by solution id (u, u0, v0, w0).
  std::map<std::string, double> energy;
  std::map<std::string, double> residual;
  std::map<std::string, std::pair<int, int>> nodal;
  /// Primary energy minus that of the next coarser run of the same family.
  std::optional<double> energy_diff;
  bool h_ok = false, h2_ok = false, h3_ok = false;
  int warnings = 0;
  std::string status;

  /// w0 when present, else u0, v0 or u.
  [[nodiscard]] std::optional<double> primary_energy() const {
    for (const char* id : {"w0", "u0", "v0", "u"}) {
      if (const auto it = energy.find(id); it != energy.end()) return it->second;
    }
    return std::nullopt;
  }
};

struct ReportProblem {
  std::string path;
  std::string reason;
};

struct RunReport {
  std::vector<ReportRow> rows;
  std::vector<ReportProblem> problems;

  [[nodiscard]] std::string table() const {
    const auto cell = [](const std::map<std::string, double>& m, const char* id) {
      const auto it = m.find(id);
      return it == m.end() ? std::string("-") : fmt::format("{:.6e}", it->second);
    };
    std::string out = fmt::format("{:<24} {:>5} {:>13} {:>13} {:>13} {:>13} {:>11} {:>7} {:>10} {:>8}  {}\n",
                                  "instance", "nx", "phi_u0", "phi_v0", "phi_w0", "dE", "res_max", "w0_nod",
                                  "H/H2/H3", "warn", "status");
    for (const auto& r : rows) {
      double res = 0.0;
      for (const auto& [id, v] : r.residual) res = std::max(res, v);
      const auto nod = r.nodal.find("w0");
      const std::string nodal = nod == r.nodal.end() ? "-" : fmt::format("({},{})", nod->second.first, nod->second.second);
      const std::string phi_u0 = r.energy.contains("u") ? cell(r.energy, "u") : cell(r.energy, "u0");
      out += fmt::format("{:<24} {:>5} {:>13} {:>13} {:>13} {:>13} {:>11.3e} {:>7} {:>10} {:>8}  {}\n", r.instance,
                         r.nx, phi_u0, cell(r.energy, "v0"), cell(r.energy, "w0"),
                         r.energy_diff ? fmt::format("{:.6e}", *r.energy_diff) : std::string("-"), res, nodal,
                         fmt::format("{}/{}/{}", r.h_ok ? "y" : "n", r.h2_ok ? "y" : "n", r.h3_ok ? "y" : "n"),
                         r.warnings, r.status);
    }
    for (const auto& p : problems) out += fmt::format("skipped {}: {}\n", p.path, p.reason);
    return out;
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json nodal = nlohmann::json::object();
      for (const auto& [id, n] : r.nodal) nodal[id] = {n.first, n.second};
      rows_json.push_back({{"instance", r.instance},
                           {"name", r.name},
                           {"mode", r.mode},
                           {"family", r.family},
                           {"nx", r.nx},
                           {"ny", r.ny},
                           {"h", r.h},
                           {"energy", r.energy},
                           {"residual", r.residual},
                           {"nodal", nodal},
                           {"energy_diff", r.energy_diff ? nlohmann::json(*r.energy_diff) : nlohmann::json(nullptr)},
                           {"H", r.h_ok},
                           {"H2", r.h2_ok},
                           {"H3", r.h3_ok},
                           {"warnings", r.warnings},
                           {"status", r.status}});
    }
    nlohmann::json problems_json = nlohmann::json::array();
    for (const auto& p : problems) problems_json.push_back({{"path", p.path}, {"reason", p.reason}});
    return {{"rows", rows_json}, {"problems", problems_json}};
  }
};

namespace detail {

/// Config text without the keys that vary inside one mesh-refinement family.
inline std::string family_key(const std::string& config) {
  std::istringstream in(config);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.starts_with("mesh.") || line.starts_with("name ") || line.starts_with("output.")) continue;
    out += line + '\n';
  }
  return out;
}

inline ReportRow row_from_summary(const nlohmann::json& j, const std::string& instance) {
  ReportRow r;
  r.instance = instance;
  r.name = j["name"];
  r.mode = j["mode"];
  r.nx = j["mesh"]["nx"];
  r.ny = j["mesh"]["ny"];
  r.h = j["mesh"]["h"];
  r.h_ok = j["exponents"]["H"];
  r.h2_ok = j["exponents"]["H2"];
  r.h3_ok = j["exponents"]["H3"];
  r.warnings = static_cast<int>(j["warnings"].size());
  r.status = j["status"];
  for (const auto& [id, s] : j["solutions"].items()) {
    if (s["status"] == "failed") continue;
    r.energy[id] = s["energy"];
    r.residual[id] = s["residual"];
    r.nodal[id] = {s["nodal"][0].get<int>(), s["nodal"][1].get<int>()};
  }
  return r;
}

inline void write_energy_dat(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument(fmt::format("cannot write {}", path.string()));
  out << "# family h nx ny phi_u0 phi_v0 phi_w0 phi_u\n";
  int family = -1;
  const auto value = [](const ReportRow& r, const char* id) {
    const auto it = r.energy.find(id);
    return it == r.energy.end() ? std::string("NaN") : fmt::format("{:.17g}", it->second);
  };
  for (const auto& r : rows) {
    if (r.family != family && family >= 0) out << "\n\n";
    family = r.family;
    out << fmt::format("{} {:.17g} {} {} {} {} {} {}\n", r.family, r.h, r.nx, r.ny, value(r, "u0"), value(r, "v0"),
                       value(r, "w0"), value(r, "u"));
  }
}

}  // namespace detail

/// Aggregates every summary.json below `dir`. Unreadable or invalid summaries are listed
/// in `problems`; a missing directory raises ConfigError.
inline RunReport cmd_report(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw ConfigError(fmt::format("report: '{}' is not a directory", dir));

  std::vector<fs::path> summaries, profiles;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name == "summary.json") summaries.push_back(entry.path());
    if (name.starts_with("profile_") && name.ends_with(".dat")) profiles.push_back(entry.path());
  }
  std::sort(summaries.begin(), summaries.end());
  std::sort(profiles.begin(), profiles.end());

  RunReport rep;
  std::vector<std::string> families;
  struct Keyed {
    ReportRow row;
    std::string family;
  };
  std::vector<Keyed> keyed;
  for (const auto& path : summaries) {
    const std::string rel = fs::relative(path, root).string();
    std::string instance = fs::relative(path.parent_path(), root).string();
    if (instance == ".") instance = root.filename().string();
    nlohmann::json j;
    try {
      std::ifstream in(path);
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      rep.problems.push_back({rel, fmt::format("not valid JSON ({})", e.what())});
      continue;
    }
    if (const auto errors = validate_summary(j); !errors.empty()) {
      rep.problems.push_back({rel, fmt::format("schema: {}", errors.front())});
      continue;
    }
    keyed.push_back({detail::row_from_summary(j, instance), detail::family_key(j["config"].get<std::string>())});
  }
  for (auto& k : keyed) {
    auto it = std::find(families.begin(), families.end(), k.family);
    if (it == families.end()) it = families.insert(families.end(), k.family);
    k.row.family = static_cast<int>(it - families.begin());
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.row.family, a.row.nx, a.row.ny) < std::tie(b.row.family, b.row.nx, b.row.ny);
  });
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    auto& row = keyed[i].row;
    if (i > 0 && keyed[i - 1].row.family == row.family) {
      const auto prev = keyed[i - 1].row.primary_energy();
      const auto cur = row.primary_energy();
      if (prev && cur) row.energy_diff = *cur - *prev;
    }
    rep.rows.push_back(row);
  }

  {
    std::ofstream out(root / "report.json");
    if (!out) throw InvalidArgument(fmt::format("cannot write {}", (root / "report.json").string()));
    out << rep.to_json().dump(2) << '\n';
  }
  detail::write_energy_dat(root / "energy_vs_h.dat", rep.rows);
  std::ofstream fib(root / "fibering.dat");
  if (!fib) throw InvalidArgument(fmt::format("cannot write {}", (root / "fibering.dat").string()));
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    std::ifstream in(profiles[i]);
    if (i > 0) fib << "\n\n";
    fib << "# " << fs::relative(profiles[i], root).string() << '\n' << in.rdbuf();
  }
  return rep;
}

}  // namespace logdp
