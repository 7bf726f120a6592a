// logdp: verify | solve | norm | report
// Exit codes: 0 success, 1 check or solve failure, 2 config or assumption error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "logdp/logdp.hpp"

namespace {

int run_verify(const std::string& suite, std::uint64_t seed, long long samples, bool corrupt_cr,
               const std::optional<std::string>& out) {
  logdp::VerifyOptions opt{seed, samples, corrupt_cr};
  const auto report = logdp::cmd_verify(suite, opt);
  std::cout << report.table();
  if (out) {
    std::filesystem::create_directories(*out);
    const auto path = std::filesystem::path(*out) / "verify_report.json";
    std::ofstream f(path);
    if (!f) throw logdp::ConfigError(fmt::format("cannot write {}", path.string()));
    f << report.to_json().dump(2) << '\n';
  }
  return report.pass() ? 0 : 1;
}

int run_solve(const std::string& config, const std::string& mode, std::optional<std::uint64_t> seed, bool force,
              const std::optional<std::string>& out) {
  logdp::SolveOptions opt;
  opt.mode = logdp::solve_mode_from_string(mode);
  opt.force = force;
  opt.seed = seed;
  opt.out_dir = out;
  const auto outcome = logdp::cmd_solve(logdp::load_config(config), opt);
  const auto& s = outcome.summary;
  for (const auto& w : s["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
  for (const auto& [id, r] : s["solutions"].items()) {
    if (r["status"] == "failed") {
      fmt::print("{:<3} failed: {}\n", id, r["message"].get<std::string>());
      continue;
    }
    fmt::print("{:<3} {:<10} energy {:.10e}  residual {:.3e}  nodal ({},{})  iterations {}\n", id,
               r["status"].get<std::string>(), r["energy"].get<double>(), r["residual"].get<double>(),
               r["nodal"][0].get<int>(), r["nodal"][1].get<int>(), r["iterations"].get<int>());
  }
  if (!s["energy_ordering"].is_null()) {
    const auto& o = s["energy_ordering"];
    fmt::print("phi(w0) - max(phi(u0), phi(v0)) = {:.6e}  ordered: {}  two nodal domains: {}\n",
               o["w0_minus_max"].get<double>(), o["ordered"].get<bool>(), o["w0_two_nodal_domains"].get<bool>());
  }
  fmt::print("status {}  -> {}\n", s["status"].get<std::string>(), outcome.output_dir);
  return outcome.exit_code;
}

int run_norm(const std::string& config, const std::string& field) {
  const auto rep = logdp::cmd_norm(logdp::load_config(config), field);
  std::cout << rep.text();
  return rep.sandwich_pass ? 0 : 1;
}

int run_report(const std::string& dir) {
  const auto rep = logdp::cmd_report(dir);
  std::cout << rep.table();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Logarithmic double phase problems: verification, solves and reports"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  long long samples = 10000;
  std::string suite = "all";
  bool corrupt_cr = false;
  std::string config, mode = "all", field, report_dir;
  bool force = false;
  std::optional<std::string> out;
  std::optional<std::uint64_t> solve_seed;

  auto* verify = app.add_subcommand("verify", "run the property suites");
  verify->add_option("--suite", suite, "scalar, modular, operator, solver or all")
      ->check(CLI::IsMember(logdp::verify_suites()));
  verify->add_option("--seed", seed, "random seed");
  verify->add_option("--samples", samples, "samples per randomized check")->check(CLI::PositiveNumber);
  verify->add_option("--out", out, "directory for verify_report.json");
  verify->add_flag("--corrupt-cr", corrupt_cr, "negative control")->group("");

  auto* solve = app.add_subcommand("solve", "solve a configured instance");
  solve->add_option("--config", config, "config file")->required();
  solve->add_option("--mode", mode, "fixed, positive, negative, nodal or all")
      ->check(CLI::IsMember({"fixed", "positive", "negative", "nodal", "all"}));
  solve->add_option("--seed", solve_seed, "overrides solver.seed");
  solve->add_flag("--force", force, "run even if the exponent assumptions fail");
  solve->add_option("--out", out, "overrides output.dir");

  auto* norm = app.add_subcommand("norm", "modular and norm of a nodal field");
  norm->add_option("--config", config, "config file")->required();
  norm->add_option("--field", field, "id,x,y,value CSV on the config mesh")->required();

  auto* report = app.add_subcommand("report", "aggregate summary.json files");
  report->add_option("dir", report_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*verify) return run_verify(suite, seed, samples, corrupt_cr, out);
    if (*solve) return run_solve(config, mode, solve_seed, force, out);
    if (*norm) return run_norm(config, field);
    return run_report(report_dir);
  } catch (const logdp::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
