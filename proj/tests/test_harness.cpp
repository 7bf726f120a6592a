#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "logdp/harness/experiment.hpp"
#include "logdp/harness/report.hpp"
#include "logdp/harness/verify.hpp"

using namespace logdp;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("logdp_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string config_dir() {
  const char* env = std::getenv("LOGDP_CONFIG_DIR");
  return env ? env : "configs";
}

ExperimentConfig small_power(const fs::path& out, int n = 10) {
  return parse_config(fmt::format(
      "name = small\nmesh.nx = {0}\nmesh.ny = {0}\nexponents.p = 2.2\nexponents.q = 2.6\nexponents.mu = 1\n"
      "rhs.name = power\nrhs.r = 3.9\nsolver.probe_estimate = false\noutput.dir = {1}\n",
      n, out.string()));
}

}  // namespace

TEST(Expression, EvaluatesGrammar) {
  EXPECT_DOUBLE_EQ(Expression::parse("1 + 2 * 3")(0, 0), 7.0);
  EXPECT_DOUBLE_EQ(Expression::parse("2 ^ 3 ^ 2")(0, 0), 512.0);
  EXPECT_DOUBLE_EQ(Expression::parse("-2 ^ 2")(0, 0), -4.0);
  EXPECT_DOUBLE_EQ(Expression::parse("max(0, x - 0.3)")(0.1, 0), 0.0);
  EXPECT_DOUBLE_EQ(Expression::parse("max(0, x - 0.3)")(0.5, 0), 0.2);
  EXPECT_NEAR(Expression::parse("sin(pi * x) * y + log(e)")(0.5, 2.0), 3.0, 1e-15);
  EXPECT_TRUE(Expression::parse("2 * pi").is_constant());
  EXPECT_FALSE(Expression::parse("1 + 0 * y").is_constant());
}

TEST(Expression, RejectsMalformed) {
  for (const char* bad : {"", "1 +", "(1", "foo(1)", "max(1)", "z", "1 2", "sin 1"}) {
    EXPECT_THROW((void)Expression::parse(bad), ConfigError) << bad;
  }
}

TEST(Config, ParsesShippedConfigs) {
  for (const char* name : {"example_i_64.cfg", "example_i_32.cfg", "linear_fixed_64.cfg", "variable_power.cfg",
                           "h3_violating.cfg"}) {
    EXPECT_NO_THROW((void)load_config(config_dir() + "/" + name)) << name;
  }
  const auto c = load_config(config_dir() + "/example_i_64.cfg");
  EXPECT_EQ(c.nx, 64);
  EXPECT_EQ(c.rhs_name, "example_i");
  EXPECT_DOUBLE_EQ(c.rhs_params.at("eps"), 0.6);
}

TEST(Config, RoundTrip) {
  const auto a = parse_config(
      "name = rt\ndomain.x_max = 2.5\ndomain.mask = 1 - x\nmesh.nx = 7\nexponents.p = 1.5 + 0.1*x\n"
      "exponents.mu = x*y\nrhs.name = example_ii\nrhs.l = 0.1\nrhs.l_tilde = 0.30000000000000004\nrhs.m = 3\n"
      "fixed.source = sin(x)\nsolver.seed = 17\nsolver.preconditioner = none\nsolver.newton_polish = false\n"
      "output.formats = json\n");
  const auto b = parse_config(serialize_config(a));
  EXPECT_EQ(a, b);
  EXPECT_EQ(serialize_config(a), serialize_config(b));
  EXPECT_EQ(b.rhs_params.at("l_tilde"), 0.30000000000000004);
  EXPECT_TRUE(b.wants("json"));
  EXPECT_FALSE(b.wants("csv"));
}

TEST(Config, Errors) {
  EXPECT_THROW((void)parse_config("bogus.key = 1\n"), ConfigError);
  EXPECT_THROW((void)parse_config("mesh.nx = 4\nmesh.nx = 5\n"), ConfigError);
  EXPECT_THROW((void)parse_config("mesh.nx = four\n"), ConfigError);
  EXPECT_THROW((void)parse_config("just text\n"), ConfigError);
  EXPECT_THROW((void)parse_config("exponents.p = 2 +\n"), ConfigError);
  EXPECT_THROW((void)load_config("/nonexistent/x.cfg"), ConfigError);
  EXPECT_THROW((void)build_problem(parse_config("exponents.p = 0.5\n")), ConfigError);
  EXPECT_THROW((void)build_problem(parse_config("rhs.name = power\n")), ConfigError);
}

TEST(Solve, AssumptionGate) {
  const auto dir = fresh_dir("gate");
  auto cfg = load_config(config_dir() + "/h3_violating.cfg");
  cfg.output_dir = dir.string();
  SolveOptions opt;
  EXPECT_THROW((void)cmd_solve(cfg, opt), AssumptionError);
  opt.mode = SolveMode::positive;
  const auto out = cmd_solve(cfg, opt);
  EXPECT_TRUE(validate_summary(out.summary).empty());

  opt.mode = SolveMode::fixed;
  auto zero = parse_config(fmt::format("rhs.name = zero\noutput.dir = {}\nmesh.nx = 4\nmesh.ny = 4\n", dir.string()));
  EXPECT_NO_THROW((void)cmd_solve(zero, opt));
  opt.mode = SolveMode::positive;
  EXPECT_THROW((void)cmd_solve(zero, opt), ConfigError);
}

TEST(Solve, ForcedRunCarriesWarnings) {
  const auto dir = fresh_dir("forced");
  auto cfg = load_config(config_dir() + "/h3_violating.cfg");
  SolveOptions opt;
  opt.force = true;
  opt.mode = SolveMode::nodal;
  opt.out_dir = dir.string();
  const auto out = cmd_solve(cfg, opt);
  ASSERT_TRUE(out.summary["warnings"].is_array());
  bool forced = false;
  for (const auto& w : out.summary["warnings"]) forced |= w.get<std::string>().starts_with("forced:");
  EXPECT_TRUE(forced);
  EXPECT_TRUE(validate_summary(out.summary).empty());
}

TEST(Solve, AllModeSummaryAndFiles) {
  const auto dir = fresh_dir("all");
  const auto out = cmd_solve(small_power(dir), {});
  EXPECT_EQ(out.exit_code, 0) << out.summary.dump(2);
  const auto& s = out.summary;
  EXPECT_TRUE(validate_summary(s).empty());
  EXPECT_EQ(s["schema"], kSummarySchema);
  EXPECT_EQ(s["status"], "ok");
  EXPECT_TRUE(s["energy_ordering"]["ordered"].get<bool>());
  EXPECT_TRUE(s["energy_ordering"]["w0_two_nodal_domains"].get<bool>());
  for (const char* f : {"summary.json", "nodes.csv", "elements.csv", "u0.csv", "v0.csv", "w0.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  std::ifstream in(dir / "summary.json");
  const auto disk = nlohmann::json::parse(in);
  EXPECT_EQ(disk.dump(), s.dump()) << "on-disk summary differs";
}

TEST(Solve, SeedOverrideIsDeterministic) {
  const auto d1 = fresh_dir("seed1"), d2 = fresh_dir("seed2");
  SolveOptions opt;
  opt.mode = SolveMode::positive;
  opt.seed = 5;
  const auto a = cmd_solve(small_power(d1, 8), opt);
  const auto b = cmd_solve(small_power(d2, 8), opt);
  EXPECT_EQ(a.summary["solutions"], b.summary["solutions"]);
  EXPECT_EQ(a.summary["seed"], 5);
  EXPECT_NE(a.summary["config"].get<std::string>().find("solver.seed = 5"), std::string::npos);
}

TEST(Summary, ValidatorFlagsDamage) {
  const auto dir = fresh_dir("damage");
  SolveOptions opt;
  opt.mode = SolveMode::positive;
  auto s = cmd_solve(small_power(dir, 6), opt).summary;
  ASSERT_TRUE(validate_summary(s).empty());
  auto broken = s;
  broken.erase("mesh");
  EXPECT_FALSE(validate_summary(broken).empty());
  broken = s;
  broken["schema"] = "other/2";
  EXPECT_FALSE(validate_summary(broken).empty());
  EXPECT_FALSE(validate_summary(nlohmann::json::array()).empty());
}

TEST(Verify, DeterministicAndControl) {
  VerifyOptions o;
  o.n_samples = 500;
  const auto a = cmd_verify("scalar", o);
  const auto b = cmd_verify("scalar", o);
  EXPECT_TRUE(a.pass()) << a.table();
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_FALSE((a.to_json().dump().find("runtime_ms") != std::string::npos));
  o.corrupt_cr = true;
  const auto c = cmd_verify("scalar", o);
  EXPECT_FALSE(c.pass());
  for (const auto& r : c.records) EXPECT_EQ(r.pass, r.name != "scalar.monotone") << r.name;
  EXPECT_THROW((void)cmd_verify("bogus", o), InvalidArgument);
}

TEST(Verify, AllSuitesPass) {
  VerifyOptions o;
  o.n_samples = 300;
  for (const auto& suite : {"modular", "operator", "solver"}) {
    const auto r = cmd_verify(suite, o);
    EXPECT_TRUE(r.pass()) << r.table();
    EXPECT_FALSE(r.records.empty());
  }
}

TEST(Norm, ZeroField) {
  const auto dir = fresh_dir("norm0");
  const auto cfg = parse_config("mesh.nx = 4\nmesh.ny = 4\nexponents.p = 2.6\nexponents.q = 3\nexponents.mu = 0.5\n");
  const Mesh m = build_problem(cfg).mesh;
  write_solution_csv(DiscreteFunction(m), (dir / "z.csv").string());
  const auto r = cmd_norm(cfg, (dir / "z.csv").string());
  EXPECT_EQ(r.modular.total, 0.0);
  EXPECT_EQ(r.norm, 0.0);
  EXPECT_TRUE(r.sandwich_pass);
}

TEST(Norm, CenterHatClosedForm) {
  // 2x2 mesh, center value 1: |grad u| = 2 on all eight triangles of total area 1, so the
  // modular equals H(2) for p = 2.6, q = 3, mu = 0.5 (reference value from mpmath).
  const auto dir = fresh_dir("norm_hat");
  const auto cfg = parse_config("mesh.nx = 2\nmesh.ny = 2\nexponents.p = 2.6\nexponents.q = 3\nexponents.mu = 0.5\n");
  const Problem prob = build_problem(cfg);
  std::vector<double> v(prob.mesh.n_nodes(), 0.0);
  v[prob.mesh.interior.front()] = 1.0;
  write_solution_csv(DiscreteFunction(prob.mesh, v), (dir / "hat.csv").string());
  const auto r = cmd_norm(cfg, (dir / "hat.csv").string());
  EXPECT_NEAR(r.modular.total, 12.268645121769796686, 1e-12);
  EXPECT_NEAR(r.modular.p_part, std::pow(2.0, 2.6), 1e-13);
  EXPECT_TRUE(r.sandwich_pass);
  const std::vector<double> scaled(prob.mesh.n_elements(), 2.0 / r.norm);
  EXPECT_NEAR(modular_hlog(scaled, prob.exps, prob.mesh).total, 1.0, 1e-10);
  EXPECT_THROW((void)cmd_norm(cfg, (dir / "missing.csv").string()), ConfigError);
  auto bigger = cfg;
  bigger.nx = 3;
  EXPECT_THROW((void)cmd_norm(bigger, (dir / "hat.csv").string()), ConfigError);
}

TEST(Report, EmptyDirectory) {
  const auto dir = fresh_dir("report_empty");
  const auto r = cmd_report(dir.string());
  EXPECT_TRUE(r.rows.empty());
  EXPECT_TRUE(r.problems.empty());
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_THROW((void)cmd_report((dir / "nope").string()), ConfigError);
}

TEST(Report, RefinementFamilyAndCorruptSummary) {
  const auto root = fresh_dir("report_family");
  SolveOptions opt;
  opt.mode = SolveMode::positive;
  const auto coarse = cmd_solve(small_power(root / "a", 6), opt);
  const auto fine = cmd_solve(small_power(root / "b", 10), opt);
  fs::create_directories(root / "c");
  std::ofstream(root / "c" / "summary.json") << "{ not json";
  const auto r = cmd_report(root.string());
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].family, r.rows[1].family);
  const double e6 = coarse.summary["solutions"]["u0"]["energy"].get<double>();
  const double e10 = fine.summary["solutions"]["u0"]["energy"].get<double>();
  const auto& finer = r.rows[0].nx == 10 ? r.rows[0] : r.rows[1];
  ASSERT_TRUE(finer.energy_diff.has_value());
  EXPECT_DOUBLE_EQ(*finer.energy_diff, e10 - e6);
  ASSERT_EQ(r.problems.size(), 1u);
  EXPECT_TRUE((r.table().find("skipped") != std::string::npos));
  EXPECT_TRUE(fs::exists(root / "energy_vs_h.dat"));
}
