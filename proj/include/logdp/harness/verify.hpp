#pragma once

// Property suites run by `logdp verify`: seeded randomized sweeps of the scalar
// inequalities, modular/norm relations, operator identities and small solver oracles.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "json.hpp"
#include "logdp/fem_grid.hpp"
#include "logdp/modular_space.hpp"
#include "logdp/operator_energy.hpp"
#include "logdp/phi_core.hpp"
#include "logdp/solvers.hpp"

namespace logdp {

struct CheckRecord {
  std::string name;
  long long samples = 0;
  /// Most adverse observed value of the check's figure of merit (see `detail`).
  double worst = 0.0;
  bool pass = false;
  double runtime_ms = 0.0;
  std::string detail;
};

struct VerificationReport {
  std::string suite;
  std::uint64_t seed = 0;
  long long n_samples = 0;
  std::vector<CheckRecord> records;

  [[nodiscard]] bool pass() const {
    for (const auto& r : records) {
      if (!r.pass) return false;
    }
    return true;
  }

  /// JSON form; runtimes are omitted unless requested so that reruns compare equal.
  [[nodiscard]] nlohmann::json to_json(bool with_runtime = false) const {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& r : records) {
      nlohmann::json j{{"name", r.name},
                       {"samples", r.samples},
                       {"worst", std::isfinite(r.worst) ? nlohmann::json(r.worst) : nlohmann::json(nullptr)},
                       {"pass", r.pass},
                       {"detail", r.detail}};
      if (with_runtime) j["runtime_ms"] = r.runtime_ms;
      checks.push_back(std::move(j));
    }
    return {{"suite", suite}, {"seed", seed}, {"n_samples", n_samples}, {"pass", pass()}, {"checks", checks}};
  }

  [[nodiscard]] std::string table() const {
    std::string out = fmt::format("{:<28} {:>9} {:>13} {:>10}  {}\n", "check", "samples", "worst", "ms", "result");
    for (const auto& r : records) {
      out += fmt::format("{:<28} {:>9} {:>13.4e} {:>10.1f}  {}\n", r.name, r.samples, r.worst, r.runtime_ms,
                         r.pass ? "PASS" : "FAIL");
    }
    out += fmt::format("overall: {}\n", pass() ? "PASS" : "FAIL");
    return out;
  }
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  long long n_samples = 10000;
  /// Negative control: scale the monotone-inequality constant C_r by 4.
  bool corrupt_cr = false;
};

namespace detail {

/// Independent stream per check: the seed mixed with a fixed check index.
inline std::mt19937_64 check_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

template <class Body>
CheckRecord timed(const std::string& name, Body&& body) {
  const auto start = std::chrono::steady_clock::now();
  CheckRecord rec = body();
  rec.name = name;
  rec.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

inline double log_uniform(std::mt19937_64& rng, double lo_exp, double hi_exp) {
  return std::pow(10.0, std::uniform_real_distribution<double>(lo_exp, hi_exp)(rng));
}

inline DiscreteFunction random_function(const Mesh& mesh, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<double> v(mesh.n_nodes(), 0.0);
  for (int i : mesh.interior) v[i] = dist(rng);
  return DiscreteFunction(mesh, std::move(v));
}

// -- scalar -----------------------------------------------------------------

inline CheckRecord check_constants() {
  const auto c = compute_log_constants();
  const double residual = std::abs(log_balance(c.t0));
  const bool ok = c.t0 >= 5.8339 && c.t0 <= 5.8341 && c.kappa >= 0.31783 && c.kappa <= 0.31785 && residual <= 1e-10;
  return {"", 1, residual, ok, 0.0, fmt::format("t0 = {:.10f}, kappa = {:.10f}", c.t0, c.kappa)};
}

inline CheckRecord check_young(const VerifyOptions& o) {
  auto rng = check_rng(o.seed, 1);
  std::uniform_real_distribution<double> r_dist(1.0 + 1e-6, 10.0);
  double worst = std::numeric_limits<double>::infinity();
  for (long long k = 0; k < o.n_samples; ++k) {
    const double s = log_uniform(rng, -6, 2);
    const double t = log_uniform(rng, -6, 2);
    worst = std::min(worst, young_log_sides(s, t, r_dist(rng)).scaled_gap());
  }
  return {"", o.n_samples, worst, worst >= -1e-12, 0.0, "min scaled gap"};
}

inline CheckRecord check_monotone(const VerifyOptions& o) {
  auto rng = check_rng(o.seed, 2);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> r_dist(1.05, 5.0);
  const auto h_log = [](double t) { return std::log(kE + t); };
  const auto h_one = [](double) { return 1.0; };
  double worst = std::numeric_limits<double>::infinity();
  for (long long k = 0; k < o.n_samples; ++k) {
    const double r = k % 4 == 0 ? 1.5 : (k % 4 == 1 ? 2.0 : (k % 4 == 2 ? 3.0 : r_dist(rng)));
    const double a = log_uniform(rng, -3, 2);
    const double b = log_uniform(rng, -3, 2);
    std::array<double, 2> xi{a * normal(rng), a * normal(rng)};
    std::array<double, 2> eta{b * normal(rng), b * normal(rng)};
    if (k % 17 == 0) eta = {0.0, 0.0};
    const double c = o.corrupt_cr ? 4.0 * monotone_constant(r) : -1.0;
    const auto sides = k % 2 == 0 ? monotone_sides(xi, eta, r, h_log, c) : monotone_sides(xi, eta, r, h_one, c);
    worst = std::min(worst, sides.scaled_gap());
  }
  return {"", o.n_samples, worst, worst >= -1e-12, 0.0,
          o.corrupt_cr ? "min scaled gap (C_r corrupted by factor 4)" : "min scaled gap"};
}

/// Counts sign changes of the log-derivative eps - g(t) on a log grid.
inline int f_epsilon_critical_points(double eps) {
  int changes = 0;
  double prev = 0.0;
  for (int k = 0; k <= 20000; ++k) {
    const double t = std::pow(10.0, -8.0 + 24.0 * k / 20000.0);
    const double d = eps - log_ratio_g(t);
    if (k > 0 && (d > 0.0) != (prev > 0.0)) ++changes;
    prev = d;
  }
  return changes;
}

inline CheckRecord check_f_epsilon(const VerifyOptions& o) {
  auto rng = check_rng(o.seed, 3);
  const double k = kappa();
  bool ok = true;
  double worst = 0.0;
  for (double eps : {k, k + 1e-3, 0.5, 1.0, 3.0}) {
    const auto st = f_epsilon_structure(eps);
    ok = ok && st.increasing && f_epsilon_critical_points(eps) == 0;
  }
  std::uniform_real_distribution<double> eps_dist(0.08, 0.999 * k);
  for (int i = 0; i < 10; ++i) {
    const double eps = eps_dist(rng);
    const auto st = f_epsilon_structure(eps);
    const bool two = f_epsilon_critical_points(eps) == 2;
    ok = ok && !st.increasing && two && st.t1 < log_constants().t0 && log_constants().t0 < st.t2 && st.a_eps > 1.0;
    worst = std::max({worst, std::abs(log_ratio_g(st.t1) - eps), std::abs(log_ratio_g(st.t2) - eps)});
  }
  return {"", 15, worst, ok && worst <= 1e-12, 0.0, "max |g(t_i) - eps| at the critical points"};
}

inline CheckRecord check_quotient_max() {
  double worst = 0.0;
  for (double Q : {1.0001, 2.0, 10.0}) {
    const auto [arg, value] = quotient_frac_log_max(Q);
    double best = -1.0;
    double best_t = 0.0;
    for (int k = 0; k < 1000000; ++k) {
      const double t = std::pow(10.0, -6.0 + 12.0 * k / 999999.0);
      const double v = t / (Q * (kE + t) * std::log(kE + t));
      if (v > best) {
        best = v;
        best_t = t;
      }
    }
    worst = std::max({worst, std::abs(best - value), std::abs(best_t - arg) / arg * 1e-4});
  }
  return {"", 3000000, worst, worst <= 1e-8, 0.0, "max |grid max - kappa/Q|"};
}

inline CheckRecord check_log_growth(const VerifyOptions& o) {
  auto rng = check_rng(o.seed, 4);
  std::uniform_real_distribution<double> c_dist(1.0, 50.0);
  std::uniform_real_distribution<double> q_dist(1.0, 6.0);
  long long failures = 0;
  for (long long k = 0; k < o.n_samples; ++k) {
    if (!log_growth_check(log_uniform(rng, -6, 4), log_uniform(rng, -6, 4), c_dist(rng), q_dist(rng))) ++failures;
  }
  return {"", o.n_samples, static_cast<double>(failures), failures == 0, 0.0, "failing samples"};
}

inline CheckRecord check_phi_shape(const VerifyOptions& o) {
  auto rng = check_rng(o.seed, 5);
  std::uniform_real_distribution<double> p_dist(1.1, 4.0);
  std::uniform_real_distribution<double> dq(0.0, 2.0);
  std::uniform_real_distribution<double> mu_dist(0.0, 3.0);
  std::uniform_real_distribution<double> lam(0.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  const double k = kappa();
  for (long long n = 0; n < o.n_samples; ++n) {
    const double p = p_dist(rng);
    const PhiParams P{p, p + dq(rng), mu_dist(rng)};
    double t1 = log_uniform(rng, -4, 3);
    double t2 = log_uniform(rng, -4, 3);
    if (t1 > t2) std::swap(t1, t2);
    const double l = lam(rng);
    const double h1 = hlog_eval(P, t1);
    const double h2 = hlog_eval(P, t2);
    // Convexity, (Inc)_p and (Dec)_{q+kappa}.
    const InequalitySides convex{hlog_eval(P, l * t1 + (1 - l) * t2), l * h1 + (1 - l) * h2};
    const InequalitySides inc{h1 / std::pow(t1, P.p), h2 / std::pow(t2, P.p)};
    const InequalitySides dec{h2 / std::pow(t2, P.q + k), h1 / std::pow(t1, P.q + k)};
    worst = std::min({worst, convex.scaled_gap(), inc.scaled_gap(), dec.scaled_gap()});
  }
  return {"", o.n_samples, worst, worst >= -1e-12, 0.0, "min scaled gap (convex, Inc, Dec)"};
}

// -- modular ----------------------------------------------------------------

struct ExponentCase {
  std::string label;
  std::function<double(Point)> p, q, mu;
};

inline std::vector<ExponentCase> exponent_cases() {
  return {{"p=q=2,mu=0", [](Point) { return 2.0; }, [](Point) { return 2.0; }, [](Point) { return 0.0; }},
          {"p=1.5,q=2.5,mu=1", [](Point) { return 1.5; }, [](Point) { return 2.5; }, [](Point) { return 1.0; }},
          {"p=2.6,q=2.6,mu=0.5", [](Point) { return 2.6; }, [](Point) { return 2.6; }, [](Point) { return 0.5; }},
          {"variable p,q", [](Point x) { return 1.8 + 0.4 * x[0]; }, [](Point x) { return 2.4 + 0.5 * x[1]; },
           [](Point x) { return 1.0 + x[0] * x[1]; }},
          {"vanishing mu", [](Point) { return 3.0; }, [](Point) { return 3.5; },
           [](Point x) { return std::max(0.0, x[0] - 0.5); }}};
}

inline CheckRecord check_sandwich(const VerifyOptions& o, long long n_fields) {
  auto rng = check_rng(o.seed, 6);
  const Mesh mesh = build_rect_mesh({}, 6, 6);
  const auto cases = exponent_cases();
  double worst_slack = std::numeric_limits<double>::infinity();
  double worst_unit = 0.0;
  const double eps = 0.2;
  for (long long k = 0; k < n_fields; ++k) {
    const auto& c = cases[static_cast<std::size_t>(k) % cases.size()];
    const auto exps = ExponentField::from_functions(mesh, c.p, c.q, c.mu);
    const double scale = log_uniform(rng, -3, 3);
    std::vector<double> g(mesh.n_elements());
    for (double& x : g) x = scale * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double norm = luxemburg_norm(g, exps, mesh);
    const double rho = modular_hlog(g, exps, mesh).total;
    worst_slack = std::min({worst_slack, hlog_sandwich(norm, exps).relative_slack(rho),
                            hlog_sandwich_eps(norm, exps, eps).relative_slack(rho)});
    std::vector<double> unit(g);
    for (double& x : unit) x /= norm;
    worst_unit = std::max(worst_unit, std::abs(modular_hlog(unit, exps, mesh).total - 1.0));
  }
  const bool ok = worst_slack >= -1e-9 && worst_unit <= 1e-10;
  return {"", n_fields, worst_slack, ok, 0.0,
          fmt::format("min relative slack; max |rho(g/|g|) - 1| = {:.2e}", worst_unit)};
}

inline CheckRecord check_homogeneity(const VerifyOptions& o) {
  auto rng = check_rng(o.seed, 7);
  const Mesh mesh = build_rect_mesh({}, 6, 6);
  const auto c = exponent_cases()[3];
  const auto exps = ExponentField::from_functions(mesh, c.p, c.q, c.mu);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    std::vector<double> g(mesh.n_elements());
    for (double& x : g) x = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    const double lambda = log_uniform(rng, -2, 2);
    std::vector<double> scaled(g);
    for (double& x : scaled) x *= lambda;
    const double a = luxemburg_norm(scaled, exps, mesh);
    const double b = lambda * luxemburg_norm(g, exps, mesh);
    worst = std::max(worst, std::abs(a - b) / b);
  }
  return {"", 50, worst, worst <= 1e-8, 0.0, "max relative error of |lambda g| = lambda |g|"};
}

// -- operator ---------------------------------------------------------------

inline CheckRecord check_gradient_fd(const VerifyOptions& o) {
  auto rng = check_rng(o.seed, 8);
  const Mesh mesh = build_rect_mesh({}, 8, 8);
  const auto exps = ExponentField::from_functions(
      mesh, [](Point x) { return 1.7 + 0.8 * x[0]; }, [](Point x) { return 2.8 + 0.4 * x[1]; },
      [](Point x) { return 0.5 + x[0]; });
  const RhsSpec rhs = power_rhs(3.5, exps);
  constexpr double h = 1e-6;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto u = random_function(mesh, rng, 1.0);
    const auto v = random_function(mesh, rng, 1.0);
    const double exact_I = apply_A(u, exps, mesh).pair(v);
    const double fd_I = (energy_I(u + h * v, exps, mesh) - energy_I(u - h * v, exps, mesh)) / (2 * h);
    const double exact_phi = grad_phi(u, exps, mesh, rhs).pair(v);
    const double fd_phi =
        (energy_phi(u + h * v, exps, mesh, rhs) - energy_phi(u - h * v, exps, mesh, rhs)) / (2 * h);
    worst = std::max({worst, std::abs(fd_I - exact_I) / std::max(std::abs(exact_I), 1e-8),
                      std::abs(fd_phi - exact_phi) / std::max(std::abs(exact_phi), 1e-8)});
  }
  return {"", 40, worst, worst < 1e-5, 0.0, "max relative error vs central differences"};
}

inline CheckRecord check_operator_monotone(const VerifyOptions& o) {
  auto rng = check_rng(o.seed, 9);
  const Mesh mesh = build_rect_mesh({}, 6, 6);
  const auto cases = exponent_cases();
  double worst = std::numeric_limits<double>::infinity();
  bool finite = true;
  const long long n = std::max<long long>(10, o.n_samples / 10);
  for (long long k = 0; k < n; ++k) {
    const auto& c = cases[static_cast<std::size_t>(k) % cases.size()];
    const auto exps = ExponentField::from_functions(mesh, c.p, c.q, c.mu);
    const double scale = log_uniform(rng, -2, 2);
    const auto u = random_function(mesh, rng, scale);
    const auto v = k % 3 == 0 ? DiscreteFunction(mesh) : random_function(mesh, rng, scale);
    const auto au = apply_A(u, exps, mesh);
    const auto av = apply_A(v, exps, mesh);
    const auto diff = u - v;
    double pairing = 0.0;
    double mag = 0.0;
    for (std::size_t i = 0; i < au.values.size(); ++i) {
      pairing += (au.values[i] - av.values[i]) * diff[i];
      mag += std::abs(au.values[i] * diff[i]) + std::abs(av.values[i] * diff[i]);
      finite = finite && std::isfinite(au.values[i]) && std::isfinite(av.values[i]);
    }
    worst = std::min(worst, pairing / mag);
  }
  return {"", n, worst, finite && worst > 1e-14, 0.0, "min <A(u)-A(v), u-v> / scale"};
}

inline CheckRecord check_zero_gradient() {
  const Mesh mesh = build_rect_mesh({}, 4, 4);
  bool ok = true;
  for (double p : {1.2, 1.5, 2.0, 3.0}) {
    const auto exps = ExponentField::constant(mesh, p, p + 0.5, 1.0);
    const auto a0 = apply_A(DiscreteFunction(mesh), exps, mesh);
    for (double x : a0.values) ok = ok && x == 0.0;
    // One nonzero node: elements away from it have zero gradient.
    std::vector<double> v(mesh.n_nodes(), 0.0);
    v[mesh.interior.front()] = 1.0;
    const auto a1 = apply_A(DiscreteFunction(mesh, v), exps, mesh);
    for (double x : a1.values) ok = ok && std::isfinite(x);
    ok = ok && std::isfinite(energy_I(DiscreteFunction(mesh, v), exps, mesh));
  }
  return {"", 8, ok ? 0.0 : 1.0, ok, 0.0, "A(0) = 0 exactly, no NaN on flat elements"};
}

inline CheckRecord check_coercivity(const VerifyOptions& o) {
  auto rng = check_rng(o.seed, 10);
  const Mesh mesh = build_rect_mesh({}, 6, 6);
  const auto c = exponent_cases()[3];
  const auto exps = ExponentField::from_functions(mesh, c.p, c.q, c.mu);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 20; ++k) {
    const auto u = random_function(mesh, rng, 1.0);
    double prev = -1.0;
    for (double lambda : {1.0, 10.0, 100.0}) {
      const auto w = lambda * u;
      const double ratio = apply_A(w, exps, mesh).pair(w) / norm_grad(w, exps, mesh);
      if (prev > 0.0) worst = std::min(worst, (ratio - prev) / prev);
      prev = ratio;
    }
  }
  return {"", 60, worst, worst >= 0.0, 0.0, "min relative increase of <A(lu), lu>/|lu| in lambda"};
}

// -- solver -----------------------------------------------------------------

inline CheckRecord check_fibering_oracle(const VerifyOptions& o) {
  auto rng = check_rng(o.seed, 11);
  const Mesh mesh = build_rect_mesh({}, 12, 12);
  const auto exps = ExponentField::constant(mesh, 2.0, 2.0, 0.0);
  const RhsSpec rhs = power_rhs(4.0, exps);
  const auto K = stiffness_matrix(mesh);
  double worst = 0.0;
  bool shape = true;
  for (int k = 0; k < 10; ++k) {
    const auto u = random_function(mesh, rng, log_uniform(rng, -1, 1));
    const Eigen::VectorXd x = to_interior(mesh, u.values());
    double quartic = 0.0;
    for (int v : mesh.interior) quartic += mesh.lumped_mass[v] * std::pow(u[v], 4);
    const double oracle = std::sqrt(x.dot(K * x) / quartic);
    const double t = fibering_root(u, exps, mesh, rhs);
    worst = std::max(worst, std::abs(t - oracle) / oracle);
    const double top = energy_phi(t * u, exps, mesh, rhs);
    shape = shape && energy_phi(0.5 * t * u, exps, mesh, rhs) < top && energy_phi(2.0 * t * u, exps, mesh, rhs) < top;
  }
  return {"", 10, worst, shape && worst < 1e-8, 0.0, "max relative error of t_u vs closed form"};
}

inline CheckRecord check_linear_fixed(const VerifyOptions& o) {
  const Mesh mesh = build_rect_mesh({}, 16, 16);
  const auto exps = ExponentField::constant(mesh, 2.0, 2.0, 0.0);
  SolverConfig cfg;
  cfg.seed = o.seed;
  cfg.probe_estimate = false;
  const auto b = load_vector(mesh, [](Point) { return 1.0; });
  const auto res = solve_fixed_rhs(b, exps, mesh, cfg);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(stiffness_matrix(mesh));
  const auto direct = from_interior(mesh, ldlt.solve(to_interior(mesh, b.values)));
  double err = 0.0;
  for (std::size_t i = 0; i < direct.size(); ++i) err = std::max(err, std::abs(direct[i] - res.u[i]));
  return {"", 1, err, err < 1e-8 && res.status == SolverStatus::converged, 0.0, "nodal sup error vs linear solve"};
}

inline CheckRecord check_energy_split(const VerifyOptions& o) {
  auto rng = check_rng(o.seed, 12);
  const Mesh mesh = build_rect_mesh({}, 12, 12);
  const auto exps = ExponentField::constant(mesh, 2.6, 2.6, 0.5);
  const RhsSpec rhs = power_rhs(3.4, exps);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    // Positive on x < 0.4, negative on x > 0.6, zero in between: no shared element.
    const double a = log_uniform(rng, -1, 1);
    const double b = log_uniform(rng, -1, 1);
    const auto w = DiscreteFunction::interpolate(mesh, [&](Point x) {
      if (x[0] < 0.4) return a * std::sin(std::numbers::pi * x[0] / 0.4) * std::sin(std::numbers::pi * x[1]);
      if (x[0] > 0.6) return -b * std::sin(std::numbers::pi * (x[0] - 0.6) / 0.4) * std::sin(std::numbers::pi * x[1]);
      return 0.0;
    });
    const double whole = energy_phi(w, exps, mesh, rhs);
    const double parts = energy_phi(truncate(w, Sign::plus), exps, mesh, rhs) +
                         energy_phi(-truncate(w, Sign::minus), exps, mesh, rhs);
    worst = std::max(worst, std::abs(whole - parts) / std::max(1.0, std::abs(whole)));
  }
  return {"", 10, worst, worst <= 1e-12, 0.0, "max relative defect of phi(w) = phi(w+) + phi(-w-)"};
}

}  // namespace detail

inline const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> suites{"scalar", "modular", "operator", "solver", "all"};
  return suites;
}

/// Runs the named suite; throws InvalidArgument for an unknown suite name.
inline VerificationReport cmd_verify(const std::string& suite, const VerifyOptions& o = {}) {
  if (std::find(verify_suites().begin(), verify_suites().end(), suite) == verify_suites().end()) {
    throw InvalidArgument(fmt::format("unknown suite '{}'", suite));
  }
  VerificationReport rep{suite, o.seed, o.n_samples, {}};
  const bool all = suite == "all";
  using namespace detail;
  if (all || suite == "scalar") {
    rep.records.push_back(timed("scalar.constants", [] { return check_constants(); }));
    rep.records.push_back(timed("scalar.young_log", [&] { return check_young(o); }));
    rep.records.push_back(timed("scalar.monotone", [&] { return check_monotone(o); }));
    rep.records.push_back(timed("scalar.f_epsilon", [&] { return check_f_epsilon(o); }));
    rep.records.push_back(timed("scalar.quotient_max", [] { return check_quotient_max(); }));
    rep.records.push_back(timed("scalar.log_growth", [&] { return check_log_growth(o); }));
    rep.records.push_back(timed("scalar.phi_shape", [&] { return check_phi_shape(o); }));
  }
  if (all || suite == "modular") {
    const long long fields = std::clamp<long long>(o.n_samples / 10, 10, 1000);
    rep.records.push_back(timed("modular.sandwich", [&] { return check_sandwich(o, fields); }));
    rep.records.push_back(timed("modular.homogeneity", [&] { return check_homogeneity(o); }));
  }
  if (all || suite == "operator") {
    rep.records.push_back(timed("operator.gradient_fd", [&] { return check_gradient_fd(o); }));
    rep.records.push_back(timed("operator.monotone", [&] { return check_operator_monotone(o); }));
    rep.records.push_back(timed("operator.zero_gradient", [] { return check_zero_gradient(); }));
    rep.records.push_back(timed("operator.coercivity", [&] { return check_coercivity(o); }));
  }
  if (all || suite == "solver") {
    rep.records.push_back(timed("solver.fibering_oracle", [&] { return check_fibering_oracle(o); }));
    rep.records.push_back(timed("solver.linear_fixed", [&] { return check_linear_fixed(o); }));
    rep.records.push_back(timed("solver.energy_split", [&] { return check_energy_split(o); }));
  }
  return rep;
}

}  // namespace logdp
