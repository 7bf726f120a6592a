#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/SparseCholesky>
#include <gtest/gtest.h>

#include "logdp/solvers.hpp"

using namespace logdp;

namespace {

constexpr double kPi = std::numbers::pi;

DiscreteFunction random_function(const Mesh& mesh, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  return DiscreteFunction::interpolate(mesh, [&](Point) { return d(rng); });
}

double grad_power_integral(const DiscreteFunction& u, double p) {
  const Mesh& m = u.mesh();
  double s = 0.0;
  const auto g = gradient_magnitudes(m, u.values());
  for (std::size_t e = 0; e < g.size(); ++e) s += m.areas[e] * std::pow(g[e], p);
  return s;
}

double lumped_power_sum(const DiscreteFunction& u, double r) {
  const Mesh& m = u.mesh();
  double s = 0.0;
  for (int v : m.interior) s += m.lumped_mass[v] * std::pow(std::abs(u[v]), r);
  return s;
}

SolverConfig quiet_config() {
  SolverConfig cfg;
  cfg.probe_estimate = false;
  return cfg;
}

}  // namespace

TEST(Config, ValidateAndNames) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.c1 = 1.5;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.max_iters = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  EXPECT_EQ(preconditioner_from_string(to_string(Preconditioner::diagonal)), Preconditioner::diagonal);
  EXPECT_THROW((void)preconditioner_from_string("ilu"), InvalidArgument);
  EXPECT_EQ(to_string(SolverStatus::max_iters), "max_iters");
}

TEST(Fibering, QuadraticQuarticClosedForm) {
  const Mesh m = build_rect_mesh({}, 10, 10);
  const auto e = ExponentField::constant(m, 2.0, 2.0, 0.0);
  const RhsSpec rhs = power_rhs(4.0, e);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 10; ++k) {
    const auto u = random_function(m, rng, 0.1 + k);
    const double oracle = std::sqrt(grad_power_integral(u, 2.0) / lumped_power_sum(u, 4.0));
    EXPECT_NEAR(fibering_root(u, e, m, rhs), oracle, 1e-10 * oracle);
  }
}

TEST(Fibering, CubicQuinticClosedForm) {
  // theta'(t) = t^2 int |grad u|^3 - t^4 sum m |u|^5.
  const Mesh m = build_rect_mesh({}, 8, 8);
  const auto e = ExponentField::constant(m, 3.0, 3.0, 0.0);
  const RhsSpec rhs = power_rhs(5.0, e);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 5; ++k) {
    const auto u = random_function(m, rng);
    const double oracle = std::sqrt(grad_power_integral(u, 3.0) / lumped_power_sum(u, 5.0));
    EXPECT_NEAR(fibering_root(u, e, m, rhs), oracle, 1e-10 * oracle);
  }
}

TEST(Fibering, UnimodalProfile) {
  const Mesh m = build_rect_mesh({}, 8, 8);
  const auto e = ExponentField::constant(m, 2.6, 2.6, 0.5);
  const RhsSpec rhs = example_i_rhs(0.6, e);
  const auto u = seed_single_bump(m, 1);
  const double t = fibering_root(u, e, m, rhs);
  const double top = energy_phi(t * u, e, m, rhs);
  EXPECT_GT(top, 0.0);
  const auto prof = fibering_profile(u, e, m, rhs, t / 50, t * 3, 200);
  ASSERT_EQ(prof.size(), 200u);
  for (const auto& [s, v] : prof) EXPECT_LE(v, top * (1 + 1e-12));
  EXPECT_THROW((void)fibering_root(DiscreteFunction(m), e, m, rhs), DomainError);
}

TEST(FixedRhs, LinearMatchesDirectSolve) {
  const Mesh m = build_rect_mesh({}, 24, 24);
  const auto e = ExponentField::constant(m, 2.0, 2.0, 0.0);
  const auto res = solve_fixed_rhs(std::function<double(Point)>([](Point x) { return 1.0 + x[0]; }), e, m, quiet_config());
  ASSERT_EQ(res.status, SolverStatus::converged);
  // Independent oracle: LDLT of the assembled p = 2 stiffness matrix with the barycentric load.
  Eigen::SparseMatrix<double> K = stiffness_matrix(m);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.interior.size()));
  const auto index = interior_index(m);
  for (std::size_t el = 0; el < m.n_elements(); ++el) {
    const double fval = 1.0 + m.barycenters[el][0];
    for (int v : m.elements[el]) {
      if (index[v] >= 0) b[index[v]] += m.areas[el] / 3.0 * fval;
    }
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
  const Eigen::VectorXd x = ldlt.solve(b);
  for (std::size_t k = 0; k < m.interior.size(); ++k) EXPECT_NEAR(res.u[m.interior[k]], x[k], 1e-10);
}

TEST(FixedRhs, NonlinearUniqueAcrossSeeds) {
  const Mesh m = build_rect_mesh({}, 12, 12);
  const auto e = ExponentField::constant(m, 1.7, 2.5, 1.0);
  const auto f = std::function<double(Point)>([](Point x) { return std::sin(kPi * x[0]) + 0.5; });
  auto cfg = quiet_config();
  const auto a = solve_fixed_rhs(f, e, m, cfg);
  cfg.seed = 99;
  const auto b = solve_fixed_rhs(f, e, m, cfg);
  ASSERT_EQ(a.status, SolverStatus::converged);
  ASSERT_EQ(b.status, SolverStatus::converged);
  EXPECT_LE(a.residual, cfg.tol_residual);
  for (std::size_t v = 0; v < m.n_nodes(); ++v) EXPECT_NEAR(a.u[v], b.u[v], 1e-8);
}

TEST(FixedRhs, ZeroLoadGivesZero) {
  const Mesh m = build_rect_mesh({}, 6, 6);
  const auto e = ExponentField::constant(m, 2.5, 3.0, 1.0);
  const auto res = solve_fixed_rhs(DualVector{std::vector<double>(m.n_nodes(), 0.0)}, e, m, quiet_config());
  EXPECT_TRUE(res.u.is_zero());
  EXPECT_EQ(res.status, SolverStatus::converged);
}

class ConstantSign : public ::testing::Test {
 protected:
  Mesh mesh = build_rect_mesh({}, 16, 16);
  ExponentField exps = ExponentField::constant(mesh, 2.2, 2.6, 1.0);
  RhsSpec rhs = power_rhs(3.9, exps);
};

TEST_F(ConstantSign, PositiveSolutionOnNehari) {
  const auto r = solve_constant_sign(Sign::plus, exps, mesh, rhs, quiet_config());
  ASSERT_EQ(r.status, SolverStatus::converged) << r.message;
  for (double v : r.u.values()) EXPECT_GE(v, -1e-12);
  EXPECT_EQ(r.nodal, (std::pair<int, int>{1, 0}));
  const double pairing = grad_phi(r.u, exps, mesh, rhs).pair(r.u);
  EXPECT_LE(std::abs(pairing), 1e-8 * (1 + std::abs(r.energy)));
  EXPECT_GT(r.energy, 0.0);
  // t_u = 1 on the Nehari set.
  EXPECT_NEAR(fibering_root(r.u, exps, mesh, rhs), 1.0, 1e-8);
}

TEST_F(ConstantSign, OddRhsGivesMirrorSolution) {
  const auto p = solve_constant_sign(Sign::plus, exps, mesh, rhs, quiet_config());
  const auto n = solve_constant_sign(Sign::minus, exps, mesh, rhs, quiet_config());
  ASSERT_EQ(n.status, SolverStatus::converged);
  for (double v : n.u.values()) EXPECT_LE(v, 1e-12);
  EXPECT_NEAR(n.energy, p.energy, 1e-9 * p.energy);
  for (std::size_t v = 0; v < mesh.n_nodes(); ++v) EXPECT_NEAR(n.u[v], -p.u[v], 1e-6 * p.u.sup_norm());
}

TEST_F(ConstantSign, EnergyHistoryDecreases) {
  const auto r = solve_constant_sign(Sign::plus, exps, mesh, rhs, quiet_config());
  ASSERT_FALSE(r.energy_history.empty());
  for (std::size_t k = 1; k < r.energy_history.size(); ++k) {
    EXPECT_LE(r.energy_history[k], r.energy_history[k - 1] * (1 + 1e-10));
  }
}

TEST_F(ConstantSign, SignChangingAboveGroundState) {
  const auto u0 = solve_constant_sign(Sign::plus, exps, mesh, rhs, quiet_config());
  const auto w0 = solve_sign_changing(exps, mesh, rhs, quiet_config());
  ASSERT_EQ(w0.status, SolverStatus::converged) << w0.message;
  EXPECT_EQ(w0.nodal, (std::pair<int, int>{1, 1}));
  EXPECT_GT(w0.energy, u0.energy);
  // Both parts lie on the Nehari set of phi.
  const auto wp = truncate(w0.u, Sign::plus);
  const auto wm = -1.0 * truncate(w0.u, Sign::minus);
  const auto g = grad_phi(w0.u, exps, mesh, rhs);
  EXPECT_LE(std::abs(g.pair(wp)), 1e-7 * w0.energy);
  EXPECT_LE(std::abs(g.pair(wm)), 1e-7 * w0.energy);
}

TEST_F(ConstantSign, DeterministicGivenSeed) {
  const auto a = solve_sign_changing(exps, mesh, rhs, quiet_config());
  const auto b = solve_sign_changing(exps, mesh, rhs, quiet_config());
  EXPECT_EQ(a.u.vector(), b.u.vector());
  EXPECT_EQ(a.energy, b.energy);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Nehari0, DecoupledSupportsGiveFiberingRoots) {
  const Mesh m = build_rect_mesh({}, 12, 12);
  const auto e = ExponentField::constant(m, 2.6, 2.6, 0.5);
  const RhsSpec rhs = power_rhs(4.0, e);
  const auto bump = [](double a, double b) {
    return [a, b](Point x) {
      return x[0] > a && x[0] < b ? std::sin(kPi * (x[0] - a) / (b - a)) * std::sin(kPi * x[1]) : 0.0;
    };
  };
  const auto up = DiscreteFunction::interpolate(m, bump(0.0, 0.4));
  const auto um = -2.0 * DiscreteFunction::interpolate(m, bump(0.6, 1.0));
  const auto pt = nehari0_project(up, um, e, m, rhs);
  EXPECT_FALSE(pt.coupled);
  EXPECT_NEAR(pt.s, fibering_root(up, e, m, rhs), 1e-10);
  EXPECT_NEAR(pt.t, fibering_root(um, e, m, rhs), 1e-10);
  EXPECT_THROW((void)nehari0_project(um, up, e, m, rhs), DomainError);
}

TEST(Nehari0, CoupledProjectionZeroesBothPairings) {
  const Mesh m = build_rect_mesh({}, 12, 12);
  const auto e = ExponentField::constant(m, 2.6, 2.6, 0.5);
  const RhsSpec rhs = power_rhs(4.0, e);
  const auto w = DiscreteFunction::interpolate(m, [](Point x) { return std::sin(2 * kPi * x[0] + 0.3) * std::sin(kPi * x[1]); });
  const auto up = truncate(w, Sign::plus);
  const auto um = -1.0 * truncate(w, Sign::minus);
  const auto pt = nehari0_project(up, um, e, m, rhs);
  EXPECT_TRUE(pt.coupled);
  const auto z = pt.s * up + pt.t * um;
  const auto g = grad_phi(z, e, m, rhs);
  const double scale = apply_A(z, e, m).pair(z);
  EXPECT_LE(std::abs(g.pair(up)) * pt.s, 1e-6 * scale);
  EXPECT_LE(std::abs(g.pair(um)) * pt.t, 1e-6 * scale);
}

TEST(Result, JsonFields) {
  const Mesh m = build_rect_mesh({}, 4, 4);
  SolverResult r{DiscreteFunction(m)};
  r.status = SolverStatus::converged;
  const nlohmann::json j = r;
  for (const char* k : {"energy", "residual", "residual_probe", "iterations", "nodal", "status", "message"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_TRUE(j["residual_probe"].is_null());
  EXPECT_EQ(j["status"], "converged");
}
