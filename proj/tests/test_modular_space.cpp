#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "logdp/modular_space.hpp"

using namespace logdp;

namespace {

struct Fixture : ::testing::Test {
  Mesh mesh = build_rect_mesh({}, 6, 6);
  ExponentField exps = ExponentField::constant(mesh, 2.0, 3.0, 1.0);
};

}  // namespace

TEST_F(Fixture, ConstantFieldClosedForm) {
  const std::vector<double> g(mesh.n_elements(), 0.7);
  const auto rho = modular_hlog(g, exps, mesh);
  EXPECT_NEAR(rho.p_part, 0.49, 1e-14);
  EXPECT_NEAR(rho.total, 0.91159434617486949193, 1e-14);
  EXPECT_NEAR(rho.p_part + rho.logq_part, rho.total, 1e-15);
  EXPECT_NEAR(luxemburg_norm(g, exps, mesh), 0.96430588259059177138, 1e-10);
}

TEST_F(Fixture, ZeroField) {
  const std::vector<double> g(mesh.n_elements(), 0.0);
  EXPECT_EQ(modular_hlog(g, exps, mesh).total, 0.0);
  EXPECT_EQ(luxemburg_norm(g, exps, mesh), 0.0);
  EXPECT_EQ(norm_grad(DiscreteFunction(mesh), exps, mesh), 0.0);
}

TEST_F(Fixture, RejectsBadFields) {
  EXPECT_THROW((void)modular_hlog(std::vector<double>(3, 1.0), exps, mesh), InvalidArgument);
  std::vector<double> g(mesh.n_elements(), 1.0);
  g[2] = -1.0;
  EXPECT_THROW((void)modular_hlog(g, exps, mesh), DomainError);
}

TEST_F(Fixture, UnitModularAtNorm) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(0.0, 1.0), scale(-3.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    const double s = std::pow(10.0, scale(rng));
    std::vector<double> g(mesh.n_elements());
    for (double& x : g) x = s * d(rng);
    const double n = luxemburg_norm(g, exps, mesh);
    for (double& x : g) x /= n;
    EXPECT_NEAR(modular_hlog(g, exps, mesh).total, 1.0, 1e-10);
  }
}

TEST(Modular, QuadraticNormIsL2) {
  const Mesh m = build_rect_mesh({}, 5, 5);
  const auto e = ExponentField::constant(m, 2.0, 2.0, 0.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(0.0, 3.0);
  std::vector<double> g(m.n_elements());
  double l2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = d(rng);
    l2 += m.areas[i] * g[i] * g[i];
  }
  EXPECT_NEAR(luxemburg_norm(g, e, m), std::sqrt(l2), 1e-10 * std::sqrt(l2));
  const std::vector<double> two(m.n_elements(), 2.0);
  EXPECT_NEAR(luxemburg_var_exp(g, two, m), std::sqrt(l2), 1e-10 * std::sqrt(l2));
  EXPECT_NEAR(modular_var_exp(g, two, m), l2, 1e-12 * l2);
}

TEST(Modular, NodalVertexRule) {
  // Single interior node with value 1 on the 2x2 mesh: the eight triangles each see one vertex.
  const Mesh m = build_rect_mesh({}, 2, 2);
  const auto e = ExponentField::constant(m, 2.0, 2.0, 1.0);
  std::vector<double> u(m.n_nodes(), 0.0);
  u[m.interior.front()] = 1.0;
  const auto rho = modular_hlog_nodal(u, e, m);
  EXPECT_NEAR(rho.p_part, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(rho.logq_part, std::log(std::numbers::e + 1.0) / 3.0, 1e-15);
}

TEST(Modular, ConstantGradientClosedForm) {
  // u = x on a mesh whose boundary is ignored by the gradient modular (read through raw values).
  const Mesh m = build_rect_mesh({}, 4, 4);
  const auto e = ExponentField::constant(m, 2.0, 3.0, 1.0);
  std::vector<double> vals(m.n_nodes());
  for (std::size_t v = 0; v < vals.size(); ++v) vals[v] = 0.7 * m.nodes[v][0];
  const auto rho = modular_hlog(gradient_magnitudes(m, vals), e, m);
  EXPECT_NEAR(rho.total, 0.91159434617486949193, 1e-13);
}

TEST(Sandwich, BoundsAroundNorm) {
  const Mesh m = build_rect_mesh({}, 6, 6);
  const auto e = ExponentField::from_functions(
      m, [](Point x) { return 1.6 + x[0]; }, [](Point x) { return 2.8 + 0.5 * x[1]; }, [](Point) { return 2.0; });
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> d(0.0, 1.0), scale(-3.0, 3.0);
  for (int k = 0; k < 200; ++k) {
    const double s = std::pow(10.0, scale(rng));
    std::vector<double> g(m.n_elements());
    for (double& x : g) x = s * d(rng);
    const double n = luxemburg_norm(g, e, m);
    const double rho = modular_hlog(g, e, m).total;
    EXPECT_GE(hlog_sandwich(n, e).relative_slack(rho), -1e-9);
    EXPECT_GE(hlog_sandwich_eps(n, e, 0.1).relative_slack(rho), -1e-9);
  }
  EXPECT_THROW((void)hlog_sandwich_eps(1.0, e, 0.5), DomainError);
}

TEST(Sandwich, ExponentsAreExtremes) {
  const Mesh m = build_rect_mesh({}, 2, 2);
  const auto e = ExponentField::constant(m, 1.8, 2.4, 1.0);
  const auto b = hlog_sandwich(2.0, e);
  EXPECT_NEAR(b.lower, std::pow(2.0, 1.8), 1e-14);
  EXPECT_NEAR(b.upper, std::pow(2.0, 2.4 + kappa()), 1e-12);
  const auto c = hlog_sandwich(0.5, e);
  EXPECT_NEAR(c.lower, std::pow(0.5, 2.4 + kappa()), 1e-15);
  EXPECT_NEAR(c.upper, std::pow(0.5, 1.8), 1e-15);
}

TEST(Poincare, RatioPositiveAndScaleFreeForPowers) {
  const Mesh m = build_rect_mesh({}, 8, 8);
  const auto e = ExponentField::constant(m, 2.0, 2.0, 0.0);
  const auto u = DiscreteFunction::interpolate(m, [](Point x) { return x[0] * (1 - x[0]) * x[1] * (1 - x[1]); });
  const double r1 = poincare_ratio(u, e, m);
  EXPECT_GT(r1, 0.0);
  // Homogeneous case: ratio invariant under scaling, below 1/(sqrt(2) pi) plus discretization slack.
  EXPECT_NEAR(poincare_ratio(5.0 * u, e, m), r1, 1e-9);
  EXPECT_LT(r1, 1.0 / (std::sqrt(2.0) * std::numbers::pi) * 1.1);
  EXPECT_THROW((void)poincare_ratio(DiscreteFunction(m), e, m), DomainError);
}
