#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "logdp/modular_space.hpp"
#include "logdp/operator_energy.hpp"

using namespace logdp;

namespace {

DiscreteFunction random_function(const Mesh& mesh, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  return DiscreteFunction::interpolate(mesh, [&](Point) { return d(rng); });
}

/// 2x2 mesh with u = 1 at the center: all eight triangles have |grad u| = 2, total area 1.
struct CenterHat : ::testing::Test {
  Mesh mesh = build_rect_mesh({}, 2, 2);
  ExponentField exps = ExponentField::constant(mesh, 2.6, 3.0, 0.5);
  DiscreteFunction u = DiscreteFunction::interpolate(mesh, [](Point) { return 1.0; });
};

}  // namespace

TEST_F(CenterHat, EnergyMatchesPrimitive) {
  // I(u) = |Omega| * (2^p/p + mu 2^q/q log(e+2)).
  EXPECT_NEAR(energy_I(u, exps, mesh), 4.4004645926946292711, 1e-13);
}

TEST_F(CenterHat, OperatorPairing) {
  // <A(u), u> = |Omega| * a(2) * 2.
  EXPECT_NEAR(apply_A(u, exps, mesh).pair(u), 2.0 * 6.4169113043743456029, 1e-12);
}

TEST_F(CenterHat, PowerRhsVertexRule) {
  const RhsSpec rhs = power_rhs(3.5, exps);
  // Lumped mass at the center is 1/3.
  EXPECT_NEAR(energy_phi(u, exps, mesh, rhs), 4.4004645926946292711 - 1.0 / (3.0 * 3.5), 1e-13);
  const auto g = grad_phi(u, exps, mesh, rhs);
  EXPECT_NEAR(g.pair(u), 2.0 * 6.4169113043743456029 - 1.0 / 3.0, 1e-12);
}

TEST(Operator, LinearCaseIsStiffness) {
  const Mesh m = build_rect_mesh({}, 6, 5);
  const auto e = ExponentField::constant(m, 2.0, 2.0, 0.0);
  std::mt19937_64 rng(1);
  const auto u = random_function(m, rng);
  const auto Au = apply_A(u, e, m);
  const auto K = stiffness_matrix(m);
  Eigen::VectorXd x(m.interior.size());
  for (std::size_t k = 0; k < m.interior.size(); ++k) x[k] = u[m.interior[k]];
  const Eigen::VectorXd Kx = K * x;
  for (std::size_t k = 0; k < m.interior.size(); ++k) EXPECT_NEAR(Kx[k], Au.values[m.interior[k]], 1e-12);
  EXPECT_NEAR(energy_I(u, e, m), 0.5 * x.dot(Kx), 1e-12);
}

TEST(Operator, BoundaryEntriesZero) {
  const Mesh m = build_rect_mesh({}, 4, 4);
  const auto e = ExponentField::constant(m, 1.7, 2.2, 1.0);
  std::mt19937_64 rng(2);
  const auto Au = apply_A(random_function(m, rng), e, m);
  for (std::size_t v = 0; v < m.n_nodes(); ++v) {
    if (m.is_boundary(v)) EXPECT_EQ(Au.values[v], 0.0);
  }
}

TEST(Operator, GradientMatchesFiniteDifferences) {
  const Mesh m = build_rect_mesh({}, 8, 8);
  const auto e = ExponentField::from_functions(
      m, [](Point x) { return 1.6 + x[0]; }, [](Point x) { return 2.7 + 0.5 * x[1]; }, [](Point x) { return x[0]; });
  const RhsSpec rhs = power_rhs(3.6, e);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 10; ++k) {
    const auto u = random_function(m, rng);
    const auto v = random_function(m, rng);
    constexpr double h = 1e-6;
    const double fd = (energy_phi(u + h * v, e, m, rhs) - energy_phi(u - h * v, e, m, rhs)) / (2 * h);
    const double exact = grad_phi(u, e, m, rhs).pair(v);
    EXPECT_NEAR(fd, exact, 1e-6 * std::abs(exact));
  }
}

TEST(Operator, HessianMatchesGradientDifferences) {
  const Mesh m = build_rect_mesh({}, 6, 6);
  const auto e = ExponentField::constant(m, 2.6, 2.6, 0.5);
  const RhsSpec rhs = power_rhs(3.4, e);
  std::mt19937_64 rng(4);
  const auto u = random_function(m, rng);
  const auto v = random_function(m, rng);
  const auto z = random_function(m, rng);
  constexpr double h = 1e-6;
  const double fd =
      (grad_phi(u + h * v, e, m, rhs).pair(z) - grad_phi(u - h * v, e, m, rhs).pair(z)) / (2 * h);
  const double bil = hessian_bilinear(u, v, z, e, m, &rhs);
  EXPECT_NEAR(bil, fd, 1e-6 * std::abs(fd));
  const auto H = hessian_phi(u, e, m, &rhs);
  Eigen::VectorXd xv(m.interior.size()), xz(m.interior.size());
  for (std::size_t k = 0; k < m.interior.size(); ++k) {
    xv[k] = v[m.interior[k]];
    xz[k] = z[m.interior[k]];
  }
  EXPECT_NEAR(xz.dot(H * xv), bil, 1e-10 * std::abs(bil));
}

TEST(Operator, MonotoneAcrossRegimes) {
  const Mesh m = build_rect_mesh({}, 6, 6);
  std::mt19937_64 rng(5);
  for (double p : {1.3, 1.8, 2.0, 3.0}) {
    const auto e = ExponentField::constant(m, p, p + 0.5, 1.0);
    for (int k = 0; k < 50; ++k) {
      const auto u = random_function(m, rng);
      const auto v = random_function(m, rng, 0.1);
      const double pairing = (apply_A(u, e, m).pair(u - v) - apply_A(v, e, m).pair(u - v));
      EXPECT_GT(pairing, 0.0);
    }
  }
}

TEST(Operator, ZeroGradientNoNan) {
  const Mesh m = build_rect_mesh({}, 4, 4);
  const auto e = ExponentField::constant(m, 1.2, 1.5, 2.0);
  const auto A0 = apply_A(DiscreteFunction(m), e, m);
  for (double x : A0.values) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(energy_I(DiscreteFunction(m), e, m), 0.0);
  const auto H = hessian_phi(DiscreteFunction(m), e, m, nullptr);
  for (int k = 0; k < H.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(H, k); it; ++it) EXPECT_TRUE(std::isfinite(it.value()));
  }
}

TEST(Truncated, PlusPartOfPositiveFunctionIsFull) {
  const Mesh m = build_rect_mesh({}, 6, 6);
  const auto e = ExponentField::constant(m, 2.2, 2.8, 1.0);
  const RhsSpec rhs = power_rhs(3.3, e);
  const auto u = DiscreteFunction::interpolate(m, [](Point x) { return std::sin(std::numbers::pi * x[0]); });
  EXPECT_NEAR(energy_phi_pm(u, e, m, rhs, Sign::plus), energy_phi(u, e, m, rhs), 1e-14);
  // The minus truncation ignores a nonnegative u in the load term.
  EXPECT_NEAR(energy_phi_pm(u, e, m, rhs, Sign::minus), energy_I(u, e, m), 1e-14);
  const auto gp = grad_phi_pm(-1.0 * u, e, m, rhs, Sign::plus);
  const auto ai = apply_A(-1.0 * u, e, m);
  for (std::size_t v = 0; v < m.n_nodes(); ++v) EXPECT_DOUBLE_EQ(gp.values[v], ai.values[v]);
}

TEST(Rhs, ExampleIExponent) {
  const Mesh m = build_rect_mesh({}, 2, 2);
  const auto e = ExponentField::constant(m, 2.6, 2.6, 0.5);
  const RhsSpec rhs = example_i_rhs(0.3, e);
  const double r = 2.6 * (1.0 + kappa() / 2.6) + 0.3;
  EXPECT_NEAR(rhs.r_plus, r, 1e-14);
  EXPECT_NEAR(rhs.f({0, 0}, 2.0), std::pow(2.0, r - 1.0), 1e-12);
  EXPECT_NEAR(rhs.F({0, 0}, -2.0), std::pow(2.0, r) / r, 1e-12);
  EXPECT_THROW((void)example_i_rhs(0.0, e), InvalidArgument);
  EXPECT_THROW((void)example_i_rhs(0.7, e), InvalidArgument);
}

TEST(Rhs, ExampleIIPrimitive) {
  const Mesh m = build_rect_mesh({}, 2, 2);
  const auto e = ExponentField::constant(m, 2.6, 2.6, 0.5);
  const RhsSpec rhs = example_ii_rhs(4.0, 3.8, 3.7, e);
  for (double t : {-3.0, -0.4, 0.5, 1.0, 2.5, 6.0}) {
    // F' = f by central differences; f' = df likewise (away from the |t| = 1 kink).
    const double h = 1e-6;
    EXPECT_NEAR((rhs.F({}, t + h) - rhs.F({}, t - h)) / (2 * h), rhs.f({}, t), 1e-6 * (1 + std::abs(rhs.f({}, t))));
    if (std::abs(std::abs(t) - 1.0) > 1e-3) {
      EXPECT_NEAR((rhs.f({}, t + h) - rhs.f({}, t - h)) / (2 * h), rhs.df({}, t), 1e-5 * (1 + std::abs(rhs.df({}, t))));
    }
  }
  EXPECT_THROW((void)example_ii_rhs(3.0, 3.8, 3.7, e), InvalidArgument);
}

TEST(Rhs, BuiltinLookup) {
  const Mesh m = build_rect_mesh({}, 2, 2);
  const auto e = ExponentField::constant(m, 2.0, 2.0, 0.0);
  EXPECT_EQ(builtin_rhs("power", {{"r", 3.0}}, e).name, "power");
  EXPECT_EQ(builtin_rhs("zero", {}, e).f({}, 5.0), 0.0);
  EXPECT_THROW((void)builtin_rhs("power", {}, e), InvalidArgument);
  EXPECT_THROW((void)builtin_rhs("cubic", {}, e), InvalidArgument);
}

TEST(Assumptions, PowerRhsInsideWindow) {
  const Mesh m = build_rect_mesh({}, 8, 8);
  const auto e = ExponentField::constant(m, 2.6, 2.6, 0.5);
  const RhsSpec rhs = power_rhs(4.2, e);
  const auto rep = validate_assumptions(e, rhs, m);
  EXPECT_TRUE(rep.all_claimed_hold()) << rep.violations().front();
  EXPECT_TRUE(rep.get("f3").holds);
  EXPECT_TRUE(rep.get("f3'").holds);
  EXPECT_THROW((void)rep.get("nope"), InvalidArgument);
}

TEST(Assumptions, ExampleIReportsF3PrimeHonestly) {
  // r - 1 < q+ here, so f/|t|^{q+} decays at infinity although the flag is claimed.
  const Mesh m = build_rect_mesh({}, 8, 8);
  const auto e = ExponentField::constant(m, 2.6, 2.6, 0.5);
  const auto rep = validate_assumptions(e, example_i_rhs(0.6, e), m);
  EXPECT_FALSE(rep.get("f3'").holds);
  const auto v = rep.violations();
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v.front(), "f3'");
}

TEST(DualNorm, ProbeEstimateBoundedByEuclideanScale) {
  const Mesh m = build_rect_mesh({}, 8, 8);
  const auto e = ExponentField::constant(m, 2.0, 2.0, 0.0);
  std::mt19937_64 rng(6);
  const auto r = apply_A(random_function(m, rng), e, m);
  const auto probes = default_probes(m);
  EXPECT_EQ(probes.size(), 16u);
  const double est = dual_norm_estimate(r, probes, [&](const DiscreteFunction& v) { return norm_grad(v, e, m); });
  EXPECT_GT(est, 0.0);
  // |<r, v>| <= |r|_2 |v|_2 for every probe.
  for (const auto& v : probes) {
    double v2 = 0.0;
    for (double x : v.values()) v2 += x * x;
    EXPECT_LE(std::abs(r.pair(v)), r.norm() * std::sqrt(v2) * (1 + 1e-12));
  }
}
