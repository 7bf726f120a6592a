#pragma once

// Discrete energy functional I, the operator A = I', the full energy
// phi = I - int F(x, u) with its truncated variants, their second variations,
// the right-hand-side library and an assumption validator.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <fmt/format.h>

#include "json.hpp"
#include "logdp/detail/parallel.hpp"
#include "logdp/errors.hpp"
#include "logdp/fem_grid.hpp"
#include "logdp/phi_core.hpp"

namespace logdp {

// ---------------------------------------------------------------------------
// Right-hand sides

/// Assumption flags an instance claims (or that were observed).
struct RhsFlags {
  bool f1 = false;
  bool f2 = false;
  bool f3 = false;
  bool f3_prime = false;
  bool f4 = false;
  bool f4_prime = false;
  bool f5 = false;
  bool f6 = false;
};

using ScalarField = std::function<double(Point, double)>;

/// f(x, t) with primitive F(x, t) = int_0^t f(x, s) ds and derivative df/dt.
struct RhsSpec {
  std::string name;
  std::map<std::string, double> params;
  ScalarField f;
  ScalarField F;
  ScalarField df;
  /// f depends on x; otherwise zero-order terms use the lumped nodal mass.
  bool x_dependent = false;
  /// Growth exponent bounds r_-, r_+ with |f| <= C(1 + |t|^{r-1}).
  double r_minus = 0.0;
  double r_plus = 0.0;
  /// Exponents l (t -> +inf) and l~ (t -> -inf) of the Cerami-type lower bound; NaN if none.
  double l_plus = std::numeric_limits<double>::quiet_NaN();
  double l_minus = std::numeric_limits<double>::quiet_NaN();
  RhsFlags claimed;
};

/// Which primitive enters the energy: F(x, u), F(x, u^+) or F(x, -u^-).
enum class Truncation { none, plus, minus };

inline Truncation truncation_for(Sign s) { return s == Sign::plus ? Truncation::plus : Truncation::minus; }

namespace detail {

inline double truncated_arg(Truncation tr, double t) {
  switch (tr) {
    case Truncation::plus: return std::max(t, 0.0);
    case Truncation::minus: return std::min(t, 0.0);
    default: return t;
  }
}

inline bool truncation_active(Truncation tr, double t) {
  return tr == Truncation::none || (tr == Truncation::plus ? t > 0.0 : t < 0.0);
}

inline double finite_or_zero(double x) { return std::isfinite(x) ? x : 0.0; }

/// sign(t)|t|^{r-1}.
inline double signed_power(double t, double r) {
  if (t == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(t), r - 1.0), t);
}

}  // namespace detail

/// q+ (1 + kappa / q-), the threshold exponent of the (f5)/(f6) conditions.
inline double nodal_threshold_exponent(const ExponentField& exps) {
  return exps.q_plus * (1.0 + kappa() / exps.q_minus);
}

/// f = |t|^{r-2} t, F = |t|^r / r. Claimed flags follow from the exponent relations.
inline RhsSpec power_rhs(double r, const ExponentField& exps) {
  if (!(r > 1.0)) throw InvalidArgument("power rhs: r must exceed 1");
  RhsSpec rhs;
  rhs.name = "power";
  rhs.params = {{"r", r}};
  rhs.f = [r](Point, double t) { return detail::signed_power(t, r); };
  rhs.F = [r](Point, double t) { return t == 0.0 ? 0.0 : std::pow(std::abs(t), r) / r; };
  rhs.df = [r](Point, double t) {
    return detail::finite_or_zero((r - 1.0) * std::pow(std::abs(t), r - 2.0));
  };
  rhs.r_minus = rhs.r_plus = r;
  const double threshold = nodal_threshold_exponent(exps);
  rhs.l_plus = rhs.l_minus = threshold;
  const double p_star = critical_exponent(exps.p_minus);
  rhs.claimed.f1 = true;
  rhs.claimed.f2 = r < p_star;
  rhs.claimed.f3 = r > exps.q_plus;
  rhs.claimed.f3_prime = r > exps.q_plus + 1.0;
  rhs.claimed.f4 = false;
  rhs.claimed.f4_prime = r > exps.p_plus;
  rhs.claimed.f6 = r >= threshold;
  rhs.claimed.f5 = r > threshold && threshold > (r - exps.p_minus) * 2.0 / exps.p_minus;
  return rhs;
}

/// f = |t|^{q+(1+kappa/q-)+eps-2} t with 0 < eps < 1 - q+ kappa / q-.
inline RhsSpec example_i_rhs(double eps, const ExponentField& exps) {
  const double k = kappa();
  const double bound = 1.0 - exps.q_plus * k / exps.q_minus;
  if (!(bound > 0.0)) throw InvalidArgument("example_i: requires q+ kappa / q- < 1");
  if (!(eps > 0.0 && eps < bound)) {
    throw InvalidArgument(fmt::format("example_i: eps must lie in (0, {:.6g})", bound));
  }
  const double threshold = nodal_threshold_exponent(exps);
  RhsSpec rhs = power_rhs(threshold + eps, exps);
  rhs.name = "example_i";
  rhs.params = {{"eps", eps}};
  rhs.l_plus = rhs.l_minus = threshold;
  // Flags as stated for this example.
  rhs.claimed = {true, true, true, true, false, true, true, true};
  return rhs;
}

/// Piecewise log-tilted power with exponents l (t >= 1), m (|t| < 1), l~ (t <= -1), constants.
/// Requires q+ + 1 <= min{m, l, l~}, max{l, l~} < p*_- and max{l, l~}/p_- - min{l, l~}/2 < 1.
inline RhsSpec example_ii_rhs(double l, double l_tilde, double m, const ExponentField& exps) {
  const double p_star = critical_exponent(exps.p_minus);
  const double l_max = std::max(l, l_tilde);
  const double l_min = std::min(l, l_tilde);
  if (!(exps.q_plus + 1.0 <= std::min({m, l, l_tilde}))) {
    throw InvalidArgument("example_ii: requires q+ + 1 <= min{m, l, l~}");
  }
  if (!(l_max < p_star)) throw InvalidArgument("example_ii: requires max{l, l~} < p*_-");
  if (!(l_max / exps.p_minus - l_min / 2.0 < 1.0)) {
    throw InvalidArgument("example_ii: requires max{l, l~}/p_- - min{l, l~}/N < 1");
  }
  // Antiderivative of s^{k-1}(1 + log s) on [1, s].
  const auto tail_primitive = [](double k, double s) {
    const double sk = std::pow(s, k);
    return (sk - 1.0) / k + sk * std::log(s) / k - (sk - 1.0) / (k * k);
  };
  RhsSpec rhs;
  rhs.name = "example_ii";
  rhs.params = {{"l", l}, {"l_tilde", l_tilde}, {"m", m}};
  rhs.f = [=](Point, double t) {
    const double a = std::abs(t);
    if (a < 1.0) return detail::signed_power(t, m);
    const double k = t > 0.0 ? l : l_tilde;
    return std::copysign(std::pow(a, k - 1.0) * (1.0 + std::log(a)), t);
  };
  rhs.F = [=](Point, double t) {
    const double a = std::abs(t);
    if (a < 1.0) return a == 0.0 ? 0.0 : std::pow(a, m) / m;
    return 1.0 / m + tail_primitive(t > 0.0 ? l : l_tilde, a);
  };
  rhs.df = [=](Point, double t) {
    const double a = std::abs(t);
    if (a < 1.0) return detail::finite_or_zero((m - 1.0) * std::pow(a, m - 2.0));
    const double k = t > 0.0 ? l : l_tilde;
    return (k - 1.0) * std::pow(a, k - 2.0) * (1.0 + std::log(a)) + std::pow(a, k - 2.0);
  };
  const double slack = std::isfinite(p_star) ? std::min(0.1, 0.5 * (p_star - l_max)) : 0.1;
  rhs.r_minus = std::min(l_min, m);
  rhs.r_plus = l_max + slack;
  rhs.l_plus = l;
  rhs.l_minus = l_tilde;
  rhs.claimed = {true, true, true, true, false, true, true, true};
  return rhs;
}

inline RhsSpec zero_rhs() {
  RhsSpec rhs;
  rhs.name = "zero";
  rhs.f = [](Point, double) { return 0.0; };
  rhs.F = [](Point, double) { return 0.0; };
  rhs.df = [](Point, double) { return 0.0; };
  rhs.r_minus = rhs.r_plus = 2.0;
  return rhs;
}

/// Library lookup: "zero", "power" {r}, "example_i" {eps}, "example_ii" {l, l_tilde, m}.
inline RhsSpec builtin_rhs(const std::string& name, const std::map<std::string, double>& params,
                           const ExponentField& exps) {
  const auto get = [&](const std::string& key) {
    const auto it = params.find(key);
    if (it == params.end()) throw InvalidArgument(fmt::format("rhs '{}' needs parameter '{}'", name, key));
    return it->second;
  };
  if (name == "zero") return zero_rhs();
  if (name == "power") return power_rhs(get("r"), exps);
  if (name == "example_i") return example_i_rhs(get("eps"), exps);
  if (name == "example_ii") return example_ii_rhs(get("l"), get("l_tilde"), get("m"), exps);
  throw InvalidArgument(fmt::format("unknown rhs '{}'", name));
}

// ---------------------------------------------------------------------------
// Dual vectors

/// Pairing coefficients against nodal test functions; Dirichlet entries are kept at zero.
struct DualVector {
  std::vector<double> values;

  [[nodiscard]] double pair(std::span<const double> v) const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * v[i];
    return s;
  }
  [[nodiscard]] double pair(const DiscreteFunction& v) const { return pair(v.values()); }
  /// Euclidean norm over the interior nodes.
  [[nodiscard]] double norm() const {
    double s = 0.0;
    for (double x : values) s += x * x;
    return std::sqrt(s);
  }
};

// ---------------------------------------------------------------------------
// Element kernels

namespace detail {

/// Per-element gradient magnitude and the isotropic flux coefficient a(g)/g.
struct ElementState {
  Point grad{};
  double magnitude = 0.0;
};

inline std::vector<ElementState> element_states(const Mesh& mesh, std::span<const double> u) {
  std::vector<ElementState> out(mesh.n_elements());
  parallel_for(out.size(), [&](std::size_t e) {
    const Point g = element_gradient(mesh, u, e);
    out[e] = {g, std::hypot(g[0], g[1])};
  });
  return out;
}

/// Weights for zero-order vertex-rule terms. With an x-independent rhs every node
/// uses its lumped mass; otherwise each (element, vertex) pair is visited.
template <class Visit>
void for_each_vertex_weight(const Mesh& mesh, const RhsSpec& rhs, Visit&& visit) {
  if (!rhs.x_dependent) {
    for (int v : mesh.interior) visit(v, mesh.lumped_mass[v], mesh.nodes[v]);
    return;
  }
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    for (int v : mesh.elements[e]) {
      if (!mesh.boundary[v]) visit(v, mesh.areas[e] / 3.0, mesh.barycenters[e]);
    }
  }
}

inline void zero_dirichlet(const Mesh& mesh, std::vector<double>& values) {
  for (std::size_t v = 0; v < values.size(); ++v) {
    if (mesh.boundary[v]) values[v] = 0.0;
  }
}

/// Tangent of the flux map G -> a(|G|) G/|G| at gradient G. |G| is floored at `floor`.
inline std::array<double, 4> flux_tangent(const PhiParams& params, const Point& grad, double magnitude,
                                          double floor) {
  const double g = std::max(magnitude, floor);
  const double c = hlog_density_over_t(params, g);
  const double d = hlog_density_dt(params, g);
  if (magnitude <= 0.0) return {c, 0.0, 0.0, c};
  const double nx = grad[0] / magnitude;
  const double ny = grad[1] / magnitude;
  const double k = d - c;
  return {c + k * nx * nx, k * nx * ny, k * nx * ny, c + k * ny * ny};
}

}  // namespace detail

/// I(u) = sum_e area_e [g^p/p + mu g^q/q log(e + g)], g = |grad u| on e.
inline double energy_I(const DiscreteFunction& u, const ExponentField& exps, const Mesh& mesh) {
  const auto states = detail::element_states(mesh, u.values());
  std::vector<double> local(states.size());
  detail::parallel_for(states.size(), [&](std::size_t e) {
    local[e] = mesh.areas[e] * hlog_primitive(exps.at(e), states[e].magnitude);
  });
  double total = 0.0;
  for (double x : local) total += x;
  return total;
}

/// <A(u), v> coefficients: sum_e area_e a(g)/g grad u . grad phi_i. Zero-gradient
/// elements contribute exactly zero.
inline DualVector apply_A(const DiscreteFunction& u, const ExponentField& exps, const Mesh& mesh) {
  const auto states = detail::element_states(mesh, u.values());
  std::vector<Point> flux(states.size());
  detail::parallel_for(states.size(), [&](std::size_t e) {
    const double c = mesh.areas[e] * hlog_density_over_t(exps.at(e), states[e].magnitude);
    flux[e] = {c * states[e].grad[0], c * states[e].grad[1]};
  });
  DualVector out{std::vector<double>(mesh.n_nodes(), 0.0)};
  for (std::size_t e = 0; e < flux.size(); ++e) {
    const auto& el = mesh.elements[e];
    const auto& g = mesh.grad_maps[e];
    for (int i = 0; i < 3; ++i) out.values[el[i]] += flux[e][0] * g[0][i] + flux[e][1] * g[1][i];
  }
  detail::zero_dirichlet(mesh, out.values);
  return out;
}

/// Vertex-rule integral of F(x, u) (or its truncation).
inline double primitive_integral(const DiscreteFunction& u, const Mesh& mesh, const RhsSpec& rhs,
                                 Truncation tr = Truncation::none) {
  double total = 0.0;
  detail::for_each_vertex_weight(mesh, rhs, [&](int v, double w, const Point& x) {
    const double t = detail::truncated_arg(tr, u[v]);
    if (t != 0.0) total += w * rhs.F(x, t);
  });
  return total;
}

/// Load coefficients of v -> int f(x, u) v (truncated: f(x, u) 1_{+-u > 0}).
inline DualVector rhs_load(const DiscreteFunction& u, const Mesh& mesh, const RhsSpec& rhs,
                           Truncation tr = Truncation::none) {
  DualVector out{std::vector<double>(mesh.n_nodes(), 0.0)};
  detail::for_each_vertex_weight(mesh, rhs, [&](int v, double w, const Point& x) {
    if (detail::truncation_active(tr, u[v])) out.values[v] += w * rhs.f(x, u[v]);
  });
  return out;
}

/// phi(u) = I(u) - int F(x, u); with a truncation this is phi_+ or phi_-.
inline double energy_phi(const DiscreteFunction& u, const ExponentField& exps, const Mesh& mesh,
                         const RhsSpec& rhs, Truncation tr = Truncation::none) {
  return energy_I(u, exps, mesh) - primitive_integral(u, mesh, rhs, tr);
}

inline DualVector grad_phi(const DiscreteFunction& u, const ExponentField& exps, const Mesh& mesh,
                           const RhsSpec& rhs, Truncation tr = Truncation::none) {
  DualVector out = apply_A(u, exps, mesh);
  const DualVector load = rhs_load(u, mesh, rhs, tr);
  for (std::size_t v = 0; v < out.values.size(); ++v) out.values[v] -= load.values[v];
  return out;
}

inline double energy_phi_pm(const DiscreteFunction& u, const ExponentField& exps, const Mesh& mesh,
                            const RhsSpec& rhs, Sign sign) {
  return energy_phi(u, exps, mesh, rhs, truncation_for(sign));
}

inline DualVector grad_phi_pm(const DiscreteFunction& u, const ExponentField& exps,
                              const Mesh& mesh, const RhsSpec& rhs, Sign sign) {
  return grad_phi(u, exps, mesh, rhs, truncation_for(sign));
}

// ---------------------------------------------------------------------------
// Second variation

/// Interior numbering: position of each node in Mesh::interior, -1 on the boundary.
inline std::vector<int> interior_index(const Mesh& mesh) {
  std::vector<int> index(mesh.n_nodes(), -1);
  for (std::size_t k = 0; k < mesh.interior.size(); ++k) index[mesh.interior[k]] = static_cast<int>(k);
  return index;
}

/// |grad u| floor used only in second-derivative assembly (the residual stays exact).
inline constexpr double kTangentFloor = 1e-10;

namespace detail {

template <class Coefficient>
Eigen::SparseMatrix<double> assemble_interior(const Mesh& mesh, Coefficient&& local_tangent) {
  const auto index = interior_index(mesh);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.n_elements() * 9);
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    const auto m = local_tangent(e);
    const auto& el = mesh.elements[e];
    const auto& g = mesh.grad_maps[e];
    for (int i = 0; i < 3; ++i) {
      const int row = index[el[i]];
      if (row < 0) continue;
      const double mx = m[0] * g[0][i] + m[1] * g[1][i];
      const double my = m[2] * g[0][i] + m[3] * g[1][i];
      for (int j = 0; j < 3; ++j) {
        const int col = index[el[j]];
        if (col < 0) continue;
        triplets.emplace_back(row, col, mesh.areas[e] * (mx * g[0][j] + my * g[1][j]));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(mesh.interior.size());
  Eigen::SparseMatrix<double> matrix(n, n);
  matrix.setFromTriplets(triplets.begin(), triplets.end());
  return matrix;
}

}  // namespace detail

/// P1 stiffness matrix of the Laplacian on the interior nodes.
inline Eigen::SparseMatrix<double> stiffness_matrix(const Mesh& mesh) {
  return detail::assemble_interior(mesh, [](std::size_t) { return std::array<double, 4>{1, 0, 0, 1}; });
}

/// Hessian of phi (or phi_+-) on the interior nodes; |grad u| floored at kTangentFloor.
inline Eigen::SparseMatrix<double> hessian_phi(const DiscreteFunction& u, const ExponentField& exps,
                                               const Mesh& mesh, const RhsSpec* rhs,
                                               Truncation tr = Truncation::none) {
  const auto states = detail::element_states(mesh, u.values());
  Eigen::SparseMatrix<double> H = detail::assemble_interior(mesh, [&](std::size_t e) {
    return detail::flux_tangent(exps.at(e), states[e].grad, states[e].magnitude, kTangentFloor);
  });
  if (rhs != nullptr) {
    const auto index = interior_index(mesh);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(H.rows());
    detail::for_each_vertex_weight(mesh, *rhs, [&](int v, double w, const Point& x) {
      if (detail::truncation_active(tr, u[v])) diag[index[v]] += w * rhs->df(x, u[v]);
    });
    for (Eigen::Index k = 0; k < diag.size(); ++k) H.coeffRef(k, k) -= diag[k];
  }
  return H;
}

/// d/ds <phi'(u + s v), z> at s = 0 (the second variation as a bilinear form).
inline double hessian_bilinear(const DiscreteFunction& u, const DiscreteFunction& v,
                               const DiscreteFunction& z, const ExponentField& exps,
                               const Mesh& mesh, const RhsSpec* rhs,
                               Truncation tr = Truncation::none) {
  const auto states = detail::element_states(mesh, u.values());
  std::vector<double> local(states.size());
  detail::parallel_for(states.size(), [&](std::size_t e) {
    const auto m = detail::flux_tangent(exps.at(e), states[e].grad, states[e].magnitude, kTangentFloor);
    const Point gv = element_gradient(mesh, v.values(), e);
    const Point gz = element_gradient(mesh, z.values(), e);
    local[e] = mesh.areas[e] * (gz[0] * (m[0] * gv[0] + m[1] * gv[1]) +
                                gz[1] * (m[2] * gv[0] + m[3] * gv[1]));
  });
  double total = 0.0;
  for (double x : local) total += x;
  if (rhs != nullptr) {
    detail::for_each_vertex_weight(mesh, *rhs, [&](int k, double w, const Point& x) {
      if (detail::truncation_active(tr, u[k])) total -= w * rhs->df(x, u[k]) * v[k] * z[k];
    });
  }
  return total;
}

// ---------------------------------------------------------------------------
// Dual norm estimate

/// Fixed probe set: sin(k pi xi) sin(l pi eta), 1 <= k, l <= modes, over the bounding box.
inline std::vector<DiscreteFunction> default_probes(const Mesh& mesh, int modes = 4) {
  double x0 = std::numeric_limits<double>::max(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& p : mesh.nodes) {
    x0 = std::min(x0, p[0]);
    x1 = std::max(x1, p[0]);
    y0 = std::min(y0, p[1]);
    y1 = std::max(y1, p[1]);
  }
  std::vector<DiscreteFunction> probes;
  for (int k = 1; k <= modes; ++k) {
    for (int l = 1; l <= modes; ++l) {
      probes.push_back(DiscreteFunction::interpolate(mesh, [&](Point p) {
        return std::sin(k * std::numbers::pi * (p[0] - x0) / (x1 - x0)) *
               std::sin(l * std::numbers::pi * (p[1] - y0) / (y1 - y0));
      }));
    }
  }
  return probes;
}

/// max over probes v of |<r, v>| / ||grad v||_{H_log}; a surrogate for the dual norm.
/// `norm_of` returns the zero-trace norm of a probe (passed in to avoid a dependency cycle).
inline double dual_norm_estimate(const DualVector& r, const std::vector<DiscreteFunction>& probes,
                                 const std::function<double(const DiscreteFunction&)>& norm_of) {
  double best = 0.0;
  for (const auto& v : probes) {
    const double n = norm_of(v);
    if (n > 0.0) best = std::max(best, std::abs(r.pair(v)) / n);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Assumption validation

struct AssumptionCheck {
  std::string name;
  bool claimed = false;
  bool holds = false;
  /// True when decided by sampling (can only falsify), false when checked exactly.
  bool sampled = false;
  double worst = 0.0;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;

  [[nodiscard]] const AssumptionCheck& get(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return c;
    }
    throw InvalidArgument(fmt::format("no assumption check named {}", name));
  }
  /// Names of checks that were claimed (or required) but do not hold.
  [[nodiscard]] std::vector<std::string> violations() const {
    std::vector<std::string> out;
    for (const auto& c : checks) {
      if (c.claimed && !c.holds) out.push_back(c.name);
    }
    return out;
  }
  [[nodiscard]] bool all_claimed_hold() const { return violations().empty(); }
};

inline void to_json(nlohmann::json& j, const AssumptionCheck& c) {
  j = nlohmann::json{{"name", c.name},   {"claimed", c.claimed}, {"holds", c.holds},
                     {"sampled", c.sampled}, {"worst", c.worst}, {"detail", c.detail}};
}

inline void to_json(nlohmann::json& j, const AssumptionReport& r) { j = r.checks; }

/// Structural exponent bounds are checked exactly; rhs conditions are sampled on a log grid
/// s in [1e-6, 1e6] (both signs) at up to 16 element barycenters, so they can only be falsified.
inline AssumptionReport validate_assumptions(const ExponentField& exps, const RhsSpec& rhs,
                                             const Mesh& mesh) {
  AssumptionReport report;
  const double p_star = critical_exponent(exps.p_minus);
  report.checks.push_back({"H", true, exps.satisfies_h(), false, 0.0, "q(x) < p*(x)"});
  report.checks.push_back({"H2", true, exps.satisfies_h2(), false, exps.q_plus - p_star,
                           fmt::format("q+ = {:.6g} < p*_- = {:.6g}", exps.q_plus, p_star)});
  report.checks.push_back({"H3", true, exps.satisfies_h3(), false, exps.q_plus + 1.0 - p_star,
                           fmt::format("q+ + 1 = {:.6g} < p*_- = {:.6g}", exps.q_plus + 1.0, p_star)});

  std::vector<double> grid;
  for (int k = -120; k <= 120; ++k) grid.push_back(std::pow(10.0, k / 20.0));
  std::vector<std::size_t> sample_elements;
  const std::size_t stride = std::max<std::size_t>(1, mesh.n_elements() / 16);
  for (std::size_t e = 0; e < mesh.n_elements(); e += stride) sample_elements.push_back(e);
  const double threshold = nodal_threshold_exponent(exps);
  const auto& claimed = rhs.claimed;

  // (f1): finite values and f(x, 0) = 0 where sampled.
  {
    bool ok = true;
    for (auto e : sample_elements) {
      const Point& x = mesh.barycenters[e];
      for (double s : grid) {
        ok = ok && std::isfinite(rhs.f(x, s)) && std::isfinite(rhs.f(x, -s)) &&
             std::isfinite(rhs.F(x, s)) && std::isfinite(rhs.F(x, -s));
      }
    }
    report.checks.push_back({"f1", claimed.f1, ok, true, 0.0, "finite samples"});
  }
  // (f2): r+ < p*_- with a finite growth constant on the grid.
  {
    double c_est = 0.0;
    for (auto e : sample_elements) {
      const Point& x = mesh.barycenters[e];
      for (double s : grid) {
        for (double t : {s, -s}) {
          c_est = std::max(c_est, std::abs(rhs.f(x, t)) / (1.0 + std::pow(s, rhs.r_plus - 1.0)));
        }
      }
    }
    const bool ok = rhs.r_plus < p_star && std::isfinite(c_est);
    report.checks.push_back({"f2", claimed.f2, ok, true, c_est,
                             fmt::format("r+ = {:.6g}, p*_- = {:.6g}, C ~ {:.4g}", rhs.r_plus, p_star, c_est)});
  }
  // (f3): F / (|s|^{q+} log(e + |s|)) -> +inf; require a positive, increasing tail that at least doubles from 1e3 to 1e6.
  {
    bool ok = true;
    double worst = std::numeric_limits<double>::infinity();
    const auto ratio = [&](const Point& x, double t) {
      const double a = std::abs(t);
      return rhs.F(x, t) / (std::pow(a, exps.q_plus) * std::log(kE + a));
    };
    for (auto e : sample_elements) {
      const Point& x = mesh.barycenters[e];
      for (double sgn : {1.0, -1.0}) {
        const double r3 = ratio(x, sgn * 1e3);
        const double r5 = ratio(x, sgn * 1e5);
        const double r6 = ratio(x, sgn * 1e6);
        worst = std::min(worst, r6);
        ok = ok && r3 > 0.0 && r6 >= 2.0 * r3 && r6 > r5 && r5 > r3;
      }
    }
    report.checks.push_back({"f3", claimed.f3, ok, true, worst, "F/(|s|^{q+} log(e+|s|)) at |s| = 1e6"});
  }
  // (f3'): f(x, t)/|t|^{q+} increasing on (0, inf) and on (-inf, 0).
  {
    double worst = 0.0;
    for (auto e : sample_elements) {
      const Point& x = mesh.barycenters[e];
      for (double sgn : {1.0, -1.0}) {
        double prev = std::numeric_limits<double>::quiet_NaN();
        for (double s : grid) {
          // Moving away from 0 along the positive axis must increase the quotient;
          // along the negative axis it must decrease it.
          const double val = sgn * rhs.f(x, sgn * s) / std::pow(s, exps.q_plus);
          if (!std::isnan(prev)) {
            const double drop = (prev - val) / std::max({1.0, std::abs(prev), std::abs(val)});
            worst = std::max(worst, drop);
          }
          prev = val;
        }
      }
    }
    report.checks.push_back({"f3'", claimed.f3_prime, worst <= 1e-12, true, worst,
                             "largest relative decrease of f/|t|^{q+} away from 0"});
  }
  // (f4): F <= 0 for |t| <= theta and f(x, 0) = 0; sampled at |t| <= 1e-4.
  {
    bool ok = true;
    double worst = 0.0;
    for (auto e : sample_elements) {
      const Point& x = mesh.barycenters[e];
      ok = ok && rhs.f(x, 0.0) == 0.0;
      for (double s : grid) {
        if (s > 1e-4) break;
        worst = std::max({worst, rhs.F(x, s), rhs.F(x, -s)});
      }
    }
    report.checks.push_back({"f4", claimed.f4, ok && worst <= 0.0, true, worst, "max F near 0"});
  }
  // (f4'): F(x, t)/|t|^{p(x)} -> 0 along t = +-2^{-k}.
  {
    bool ok = true;
    double worst = 0.0;
    for (auto e : sample_elements) {
      const Point& x = mesh.barycenters[e];
      const double p = exps.p_at[e];
      for (double sgn : {1.0, -1.0}) {
        double first = 0.0;
        double prev = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= 60; ++k) {
          const double t = sgn * std::ldexp(1.0, -k);
          const double val = std::abs(rhs.F(x, t)) / std::pow(std::abs(t), p);
          if (k == 1) first = val;
          if (k > 40) ok = ok && val <= prev * (1.0 + 1e-12);
          prev = val;
        }
        worst = std::max(worst, prev);
        ok = ok && prev <= 1e-6 * std::max(1.0, first);
      }
    }
    report.checks.push_back({"f4'", claimed.f4_prime, ok, true, worst, "|F|/|t|^p at |t| = 2^-60"});
  }
  // (f5): liminf (f s - c F)/|s|^l >= K > 0 at both ends and the exponent window on min{l, l~}.
  {
    bool ok = !std::isnan(rhs.l_plus) && !std::isnan(rhs.l_minus);
    double K = std::numeric_limits<double>::infinity();
    if (ok) {
      const double l_min = std::min(rhs.l_plus, rhs.l_minus);
      ok = l_min > (rhs.r_plus - exps.p_minus) * 2.0 / exps.p_minus && l_min < rhs.r_plus;
      for (auto e : sample_elements) {
        const Point& x = mesh.barycenters[e];
        for (double s : grid) {
          if (s < 1e4) continue;
          for (double t : {s, -s}) {
            const double l = t > 0.0 ? rhs.l_plus : rhs.l_minus;
            K = std::min(K, (rhs.f(x, t) * t - threshold * rhs.F(x, t)) / std::pow(s, l));
          }
        }
      }
      ok = ok && K > 0.0;
    }
    report.checks.push_back({"f5", claimed.f5, ok, true, K, "min of (f s - q+(1+kappa/q-)F)/|s|^l, |s| >= 1e4"});
  }
  // (f6): f t - q+(1 + kappa/q-) F >= 0.
  {
    double worst = 0.0;
    for (auto e : sample_elements) {
      const Point& x = mesh.barycenters[e];
      for (double s : grid) {
        for (double t : {s, -s}) {
          const double a = rhs.f(x, t) * t;
          const double b = threshold * rhs.F(x, t);
          worst = std::min(worst, (a - b) / std::max({1.0, std::abs(a), std::abs(b)}));
        }
      }
    }
    report.checks.push_back({"f6", claimed.f6, worst >= -1e-12, true, worst, "min scaled f t - c F"});
  }
  return report;
}

}  // namespace logdp
