#pragma once

// Modulars and Luxemburg norms of the H_log space and of variable exponent
// Lebesgue spaces for discrete fields, with the modular/norm sandwich and the
// Poincare ratio as diagnostics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "logdp/errors.hpp"
#include "logdp/fem_grid.hpp"
#include "logdp/phi_core.hpp"

namespace logdp {

/// rho = p_part + logq_part, with p_part = int |.|^p and logq_part = int mu |.|^q log(e + |.|).
struct ModularReport {
  double p_part = 0.0;
  double logq_part = 0.0;
  double total = 0.0;

  ModularReport& operator+=(const ModularReport& other) {
    p_part += other.p_part;
    logq_part += other.logq_part;
    total = p_part + logq_part;
    return *this;
  }
};

inline void to_json(nlohmann::json& j, const ModularReport& r) {
  j = nlohmann::json{{"p_part", r.p_part}, {"logq_part", r.logq_part}, {"total", r.total}};
}

inline void from_json(const nlohmann::json& j, ModularReport& r) {
  j.at("p_part").get_to(r.p_part);
  j.at("logq_part").get_to(r.logq_part);
  j.at("total").get_to(r.total);
}

inline constexpr double kDefaultNormTol = 1e-12;

namespace detail {

inline void require_element_field(std::span<const double> g, const ExponentField& exps,
                                  const Mesh& mesh) {
  if (g.size() != mesh.n_elements() || exps.size() != mesh.n_elements()) {
    throw InvalidArgument("modular: field and exponents must have one entry per element");
  }
}

inline ModularReport modular_parts(double weight, const PhiParams& params, double t) {
  if (t == 0.0) return {};
  ModularReport r;
  r.p_part = weight * std::pow(t, params.p);
  r.logq_part = weight * params.mu * std::pow(t, params.q) * std::log(kE + t);
  return r;
}

}  // namespace detail

/// sum_e area_e H_log(x_e, g_e) for a piecewise-constant field g >= 0.
inline ModularReport modular_hlog(std::span<const double> g, const ExponentField& exps,
                                  const Mesh& mesh) {
  detail::require_element_field(g, exps, mesh);
  ModularReport out;
  for (std::size_t e = 0; e < g.size(); ++e) {
    if (!(g[e] >= 0.0)) throw DomainError(fmt::format("modular_hlog: negative value on element {}", e));
    out += detail::modular_parts(mesh.areas[e], exps.at(e), g[e]);
  }
  return out;
}

/// Vertex rule for zero-order terms: sum_e area_e/3 sum_{v in e} H_log(x_e, |u_v|).
inline ModularReport modular_hlog_nodal(std::span<const double> u, const ExponentField& exps,
                                        const Mesh& mesh) {
  if (u.size() != mesh.n_nodes()) throw InvalidArgument("modular_hlog_nodal: size mismatch");
  ModularReport out;
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    const PhiParams params = exps.at(e);
    for (int v : mesh.elements[e]) {
      out += detail::modular_parts(mesh.areas[e] / 3.0, params, std::abs(u[v]));
    }
  }
  return out;
}

/// Solves rho(1/lambda) = 1 for a modular lambda -> rho(g / lambda) that is continuous and
/// strictly decreasing. The initial bracket is [b 1e-2, b 1e2] with b = max(rho, rho^{1/p_-}),
/// widened by factors of 10 until it straddles 1, then bisected in log-space.
inline double luxemburg_from_modular(const std::function<double(double)>& modular_at_scale,
                                     double p_minus, double tol = kDefaultNormTol,
                                     int max_iter = 2000) {
  if (!(tol > 0.0)) throw DomainError("luxemburg_norm: tol must be positive");
  const double rho = modular_at_scale(1.0);
  if (rho == 0.0) return 0.0;
  const double base = std::max(rho, std::pow(rho, 1.0 / p_minus));
  double lo = base * 1e-2;
  double hi = base * 1e2;
  int guard = 0;
  while (modular_at_scale(lo) < 1.0) {
    lo /= 10.0;
    if (++guard > 600) throw ConvergenceError("luxemburg_norm: lower bracket not found");
  }
  while (modular_at_scale(hi) > 1.0) {
    hi *= 10.0;
    if (++guard > 600) throw ConvergenceError("luxemburg_norm: upper bracket not found");
  }
  double best = hi;
  double best_res = std::abs(modular_at_scale(hi) - 1.0);
  for (int k = 0; k < max_iter; ++k) {
    const double mid = std::sqrt(lo) * std::sqrt(hi);
    if (!(mid > lo && mid < hi)) break;
    const double value = modular_at_scale(mid);
    const double res = std::abs(value - 1.0);
    if (res < best_res) {
      best = mid;
      best_res = res;
    }
    if (res <= tol) return mid;
    if (value > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (best_res <= tol) return best;
  throw ConvergenceError(fmt::format("luxemburg_norm: residual {} above tolerance {}", best_res, tol));
}

/// Luxemburg norm inf{lambda > 0 : rho(g/lambda) <= 1} of a piecewise-constant field.
inline double luxemburg_norm(std::span<const double> g, const ExponentField& exps, const Mesh& mesh,
                             double tol = kDefaultNormTol) {
  modular_hlog(g, exps, mesh);  // validates
  std::vector<double> scaled(g.size());
  return luxemburg_from_modular(
      [&](double lambda) {
        for (std::size_t e = 0; e < g.size(); ++e) scaled[e] = g[e] / lambda;
        return modular_hlog(scaled, exps, mesh).total;
      },
      exps.p_minus, tol);
}

/// ||u||_{H_log} of the nodal function with the vertex rule.
inline double norm_hlog_nodal(std::span<const double> u, const ExponentField& exps,
                              const Mesh& mesh, double tol = kDefaultNormTol) {
  std::vector<double> scaled(u.size());
  return luxemburg_from_modular(
      [&](double lambda) {
        for (std::size_t v = 0; v < u.size(); ++v) scaled[v] = u[v] / lambda;
        return modular_hlog_nodal(scaled, exps, mesh).total;
      },
      exps.p_minus, tol);
}

/// rho_{1,H_log}(u) = rho(|u|) + rho(|grad u|).
inline ModularReport modular_sobolev(const DiscreteFunction& u, const ExponentField& exps,
                                     const Mesh& mesh) {
  ModularReport out = modular_hlog_nodal(u.values(), exps, mesh);
  out += modular_hlog(gradient_magnitudes(mesh, u.values()), exps, mesh);
  return out;
}

/// ||grad u||_{H_log}, the norm used on the zero-trace space.
inline double norm_grad(const DiscreteFunction& u, const ExponentField& exps, const Mesh& mesh,
                        double tol = kDefaultNormTol) {
  return luxemburg_norm(gradient_magnitudes(mesh, u.values()), exps, mesh, tol);
}

/// sum_e area_e g_e^{r_e}.
inline double modular_var_exp(std::span<const double> g, std::span<const double> r,
                              const Mesh& mesh) {
  if (g.size() != mesh.n_elements() || r.size() != mesh.n_elements()) {
    throw InvalidArgument("modular_var_exp: one entry per element required");
  }
  double total = 0.0;
  for (std::size_t e = 0; e < g.size(); ++e) {
    if (!(r[e] > 1.0)) throw DomainError(fmt::format("modular_var_exp: r = {} on element {}", r[e], e));
    if (!(g[e] >= 0.0)) throw DomainError(fmt::format("modular_var_exp: negative value on element {}", e));
    if (g[e] > 0.0) total += mesh.areas[e] * std::pow(g[e], r[e]);
  }
  return total;
}

inline double luxemburg_var_exp(std::span<const double> g, std::span<const double> r,
                                const Mesh& mesh, double tol = kDefaultNormTol) {
  const double r_minus = *std::min_element(r.begin(), r.end());
  std::vector<double> scaled(g.size());
  return luxemburg_from_modular(
      [&](double lambda) {
        for (std::size_t e = 0; e < g.size(); ++e) scaled[e] = g[e] / lambda;
        return modular_var_exp(scaled, r, mesh);
      },
      r_minus, tol);
}

/// ||u||_{H_log} / ||grad u||_{H_log}; empirical Poincare constant sample.
inline double poincare_ratio(const DiscreteFunction& u, const ExponentField& exps,
                             const Mesh& mesh, double tol = kDefaultNormTol) {
  const double grad = norm_grad(u, exps, mesh, tol);
  if (grad == 0.0) throw DomainError("poincare_ratio: gradient vanishes identically");
  return norm_hlog_nodal(u.values(), exps, mesh, tol) / grad;
}

/// min/max{lambda^{low}, lambda^{high}} scaled by 1/a and a.
struct SandwichBounds {
  double lower = 0.0;
  double upper = 0.0;

  /// Smallest relative slack of lower <= rho <= upper (negative means violated).
  [[nodiscard]] double relative_slack(double rho) const {
    const double scale = std::max({rho, lower, upper, std::numeric_limits<double>::min()});
    return std::min(rho - lower, upper - rho) / scale;
  }
};

inline SandwichBounds sandwich_bounds(double norm, double low_exponent, double high_exponent,
                                      double a = 1.0) {
  const double x = std::pow(norm, low_exponent);
  const double y = std::pow(norm, high_exponent);
  return {std::min(x, y) / a, std::max(x, y) * a};
}

/// Bounds with exponents p_- and q_+ + kappa.
inline SandwichBounds hlog_sandwich(double norm, const ExponentField& exps) {
  return sandwich_bounds(norm, exps.p_minus, exps.q_plus + kappa());
}

/// Bounds with exponents p_- and q_+ + eps and constant a_eps, 0 < eps < kappa.
inline SandwichBounds hlog_sandwich_eps(double norm, const ExponentField& exps, double eps) {
  if (!(eps > 0.0 && eps < kappa())) throw DomainError("hlog_sandwich_eps: need 0 < eps < kappa");
  return sandwich_bounds(norm, exps.p_minus, exps.q_plus + eps, f_epsilon_structure(eps).a_eps);
}

}  // namespace logdp
