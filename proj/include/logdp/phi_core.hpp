#pragma once

// Scalar mathematics of the logarithmic double phase Phi-function
//
//   H(t) = t^p + mu * t^q * log(e + t),
//
// its derivatives, the constants t0 / kappa governing t^eps / log(e + t),
// and the pointwise inequalities used by the operator theory, exposed as
// checkable predicates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <utility>

#include "logdp/errors.hpp"

namespace logdp {

inline constexpr double kE = std::numbers::e;

/// Pointwise exponents and weight: 1 < p <= q, mu >= 0.
struct PhiParams {
  double p = 2.0;
  double q = 2.0;
  double mu = 0.0;

  [[nodiscard]] bool valid() const noexcept { return p > 1.0 && p <= q && mu >= 0.0; }
};

inline void require_valid(const PhiParams& params) {
  if (!(params.p > 1.0)) throw InvalidArgument("PhiParams: p must exceed 1");
  if (!(params.p <= params.q)) throw InvalidArgument("PhiParams: p must not exceed q");
  if (!(params.mu >= 0.0)) throw InvalidArgument("PhiParams: mu must be nonnegative");
}

/// H_log(t) = t^p + mu t^q log(e + t).
inline double hlog_eval(const PhiParams& params, double t) {
  if (!(t >= 0.0)) throw DomainError("hlog_eval: t must be nonnegative");
  if (t == 0.0) return 0.0;
  return std::pow(t, params.p) + params.mu * std::pow(t, params.q) * std::log(kE + t);
}

/// Energy density t^p/p + mu t^q/q log(e + t); its t-derivative is hlog_density.
inline double hlog_primitive(const PhiParams& params, double t) {
  if (!(t >= 0.0)) throw DomainError("hlog_primitive: t must be nonnegative");
  if (t == 0.0) return 0.0;
  return std::pow(t, params.p) / params.p +
         params.mu * std::pow(t, params.q) / params.q * std::log(kE + t);
}

/// a(t) = t^{p-1} + mu [log(e+t) + t/(q(e+t))] t^{q-1}.
///
/// The operator integrand is a(|grad u|) grad u / |grad u|.
inline double hlog_density(const PhiParams& params, double t) {
  if (!(t >= 0.0)) throw DomainError("hlog_density: t must be nonnegative");
  if (t == 0.0) return 0.0;
  const double log_term = std::log(kE + t) + t / (params.q * (kE + t));
  return std::pow(t, params.p - 1.0) + params.mu * log_term * std::pow(t, params.q - 1.0);
}

/// a(t)/t, the isotropic coefficient multiplying grad u. Zero at t = 0 by convention
/// (the product with grad u vanishes there because p > 1).
inline double hlog_density_over_t(const PhiParams& params, double t) {
  if (!(t >= 0.0)) throw DomainError("hlog_density_over_t: t must be nonnegative");
  if (t == 0.0) return 0.0;
  const double log_term = std::log(kE + t) + t / (params.q * (kE + t));
  return std::pow(t, params.p - 2.0) + params.mu * log_term * std::pow(t, params.q - 2.0);
}

/// d/dt a(t), strictly positive for t > 0. Singular at 0 when p < 2, hence t > 0 only.
inline double hlog_density_dt(const PhiParams& params, double t) {
  if (!(t > 0.0)) throw DomainError("hlog_density_dt: t must be positive");
  const double et = kE + t;
  const double tq1 = std::pow(t, params.q - 1.0);
  const double log_part = (params.q - 1.0) * std::pow(t, params.q - 2.0) * std::log(et) +
                          2.0 * tq1 / et - tq1 * t / (params.q * et * et);
  return (params.p - 1.0) * std::pow(t, params.p - 2.0) + params.mu * log_part;
}

// ---------------------------------------------------------------------------
// t0 and kappa

struct LogConstants {
  double t0 = 0.0;
  double kappa = 0.0;
  int iterations = 0;
};

/// h(t) = e log(e + t) - t; strictly decreasing, h(0) > 0, unique positive root t0.
inline double log_balance(double t) { return kE * std::log(kE + t) - t; }

/// g(t) = t / ((e + t) log(e + t)); maximal at t0 with g(t0) = kappa.
inline double log_ratio_g(double t) { return t / ((kE + t) * std::log(kE + t)); }

/// Bisection on [1, 10] down to a 1e-3 bracket, then Newton until |h(t0)| <= tol.
inline LogConstants compute_log_constants(double tol = 1e-12) {
  if (!(tol > 0.0)) throw DomainError("compute_log_constants: tol must be positive");
  double lo = 1.0;
  double hi = 10.0;
  int iterations = 0;
  while (hi - lo >= 1e-3) {
    const double mid = 0.5 * (lo + hi);
    if (log_balance(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++iterations;
  }
  double t = 0.5 * (lo + hi);
  double residual = log_balance(t);
  // Newton from inside the bracket; h is concave and decreasing so the iterates
  // approach t0 monotonically after the first step.
  for (int k = 0; k < 100 && std::abs(residual) > tol; ++k) {
    const double slope = kE / (kE + t) - 1.0;
    const double next = t - residual / slope;
    ++iterations;
    if (next == t) break;
    t = next;
    const double next_residual = log_balance(t);
    if (std::abs(next_residual) >= std::abs(residual) && std::abs(next_residual) > 0.0) {
      residual = next_residual;
      break;
    }
    residual = next_residual;
  }
  return {t, kE / (kE + t), iterations};
}

/// Process-wide constants at full double precision.
inline const LogConstants& log_constants() {
  static const LogConstants constants = compute_log_constants(1e-15);
  return constants;
}

inline double kappa() { return log_constants().kappa; }

// ---------------------------------------------------------------------------
// f_eps(t) = t^eps / log(e + t)

inline double f_epsilon(double eps, double t) {
  if (!(eps > 0.0)) throw DomainError("f_epsilon: eps must be positive");
  if (!(t > 0.0)) throw DomainError("f_epsilon: t must be positive");
  return std::pow(t, eps) / std::log(kE + t);
}

/// Monotonicity structure of f_eps.
///
/// For eps >= kappa the map is increasing (t1 = t2 = NaN, a_eps = 1). Otherwise t1 < t0 < t2
/// are the local max and min (the two roots of g(t) = eps) and a_eps = f_eps(t1)/f_eps(t2).
struct FEpsilonStructure {
  bool increasing = true;
  double t1 = std::numeric_limits<double>::quiet_NaN();
  double t2 = std::numeric_limits<double>::quiet_NaN();
  double a_eps = 1.0;
};

namespace detail {

/// Bisection in log-space for a sign change of fn on [lo, hi] (fn(lo), fn(hi) of opposite sign).
template <class Fn>
double log_bisect(Fn&& fn, double lo, double hi, int max_iter = 400) {
  double f_lo = fn(lo);
  for (int k = 0; k < max_iter; ++k) {
    const double mid = std::sqrt(lo) * std::sqrt(hi);
    if (!(mid > lo && mid < hi)) break;
    const double f_mid = fn(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Locates t1, t2 by bisection on g(t) = eps. The lower bracket starts at 1e-9 and the
/// upper one at 1e9; both are widened geometrically when eps is so small that the roots
/// fall outside (t2 grows like exp(1/eps)).
inline FEpsilonStructure f_epsilon_structure(double eps) {
  if (!(eps > 0.0)) throw DomainError("f_epsilon_structure: eps must be positive");
  const auto& c = log_constants();
  FEpsilonStructure out;
  if (eps >= c.kappa) return out;
  out.increasing = false;
  const auto shifted = [eps](double t) { return log_ratio_g(t) - eps; };

  double lo = 1e-9;
  while (shifted(lo) >= 0.0 && lo > 1e-300) lo *= 1e-3;
  out.t1 = detail::log_bisect(shifted, lo, c.t0);

  double hi = 1e9;
  while (shifted(hi) >= 0.0) {
    if (hi > 1e290) throw ConvergenceError("f_epsilon_structure: eps too small to bracket t2");
    hi *= 1e3;
  }
  out.t2 = detail::log_bisect(shifted, c.t0, hi);
  out.a_eps = f_epsilon(eps, out.t1) / f_epsilon(eps, out.t2);
  return out;
}

// ---------------------------------------------------------------------------
// Inequalities as checkable predicates

/// Both sides of an inequality lhs <= rhs.
struct InequalitySides {
  double lhs = 0.0;
  double rhs = 0.0;

  [[nodiscard]] double gap() const noexcept { return rhs - lhs; }
  /// Gap normalised by the larger operand magnitude (and at least 1).
  [[nodiscard]] double scaled_gap() const noexcept {
    return gap() / std::max({1.0, std::abs(lhs), std::abs(rhs)});
  }
  [[nodiscard]] bool holds(double tol = 1e-12) const noexcept { return scaled_gap() >= -tol; }
};

/// s t^{r-1}[log(e+t) + t/(r(e+t))] <= s^r/r log(e+s) + t^r[(r-1)/r log(e+t) + t/(r(e+t))].
inline InequalitySides young_log_sides(double s, double t, double r) {
  if (!(s >= 0.0) || !(t >= 0.0)) throw DomainError("young_log_gap: s, t must be nonnegative");
  if (!(r > 1.0)) throw DomainError("young_log_gap: r must exceed 1");
  const double et = kE + t;
  const double tail = t / (r * et);
  const double lhs = s * std::pow(t, r - 1.0) * (std::log(et) + tail);
  const double rhs = std::pow(s, r) / r * std::log(kE + s) +
                     std::pow(t, r) * ((r - 1.0) / r * std::log(et) + tail);
  return {lhs, rhs};
}

inline double young_log_gap(double s, double t, double r) { return young_log_sides(s, t, r).gap(); }

/// C_r of the monotone inequality: min{2^{2-r}, 1/2} for r >= 2 and r - 1 for 1 < r < 2.
inline double monotone_constant(double r) {
  if (!(r > 1.0)) throw DomainError("monotone_constant: r must exceed 1");
  return r >= 2.0 ? std::min(std::pow(2.0, 2.0 - r), 0.5) : r - 1.0;
}

/// Sides of (h(|xi|)|xi|^{r-2}xi - h(|eta|)|eta|^{r-2}eta).(xi - eta) >= C_r |xi-eta|^r h(m)
/// for r >= 2, and of the (|xi|+|eta|)^{2-r}-weighted form with |xi-eta|^2 for 1 < r < 2;
/// m = min{|xi|, |eta|}. `constant` overrides C_r (negative means use monotone_constant(r)).
template <class H>
InequalitySides monotone_sides(std::span<const double> xi, std::span<const double> eta, double r,
                               H&& h, double constant = -1.0) {
  if (!(r > 1.0)) throw DomainError("monotone_gap: r must exceed 1");
  if (xi.size() != eta.size()) throw InvalidArgument("monotone_gap: dimension mismatch");
  double nxi = 0.0;
  double neta = 0.0;
  double ndiff = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    nxi += xi[i] * xi[i];
    neta += eta[i] * eta[i];
    ndiff += (xi[i] - eta[i]) * (xi[i] - eta[i]);
  }
  nxi = std::sqrt(nxi);
  neta = std::sqrt(neta);
  ndiff = std::sqrt(ndiff);
  // |v|^{r-2} v vanishes at v = 0 for r > 1.
  const double wxi = nxi > 0.0 ? h(nxi) * std::pow(nxi, r - 2.0) : 0.0;
  const double weta = neta > 0.0 ? h(neta) * std::pow(neta, r - 2.0) : 0.0;
  double pairing = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    pairing += (wxi * xi[i] - weta * eta[i]) * (xi[i] - eta[i]);
  }
  const double c_r = constant < 0.0 ? monotone_constant(r) : constant;
  const double hm = h(std::min(nxi, neta));
  if (r >= 2.0) return {c_r * std::pow(ndiff, r) * hm, pairing};
  const double weight = nxi + neta > 0.0 ? std::pow(nxi + neta, 2.0 - r) : 0.0;
  return {c_r * ndiff * ndiff * hm, weight * pairing};
}

template <class H>
double monotone_gap(std::span<const double> xi, std::span<const double> eta, double r, H&& h) {
  return monotone_sides(xi, eta, r, std::forward<H>(h)).gap();
}

/// max over t >= 0 of t / (Q (e+t) log(e+t)) is attained at t0 with value kappa/Q.
inline std::pair<double, double> quotient_frac_log_max(double Q) {
  if (!(Q > 1.0)) throw DomainError("quotient_frac_log_max: Q must exceed 1");
  const auto& c = log_constants();
  return {c.t0, c.kappa / Q};
}

/// log(e+xy) <= log(e+x) + log(e+y), log(e+Cx) <= C log(e+x), and
/// (x+y)^q log(e+x+y) <= (2x)^q log(e+2x) + (2y)^q log(e+2y)
///                    <= 2^{q+1}[x^q log(e+x) + y^q log(e+y)].
inline bool log_growth_check(double x, double y, double C, double q, double tol = 1e-12) {
  if (!(x >= 0.0) || !(y >= 0.0) || !(C >= 1.0) || !(q >= 1.0)) {
    throw DomainError("log_growth_check: arguments out of range");
  }
  const auto zeta = [q](double s) { return std::pow(s, q) * std::log(kE + s); };
  const InequalitySides product{std::log(kE + x * y), std::log(kE + x) + std::log(kE + y)};
  const InequalitySides scaling{std::log(kE + C * x), C * std::log(kE + x)};
  const double doubled = zeta(2.0 * x) + zeta(2.0 * y);
  const InequalitySides sum_first{zeta(x + y), doubled};
  const InequalitySides sum_second{doubled, std::pow(2.0, q + 1.0) * (zeta(x) + zeta(y))};
  return product.holds(tol) && scaling.holds(tol) && sum_first.holds(tol) &&
         sum_second.holds(tol);
}

}  // namespace logdp
