#pragma once

// Fixed right-hand-side solve, fibering projection onto the Nehari set,
// constant-sign ground states and the least-energy sign-changing solution.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <fmt/format.h>

#include "json.hpp"
#include "logdp/detail/parallel.hpp"
#include "logdp/errors.hpp"
#include "logdp/fem_grid.hpp"
#include "logdp/modular_space.hpp"
#include "logdp/operator_energy.hpp"
#include "logdp/phi_core.hpp"

namespace logdp {

enum class Preconditioner { none, diagonal, laplace };

inline std::string to_string(Preconditioner p) {
  switch (p) {
    case Preconditioner::none: return "none";
    case Preconditioner::diagonal: return "diagonal";
    default: return "laplace";
  }
}

inline Preconditioner preconditioner_from_string(const std::string& s) {
  if (s == "none") return Preconditioner::none;
  if (s == "diagonal") return Preconditioner::diagonal;
  if (s == "laplace") return Preconditioner::laplace;
  throw InvalidArgument(fmt::format("unknown preconditioner '{}'", s));
}

struct SolverConfig {
  double tol_residual = 1e-9;
  double tol_fiber = 1e-10;
  int max_iters = 2000;
  /// Armijo sufficient-decrease constant and backtracking factor.
  double c1 = 1e-4;
  double backtrack = 0.5;
  std::uint64_t seed = 1;
  Preconditioner preconditioner = Preconditioner::laplace;
  /// Finish descent with Newton steps on the Euler-Lagrange residual.
  bool newton_polish = true;
  /// Newton is first attempted once the residual drops below this fraction of its initial value.
  double newton_switch = 1e-3;
  /// Also report the probe-set dual-norm estimate of the final residual.
  bool probe_estimate = true;

  bool operator==(const SolverConfig&) const = default;

  void validate() const {
    if (!(tol_residual > 0.0) || !(tol_fiber > 0.0)) throw InvalidArgument("solver: tolerances must be positive");
    if (max_iters <= 0) throw InvalidArgument("solver: max_iters must be positive");
    if (!(c1 > 0.0 && c1 < 1.0)) throw InvalidArgument("solver: c1 must lie in (0, 1)");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw InvalidArgument("solver: backtrack must lie in (0, 1)");
    if (!(newton_switch > 0.0)) throw InvalidArgument("solver: newton_switch must be positive");
  }
};

enum class SolverStatus { converged, max_iters, diverged };

inline std::string to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::max_iters: return "max_iters";
    default: return "diverged";
  }
}

struct SolverResult {
  explicit SolverResult(DiscreteFunction u0) : u(std::move(u0)) {}

  DiscreteFunction u;
  double energy = 0.0;
  /// Euclidean norm of the interior dual residual.
  double residual = 0.0;
  /// Probe-set estimate of the dual norm of the residual (NaN when not computed).
  double residual_probe = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  int newton_iterations = 0;
  int restarts = 0;
  /// Fibering values per projection (t_u, or s for the positive part).
  std::vector<double> t_history;
  /// Second fibering value of sign-changing projections.
  std::vector<double> t_minus_history;
  std::vector<double> energy_history;
  std::vector<double> residual_history;
  std::pair<int, int> nodal{0, 0};
  SolverStatus status = SolverStatus::diverged;
  std::string message;
};

inline void to_json(nlohmann::json& j, const SolverResult& r) {
  j = nlohmann::json{{"energy", r.energy},
                     {"residual", r.residual},
                     {"residual_probe", std::isfinite(r.residual_probe) ? nlohmann::json(r.residual_probe)
                                                                        : nlohmann::json(nullptr)},
                     {"iterations", r.iterations},
                     {"newton_iterations", r.newton_iterations},
                     {"restarts", r.restarts},
                     {"nodal", {r.nodal.first, r.nodal.second}},
                     {"status", to_string(r.status)},
                     {"message", r.message}};
}

// ---------------------------------------------------------------------------
// Linear algebra helpers

namespace detail {

inline Eigen::VectorXd to_interior(const Mesh& mesh, std::span<const double> full) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(mesh.interior.size()));
  for (std::size_t k = 0; k < mesh.interior.size(); ++k) out[static_cast<Eigen::Index>(k)] = full[mesh.interior[k]];
  return out;
}

inline std::vector<double> from_interior(const Mesh& mesh, const Eigen::VectorXd& x) {
  std::vector<double> out(mesh.n_nodes(), 0.0);
  for (std::size_t k = 0; k < mesh.interior.size(); ++k) out[mesh.interior[k]] = x[static_cast<Eigen::Index>(k)];
  return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// u + alpha d as a zero-trace function.
inline DiscreteFunction axpy(const DiscreteFunction& u, double alpha, std::span<const double> d) {
  std::vector<double> out(u.vector());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += alpha * d[i];
  return DiscreteFunction(u.mesh(), std::move(out));
}

}  // namespace detail

/// Maps a dual residual to a nodal search direction: K^{-1} r, r / diag(K) or r itself.
class DualPreconditioner {
 public:
  DualPreconditioner(const Mesh& mesh, Preconditioner kind) : mesh_(&mesh), kind_(kind) {
    if (kind_ == Preconditioner::none) return;
    const Eigen::SparseMatrix<double> K = stiffness_matrix(mesh);
    if (kind_ == Preconditioner::diagonal) {
      diag_ = K.diagonal();
      return;
    }
    ldlt_.compute(K);
    if (ldlt_.info() != Eigen::Success) throw ConvergenceError("stiffness factorization failed");
  }

  [[nodiscard]] std::vector<double> apply(const DualVector& r) const {
    if (kind_ == Preconditioner::none) {
      std::vector<double> out(r.values);
      detail::zero_dirichlet(*mesh_, out);
      return out;
    }
    Eigen::VectorXd x = detail::to_interior(*mesh_, r.values);
    if (kind_ == Preconditioner::diagonal) {
      x = x.cwiseQuotient(diag_);
    } else {
      x = ldlt_.solve(x).eval();
    }
    return detail::from_interior(*mesh_, x);
  }

 private:
  const Mesh* mesh_;
  Preconditioner kind_;
  Eigen::VectorXd diag_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

/// b_v = sum_e area_e/3 f(x_e) over elements containing v: the load of v -> int f v.
inline DualVector load_vector(const Mesh& mesh, const std::function<double(Point)>& f) {
  DualVector b{std::vector<double>(mesh.n_nodes(), 0.0)};
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    const double w = mesh.areas[e] / 3.0 * f(mesh.barycenters[e]);
    for (int v : mesh.elements[e]) b.values[v] += w;
  }
  detail::zero_dirichlet(mesh, b.values);
  return b;
}

namespace detail {

/// Seeded perturbation in [-amp, amp] at interior nodes.
inline std::vector<double> seeded_noise(const Mesh& mesh, std::uint64_t seed, double amp) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amp, amp);
  std::vector<double> out(mesh.n_nodes(), 0.0);
  for (int v : mesh.interior) out[v] = dist(rng);
  return out;
}

inline Rect bounding_box(const Mesh& mesh) {
  Rect r{std::numeric_limits<double>::max(), -std::numeric_limits<double>::max(),
         std::numeric_limits<double>::max(), -std::numeric_limits<double>::max()};
  for (const auto& p : mesh.nodes) {
    r.x_min = std::min(r.x_min, p[0]);
    r.x_max = std::max(r.x_max, p[0]);
    r.y_min = std::min(r.y_min, p[1]);
    r.y_max = std::max(r.y_max, p[1]);
  }
  return r;
}

/// sin(kx pi xi) sin(pi eta) in bounding-box coordinates plus seeded noise of relative size 1e-3.
inline DiscreteFunction seed_mode(const Mesh& mesh, int kx, std::uint64_t seed) {
  const Rect box = bounding_box(mesh);
  const auto noise = seeded_noise(mesh, seed, 1e-3);
  std::vector<double> values(mesh.n_nodes(), 0.0);
  for (int v : mesh.interior) {
    const double xi = (mesh.nodes[v][0] - box.x_min) / box.width();
    const double eta = (mesh.nodes[v][1] - box.y_min) / box.height();
    values[v] = std::sin(kx * std::numbers::pi * xi) * std::sin(std::numbers::pi * eta) + noise[v];
  }
  return DiscreteFunction(mesh, std::move(values));
}

}  // namespace detail

/// Positive single bump used to start constant-sign solves.
inline DiscreteFunction seed_single_bump(const Mesh& mesh, std::uint64_t seed) {
  return detail::seed_mode(mesh, 1, seed);
}

/// Positive bump on the left half, negative bump on the right half.
inline DiscreteFunction seed_two_bump(const Mesh& mesh, std::uint64_t seed) {
  return detail::seed_mode(mesh, 2, seed);
}

// ---------------------------------------------------------------------------
// Fibering

/// theta_u(t) = phi(t u) with the gradient magnitudes of u and the zero-order
/// samples precomputed, so each evaluation is one pass over elements and nodes.
class FiberMap {
 public:
  FiberMap(const DiscreteFunction& u, const ExponentField& exps, const Mesh& mesh, const RhsSpec& rhs,
           Truncation tr = Truncation::none)
      : exps_(&exps), mesh_(&mesh), rhs_(&rhs), grad_(gradient_magnitudes(mesh, u.values())) {
    detail::for_each_vertex_weight(mesh, rhs, [&](int v, double w, const Point& x) {
      if (u[v] != 0.0 && detail::truncation_active(tr, u[v])) samples_.push_back({w, u[v], x});
    });
  }

  [[nodiscard]] double value(double t) const {
    double total = 0.0;
    for (std::size_t e = 0; e < grad_.size(); ++e) {
      if (grad_[e] > 0.0) total += mesh_->areas[e] * hlog_primitive(exps_->at(e), t * grad_[e]);
    }
    for (const auto& s : samples_) total -= s.weight * rhs_->F(s.x, t * s.value);
    return total;
  }

  /// theta_u'(t) = <phi'(t u), u>.
  [[nodiscard]] double slope(double t) const {
    double total = 0.0;
    for (std::size_t e = 0; e < grad_.size(); ++e) {
      if (grad_[e] > 0.0) total += mesh_->areas[e] * hlog_density(exps_->at(e), t * grad_[e]) * grad_[e];
    }
    for (const auto& s : samples_) total -= s.weight * rhs_->f(s.x, t * s.value) * s.value;
    return total;
  }

  [[nodiscard]] bool has_load() const { return !samples_.empty(); }

 private:
  struct Sample {
    double weight;
    double value;
    Point x;
  };
  const ExponentField* exps_;
  const Mesh* mesh_;
  const RhsSpec* rhs_;
  std::vector<double> grad_;
  std::vector<Sample> samples_;
};

namespace detail {

inline constexpr double kFiberMin = 1e-8;
inline constexpr double kFiberMax = 1e8;

/// Root of a function that is positive for small t and negative for large t: geometric
/// expansion by 4 from t = 1 to a sign change inside [1e-8, 1e8], then TOMS748.
template <class Slope>
double positive_to_negative_root(Slope&& slope, const char* what) {
  double lo = 1.0;
  double hi = 1.0;
  double f_lo = slope(1.0);
  double f_hi = f_lo;
  if (f_lo > 0.0) {
    while (f_hi > 0.0) {
      lo = hi;
      f_lo = f_hi;
      hi *= 4.0;
      if (hi > kFiberMax) throw ConvergenceError(fmt::format("{}: no sign change within [1e-8, 1e8]", what));
      f_hi = slope(hi);
    }
  } else {
    while (f_lo <= 0.0) {
      if (f_lo == 0.0) return lo;
      hi = lo;
      f_hi = f_lo;
      lo /= 4.0;
      if (lo < kFiberMin) throw ConvergenceError(fmt::format("{}: no sign change within [1e-8, 1e8]", what));
      f_lo = slope(lo);
    }
  }
  if (f_hi == 0.0) return hi;
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      slope, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(52), max_iter);
  return std::abs(slope(a)) <= std::abs(slope(b)) ? a : b;
}

}  // namespace detail

/// Unique t_u > 0 with t_u u on the Nehari set of phi (or of phi_+- for a truncation).
/// Verifies theta' > 0 at t_u/2 and theta' < 0 at 2 t_u.
inline double fibering_root(const DiscreteFunction& u, const ExponentField& exps, const Mesh& mesh,
                            const RhsSpec& rhs, const SolverConfig& cfg = {},
                            Truncation tr = Truncation::none) {
  if (u.is_zero()) throw DomainError("fibering_root: u must be nonzero");
  const FiberMap fiber(u, exps, mesh, rhs, tr);
  const auto slope = [&](double t) { return fiber.slope(t); };
  const double t = detail::positive_to_negative_root(slope, "fibering_root");
  const double scale = 1.0 + std::abs(fiber.value(t));
  if (std::abs(slope(t)) > cfg.tol_fiber * scale) {
    throw ConvergenceError(fmt::format("fibering_root: residual {:.3e} above tolerance", std::abs(slope(t))));
  }
  if (!(slope(0.5 * t) > 0.0) || !(slope(2.0 * t) < 0.0)) {
    throw ConvergenceError("fibering_root: fibering map is not unimodal around its root");
  }
  return t;
}

/// (t, theta_u(t)) at n log-spaced t in [t_min, t_max].
inline std::vector<std::pair<double, double>> fibering_profile(const DiscreteFunction& u,
                                                               const ExponentField& exps,
                                                               const Mesh& mesh, const RhsSpec& rhs,
                                                               double t_min, double t_max, int n = 200) {
  if (!(t_min > 0.0 && t_max > t_min) || n < 2) throw InvalidArgument("fibering_profile: bad range");
  const FiberMap fiber(u, exps, mesh, rhs);
  std::vector<std::pair<double, double>> out;
  for (int k = 0; k < n; ++k) {
    const double t = t_min * std::pow(t_max / t_min, static_cast<double>(k) / (n - 1));
    out.emplace_back(t, fiber.value(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-part fibering for the nodal Nehari set

/// phi(s u_+ + t u_-) and its pairings H(s, t) = (<phi'(.), u_+>, <phi'(.), u_->) for a
/// nonnegative u_+ and a nonpositive u_-; elements where both gradients are nonzero couple s and t.
class PairFiberMap {
 public:
  PairFiberMap(const DiscreteFunction& u_plus, const DiscreteFunction& u_minus, const ExponentField& exps,
               const Mesh& mesh, const RhsSpec& rhs)
      : exps_(&exps), mesh_(&mesh), rhs_(&rhs) {
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
      const Point gp = element_gradient(mesh, u_plus.values(), e);
      const Point gm = element_gradient(mesh, u_minus.values(), e);
      const bool has_p = gp[0] != 0.0 || gp[1] != 0.0;
      const bool has_m = gm[0] != 0.0 || gm[1] != 0.0;
      if (has_p || has_m) elements_.push_back({e, gp, gm});
      coupled_ = coupled_ || (has_p && has_m);
    }
    detail::for_each_vertex_weight(mesh, rhs, [&](int v, double w, const Point& x) {
      if (u_plus[v] != 0.0) plus_.push_back({w, u_plus[v], x});
      if (u_minus[v] != 0.0) minus_.push_back({w, u_minus[v], x});
      if (u_plus[v] != 0.0 && u_minus[v] != 0.0) overlap_ = true;
    });
  }

  [[nodiscard]] bool coupled() const { return coupled_; }
  [[nodiscard]] bool overlapping_nodes() const { return overlap_; }

  [[nodiscard]] double value(double s, double t) const {
    double total = 0.0;
    for (const auto& el : elements_) {
      const double g = std::hypot(s * el.gp[0] + t * el.gm[0], s * el.gp[1] + t * el.gm[1]);
      total += mesh_->areas[el.e] * hlog_primitive(exps_->at(el.e), g);
    }
    for (const auto& n : plus_) total -= n.weight * rhs_->F(n.x, s * n.value);
    for (const auto& n : minus_) total -= n.weight * rhs_->F(n.x, t * n.value);
    return total;
  }

  [[nodiscard]] std::array<double, 2> pairings(double s, double t) const { return evaluate(s, t).h; }

  /// max_i |H_i| / (|operator part_i| + |load part_i|); stays near 1 as (s, t) -> 0.
  [[nodiscard]] double relative_residual(double s, double t) const {
    const auto ev = evaluate(s, t);
    double out = 0.0;
    for (int i = 0; i < 2; ++i) out = std::max(out, ev.mag[i] > 0.0 ? std::abs(ev.h[i]) / ev.mag[i] : 1.0);
    return out;
  }

  /// Jacobian of pairings with respect to (s, t), row-major.
  [[nodiscard]] std::array<double, 4> jacobian(double s, double t) const {
    std::array<double, 4> J{0.0, 0.0, 0.0, 0.0};
    for (const auto& el : elements_) {
      const Point G{s * el.gp[0] + t * el.gm[0], s * el.gp[1] + t * el.gm[1]};
      const auto m = detail::flux_tangent(exps_->at(el.e), G, std::hypot(G[0], G[1]), kTangentFloor);
      const auto form = [&](const Point& a, const Point& b) {
        return a[0] * (m[0] * b[0] + m[1] * b[1]) + a[1] * (m[2] * b[0] + m[3] * b[1]);
      };
      const double area = mesh_->areas[el.e];
      J[0] += area * form(el.gp, el.gp);
      J[1] += area * form(el.gp, el.gm);
      J[2] += area * form(el.gm, el.gp);
      J[3] += area * form(el.gm, el.gm);
    }
    for (const auto& n : plus_) J[0] -= n.weight * rhs_->df(n.x, s * n.value) * n.value * n.value;
    for (const auto& n : minus_) J[3] -= n.weight * rhs_->df(n.x, t * n.value) * n.value * n.value;
    return J;
  }

 private:
  struct Evaluation {
    std::array<double, 2> h{0.0, 0.0};
    std::array<double, 2> mag{0.0, 0.0};
  };
  struct Element {
    std::size_t e;
    Point gp;
    Point gm;
  };

  [[nodiscard]] Evaluation evaluate(double s, double t) const {
    std::array<double, 2> op{0.0, 0.0};
    std::array<double, 2> load{0.0, 0.0};
    for (const auto& el : elements_) {
      const Point G{s * el.gp[0] + t * el.gm[0], s * el.gp[1] + t * el.gm[1]};
      const double g = std::hypot(G[0], G[1]);
      const double c = mesh_->areas[el.e] * hlog_density_over_t(exps_->at(el.e), g);
      op[0] += c * (G[0] * el.gp[0] + G[1] * el.gp[1]);
      op[1] += c * (G[0] * el.gm[0] + G[1] * el.gm[1]);
    }
    for (const auto& n : plus_) load[0] += n.weight * rhs_->f(n.x, s * n.value) * n.value;
    for (const auto& n : minus_) load[1] += n.weight * rhs_->f(n.x, t * n.value) * n.value;
    Evaluation ev;
    for (int i = 0; i < 2; ++i) {
      ev.h[i] = op[i] - load[i];
      ev.mag[i] = std::abs(op[i]) + std::abs(load[i]);
    }
    return ev;
  }

  struct Sample {
    double weight;
    double value;
    Point x;
  };
  const ExponentField* exps_;
  const Mesh* mesh_;
  const RhsSpec* rhs_;
  std::vector<Element> elements_;
  std::vector<Sample> plus_;
  std::vector<Sample> minus_;
  bool coupled_ = false;
  bool overlap_ = false;
};

struct Nehari0Point {
  double s = 1.0;
  double t = 1.0;
  bool coupled = false;
  /// Which method produced the root: "decoupled", "newton" or "nested".
  std::string method;
};

/// (s, t) with s u_+ + t u_- on the nodal Nehari set: both pairings
/// <phi'(s u_+ + t u_-), u_+-> vanish. Decoupled supports reduce to two fibering roots;
/// otherwise a damped 2D Newton iteration runs from those roots, with nested
/// bracketing (the Poincare-Miranda rectangle) as the fallback.
inline Nehari0Point nehari0_project(const DiscreteFunction& u_plus, const DiscreteFunction& u_minus,
                                    const ExponentField& exps, const Mesh& mesh, const RhsSpec& rhs,
                                    const SolverConfig& cfg = {}) {
  for (std::size_t v = 0; v < u_plus.size(); ++v) {
    if (u_plus[v] < 0.0 || u_minus[v] > 0.0) {
      throw DomainError("nehari0_project: u_plus must be >= 0 and u_minus <= 0");
    }
  }
  if (u_plus.is_zero() || u_minus.is_zero()) throw DomainError("nehari0_project: both parts must be nonzero");
  const PairFiberMap map(u_plus, u_minus, exps, mesh, rhs);
  const double s0 = fibering_root(u_plus, exps, mesh, rhs, cfg);
  const double t0 = fibering_root(u_minus, exps, mesh, rhs, cfg);
  if (!map.coupled() && !map.overlapping_nodes()) return {s0, t0, false, "decoupled"};

  const auto converged = [&](double s, double t) {
    const auto h = map.pairings(s, t);
    const double scale = 1.0 + std::abs(map.value(s, t));
    return std::abs(h[0]) <= cfg.tol_fiber * scale && std::abs(h[1]) <= cfg.tol_fiber * scale &&
           map.relative_residual(s, t) <= std::sqrt(cfg.tol_fiber);
  };

  // Damped Newton on H(s, t) = 0. The merit is the relative residual, because |H| itself
  // also vanishes at the trivial point (0, 0).
  double s = s0;
  double t = t0;
  for (int it = 0; it < 60; ++it) {
    if (converged(s, t)) return {s, t, true, "newton"};
    const auto h = map.pairings(s, t);
    const auto J = map.jacobian(s, t);
    const double det = J[0] * J[3] - J[1] * J[2];
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) break;
    const double ds = -(J[3] * h[0] - J[1] * h[1]) / det;
    const double dt = -(-J[2] * h[0] + J[0] * h[1]) / det;
    const double merit = map.relative_residual(s, t);
    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k < 40; ++k, alpha *= 0.5) {
      const double sn = s + alpha * ds;
      const double tn = t + alpha * dt;
      if (!(sn > 0.0 && tn > 0.0)) continue;
      if (map.relative_residual(sn, tn) < (1.0 - 1e-4 * alpha) * merit) {
        s = sn;
        t = tn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (converged(s, t)) return {s, t, true, "newton"};

  // Nested bracketing: t*(s) solves H_2(s, .) = 0, then s solves H_1(s, t*(s)) = 0.
  const auto t_star = [&](double sv) {
    return detail::positive_to_negative_root([&](double tv) { return map.pairings(sv, tv)[1]; },
                                             "nehari0_project");
  };
  s = detail::positive_to_negative_root([&](double sv) { return map.pairings(sv, t_star(sv))[0]; },
                                        "nehari0_project");
  t = t_star(s);
  if (!converged(s, t)) throw ConvergenceError("nehari0_project: pairings above tolerance");
  return {s, t, true, "nested"};
}

// ---------------------------------------------------------------------------
// Newton polish

namespace detail {

struct NewtonOutcome {
  bool success = false;
  int iterations = 0;
  int accepted = 0;
  double residual = 0.0;
  /// At least one step was accepted before the line search failed: the residual has
  /// reached the level where rounding in the assembly dominates.
  [[nodiscard]] bool stalled_after_progress() const { return !success && accepted > 0; }
};

/// Newton on residual(u) = 0 with backtracking on the residual norm. `admissible`
/// rejects iterates that leave the intended solution class; iterates shrinking below
/// half the starting sup-norm are rejected as drifting towards u = 0.
template <class Residual, class Hessian, class Admissible>
NewtonOutcome newton_polish(DiscreteFunction& u, Residual&& residual, Hessian&& hessian,
                            Admissible&& admissible, const SolverConfig& cfg, int budget,
                            std::vector<double>& residual_history) {
  NewtonOutcome out;
  const Mesh& mesh = u.mesh();
  const double sup0 = u.sup_norm();
  DualVector g = residual(u);
  double res = g.norm();
  out.residual = res;
  for (; out.iterations < budget; ++out.iterations) {
    if (res <= cfg.tol_residual) {
      out.success = true;
      return out;
    }
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    const Eigen::SparseMatrix<double> H = hessian(u);
    lu.compute(H);
    if (lu.info() != Eigen::Success) return out;
    const Eigen::VectorXd step = lu.solve(-to_interior(mesh, g.values));
    if (lu.info() != Eigen::Success || !step.allFinite()) return out;
    const auto delta = from_interior(mesh, step);
    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k < 30; ++k, alpha *= cfg.backtrack) {
      DiscreteFunction cand = axpy(u, alpha, delta);
      if (cand.sup_norm() < 0.5 * sup0 || !admissible(cand)) continue;
      DualVector gc = residual(cand);
      const double rc = gc.norm();
      if (rc <= (1.0 - cfg.c1 * alpha) * res) {
        u = std::move(cand);
        g = std::move(gc);
        res = rc;
        out.residual = rc;
        ++out.accepted;
        accepted = true;
        break;
      }
    }
    residual_history.push_back(res);
    if (!accepted) return out;
  }
  out.success = res <= cfg.tol_residual;
  return out;
}

inline double probe_estimate(const DualVector& g, const ExponentField& exps, const Mesh& mesh) {
  return dual_norm_estimate(g, default_probes(mesh, 3),
                            [&](const DiscreteFunction& v) { return norm_grad(v, exps, mesh); });
}

inline void finish(SolverResult& r, const ExponentField& exps, const Mesh& mesh, const RhsSpec& rhs,
                   const SolverConfig& cfg) {
  const DualVector g = grad_phi(r.u, exps, mesh, rhs);
  r.residual = g.norm();
  r.energy = energy_phi(r.u, exps, mesh, rhs);
  if (cfg.probe_estimate) r.residual_probe = probe_estimate(g, exps, mesh);
  const auto nd = nodal_domains(r.u);
  r.nodal = {nd.n_pos, nd.n_neg};
  if (r.status == SolverStatus::converged && !(r.residual <= cfg.tol_residual)) {
    r.status = SolverStatus::diverged;
    r.message = fmt::format("final residual {:.3e} above tolerance", r.residual);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Fixed right-hand side

/// Unique u with A(u) = b. Starts from the optimal multiple of K^{-1} b plus seeded noise,
/// then runs Newton steps with an Armijo test on I(u) - <b, u>.
inline SolverResult solve_fixed_rhs(const DualVector& b, const ExponentField& exps, const Mesh& mesh,
                                    const SolverConfig& cfg = {}) {
  cfg.validate();
  if (b.values.size() != mesh.n_nodes()) throw InvalidArgument("solve_fixed_rhs: load size mismatch");
  DualVector load = b;
  detail::zero_dirichlet(mesh, load.values);
  SolverResult r{DiscreteFunction(mesh)};
  const auto residual_of = [&](const DiscreteFunction& u) {
    DualVector g = apply_A(u, exps, mesh);
    for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] -= load.values[i];
    return g;
  };
  const auto energy_of = [&](const DiscreteFunction& u) { return energy_I(u, exps, mesh) - load.pair(u); };
  const auto finish = [&] {
    const DualVector g = residual_of(r.u);
    r.residual = g.norm();
    r.energy = energy_of(r.u);
    if (cfg.probe_estimate) r.residual_probe = detail::probe_estimate(g, exps, mesh);
    const auto nd = nodal_domains(r.u);
    r.nodal = {nd.n_pos, nd.n_neg};
    if (r.status == SolverStatus::converged && !(r.residual <= cfg.tol_residual)) r.status = SolverStatus::diverged;
    return r;
  };

  if (load.norm() == 0.0) {
    r.status = SolverStatus::converged;
    r.message = "zero load";
    return finish();
  }

  const DualPreconditioner laplace(mesh, Preconditioner::laplace);
  std::vector<double> z = laplace.apply(load);
  const double zmax = std::max(std::abs(*std::max_element(z.begin(), z.end())),
                               std::abs(*std::min_element(z.begin(), z.end())));
  const auto noise = detail::seeded_noise(mesh, cfg.seed, 1e-3 * zmax);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += noise[i];
  const DiscreteFunction dir(mesh, z);
  // The energy is convex along the ray, so alpha -> <A(alpha z), z> - <b, z> is increasing.
  const double bz = load.pair(dir);
  const FiberMap ray(dir, exps, mesh, zero_rhs());
  const double alpha = detail::positive_to_negative_root([&](double a) { return bz - ray.slope(a); },
                                                         "solve_fixed_rhs");
  r.u = alpha * dir;

  DualVector g = residual_of(r.u);
  double res = g.norm();
  double energy = energy_of(r.u);
  for (; r.iterations < cfg.max_iters; ++r.iterations) {
    r.residual_history.push_back(res);
    r.energy_history.push_back(energy);
    if (res <= cfg.tol_residual) {
      r.status = SolverStatus::converged;
      break;
    }
    std::vector<double> delta;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(hessian_phi(r.u, exps, mesh, nullptr));
    if (ldlt.info() == Eigen::Success) {
      const Eigen::VectorXd step = ldlt.solve(-detail::to_interior(mesh, g.values));
      if (step.allFinite()) delta = detail::from_interior(mesh, step);
    }
    double slope = delta.empty() ? 0.0 : detail::dot(g.values, delta);
    if (!(slope < 0.0)) {
      delta = laplace.apply(g);
      for (double& x : delta) x = -x;
      slope = detail::dot(g.values, delta);
    }
    double step = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, step *= cfg.backtrack) {
      DiscreteFunction cand = detail::axpy(r.u, step, delta);
      const double ec = energy_of(cand);
      DualVector gc = residual_of(cand);
      const double rc = gc.norm();
      // Near the minimizer energy differences drop below rounding; then the residual decides.
      const bool armijo = ec <= energy + cfg.c1 * step * slope;
      const bool flat = std::abs(ec - energy) <= 1e-13 * std::max(1.0, std::abs(energy)) &&
                        rc <= (1.0 - cfg.c1 * step) * res;
      if (armijo || flat) {
        r.u = std::move(cand);
        g = std::move(gc);
        res = rc;
        energy = ec;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      r.status = SolverStatus::diverged;
      r.message = "line search failed";
      break;
    }
  }
  if (r.status != SolverStatus::converged && r.message.empty()) {
    r.status = SolverStatus::max_iters;
    r.message = "iteration budget exhausted";
  }
  r.newton_iterations = r.iterations;
  return finish();
}

inline SolverResult solve_fixed_rhs(const std::function<double(Point)>& f, const ExponentField& exps,
                                    const Mesh& mesh, const SolverConfig& cfg = {}) {
  return solve_fixed_rhs(load_vector(mesh, f), exps, mesh, cfg);
}

// ---------------------------------------------------------------------------
// Constant-sign solutions

/// Minimizes phi_+- over the Nehari set of the requested cone: fibering projection,
/// Sobolev-gradient step with Armijo on u -> phi_+-(t_u u), hard truncation back to the cone.
/// Once the residual has dropped by `newton_switch`, Newton steps on phi_+-' = 0 finish the solve.
inline SolverResult solve_constant_sign(Sign sign, const ExponentField& exps, const Mesh& mesh,
                                        const RhsSpec& rhs, const SolverConfig& cfg = {},
                                        const std::optional<DiscreteFunction>& u0 = std::nullopt) {
  cfg.validate();
  const Truncation tr = truncation_for(sign);
  const double sf = sign_factor(sign);
  const auto to_cone = [&](const DiscreteFunction& v) { return sf * truncate(v, sign); };
  SolverResult r{DiscreteFunction(mesh)};
  DiscreteFunction start = u0 ? to_cone(*u0) : to_cone(sf * seed_single_bump(mesh, cfg.seed));
  if (start.is_zero()) throw DomainError("solve_constant_sign: initial guess has no part in the cone");

  const DualPreconditioner precond(mesh, cfg.preconditioner);
  const auto reduced = [&](const DiscreteFunction& v, double& t_out) {
    t_out = fibering_root(v, exps, mesh, rhs, cfg, tr);
    return energy_phi(t_out * v, exps, mesh, rhs, tr);
  };
  const auto residual_of = [&](const DiscreteFunction& v) { return grad_phi(v, exps, mesh, rhs, tr); };
  const auto in_cone = [&](const DiscreteFunction& v) {
    const double sup = v.sup_norm();
    if (sup == 0.0) return false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (sf * v[i] < -1e-8 * sup) return false;
    }
    return true;
  };

  double t = 0.0;
  double J = reduced(start, t);
  r.u = t * start;
  r.t_history.push_back(t);
  DualVector g = residual_of(r.u);
  double res = g.norm();
  double switch_at = cfg.newton_switch * res;
  double alpha = 1.0;
  r.status = SolverStatus::max_iters;
  for (; r.iterations < cfg.max_iters; ++r.iterations) {
    r.residual_history.push_back(res);
    r.energy_history.push_back(J);
    if (res <= cfg.tol_residual) {
      r.status = SolverStatus::converged;
      break;
    }
    if (cfg.newton_polish && res <= switch_at) {
      DiscreteFunction trial = r.u;
      const auto outcome = detail::newton_polish(
          trial, residual_of,
          [&](const DiscreteFunction& v) { return hessian_phi(v, exps, mesh, &rhs, tr); }, in_cone, cfg,
          std::min(50, cfg.max_iters - r.iterations), r.residual_history);
      r.newton_iterations += outcome.iterations;
      if (outcome.success || (outcome.stalled_after_progress() && outcome.residual <= 1e-4 * res)) {
        r.u = std::move(trial);
        r.status = outcome.success ? SolverStatus::converged : SolverStatus::diverged;
        if (!outcome.success) r.message = fmt::format("residual stalled at {:.3e}", outcome.residual);
        break;
      }
      switch_at = 0.1 * res;
    }
    std::vector<double> d = precond.apply(g);
    for (double& x : d) x = -x;
    const double slope = detail::dot(g.values, d);
    bool accepted = false;
    alpha = std::min(alpha * 2.0, 1e6);
    for (int k = 0; k < 60; ++k, alpha *= cfg.backtrack) {
      const DiscreteFunction cand = to_cone(detail::axpy(r.u, alpha, d));
      if (cand.is_zero()) continue;
      double tc = 0.0;
      double Jc = 0.0;
      try {
        Jc = reduced(cand, tc);
      } catch (const ConvergenceError&) {
        continue;
      }
      if (Jc <= J + cfg.c1 * alpha * slope) {
        r.u = tc * cand;
        r.t_history.push_back(tc);
        J = Jc;
        accepted = true;
        break;
      }
    }
    g = residual_of(r.u);
    res = g.norm();
    if (!accepted) {
      // Descent stalled at rounding level; a last Newton attempt decides.
      if (cfg.newton_polish && switch_at < res) {
        switch_at = res;
        continue;
      }
      r.status = SolverStatus::diverged;
      r.message = "line search stalled";
      break;
    }
  }
  if (r.status == SolverStatus::max_iters) r.message = "iteration budget exhausted";
  if (r.u.sup_norm() < 1e-12) {
    r.status = SolverStatus::diverged;
    r.message = "collapsed to zero";
  }
  detail::finish(r, exps, mesh, rhs, cfg);
  return r;
}

// ---------------------------------------------------------------------------
// Sign-changing solution

namespace detail {

struct SplitProjection {
  DiscreteFunction w;
  Nehari0Point point;
  double energy;
};

/// Splits v at the nodes into v^+ and -v^-, projects onto the nodal Nehari set and
/// returns s v^+ - t v^- with its energy.
inline SplitProjection split_project(const DiscreteFunction& v, const ExponentField& exps, const Mesh& mesh,
                                     const RhsSpec& rhs, const SolverConfig& cfg) {
  const DiscreteFunction vp = truncate(v, Sign::plus);
  const DiscreteFunction vm = -truncate(v, Sign::minus);
  const double sup = v.sup_norm();
  if (vp.sup_norm() <= 1e-8 * sup || vm.sup_norm() <= 1e-8 * sup) {
    throw ConvergenceError("sign-changing iterate lost one of its parts");
  }
  const Nehari0Point pt = nehari0_project(vp, vm, exps, mesh, rhs, cfg);
  DiscreteFunction w = pt.s * vp + pt.t * vm;
  const double energy = energy_phi(w, exps, mesh, rhs);
  return {std::move(w), pt, energy};
}

}  // namespace detail

/// Minimizes phi over the nodal Nehari set: w = s w^+ - t w^- is kept on the set by
/// nehari0_project after each Sobolev-gradient step, then Newton steps on phi' = 0 finish.
/// A part collapsing to zero triggers up to 3 restarts from rescaled two-bump data.
inline SolverResult solve_sign_changing(const ExponentField& exps, const Mesh& mesh, const RhsSpec& rhs,
                                        const SolverConfig& cfg = {},
                                        const std::optional<DiscreteFunction>& u0 = std::nullopt) {
  cfg.validate();
  const DualPreconditioner precond(mesh, cfg.preconditioner);
  const auto residual_of = [&](const DiscreteFunction& v) { return grad_phi(v, exps, mesh, rhs); };
  const auto changes_sign = [](const DiscreteFunction& v) {
    const double sup = v.sup_norm();
    double hi = 0.0;
    double lo = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      hi = std::max(hi, v[i]);
      lo = std::min(lo, v[i]);
    }
    return sup > 0.0 && hi > 1e-8 * sup && -lo > 1e-8 * sup;
  };

  SolverResult r{DiscreteFunction(mesh)};
  std::string last_failure;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    r = SolverResult{DiscreteFunction(mesh)};
    r.restarts = attempt;
    DiscreteFunction start = (u0 && attempt == 0) ? *u0
                                                  : std::pow(2.0, attempt) * seed_two_bump(mesh, cfg.seed + attempt);
    detail::SplitProjection cur{DiscreteFunction(mesh), {}, 0.0};
    try {
      cur = detail::split_project(start, exps, mesh, rhs, cfg);
    } catch (const ConvergenceError& e) {
      last_failure = e.what();
      continue;
    }
    r.u = cur.w;
    r.t_history.push_back(cur.point.s);
    r.t_minus_history.push_back(cur.point.t);
    double J = cur.energy;
    DualVector g = residual_of(r.u);
    double res = g.norm();
    double switch_at = cfg.newton_switch * res;
    double alpha = 1.0;
    r.status = SolverStatus::max_iters;
    bool collapsed = false;
    for (; r.iterations < cfg.max_iters; ++r.iterations) {
      r.residual_history.push_back(res);
      r.energy_history.push_back(J);
      if (res <= cfg.tol_residual) {
        r.status = SolverStatus::converged;
        break;
      }
      if (cfg.newton_polish && res <= switch_at) {
        DiscreteFunction trial = r.u;
        const auto outcome = detail::newton_polish(
            trial, residual_of,
            [&](const DiscreteFunction& v) { return hessian_phi(v, exps, mesh, &rhs); }, changes_sign, cfg,
            std::min(50, cfg.max_iters - r.iterations), r.residual_history);
        r.newton_iterations += outcome.iterations;
        if (outcome.success || (outcome.stalled_after_progress() && outcome.residual <= 1e-4 * res)) {
          r.u = std::move(trial);
          r.status = outcome.success ? SolverStatus::converged : SolverStatus::diverged;
          if (!outcome.success) r.message = fmt::format("residual stalled at {:.3e}", outcome.residual);
          break;
        }
        switch_at = 0.1 * res;
      }
      std::vector<double> d = precond.apply(g);
      for (double& x : d) x = -x;
      const double slope = detail::dot(g.values, d);
      bool accepted = false;
      alpha = std::min(alpha * 2.0, 1e6);
      for (int k = 0; k < 60; ++k, alpha *= cfg.backtrack) {
        try {
          auto cand = detail::split_project(detail::axpy(r.u, alpha, d), exps, mesh, rhs, cfg);
          if (cand.energy <= J + cfg.c1 * alpha * slope) {
            r.t_history.push_back(cand.point.s);
            r.t_minus_history.push_back(cand.point.t);
            r.u = std::move(cand.w);
            J = cand.energy;
            accepted = true;
            break;
          }
        } catch (const ConvergenceError&) {
        }
      }
      g = residual_of(r.u);
      res = g.norm();
      if (!accepted) {
        if (cfg.newton_polish && switch_at < res) {
          switch_at = res;
          continue;
        }
        r.status = SolverStatus::diverged;
        r.message = "line search stalled";
        break;
      }
      if (!changes_sign(r.u)) {
        collapsed = true;
        break;
      }
    }
    if (collapsed || !changes_sign(r.u)) {
      last_failure = "one part collapsed to zero";
      continue;
    }
    if (r.status == SolverStatus::max_iters) r.message = "iteration budget exhausted";
    detail::finish(r, exps, mesh, rhs, cfg);
    return r;
  }
  r.status = SolverStatus::diverged;
  r.message = fmt::format("no sign-changing iterate after 3 restarts: {}", last_failure);
  detail::finish(r, exps, mesh, rhs, cfg);
  r.status = SolverStatus::diverged;
  return r;
}

}  // namespace logdp
