#pragma once

// P1 finite elements on triangulated planar domains: meshes, discrete functions
// with zero Dirichlet trace, element gradients, truncations, nodal domains,
// piecewise-constant exponent fields and CSV exchange.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "logdp/errors.hpp"
#include "logdp/phi_core.hpp"

namespace logdp {

using Point = std::array<double, 2>;
/// Row 0 maps the three nodal values to d/dx, row 1 to d/dy.
using GradMap = std::array<std::array<double, 3>, 2>;

struct Rect {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  bool operator==(const Rect&) const = default;
  [[nodiscard]] double width() const noexcept { return x_max - x_min; }
  [[nodiscard]] double height() const noexcept { return y_max - y_min; }
};

struct Mesh {
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> elements;
  std::vector<double> areas;
  std::vector<GradMap> grad_maps;
  std::vector<Point> barycenters;
  std::vector<std::uint8_t> boundary;
  std::vector<std::vector<int>> adjacency;
  /// Vertex-rule (mass-lumped) weights: sum of area/3 over incident elements.
  std::vector<double> lumped_mass;
  /// Indices of non-Dirichlet nodes, ascending.
  std::vector<int> interior;

  [[nodiscard]] std::size_t n_nodes() const noexcept { return nodes.size(); }
  [[nodiscard]] std::size_t n_elements() const noexcept { return elements.size(); }
  [[nodiscard]] bool is_boundary(std::size_t node) const { return boundary.at(node) != 0; }
  [[nodiscard]] double total_area() const {
    return std::accumulate(areas.begin(), areas.end(), 0.0);
  }

  [[nodiscard]] double max_diameter() const {
    double diam = 0.0;
    for (const auto& el : elements) {
      for (int a = 0; a < 3; ++a) {
        const auto& p = nodes[el[a]];
        const auto& q = nodes[el[(a + 1) % 3]];
        diam = std::max(diam, std::hypot(p[0] - q[0], p[1] - q[1]));
      }
    }
    return diam;
  }
};

/// Fills areas, gradient maps, barycenters, boundary flags, adjacency, lumped mass and the
/// interior index list from nodes + elements. Elements are reoriented counter-clockwise.
/// Boundary nodes are the endpoints of edges owned by exactly one element.
inline Mesh finalize_mesh(std::vector<Point> nodes, std::vector<std::array<int, 3>> elements) {
  Mesh mesh;
  mesh.nodes = std::move(nodes);
  mesh.elements = std::move(elements);
  const std::size_t n_nodes = mesh.nodes.size();
  const std::size_t n_elem = mesh.elements.size();
  mesh.areas.resize(n_elem);
  mesh.grad_maps.resize(n_elem);
  mesh.barycenters.resize(n_elem);
  mesh.lumped_mass.assign(n_nodes, 0.0);
  mesh.boundary.assign(n_nodes, 0);
  mesh.adjacency.assign(n_nodes, {});

  std::map<std::pair<int, int>, int> edge_count;
  for (std::size_t e = 0; e < n_elem; ++e) {
    auto& el = mesh.elements[e];
    for (int v : el) {
      if (v < 0 || static_cast<std::size_t>(v) >= n_nodes) {
        throw InvalidArgument(fmt::format("element {} references missing node {}", e, v));
      }
    }
    auto signed_area = [&] {
      const auto& a = mesh.nodes[el[0]];
      const auto& b = mesh.nodes[el[1]];
      const auto& c = mesh.nodes[el[2]];
      return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
    };
    double area = signed_area();
    if (area < 0.0) {
      std::swap(el[1], el[2]);
      area = -area;
    }
    if (!(area > 0.0)) throw InvalidArgument(fmt::format("element {} is degenerate", e));
    mesh.areas[e] = area;
    GradMap g{};
    for (int i = 0; i < 3; ++i) {
      const auto& pj = mesh.nodes[el[(i + 1) % 3]];
      const auto& pk = mesh.nodes[el[(i + 2) % 3]];
      g[0][i] = (pj[1] - pk[1]) / (2.0 * area);
      g[1][i] = (pk[0] - pj[0]) / (2.0 * area);
    }
    mesh.grad_maps[e] = g;
    Point bary{0.0, 0.0};
    for (int v : el) {
      bary[0] += mesh.nodes[v][0] / 3.0;
      bary[1] += mesh.nodes[v][1] / 3.0;
      mesh.lumped_mass[v] += area / 3.0;
    }
    mesh.barycenters[e] = bary;
    for (int a = 0; a < 3; ++a) {
      const int u = el[a];
      const int v = el[(a + 1) % 3];
      ++edge_count[{std::min(u, v), std::max(u, v)}];
    }
  }
  for (const auto& [edge, count] : edge_count) {
    mesh.adjacency[edge.first].push_back(edge.second);
    mesh.adjacency[edge.second].push_back(edge.first);
    if (count == 1) {
      mesh.boundary[edge.first] = 1;
      mesh.boundary[edge.second] = 1;
    }
  }
  for (std::size_t v = 0; v < n_nodes; ++v) {
    std::sort(mesh.adjacency[v].begin(), mesh.adjacency[v].end());
    // Nodes not used by any element carry no degree of freedom.
    if (mesh.adjacency[v].empty()) mesh.boundary[v] = 1;
    if (!mesh.boundary[v]) mesh.interior.push_back(static_cast<int>(v));
  }
  return mesh;
}

/// Structured triangulation of a rectangle with nx * ny cells split into two triangles each.
/// The diagonal alternates with the cell parity (criss-cross pattern), which keeps the mesh
/// symmetric under reflections of the rectangle. `keep`, when given, masks elements by
/// their barycenter; unused nodes are dropped and the mask boundary becomes Dirichlet.
inline Mesh build_rect_mesh(const Rect& rect, int nx, int ny,
                            const std::function<bool(Point)>& keep = {}) {
  if (nx < 1 || ny < 1) throw InvalidArgument("build_rect_mesh: nx and ny must be positive");
  if (!(rect.width() > 0.0) || !(rect.height() > 0.0)) {
    throw InvalidArgument("build_rect_mesh: degenerate rectangle");
  }
  std::vector<Point> nodes;
  nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      // Exact endpoints so boundary coordinates are bit-exact.
      const double x = i == nx ? rect.x_max : rect.x_min + rect.width() * i / nx;
      const double y = j == ny ? rect.y_max : rect.y_min + rect.height() * j / ny;
      nodes.push_back({x, y});
    }
  }
  const auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<std::array<int, 3>> elements;
  elements.reserve(2 * static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = id(i, j);
      const int b = id(i + 1, j);
      const int c = id(i + 1, j + 1);
      const int d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        elements.push_back({a, b, c});
        elements.push_back({a, c, d});
      } else {
        elements.push_back({a, b, d});
        elements.push_back({b, c, d});
      }
    }
  }
  if (keep) {
    std::vector<std::array<int, 3>> kept;
    for (const auto& el : elements) {
      const Point bary{(nodes[el[0]][0] + nodes[el[1]][0] + nodes[el[2]][0]) / 3.0,
                       (nodes[el[0]][1] + nodes[el[1]][1] + nodes[el[2]][1]) / 3.0};
      if (keep(bary)) kept.push_back(el);
    }
    if (kept.empty()) throw InvalidArgument("build_rect_mesh: mask removes every element");
    std::vector<int> remap(nodes.size(), -1);
    std::vector<Point> used;
    for (auto& el : kept) {
      for (int& v : el) {
        if (remap[v] < 0) {
          remap[v] = static_cast<int>(used.size());
          used.push_back(nodes[v]);
        }
        v = remap[v];
      }
    }
    return finalize_mesh(std::move(used), std::move(kept));
  }
  return finalize_mesh(std::move(nodes), std::move(elements));
}

// ---------------------------------------------------------------------------

/// Nodal values of a P1 function vanishing at every Dirichlet node.
class DiscreteFunction {
 public:
  explicit DiscreteFunction(const Mesh& mesh) : mesh_(&mesh), values_(mesh.n_nodes(), 0.0) {}

  /// Throws InvalidArgument on size mismatch or a nonzero Dirichlet value.
  DiscreteFunction(const Mesh& mesh, std::vector<double> values)
      : mesh_(&mesh), values_(std::move(values)) {
    if (values_.size() != mesh.n_nodes()) {
      throw InvalidArgument(fmt::format("DiscreteFunction: {} values for {} nodes",
                                        values_.size(), mesh.n_nodes()));
    }
    for (std::size_t v = 0; v < values_.size(); ++v) {
      if (mesh.boundary[v] && values_[v] != 0.0) {
        throw InvalidArgument(fmt::format("DiscreteFunction: nonzero value at Dirichlet node {}", v));
      }
    }
  }

  /// Samples fn at the nodes and zeroes the Dirichlet nodes.
  template <class Fn>
  static DiscreteFunction interpolate(const Mesh& mesh, Fn&& fn) {
    std::vector<double> values(mesh.n_nodes(), 0.0);
    for (std::size_t v = 0; v < values.size(); ++v) {
      if (!mesh.boundary[v]) values[v] = fn(mesh.nodes[v]);
    }
    return DiscreteFunction(mesh, std::move(values));
  }

  [[nodiscard]] const Mesh& mesh() const noexcept { return *mesh_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] const std::vector<double>& vector() const noexcept { return values_; }
  [[nodiscard]] double operator[](std::size_t v) const { return values_[v]; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

  [[nodiscard]] double sup_norm() const noexcept {
    double m = 0.0;
    for (double x : values_) m = std::max(m, std::abs(x));
    return m;
  }
  [[nodiscard]] bool is_zero() const noexcept { return sup_norm() == 0.0; }

  friend DiscreteFunction operator*(double s, const DiscreteFunction& u) {
    DiscreteFunction out(u);
    for (double& x : out.values_) x *= s;
    return out;
  }
  friend DiscreteFunction operator+(const DiscreteFunction& a, const DiscreteFunction& b) {
    a.require_same_mesh(b);
    DiscreteFunction out(a);
    for (std::size_t v = 0; v < out.values_.size(); ++v) out.values_[v] += b.values_[v];
    return out;
  }
  friend DiscreteFunction operator-(const DiscreteFunction& a, const DiscreteFunction& b) {
    return a + (-1.0) * b;
  }
  friend DiscreteFunction operator-(const DiscreteFunction& a) { return (-1.0) * a; }

 private:
  void require_same_mesh(const DiscreteFunction& other) const {
    if (mesh_ != other.mesh_) throw InvalidArgument("DiscreteFunction: mesh mismatch");
  }

  const Mesh* mesh_;
  std::vector<double> values_;
};

inline Point element_gradient(const Mesh& mesh, std::span<const double> values, std::size_t e) {
  const auto& el = mesh.elements[e];
  const auto& g = mesh.grad_maps[e];
  const double u0 = values[el[0]];
  const double u1 = values[el[1]];
  const double u2 = values[el[2]];
  return {g[0][0] * u0 + g[0][1] * u1 + g[0][2] * u2, g[1][0] * u0 + g[1][1] * u1 + g[1][2] * u2};
}

/// Constant gradient of the affine interpolant on element e.
inline Point element_gradient(const DiscreteFunction& u, std::size_t e) {
  if (e >= u.mesh().n_elements()) {
    throw InvalidArgument(fmt::format("element_gradient: element {} out of range", e));
  }
  return element_gradient(u.mesh(), u.values(), e);
}

/// |grad u| per element.
inline std::vector<double> gradient_magnitudes(const Mesh& mesh, std::span<const double> values) {
  std::vector<double> out(mesh.n_elements());
  for (std::size_t e = 0; e < out.size(); ++e) {
    const auto g = element_gradient(mesh, values, e);
    out[e] = std::hypot(g[0], g[1]);
  }
  return out;
}

inline std::vector<double> gradient_magnitudes(const DiscreteFunction& u) {
  return gradient_magnitudes(u.mesh(), u.values());
}

enum class Sign { plus, minus };

inline double sign_factor(Sign s) noexcept { return s == Sign::plus ? 1.0 : -1.0; }

/// Nodal max{+-u, 0}, i.e. u^+ or u^-; both are nonnegative and u = u^+ - u^-.
inline DiscreteFunction truncate(const DiscreteFunction& u, Sign sign) {
  const double s = sign_factor(sign);
  std::vector<double> out(u.size());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = std::max(s * u[v], 0.0);
  return DiscreteFunction(u.mesh(), std::move(out));
}

// ---------------------------------------------------------------------------
// Nodal domains

struct NodalDomains {
  int n_pos = 0;
  int n_neg = 0;
  /// +k for the k-th positive component, -k for the k-th negative one, 0 below threshold.
  std::vector<int> labels;
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

/// Connected components of {u > tau} and {u < -tau} under mesh-edge adjacency.
inline NodalDomains nodal_domains(const DiscreteFunction& u, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("nodal_domains: tau must be positive");
  const Mesh& mesh = u.mesh();
  const std::size_t n = mesh.n_nodes();
  const auto side = [&](std::size_t v) { return u[v] > tau ? 1 : (u[v] < -tau ? -1 : 0); };
  detail::DisjointSets sets(n);
  for (std::size_t v = 0; v < n; ++v) {
    const int s = side(v);
    if (s == 0) continue;
    for (int w : mesh.adjacency[v]) {
      if (side(static_cast<std::size_t>(w)) == s) sets.unite(v, static_cast<std::size_t>(w));
    }
  }
  NodalDomains out;
  out.labels.assign(n, 0);
  std::vector<int> root_label(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    const int s = side(v);
    if (s == 0) continue;
    const std::size_t root = sets.find(v);
    if (root_label[root] == 0) root_label[root] = s > 0 ? ++out.n_pos : -(++out.n_neg);
    out.labels[v] = root_label[root];
  }
  return out;
}

/// Default threshold 1e-8 * ||u||_inf.
inline NodalDomains nodal_domains(const DiscreteFunction& u) {
  const double sup = u.sup_norm();
  if (sup == 0.0) return {0, 0, std::vector<int>(u.size(), 0)};
  return nodal_domains(u, 1e-8 * sup);
}

// ---------------------------------------------------------------------------
// Exponent fields

/// Critical Sobolev exponent N p / (N - p) in the plane (N = 2); infinite for p >= 2.
inline double critical_exponent(double p) {
  constexpr double kDim = 2.0;
  return p < kDim ? kDim * p / (kDim - p) : std::numeric_limits<double>::infinity();
}

/// p, q, mu sampled at element barycenters.
struct ExponentField {
  std::vector<double> p_at;
  std::vector<double> q_at;
  std::vector<double> mu_at;
  double p_minus = 0.0;
  double p_plus = 0.0;
  double q_minus = 0.0;
  double q_plus = 0.0;
  double mu_sup = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return p_at.size(); }
  [[nodiscard]] PhiParams at(std::size_t e) const { return {p_at[e], q_at[e], mu_at[e]}; }

  /// (H): q(x) < p*(x) everywhere.
  [[nodiscard]] bool satisfies_h() const {
    for (std::size_t e = 0; e < size(); ++e) {
      if (!(q_at[e] < critical_exponent(p_at[e]))) return false;
    }
    return true;
  }
  /// (H2): q+ < p*_-.
  [[nodiscard]] bool satisfies_h2() const { return q_plus < critical_exponent(p_minus); }
  /// (H3): q+ + 1 < p*_-.
  [[nodiscard]] bool satisfies_h3() const { return q_plus + 1.0 < critical_exponent(p_minus); }

  /// Builds from per-element samples; throws InvalidArgument unless 1 < p <= q and mu >= 0.
  static ExponentField from_samples(std::vector<double> p, std::vector<double> q,
                                    std::vector<double> mu) {
    if (p.size() != q.size() || p.size() != mu.size() || p.empty()) {
      throw InvalidArgument("ExponentField: inconsistent sample sizes");
    }
    ExponentField f{std::move(p), std::move(q), std::move(mu)};
    for (std::size_t e = 0; e < f.size(); ++e) {
      if (!(f.p_at[e] > 1.0)) {
        throw InvalidArgument(fmt::format("ExponentField: p = {} <= 1 on element {}", f.p_at[e], e));
      }
      if (!(f.p_at[e] <= f.q_at[e])) {
        throw InvalidArgument(fmt::format("ExponentField: p = {} > q = {} on element {}",
                                          f.p_at[e], f.q_at[e], e));
      }
      if (!(f.mu_at[e] >= 0.0) || !std::isfinite(f.mu_at[e])) {
        throw InvalidArgument(fmt::format("ExponentField: mu = {} on element {}", f.mu_at[e], e));
      }
    }
    const auto [pmin, pmax] = std::minmax_element(f.p_at.begin(), f.p_at.end());
    const auto [qmin, qmax] = std::minmax_element(f.q_at.begin(), f.q_at.end());
    f.p_minus = *pmin;
    f.p_plus = *pmax;
    f.q_minus = *qmin;
    f.q_plus = *qmax;
    f.mu_sup = *std::max_element(f.mu_at.begin(), f.mu_at.end());
    return f;
  }

  template <class Fp, class Fq, class Fmu>
  static ExponentField from_functions(const Mesh& mesh, Fp&& p, Fq&& q, Fmu&& mu) {
    std::vector<double> ps(mesh.n_elements());
    std::vector<double> qs(ps.size());
    std::vector<double> mus(ps.size());
    for (std::size_t e = 0; e < ps.size(); ++e) {
      const Point& b = mesh.barycenters[e];
      ps[e] = p(b);
      qs[e] = q(b);
      mus[e] = mu(b);
    }
    return from_samples(std::move(ps), std::move(qs), std::move(mus));
  }

  static ExponentField constant(const Mesh& mesh, double p, double q, double mu) {
    const std::size_t n = mesh.n_elements();
    return from_samples(std::vector<double>(n, p), std::vector<double>(n, q),
                        std::vector<double>(n, mu));
  }
};

// ---------------------------------------------------------------------------
// CSV exchange

namespace detail {

inline std::vector<std::vector<std::string>> read_csv_rows(const std::string& path,
                                                           std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument(fmt::format("cannot open {}", path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != columns) {
      throw InvalidArgument(fmt::format("{}: expected {} columns, got '{}'", path, columns, line));
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace detail

/// nodes.csv: id,x,y,boundary and elements.csv: id,n0,n1,n2.
inline void write_mesh_csv(const Mesh& mesh, const std::string& nodes_path,
                           const std::string& elements_path) {
  std::ofstream nodes(nodes_path);
  if (!nodes) throw InvalidArgument(fmt::format("cannot write {}", nodes_path));
  nodes << "id,x,y,boundary\n";
  for (std::size_t v = 0; v < mesh.n_nodes(); ++v) {
    nodes << fmt::format("{},{:.17g},{:.17g},{}\n", v, mesh.nodes[v][0], mesh.nodes[v][1],
                         static_cast<int>(mesh.boundary[v]));
  }
  std::ofstream elements(elements_path);
  if (!elements) throw InvalidArgument(fmt::format("cannot write {}", elements_path));
  elements << "id,n0,n1,n2\n";
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    const auto& el = mesh.elements[e];
    elements << fmt::format("{},{},{},{}\n", e, el[0], el[1], el[2]);
  }
}

inline Mesh read_mesh_csv(const std::string& nodes_path, const std::string& elements_path) {
  std::vector<Point> nodes;
  for (const auto& row : detail::read_csv_rows(nodes_path, 4)) {
    if (std::stoul(row[0]) != nodes.size()) throw InvalidArgument("nodes.csv: ids must be 0..n-1");
    nodes.push_back({std::stod(row[1]), std::stod(row[2])});
  }
  std::vector<std::array<int, 3>> elements;
  for (const auto& row : detail::read_csv_rows(elements_path, 4)) {
    if (std::stoul(row[0]) != elements.size()) {
      throw InvalidArgument("elements.csv: ids must be 0..n-1");
    }
    elements.push_back({std::stoi(row[1]), std::stoi(row[2]), std::stoi(row[3])});
  }
  return finalize_mesh(std::move(nodes), std::move(elements));
}

/// id,x,y,value with 17 significant digits (bit-faithful reload).
inline void write_solution_csv(const DiscreteFunction& u, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument(fmt::format("cannot write {}", path));
  out << "id,x,y,value\n";
  const Mesh& mesh = u.mesh();
  for (std::size_t v = 0; v < mesh.n_nodes(); ++v) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", v, mesh.nodes[v][0], mesh.nodes[v][1], u[v]);
  }
}

/// Reads a solution CSV written for `mesh`; ids and coordinates must match.
inline DiscreteFunction read_solution_csv(const Mesh& mesh, const std::string& path) {
  const auto rows = detail::read_csv_rows(path, 4);
  if (rows.size() != mesh.n_nodes()) {
    throw InvalidArgument(fmt::format("{}: {} rows for a mesh with {} nodes", path, rows.size(),
                                      mesh.n_nodes()));
  }
  std::vector<double> values(mesh.n_nodes());
  for (std::size_t v = 0; v < rows.size(); ++v) {
    const auto& row = rows[v];
    const double x = std::stod(row[1]);
    const double y = std::stod(row[2]);
    if (std::stoul(row[0]) != v || std::abs(x - mesh.nodes[v][0]) > 1e-12 ||
        std::abs(y - mesh.nodes[v][1]) > 1e-12) {
      throw InvalidArgument(fmt::format("{}: row {} does not match mesh node", path, v));
    }
    values[v] = std::stod(row[3]);
  }
  return DiscreteFunction(mesh, std::move(values));
}

}  // namespace logdp
