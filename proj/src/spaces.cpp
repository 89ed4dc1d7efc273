#include "pminres/spaces.hpp"

#include "pminres/kernels.hpp"
#include "pminres/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace pminres {

ElementGeometry element_geometry(const Mesh& m, int t) {
  const auto& tri = m.triangles()[static_cast<std::size_t>(t)];
  const Point a = m.vertex(tri[0]);
  const Point b = m.vertex(tri[1]);
  const Point c = m.vertex(tri[2]);
  const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  ElementGeometry g;
  g.area = 0.5 * det;
  g.p1_grad[0] = {(b.y - c.y) / det, (c.x - b.x) / det};
  g.p1_grad[1] = {(c.y - a.y) / det, (a.x - c.x) / det};
  g.p1_grad[2] = {(a.y - b.y) / det, (b.x - a.x) / det};
  for (int k = 0; k < 3; ++k) {
    g.cr_grad[static_cast<std::size_t>(k)] = -2.0 * g.p1_grad[static_cast<std::size_t>(k)];
  }
  return g;
}

GeometryTable GeometryTable::build(const Mesh& m) {
  const std::size_t nt = m.num_triangles();
  GeometryTable table;
  table.area.resize(nt);
  for (int k = 0; k < 3; ++k) {
    table.gx[static_cast<std::size_t>(k)].resize(nt);
    table.gy[static_cast<std::size_t>(k)].resize(nt);
  }
  for (std::size_t t = 0; t < nt; ++t) {
    const auto g = element_geometry(m, static_cast<int>(t));
    table.area[t] = g.area;
    for (std::size_t k = 0; k < 3; ++k) {
      table.gx[k][t] = g.p1_grad[k].x;
      table.gy[k][t] = g.p1_grad[k].y;
    }
  }
  return table;
}

std::array<int, 3> DofMap::element_dofs(int t) const {
  const auto ut = static_cast<std::size_t>(t);
  return kind_ == SpaceKind::P1 ? mesh_->triangles()[ut] : mesh_->triangle_edges()[ut];
}

Vector DofMap::expand(const Vector& free_values) const {
  Vector full = expand_homogeneous(free_values);
  for (std::size_t i = 0; i < constrained_.size(); ++i) full[constrained_[i]] = constrained_values_[i];
  return full;
}

Vector DofMap::expand_homogeneous(const Vector& free_values) const {
  if (free_values.size() != n_free()) throw std::invalid_argument("DofMap::expand: size mismatch");
  Vector full = Vector::Zero(n_total_);
  for (std::size_t i = 0; i < free_.size(); ++i) full[free_[i]] = free_values[static_cast<Eigen::Index>(i)];
  return full;
}

Vector DofMap::restrict_to_free(const Vector& complete) const {
  if (complete.size() != n_total_) throw std::invalid_argument("DofMap::restrict: size mismatch");
  Vector out(n_free());
  for (std::size_t i = 0; i < free_.size(); ++i) out[static_cast<Eigen::Index>(i)] = complete[free_[i]];
  return out;
}

DofMap build_space(std::shared_ptr<const Mesh> mesh, SpaceKind kind,
                   const std::map<int, double>& boundary_values) {
  if (!mesh) throw std::invalid_argument("build_space: null mesh");
  if (kind == SpaceKind::CR && !boundary_values.empty()) {
    throw std::invalid_argument("build_space: CR test space takes no boundary values");
  }
  DofMap dm;
  dm.kind_ = kind;
  dm.mesh_ = mesh;
  dm.geometry_ = std::make_shared<const GeometryTable>(GeometryTable::build(*mesh));

  const Mesh& m = *mesh;
  std::vector<bool> constrained;
  if (kind == SpaceKind::P1) {
    dm.n_total_ = static_cast<int>(m.num_vertices());
    constrained.resize(m.num_vertices());
    for (std::size_t v = 0; v < m.num_vertices(); ++v) constrained[v] = m.is_boundary_vertex(static_cast<int>(v));
    for (const auto& [v, value] : boundary_values) {
      if (v < 0 || v >= dm.n_total_ || !constrained[static_cast<std::size_t>(v)]) {
        throw std::invalid_argument("build_space: boundary value given for non-boundary vertex " +
                                    std::to_string(v));
      }
    }
  } else {
    dm.n_total_ = static_cast<int>(m.num_edges());
    constrained.resize(m.num_edges());
    for (std::size_t e = 0; e < m.num_edges(); ++e) constrained[e] = m.is_boundary_edge(static_cast<int>(e));
  }

  dm.free_index_.assign(static_cast<std::size_t>(dm.n_total_), -1);
  for (int d = 0; d < dm.n_total_; ++d) {
    if (constrained[static_cast<std::size_t>(d)]) {
      dm.constrained_.push_back(d);
      const auto it = boundary_values.find(d);
      dm.constrained_values_.push_back(it == boundary_values.end() ? 0.0 : it->second);
    } else {
      dm.free_index_[static_cast<std::size_t>(d)] = static_cast<int>(dm.free_.size());
      dm.free_.push_back(d);
    }
  }
  return dm;
}

std::map<int, double> boundary_values(const Mesh& m, const std::function<double(Point)>& g) {
  std::map<int, double> out;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    if (m.is_boundary_vertex(static_cast<int>(v))) out[static_cast<int>(v)] = g(m.vertices()[v]);
  }
  return out;
}

Point element_gradient(const DofMap& dm, const Vector& coeffs, int t) {
  if (t < 0 || static_cast<std::size_t>(t) >= dm.mesh().num_triangles()) {
    throw std::out_of_range("element_gradient: triangle index out of range");
  }
  if (coeffs.size() != dm.n_total()) throw std::invalid_argument("element_gradient: need a complete vector");
  const auto& geo = dm.geometry();
  const auto dofs = dm.element_dofs(t);
  const double scale = dm.kind() == SpaceKind::P1 ? 1.0 : -2.0;
  const auto ut = static_cast<std::size_t>(t);
  Point g;
  for (std::size_t k = 0; k < 3; ++k) {
    const double c = coeffs[dofs[k]];
    g.x += c * geo.gx[k][ut];
    g.y += c * geo.gy[k][ut];
  }
  return scale * g;
}

void element_gradients(const DofMap& dm, const Vector& coeffs, std::vector<double>& gx,
                       std::vector<double>& gy) {
  if (coeffs.size() != dm.n_total()) throw std::invalid_argument("element_gradients: need a complete vector");
  const auto& geo = dm.geometry();
  const std::size_t nt = dm.mesh().num_triangles();
  gx.resize(nt);
  gy.resize(nt);
  const double scale = dm.kind() == SpaceKind::P1 ? 1.0 : -2.0;
  const auto& conn = dm.kind() == SpaceKind::P1 ? dm.mesh().triangles() : dm.mesh().triangle_edges();
  for (std::size_t t = 0; t < nt; ++t) {
    const double c0 = coeffs[conn[t][0]];
    const double c1 = coeffs[conn[t][1]];
    const double c2 = coeffs[conn[t][2]];
    gx[t] = scale * (c0 * geo.gx[0][t] + c1 * geo.gx[1][t] + c2 * geo.gx[2][t]);
    gy[t] = scale * (c0 * geo.gy[0][t] + c1 * geo.gy[1][t] + c2 * geo.gy[2][t]);
  }
}

double broken_seminorm(const DofMap& dm, const Vector& coeffs, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("broken_seminorm: p must exceed 1");
  std::vector<double> gx, gy;
  element_gradients(dm, coeffs, gx, gy);
  std::vector<double> mass(gx.size());
  kernels::componentwise_power(p, gx, gy, dm.geometry().area, mass);
  double sum = 0.0;
  for (double v : mass) sum += v;
  return std::pow(sum, 1.0 / p);
}

double evaluate(const DofMap& dm, const Vector& coeffs, int t, const std::array<double, 3>& bary) {
  const auto dofs = dm.element_dofs(t);
  double v = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double basis = dm.kind() == SpaceKind::P1 ? bary[k] : 1.0 - 2.0 * bary[k];
    v += coeffs[dofs[k]] * basis;
  }
  return v;
}

Vector embed_p1_in_cr(const DofMap& p1, const DofMap& cr, const Vector& p1_coeffs) {
  if (p1.kind() != SpaceKind::P1 || cr.kind() != SpaceKind::CR) {
    throw std::invalid_argument("embed_p1_in_cr: expected a P1 and a CR map");
  }
  if (p1_coeffs.size() != p1.n_total()) throw std::invalid_argument("embed_p1_in_cr: need a complete vector");
  const Mesh& m = cr.mesh();
  Vector out(cr.n_total());
  for (std::size_t e = 0; e < m.num_edges(); ++e) {
    const auto& ed = m.edges()[e];
    out[static_cast<Eigen::Index>(e)] = 0.5 * (p1_coeffs[ed[0]] + p1_coeffs[ed[1]]);
  }
  return out;
}

Vector cr_interpolate(const Mesh& m, const std::function<double(int)>& edge_mean_of) {
  Vector out(static_cast<Eigen::Index>(m.num_edges()));
  for (std::size_t e = 0; e < m.num_edges(); ++e) out[static_cast<Eigen::Index>(e)] = edge_mean_of(static_cast<int>(e));
  return out;
}

double edge_mean(const Mesh& m, int e, const std::function<double(Point)>& f, int points) {
  const GaussLine g = GaussLine::on_unit_interval(points);
  const auto& ed = m.edges()[static_cast<std::size_t>(e)];
  const Point a = m.vertex(ed[0]);
  const Point b = m.vertex(ed[1]);
  double s = 0.0;
  for (std::size_t q = 0; q < g.nodes.size(); ++q) s += g.weights[q] * f(a + g.nodes[q] * (b - a));
  return s;
}

Vector p1_interpolate(const Mesh& m, const std::function<double(Point)>& f) {
  Vector out(static_cast<Eigen::Index>(m.num_vertices()));
  for (std::size_t v = 0; v < m.num_vertices(); ++v) out[static_cast<Eigen::Index>(v)] = f(m.vertices()[v]);
  return out;
}

}  // namespace pminres
