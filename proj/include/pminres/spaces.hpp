#pragma once

#include "pminres/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <vector>

namespace pminres {

using Vector = Eigen::VectorXd;

enum class SpaceKind { P1, CR };

/// Constant basis gradients of one triangle. Local basis k of the P1 space is
/// the hat function of local vertex k; local basis k of the CR space is
/// 1 - 2 lambda_k, the function that is 1 at the midpoint of the edge opposite
/// vertex k and 0 at the other two midpoints.
struct ElementGeometry {
  double area = 0.0;
  std::array<Point, 3> p1_grad;
  std::array<Point, 3> cr_grad;
};

ElementGeometry element_geometry(const Mesh& m, int t);

/// Structure-of-arrays copy of the P1 hat gradients of every triangle. CR
/// gradients are -2 times these.
struct GeometryTable {
  std::vector<double> area;
  std::array<std::vector<double>, 3> gx;
  std::array<std::vector<double>, 3> gy;

  static GeometryTable build(const Mesh& m);
};

/// Degree-of-freedom enumeration for the P1 space (one DOF per vertex) or the
/// lowest-order Crouzeix-Raviart space (one DOF per edge, the value at the
/// midpoint). Boundary DOFs are constrained: to prescribed Dirichlet values for
/// P1, to zero for CR.
///
/// "Complete" coefficient vectors cover all DOFs; "free" vectors cover the
/// unconstrained DOFs in `free_dofs()` order.
class DofMap {
 public:
  SpaceKind kind() const { return kind_; }
  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  const GeometryTable& geometry() const { return *geometry_; }
  const std::shared_ptr<const GeometryTable>& geometry_ptr() const { return geometry_; }

  int n_total() const { return n_total_; }
  int n_free() const { return static_cast<int>(free_.size()); }
  const std::vector<int>& free_dofs() const { return free_; }
  const std::vector<int>& constrained_dofs() const { return constrained_; }
  /// Values of the constrained DOFs, aligned with `constrained_dofs()`.
  const std::vector<double>& constrained_values() const { return constrained_values_; }
  /// Position of `dof` in the free vector, or -1 when constrained.
  int free_index(int dof) const { return free_index_[static_cast<std::size_t>(dof)]; }

  /// Global DOFs of triangle t, aligned with the local basis numbering.
  std::array<int, 3> element_dofs(int t) const;

  /// Complete vector from free values plus the constrained values.
  Vector expand(const Vector& free_values) const;
  /// Complete vector from free values with zeros on constrained DOFs.
  Vector expand_homogeneous(const Vector& free_values) const;
  Vector restrict_to_free(const Vector& complete) const;

 private:
  friend DofMap build_space(std::shared_ptr<const Mesh>, SpaceKind, const std::map<int, double>&);

  SpaceKind kind_ = SpaceKind::P1;
  std::shared_ptr<const Mesh> mesh_;
  std::shared_ptr<const GeometryTable> geometry_;
  int n_total_ = 0;
  std::vector<int> free_;
  std::vector<int> constrained_;
  std::vector<double> constrained_values_;
  std::vector<int> free_index_;
};

/// `boundary_values` maps boundary vertex indices to Dirichlet values and is
/// only accepted for P1; missing boundary vertices default to zero.
DofMap build_space(std::shared_ptr<const Mesh> mesh, SpaceKind kind,
                   const std::map<int, double>& boundary_values = {});

/// Samples `g` at every boundary vertex.
std::map<int, double> boundary_values(const Mesh& m, const std::function<double(Point)>& g);

/// Constant gradient of the piecewise-linear function on triangle t.
Point element_gradient(const DofMap& dm, const Vector& coeffs, int t);

/// Element gradients for all triangles, written into gx and gy.
void element_gradients(const DofMap& dm, const Vector& coeffs, std::vector<double>& gx,
                       std::vector<double>& gy);

/// (sum_T sum_i |d_i v|^p_{L^p(T)})^(1/p) with piecewise constant gradients.
double broken_seminorm(const DofMap& dm, const Vector& coeffs, double p);

/// Value at barycentric coordinates `bary` on triangle t.
double evaluate(const DofMap& dm, const Vector& coeffs, int t, const std::array<double, 3>& bary);

/// CR representation of a P1 function: midpoint value = mean of the endpoint
/// values. Both vectors are complete.
Vector embed_p1_in_cr(const DofMap& p1, const DofMap& cr, const Vector& p1_coeffs);

/// Crouzeix-Raviart interpolant: each edge coefficient is the target's mean
/// over that edge. Returns a complete vector, boundary edges included.
Vector cr_interpolate(const Mesh& m, const std::function<double(int)>& edge_mean);

/// Gauss-Legendre mean of f over edge e.
double edge_mean(const Mesh& m, int e, const std::function<double(Point)>& f, int points = 6);

/// Nodal P1 interpolant (complete vector).
Vector p1_interpolate(const Mesh& m, const std::function<double(Point)>& f);

}  // namespace pminres
