#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pminres {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }

double distance(Point a, Point b);

/// Distance from a point to a closed triangle (zero when the point lies inside).
double distance_to_triangle(Point q, Point a, Point b, Point c);

using Triangle = std::array<int, 3>;
using Edge = std::array<int, 2>;

/// Conforming triangulation of a polygonal domain.
///
/// Local edge k of a triangle is the edge opposite local vertex k. Edges are
/// stored with sorted endpoints. `refinement_edge[t]` is the local index of the
/// edge that newest-vertex bisection splits, so local vertex
/// `refinement_edge[t]` is the triangle's newest vertex. `parent[t]` is the
/// index of the triangle in the previous mesh this one was cut from, or -1.
class Mesh {
 public:
  Mesh() = default;

  /// Builds edge tables from vertices and counter-clockwise triangles. Throws
  /// std::invalid_argument when the input is not a valid conforming mesh.
  Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
       std::vector<int> refinement_edge = {}, std::vector<int> parent = {});

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_boundary_edges() const;

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::array<int, 3>>& triangle_edges() const { return triangle_edges_; }
  /// Triangles adjacent to each edge; the second slot is -1 on the boundary.
  const std::vector<std::array<int, 2>>& edge_triangles() const { return edge_triangles_; }
  const std::vector<int>& refinement_edge() const { return refinement_edge_; }
  const std::vector<int>& parent() const { return parent_; }

  bool is_boundary_edge(int e) const { return edge_triangles_[static_cast<std::size_t>(e)][1] < 0; }
  bool is_boundary_vertex(int v) const { return boundary_vertex_[static_cast<std::size_t>(v)]; }

  Point vertex(int v) const { return vertices_[static_cast<std::size_t>(v)]; }
  Point midpoint(int e) const;
  Point centroid(int t) const;
  double edge_length(int e) const;
  double area(int t) const;
  double diameter(int t) const;

  double total_area() const;
  double h_max() const;
  /// Smallest interior angle over all triangles, in radians.
  double min_angle() const;

 private:
  void build_topology();

  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<std::array<int, 2>> edge_triangles_;
  std::vector<bool> boundary_vertex_;
  std::vector<int> refinement_edge_;
  std::vector<int> parent_;
};

/// n x n grid of the unit square, each cell split along its
/// bottom-left to top-right diagonal.
Mesh unit_square_mesh(int n);

/// Red refinement: every triangle is split into four congruent children.
Mesh refine_uniform(const Mesh& m);

/// Newest-vertex bisection of the marked triangles with conforming closure.
/// Every marked triangle is bisected at least once.
Mesh refine_marked(const Mesh& m, std::span<const int> marked);

/// Indices (into the input mesh) of the triangles that `refine_marked` would
/// bisect for the given marking, closure included. Sorted ascending.
std::vector<int> bisection_closure(const Mesh& m, std::span<const int> marked);

struct MeshCheck {
  bool adjacency_ok = true;    ///< every edge has one or two triangles
  bool orientation_ok = true;  ///< strictly positive signed areas
  bool conforming_ok = true;   ///< no vertex lies in the interior of an edge
  double area_defect = 0.0;    ///< |sum of areas - expected| / expected
  std::string message;

  bool ok(double area_tol = 1e-12) const {
    return adjacency_ok && orientation_ok && conforming_ok && area_defect <= area_tol;
  }
};

/// Verifies the mesh invariants. `expected_area` defaults to the unit square.
MeshCheck check_mesh(const Mesh& m, double expected_area = 1.0);

/// Triangle wireframe as a standalone SVG document.
void write_svg(const Mesh& m, std::ostream& os, double size_px = 512.0);
/// Legacy VTK ASCII unstructured grid with optional per-cell scalar data.
void write_vtk(const Mesh& m, std::ostream& os, std::span<const double> cell_data = {},
               const std::string& cell_data_name = "indicator");

}  // namespace pminres
