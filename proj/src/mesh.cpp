#include "pminres/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace pminres {

namespace {

double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }

double signed_area(Point a, Point b, Point c) { return 0.5 * cross(b - a, c - a); }

double segment_distance(Point q, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  double s = len2 > 0.0 ? dot(q - a, ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return distance(q, a + s * ab);
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

// Local edge k joins local vertices k+1 and k+2.
std::array<int, 2> local_edge(const Triangle& t, int k) {
  return {t[static_cast<std::size_t>((k + 1) % 3)], t[static_cast<std::size_t>((k + 2) % 3)]};
}

}  // namespace

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double distance_to_triangle(Point q, Point a, Point b, Point c) {
  const double s0 = cross(b - a, q - a);
  const double s1 = cross(c - b, q - b);
  const double s2 = cross(a - c, q - c);
  const bool has_neg = s0 < 0 || s1 < 0 || s2 < 0;
  const bool has_pos = s0 > 0 || s1 > 0 || s2 > 0;
  if (!(has_neg && has_pos)) return 0.0;
  return std::min({segment_distance(q, a, b), segment_distance(q, b, c), segment_distance(q, c, a)});
}

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
           std::vector<int> refinement_edge, std::vector<int> parent)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      refinement_edge_(std::move(refinement_edge)),
      parent_(std::move(parent)) {
  const int nv = static_cast<int>(vertices_.size());
  for (const auto& t : triangles_) {
    for (int v : t) {
      if (v < 0 || v >= nv) throw std::invalid_argument("Mesh: triangle references unknown vertex");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw std::invalid_argument("Mesh: triangle with repeated vertex");
    }
  }
  build_topology();

  if (parent_.empty()) parent_.assign(triangles_.size(), -1);
  if (parent_.size() != triangles_.size()) throw std::invalid_argument("Mesh: parent size mismatch");

  if (refinement_edge_.empty()) {
    // Longest edge; ties go to the lowest global edge index.
    refinement_edge_.resize(triangles_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      int best = 0;
      for (int k = 1; k < 3; ++k) {
        const int eb = triangle_edges_[t][static_cast<std::size_t>(best)];
        const int ek = triangle_edges_[t][static_cast<std::size_t>(k)];
        const double lb = edge_length(eb);
        const double lk = edge_length(ek);
        const double tol = 1e-12 * std::max(lb, lk);
        if (lk > lb + tol || (std::abs(lk - lb) <= tol && ek < eb)) best = k;
      }
      refinement_edge_[t] = best;
    }
  }
  if (refinement_edge_.size() != triangles_.size()) {
    throw std::invalid_argument("Mesh: refinement_edge size mismatch");
  }
  for (int k : refinement_edge_) {
    if (k < 0 || k > 2) throw std::invalid_argument("Mesh: refinement edge must be a local index");
  }
}

void Mesh::build_topology() {
  edges_.clear();
  edge_triangles_.clear();
  triangle_edges_.assign(triangles_.size(), {-1, -1, -1});
  std::unordered_map<std::uint64_t, int> lookup;
  lookup.reserve(triangles_.size() * 2);

  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      auto [a, b] = local_edge(triangles_[t], k);
      auto [it, inserted] = lookup.try_emplace(edge_key(a, b), static_cast<int>(edges_.size()));
      if (inserted) {
        edges_.push_back({std::min(a, b), std::max(a, b)});
        edge_triangles_.push_back({static_cast<int>(t), -1});
      } else {
        auto& adj = edge_triangles_[static_cast<std::size_t>(it->second)];
        if (adj[1] >= 0) throw std::invalid_argument("Mesh: edge shared by more than two triangles");
        adj[1] = static_cast<int>(t);
      }
      triangle_edges_[t][static_cast<std::size_t>(k)] = it->second;
    }
  }

  boundary_vertex_.assign(vertices_.size(), false);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edge_triangles_[e][1] < 0) {
      boundary_vertex_[static_cast<std::size_t>(edges_[e][0])] = true;
      boundary_vertex_[static_cast<std::size_t>(edges_[e][1])] = true;
    }
  }
}

std::size_t Mesh::num_boundary_edges() const {
  return static_cast<std::size_t>(std::count_if(edge_triangles_.begin(), edge_triangles_.end(),
                                                [](const auto& adj) { return adj[1] < 0; }));
}

Point Mesh::midpoint(int e) const {
  const auto& ed = edges_[static_cast<std::size_t>(e)];
  return 0.5 * (vertex(ed[0]) + vertex(ed[1]));
}

Point Mesh::centroid(int t) const {
  const auto& tri = triangles_[static_cast<std::size_t>(t)];
  return (1.0 / 3.0) * (vertex(tri[0]) + vertex(tri[1]) + vertex(tri[2]));
}

double Mesh::edge_length(int e) const {
  const auto& ed = edges_[static_cast<std::size_t>(e)];
  return distance(vertex(ed[0]), vertex(ed[1]));
}

double Mesh::area(int t) const {
  const auto& tri = triangles_[static_cast<std::size_t>(t)];
  return signed_area(vertex(tri[0]), vertex(tri[1]), vertex(tri[2]));
}

double Mesh::diameter(int t) const {
  const auto& te = triangle_edges_[static_cast<std::size_t>(t)];
  return std::max({edge_length(te[0]), edge_length(te[1]), edge_length(te[2])});
}

double Mesh::total_area() const {
  double s = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) s += area(static_cast<int>(t));
  return s;
}

double Mesh::h_max() const {
  double h = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) h = std::max(h, diameter(static_cast<int>(t)));
  return h;
}

double Mesh::min_angle() const {
  double amin = std::numbers::pi;
  for (const auto& tri : triangles_) {
    for (int k = 0; k < 3; ++k) {
      const Point p = vertex(tri[static_cast<std::size_t>(k)]);
      const Point u = vertex(tri[static_cast<std::size_t>((k + 1) % 3)]) - p;
      const Point w = vertex(tri[static_cast<std::size_t>((k + 2) % 3)]) - p;
      amin = std::min(amin, std::atan2(std::abs(cross(u, w)), dot(u, w)));
    }
  }
  return amin;
}

Mesh unit_square_mesh(int n) {
  if (n < 1) throw std::invalid_argument("unit_square_mesh: n must be at least 1");
  const double h = 1.0 / n;
  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) vertices.push_back({i * h, j * h});
  }
  // Exact cell boundaries so that the right and top edges sit at 1.0.
  for (auto& v : vertices) {
    if (std::abs(v.x - 1.0) < 1e-14) v.x = 1.0;
    if (std::abs(v.y - 1.0) < 1e-14) v.y = 1.0;
  }
  std::vector<Triangle> triangles;
  triangles.reserve(static_cast<std::size_t>(2 * n * n));
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return Mesh(std::move(vertices), std::move(triangles));
}

Mesh refine_uniform(const Mesh& m) {
  const int nv = static_cast<int>(m.num_vertices());
  std::vector<Point> vertices = m.vertices();
  vertices.reserve(m.num_vertices() + m.num_edges());
  for (std::size_t e = 0; e < m.num_edges(); ++e) vertices.push_back(m.midpoint(static_cast<int>(e)));

  std::vector<Triangle> triangles;
  std::vector<int> parent;
  triangles.reserve(4 * m.num_triangles());
  parent.reserve(4 * m.num_triangles());
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    const auto& te = m.triangle_edges()[t];
    // te[k] is opposite vertex k.
    const int m01 = nv + te[2];
    const int m12 = nv + te[0];
    const int m20 = nv + te[1];
    triangles.push_back({tri[0], m01, m20});
    triangles.push_back({m01, tri[1], m12});
    triangles.push_back({m20, m12, tri[2]});
    triangles.push_back({m01, m12, m20});
    parent.insert(parent.end(), 4, static_cast<int>(t));
  }
  return Mesh(std::move(vertices), std::move(triangles), {}, std::move(parent));
}

namespace {

std::vector<char> closure_edges(const Mesh& m, std::span<const int> marked) {
  const int nt = static_cast<int>(m.num_triangles());
  std::vector<char> edge_marked(m.num_edges(), 0);
  std::vector<int> queue;
  auto ref_edge = [&m](int t) {
    const auto ut = static_cast<std::size_t>(t);
    return m.triangle_edges()[ut][static_cast<std::size_t>(m.refinement_edge()[ut])];
  };
  for (int t : marked) {
    if (t < 0 || t >= nt) throw std::out_of_range("refine_marked: triangle index out of range");
    const int e = ref_edge(t);
    if (!edge_marked[static_cast<std::size_t>(e)]) {
      edge_marked[static_cast<std::size_t>(e)] = 1;
      queue.push_back(e);
    }
  }
  // A triangle with any marked edge must also have its refinement edge marked.
  while (!queue.empty()) {
    const int e = queue.back();
    queue.pop_back();
    for (int t : m.edge_triangles()[static_cast<std::size_t>(e)]) {
      if (t < 0) continue;
      const int r = ref_edge(t);
      if (!edge_marked[static_cast<std::size_t>(r)]) {
        edge_marked[static_cast<std::size_t>(r)] = 1;
        queue.push_back(r);
      }
    }
  }
  return edge_marked;
}

}  // namespace

std::vector<int> bisection_closure(const Mesh& m, std::span<const int> marked) {
  const auto edge_marked = closure_edges(m, marked);
  std::vector<int> out;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const int r = m.triangle_edges()[t][static_cast<std::size_t>(m.refinement_edge()[t])];
    if (edge_marked[static_cast<std::size_t>(r)]) out.push_back(static_cast<int>(t));
  }
  return out;
}

Mesh refine_marked(const Mesh& m, std::span<const int> marked) {
  const auto edge_marked = closure_edges(m, marked);

  std::vector<Point> vertices = m.vertices();
  std::vector<int> edge_midpoint(m.num_edges(), -1);
  for (std::size_t e = 0; e < m.num_edges(); ++e) {
    if (edge_marked[e]) {
      edge_midpoint[e] = static_cast<int>(vertices.size());
      vertices.push_back(m.midpoint(static_cast<int>(e)));
    }
  }

  std::vector<Triangle> triangles;
  std::vector<int> refinement;
  std::vector<int> parent;
  triangles.reserve(m.num_triangles() + 4 * static_cast<std::size_t>(std::count(edge_marked.begin(), edge_marked.end(), 1)));

  auto emit = [&](const Triangle& t, int ref, int par) {
    triangles.push_back(t);
    refinement.push_back(ref);
    parent.push_back(par);
  };

  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    const auto& te = m.triangle_edges()[t];
    const int k = m.refinement_edge()[t];
    const int par = static_cast<int>(t);
    const int e_ref = te[static_cast<std::size_t>(k)];
    if (!edge_marked[static_cast<std::size_t>(e_ref)]) {
      emit(tri, k, par);
      continue;
    }
    const int a = tri[static_cast<std::size_t>(k)];
    const int b = tri[static_cast<std::size_t>((k + 1) % 3)];
    const int c = tri[static_cast<std::size_t>((k + 2) % 3)];
    const int mid = edge_midpoint[static_cast<std::size_t>(e_ref)];
    // Child (a, b, mid) has refinement edge ab, which is the parent's edge opposite c.
    const int e_ab = te[static_cast<std::size_t>((k + 2) % 3)];
    if (edge_marked[static_cast<std::size_t>(e_ab)]) {
      const int q = edge_midpoint[static_cast<std::size_t>(e_ab)];
      emit({mid, a, q}, 2, par);
      emit({mid, q, b}, 1, par);
    } else {
      emit({a, b, mid}, 2, par);
    }
    // Child (a, mid, c) has refinement edge ac, the parent's edge opposite b.
    const int e_ac = te[static_cast<std::size_t>((k + 1) % 3)];
    if (edge_marked[static_cast<std::size_t>(e_ac)]) {
      const int q = edge_midpoint[static_cast<std::size_t>(e_ac)];
      emit({mid, c, q}, 2, par);
      emit({mid, q, a}, 1, par);
    } else {
      emit({a, mid, c}, 1, par);
    }
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(refinement), std::move(parent));
}

MeshCheck check_mesh(const Mesh& m, double expected_area) {
  MeshCheck chk;
  auto fail = [&chk](bool& flag, const std::string& msg) {
    if (flag) chk.message += msg + "; ";
    flag = false;
  };

  // Adjacency recount straight from the triangle list.
  std::unordered_map<std::uint64_t, int> count;
  for (const auto& tri : m.triangles()) {
    for (int k = 0; k < 3; ++k) {
      auto [a, b] = local_edge(tri, k);
      ++count[edge_key(a, b)];
    }
  }
  if (count.size() != m.num_edges()) fail(chk.adjacency_ok, "edge table size mismatch");
  for (const auto& [key, c] : count) {
    if (c < 1 || c > 2) fail(chk.adjacency_ok, "edge with adjacency count outside {1,2}");
  }
  for (std::size_t e = 0; e < m.num_edges(); ++e) {
    for (int t : m.edge_triangles()[e]) {
      if (t < 0) continue;
      const auto& tri = m.triangles()[static_cast<std::size_t>(t)];
      for (int v : m.edges()[e]) {
        if (std::find(tri.begin(), tri.end(), v) == tri.end()) {
          fail(chk.conforming_ok, "edge endpoint missing from adjacent triangle");
        }
      }
    }
  }

  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    if (!(m.area(static_cast<int>(t)) > 0.0)) fail(chk.orientation_ok, "non-positive triangle area");
  }

  // Hanging nodes show up as one-sided edges whose interior contains a vertex
  // of another one-sided edge.
  std::vector<int> one_sided;
  for (std::size_t e = 0; e < m.num_edges(); ++e) {
    if (m.is_boundary_edge(static_cast<int>(e))) one_sided.push_back(static_cast<int>(e));
  }
  for (int e : one_sided) {
    const auto& ed = m.edges()[static_cast<std::size_t>(e)];
    const Point a = m.vertex(ed[0]);
    const Point b = m.vertex(ed[1]);
    const double len = distance(a, b);
    for (int f : one_sided) {
      if (f == e) continue;
      for (int v : m.edges()[static_cast<std::size_t>(f)]) {
        if (v == ed[0] || v == ed[1]) continue;
        const Point q = m.vertex(v);
        if (segment_distance(q, a, b) <= 1e-12 * len) {
          fail(chk.conforming_ok, "hanging node on edge " + std::to_string(e));
        }
      }
    }
  }

  chk.area_defect = std::abs(m.total_area() - expected_area) / expected_area;
  return chk;
}

void write_svg(const Mesh& m, std::ostream& os, double size_px) {
  double xmin = std::numeric_limits<double>::max(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  for (const auto& v : m.vertices()) {
    xmin = std::min(xmin, v.x);
    xmax = std::max(xmax, v.x);
    ymin = std::min(ymin, v.y);
    ymax = std::max(ymax, v.y);
  }
  const double pad = 0.02 * size_px;
  const double scale = (size_px - 2 * pad) / std::max(xmax - xmin, ymax - ymin);
  auto px = [&](Point p) {
    // SVG y axis points down.
    return Point{pad + (p.x - xmin) * scale, size_px - pad - (p.y - ymin) * scale};
  };
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size_px << "\" height=\"" << size_px
     << "\" viewBox=\"0 0 " << size_px << ' ' << size_px << "\">\n"
     << "<!-- triangles: " << m.num_triangles() << ", vertices: " << m.num_vertices() << " -->\n"
     << "<g fill=\"none\" stroke=\"black\" stroke-width=\"0.5\">\n";
  for (const auto& tri : m.triangles()) {
    const Point a = px(m.vertex(tri[0])), b = px(m.vertex(tri[1])), c = px(m.vertex(tri[2]));
    os << "<polygon points=\"" << a.x << ',' << a.y << ' ' << b.x << ',' << b.y << ' ' << c.x << ','
       << c.y << "\"/>\n";
  }
  os << "</g>\n</svg>\n";
}

void write_vtk(const Mesh& m, std::ostream& os, std::span<const double> cell_data,
               const std::string& cell_data_name) {
  if (!cell_data.empty() && cell_data.size() != m.num_triangles()) {
    throw std::invalid_argument("write_vtk: cell data size does not match triangle count");
  }
  const auto old_prec = os.precision(17);
  os << "# vtk DataFile Version 3.0\n"
     << "pminres mesh\n"
     << "ASCII\n"
     << "DATASET UNSTRUCTURED_GRID\n"
     << "POINTS " << m.num_vertices() << " double\n";
  for (const auto& v : m.vertices()) os << v.x << ' ' << v.y << " 0\n";
  os << "CELLS " << m.num_triangles() << ' ' << 4 * m.num_triangles() << '\n';
  for (const auto& tri : m.triangles()) os << "3 " << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
  os << "CELL_TYPES " << m.num_triangles() << '\n';
  for (std::size_t t = 0; t < m.num_triangles(); ++t) os << "5\n";
  if (!cell_data.empty()) {
    os << "CELL_DATA " << m.num_triangles() << '\n'
       << "SCALARS " << cell_data_name << " double 1\n"
       << "LOOKUP_TABLE default\n";
    for (double d : cell_data) os << d << '\n';
  }
  os.precision(old_prec);
}

}  // namespace pminres
