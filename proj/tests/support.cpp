#include "support.hpp"

#include "pminres/quadrature.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace support {

using namespace pminres;

Spaces make_spaces(const Mesh& m, const std::function<double(Point)>& g) {
  Spaces s;
  s.mesh = std::make_shared<const Mesh>(m);
  std::map<int, double> bv;
  if (g) bv = boundary_values(*s.mesh, g);
  s.trial = std::make_shared<const DofMap>(build_space(s.mesh, SpaceKind::P1, bv));
  s.test = std::make_shared<const DofMap>(build_space(s.mesh, SpaceKind::CR));
  return s;
}

Mesh jittered_square(int n, double amount, std::mt19937_64& rng) {
  const Mesh base = unit_square_mesh(n);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<Point> v = base.vertices();
  const double h = 1.0 / n;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (base.is_boundary_vertex(static_cast<int>(i))) continue;
    v[i].x += amount * h * d(rng);
    v[i].y += amount * h * d(rng);
  }
  return Mesh(v, base.triangles());
}

Vector random_trial(const DofMap& trial, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  Vector f(trial.n_free());
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = d(rng);
  return trial.expand(f);
}

Vector random_test(const DofMap& test, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  Vector f(test.n_free());
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = d(rng);
  return test.expand_homogeneous(f);
}

namespace {

struct HatGradients {
  double area;
  Point g[3];
};

HatGradients hats(const Mesh& m, int t) {
  const auto& tri = m.triangles()[static_cast<std::size_t>(t)];
  const Point a = m.vertex(tri[0]), b = m.vertex(tri[1]), c = m.vertex(tri[2]);
  const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  HatGradients h;
  h.area = 0.5 * det;
  // grad lambda_i = rot90(opposite edge) / det
  const Point e[3] = {c - b, a - c, b - a};
  for (int i = 0; i < 3; ++i) h.g[i] = {-e[i].y / det, e[i].x / det};
  return h;
}

}  // namespace

Vector galerkin_poisson(const DofMap& trial, const std::function<double(Point)>& f, int quad_degree) {
  const Mesh& m = trial.mesh();
  const QuadRule q = QuadRule::triangle(quad_degree);
  const int nv = static_cast<int>(m.num_vertices());
  Vector g = Vector::Zero(nv);
  std::vector<char> fixed(static_cast<std::size_t>(nv), 0);
  for (std::size_t i = 0; i < trial.constrained_dofs().size(); ++i) {
    g[trial.constrained_dofs()[i]] = trial.constrained_values()[i];
    fixed[static_cast<std::size_t>(trial.constrained_dofs()[i])] = 1;
  }
  std::vector<int> idx(static_cast<std::size_t>(nv), -1);
  int n = 0;
  for (int v = 0; v < nv; ++v)
    if (!fixed[static_cast<std::size_t>(v)]) idx[static_cast<std::size_t>(v)] = n++;

  std::vector<Eigen::Triplet<double>> trips;
  Vector rhs = Vector::Zero(n);
  for (int t = 0; t < static_cast<int>(m.num_triangles()); ++t) {
    const auto& tri = m.triangles()[static_cast<std::size_t>(t)];
    const HatGradients h = hats(m, t);
    const Point a = m.vertex(tri[0]), b = m.vertex(tri[1]), c = m.vertex(tri[2]);
    double load[3] = {0, 0, 0};
    for (std::size_t k = 0; k < q.size(); ++k) {
      const auto& l = q.points[k];
      const double fx = f(l[0] * a + l[1] * b + l[2] * c) * q.weights[k] * 2.0 * h.area;
      for (int i = 0; i < 3; ++i) load[i] += fx * l[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < 3; ++i) {
      const int gi = idx[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
      if (gi < 0) continue;
      rhs[gi] += load[i];
      for (int j = 0; j < 3; ++j) {
        const double kij = h.area * (h.g[i].x * h.g[j].x + h.g[i].y * h.g[j].y);
        const int gj = idx[static_cast<std::size_t>(tri[static_cast<std::size_t>(j)])];
        if (gj < 0)
          rhs[gi] -= kij * g[tri[static_cast<std::size_t>(j)]];
        else
          trips.emplace_back(gi, gj, kij);
      }
    }
  }
  Vector u = g;
  if (n == 0) return u;
  Eigen::SparseMatrix<double> k(n, n);
  k.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(k);
  if (llt.info() != Eigen::Success) throw std::runtime_error("galerkin_poisson: factorization failed");
  const Vector x = llt.solve(rhs);
  for (int v = 0; v < nv; ++v)
    if (idx[static_cast<std::size_t>(v)] >= 0) u[v] = x[idx[static_cast<std::size_t>(v)]];
  return u;
}

double p1_h1_seminorm(const Mesh& m, const Vector& u) {
  double s = 0.0;
  for (int t = 0; t < static_cast<int>(m.num_triangles()); ++t) {
    const auto& tri = m.triangles()[static_cast<std::size_t>(t)];
    const HatGradients h = hats(m, t);
    Point g{0, 0};
    for (int i = 0; i < 3; ++i) g = g + u[tri[static_cast<std::size_t>(i)]] * h.g[i];
    s += h.area * (g.x * g.x + g.y * g.y);
  }
  return std::sqrt(s);
}

Eigen::VectorXd dense_solve(Eigen::MatrixXd a, Eigen::VectorXd b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    for (Eigen::Index i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0.0) throw std::runtime_error("dense_solve: singular matrix");
    a.row(k).swap(a.row(piv));
    std::swap(b[k], b[piv]);
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (Eigen::Index j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  Eigen::VectorXd x(n);
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    double s = b[k];
    for (Eigen::Index j = k + 1; j < n; ++j) s -= a(k, j) * x[j];
    x[k] = s / a(k, k);
  }
  return x;
}

namespace {

// Eighth-order centered first derivative.
template <class F>
double d8(const F& f, double h) {
  static constexpr double c[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
  double s = 0.0;
  for (int k = 1; k <= 4; ++k) s += c[k - 1] * (f(k * h) - f(-k * h));
  return s / h;
}

}  // namespace

double fd_p_laplacian(const ExactSolution& es, Point x, double h_outer, double h_inner) {
  const double p = es.p;
  auto flux = [&](Point y) {
    const double gx = d8([&](double s) { return es.value({y.x + s, y.y}); }, h_inner);
    const double gy = d8([&](double s) { return es.value({y.x, y.y + s}); }, h_inner);
    const double w = std::pow(std::hypot(gx, gy), p - 2.0);
    return Point{w * gx, w * gy};
  };
  const double dx = d8([&](double s) { return flux({x.x + s, x.y}).x; }, h_outer);
  const double dy = d8([&](double s) { return flux({x.x, x.y + s}).y; }, h_outer);
  return -(dx + dy);
}

double radial_seminorm(const ExactSolution& es) {
  if (es.x0.x > 0.0 || es.x0.y > 0.0) throw std::invalid_argument("radial_seminorm: x0 must satisfy x, y <= 0");
  const double p = es.p;
  const double a = (p - es.sigma) / (p - 1.0);
  const double k = std::pow(1.0 / (2.0 - es.sigma), 1.0 / (p - 1.0));
  const double q = p * (a - 1.0) + 2.0;
  const double inf = std::numeric_limits<double>::infinity();
  // |grad u| = k r^(a-1); d_x u = -|grad u| cos(theta), d_y u = -|grad u| sin(theta).
  auto integrand = [&](double th) {
    const double c = std::cos(th), s = std::sin(th);
    const double lo = std::max(c > 0 ? -es.x0.x / c : (es.x0.x == 0 ? 0.0 : inf),
                               s > 0 ? -es.x0.y / s : (es.x0.y == 0 ? 0.0 : inf));
    const double hi = std::min(c > 0 ? (1.0 - es.x0.x) / c : inf, s > 0 ? (1.0 - es.x0.y) / s : inf);
    if (!(hi > lo)) return 0.0;
    const double radial = (std::pow(hi, q) - std::pow(lo, q)) / q;
    return (std::pow(std::abs(c), p) + std::pow(std::abs(s), p)) * std::pow(k, p) * radial;
  };
  using boost::math::quadrature::gauss_kronrod;
  // Split where the entry or exit side changes so each piece is smooth.
  std::vector<double> cuts{0.0, M_PI / 4.0, M_PI / 2.0};
  if (es.x0.x < 0.0 || es.x0.y < 0.0) {
    cuts.push_back(std::atan2(-es.x0.y, 1.0 - es.x0.x));
    cuts.push_back(std::atan2(1.0 - es.x0.y, -es.x0.x));
    cuts.push_back(std::atan2(1.0 - es.x0.y, 1.0 - es.x0.x));
    cuts.push_back(std::atan2(-es.x0.y, -es.x0.x));
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] < 1e-15) continue;
    total += gauss_kronrod<double, 61>::integrate(integrand, cuts[i], cuts[i + 1], 15, 1e-14);
  }
  return std::pow(total, 1.0 / p);
}

double continuous_pairing(const DofMap& trial, const Vector& w, double p,
                          const std::function<Point(Point)>& grad_v, int quad_degree) {
  const Mesh& m = trial.mesh();
  const QuadRule q = QuadRule::triangle(quad_degree);
  double s = 0.0;
  for (int t = 0; t < static_cast<int>(m.num_triangles()); ++t) {
    const auto& tri = m.triangles()[static_cast<std::size_t>(t)];
    const HatGradients h = hats(m, t);
    Point g{0, 0};
    for (int i = 0; i < 3; ++i) g = g + w[tri[static_cast<std::size_t>(i)]] * h.g[i];
    const double nrm = std::hypot(g.x, g.y);
    const double c = nrm > 0 ? std::pow(nrm, p - 2.0) : 0.0;
    const Point a = m.vertex(tri[0]), b = m.vertex(tri[1]), cc = m.vertex(tri[2]);
    Point iv{0, 0};
    for (std::size_t k = 0; k < q.size(); ++k) {
      const auto& l = q.points[k];
      iv = iv + (q.weights[k] * 2.0 * h.area) * grad_v(l[0] * a + l[1] * b + l[2] * cc);
    }
    s += c * (g.x * iv.x + g.y * iv.y);
  }
  return s;
}

namespace {

double dot(const Vector& a, const Vector& b) { return a.dot(b); }

// Free-DOF view of a complete test vector.
Vector free_part(const DofMap& dm, const Vector& v) { return dm.restrict_to_free(v); }

}  // namespace

PropertyResult check_monotonicity(const std::vector<double>& ps, int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PropertyResult res;
  res.worst = std::numeric_limits<double>::infinity();
  std::uniform_int_distribution<int> nd(2, 6);
  for (int i = 0; i < instances; ++i) {
    const double p = ps[static_cast<std::size_t>(i) % ps.size()];
    const Spaces s = make_spaces(jittered_square(nd(rng), 0.2, rng), [](Point x) { return x.x - 0.5 * x.y; });
    const NonlinearForms forms(p, s.trial, s.test);
    const Vector u = random_trial(*s.trial, rng);
    Vector w = random_trial(*s.trial, rng);
    if (i % 4 == 0) w = u + 1e-3 * (w - u);  // nearby pairs too
    const Vector diff = u - w;
    const Vector emb = embed_p1_in_cr(*s.trial, *s.test, diff);
    const double pairing = dot(forms.apply_A(u) - forms.apply_A(w), free_part(*s.test, emb));
    const double scale = std::pow(broken_seminorm(*s.trial, diff, 2.0), std::max(p, 2.0));
    res.worst = std::min(res.worst, pairing / scale);
    ++res.instances;
  }
  res.ok = res.worst > 0.0;
  return res;
}

PropertyResult check_duality(const std::vector<double>& ps, int instances, std::uint64_t seed,
                             double* worst_homogeneity) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nd(1, 6);
  std::uniform_real_distribution<double> ld(0.1, 4.0);
  PropertyResult res;
  double worst_h = 0.0;
  for (int i = 0; i < instances; ++i) {
    const double p = ps[static_cast<std::size_t>(i) % ps.size()];
    const Spaces s = make_spaces(jittered_square(nd(rng), 0.2, rng));
    const NonlinearForms forms(p, s.trial, s.test);
    const Vector r = random_test(*s.test, rng);
    const Vector jr = forms.apply_J(r);
    const double lhs = dot(jr, free_part(*s.test, r));
    const double rhs = std::pow(broken_seminorm(*s.test, r, p), p);
    res.worst = std::max(res.worst, std::abs(lhs - rhs) / rhs);
    const double lambda = (i % 2 ? -1.0 : 1.0) * ld(rng);
    const Vector scaled = forms.apply_J(lambda * r);
    const Vector expect = lambda * std::pow(std::abs(lambda), p - 2.0) * jr;
    worst_h = std::max(worst_h, (scaled - expect).lpNorm<Eigen::Infinity>() / expect.lpNorm<Eigen::Infinity>());
    ++res.instances;
  }
  if (worst_homogeneity) *worst_homogeneity = worst_h;
  res.ok = res.worst <= 1e-11 && worst_h <= 1e-12;
  return res;
}

PropertyResult check_fortin(const std::vector<double>& ps, int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nd(1, 6);
  std::uniform_real_distribution<double> cd(-2.0, 2.0);
  PropertyResult res;
  for (int i = 0; i < instances; ++i) {
    const double p = ps[static_cast<std::size_t>(i) % ps.size()];
    const Spaces s = make_spaces(jittered_square(nd(rng), 0.2, rng), [](Point x) { return std::sin(x.x + 2 * x.y); });
    const NonlinearForms forms(p, s.trial, s.test);
    const Vector w = random_trial(*s.trial, rng);
    // v = b(x, y) (1 + al x + be y^2), b the square bubble: zero on the boundary.
    const double al = cd(rng), be = cd(rng);
    auto v = [=](Point x) { return x.x * (1 - x.x) * x.y * (1 - x.y) * (1 + al * x.x + be * x.y * x.y); };
    auto grad_v = [=](Point x) {
      const double bx = (1 - 2 * x.x) * x.y * (1 - x.y), by = x.x * (1 - x.x) * (1 - 2 * x.y);
      const double b = x.x * (1 - x.x) * x.y * (1 - x.y);
      const double c = 1 + al * x.x + be * x.y * x.y;
      return Point{bx * c + b * al, by * c + b * 2 * be * x.y};
    };
    const Mesh& m = *s.mesh;
    const Vector pi_v = cr_interpolate(m, [&](int e) { return edge_mean(m, e, v); });
    const double cont = continuous_pairing(*s.trial, w, p, grad_v, 8);
    const double disc = dot(forms.apply_A(w), free_part(*s.test, pi_v));
    res.worst = std::max(res.worst, std::abs(cont - disc));
    ++res.instances;
  }
  res.ok = res.worst <= 1e-11;
  return res;
}

namespace {

double min_abs_component(const DofMap& dm, const Vector& c, bool euclidean) {
  std::vector<double> gx, gy;
  element_gradients(dm, c, gx, gy);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < gx.size(); ++t)
    m = euclidean ? std::min(m, std::hypot(gx[t], gy[t])) : std::min({m, std::abs(gx[t]), std::abs(gy[t])});
  return m;
}

}  // namespace

PropertyResult check_jacobians(const std::vector<double>& ps, int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nd(1, 4);
  PropertyResult res;
  const double h = 1e-5;
  for (int i = 0; i < instances; ++i) {
    const double p = ps[static_cast<std::size_t>(i) % ps.size()];
    const Spaces s = make_spaces(jittered_square(nd(rng), 0.2, rng), [](Point x) { return 2 * x.x + x.y; });
    const NonlinearForms forms(p, s.trial, s.test);

    // Trial states near the affine boundary data keep |grad u| away from 0.
    Vector u;
    do {
      u = random_trial(*s.trial, rng, 0.05);
    } while (min_abs_component(*s.trial, u, true) < 0.1);
    const Vector du_free = s.trial->restrict_to_free(random_trial(*s.trial, rng));
    const Vector du = s.trial->expand_homogeneous(du_free);
    const Vector b_du = forms.assemble_dA(u) * du_free;
    const Vector fd_a = (forms.apply_A(u + h * du) - forms.apply_A(u - h * du)) / (2 * h);
    if (b_du.norm() > 0) res.worst = std::max(res.worst, (fd_a - b_du).norm() / b_du.norm());

    Vector r;
    do {
      r = random_test(*s.test, rng);
    } while (min_abs_component(*s.test, r, false) < 0.05);
    const Vector dr = random_test(*s.test, rng);
    const Vector g_dr = forms.assemble_dJ(r) * free_part(*s.test, dr);
    const Vector fd_j = (forms.apply_J(r + h * dr) - forms.apply_J(r - h * dr)) / (2 * h);
    res.worst = std::max(res.worst, (fd_j - g_dr).norm() / g_dr.norm());
    ++res.instances;
  }
  res.ok = res.worst <= 1e-6;
  return res;
}

PropertyResult check_manufactured(double p, double sigma, Point x0, int points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rd(0.1, 0.9), td(0.0, 2 * M_PI);
  const ExactSolution es(p, sigma, x0);
  PropertyResult res;
  for (int i = 0; i < points; ++i) {
    const double r = rd(rng), th = td(rng);
    const Point x{x0.x + r * std::cos(th), x0.y + r * std::sin(th)};
    const double lhs = fd_p_laplacian(es, x, 0.02 * r, 1e-3 * r);
    const double rhs = std::pow(r, -sigma);
    res.worst = std::max(res.worst, std::abs(lhs - rhs) / rhs);
    ++res.instances;
  }
  res.ok = res.worst <= 1e-8;
  return res;
}

}  // namespace support
