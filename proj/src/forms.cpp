#include "pminres/forms.hpp"

#include "pminres/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace pminres {

LoadSpec LoadSpec::radial(double sigma, Point x0) {
  if (!(sigma < 2.0)) throw std::invalid_argument("LoadSpec: sigma must be below 2 in 2D");
  LoadSpec s;
  s.kind = Kind::RadialSingular;
  s.sigma = sigma;
  s.x0 = x0;
  return s;
}

LoadSpec LoadSpec::from_function(std::function<double(Point)> f) {
  LoadSpec s;
  s.kind = Kind::Custom;
  s.custom = std::move(f);
  return s;
}

double LoadSpec::operator()(Point x) const {
  if (kind == Kind::Custom) return custom(x);
  const double r = distance(x, x0);
  if (r == 0.0) throw std::domain_error("LoadSpec: evaluation at the singular point");
  return std::pow(r, -sigma);
}

NonlinearForms::NonlinearForms(double p, std::shared_ptr<const DofMap> trial,
                               std::shared_ptr<const DofMap> test, double epsilon)
    : p_(p), epsilon_(epsilon), trial_(std::move(trial)), test_(std::move(test)) {
  if (!(p_ > 1.0)) throw std::invalid_argument("NonlinearForms: p must exceed 1");
  if (!(epsilon_ >= 0.0)) throw std::invalid_argument("NonlinearForms: epsilon must be non-negative");
  if (!trial_ || !test_) throw std::invalid_argument("NonlinearForms: null DofMap");
  if (trial_->kind() != SpaceKind::P1 || test_->kind() != SpaceKind::CR) {
    throw std::invalid_argument("NonlinearForms: expected P1 trial and CR test spaces");
  }
  if (&trial_->mesh() != &test_->mesh()) {
    throw std::invalid_argument("NonlinearForms: trial and test spaces must share one mesh");
  }
}

NonlinearForms NonlinearForms::with_exponent(double p) const {
  return NonlinearForms(p, trial_, test_, epsilon_);
}

NonlinearForms NonlinearForms::with_epsilon(double epsilon) const {
  return NonlinearForms(p_, trial_, test_, epsilon);
}

namespace {

// Adds the per-element vector field (fx, fy) tested against the CR basis.
Vector scatter_cr(const DofMap& test, const std::vector<double>& fx, const std::vector<double>& fy) {
  const auto& geo = test.geometry();
  const auto& conn = test.mesh().triangle_edges();
  Vector out = Vector::Zero(test.n_free());
  for (std::size_t t = 0; t < conn.size(); ++t) {
    for (std::size_t k = 0; k < 3; ++k) {
      const int i = test.free_index(conn[t][k]);
      if (i < 0) continue;
      out[i] += -2.0 * (fx[t] * geo.gx[k][t] + fy[t] * geo.gy[k][t]);
    }
  }
  return out;
}

}  // namespace

Vector NonlinearForms::apply_A(const Vector& u) const {
  std::vector<double> gx, gy;
  element_gradients(*trial_, u, gx, gy);
  std::vector<double> fx(gx.size()), fy(gx.size());
  kernels::euclidean_flux(p_, gx, gy, trial_->geometry().area, fx, fy);
  return scatter_cr(*test_, fx, fy);
}

Vector NonlinearForms::apply_J(const Vector& r) const {
  std::vector<double> gx, gy;
  element_gradients(*test_, r, gx, gy);
  std::vector<double> fx(gx.size()), fy(gx.size());
  kernels::componentwise_flux(p_, gx, gy, test_->geometry().area, fx, fy);
  return scatter_cr(*test_, fx, fy);
}

SparseMatrix NonlinearForms::assemble_dA(const Vector& u) const {
  std::vector<double> gx, gy;
  element_gradients(*trial_, u, gx, gy);
  const std::size_t nt = gx.size();
  std::vector<double> mu(nt), beta(nt);
  kernels::euclidean_jacobian(p_, epsilon_, gx, gy, trial_->geometry().area, mu, beta);

  const auto& geo = trial_->geometry();
  const Mesh& m = trial_->mesh();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = m.triangles()[t];
    const auto& te = m.triangle_edges()[t];
    for (std::size_t a = 0; a < 3; ++a) {
      const int i = test_->free_index(te[a]);
      if (i < 0) continue;
      const double phx = -2.0 * geo.gx[a][t];
      const double phy = -2.0 * geo.gy[a][t];
      const double g_phi = gx[t] * phx + gy[t] * phy;
      for (std::size_t b = 0; b < 3; ++b) {
        const int j = trial_->free_index(tri[b]);
        if (j < 0) continue;
        const double psx = geo.gx[b][t];
        const double psy = geo.gy[b][t];
        const double g_psi = gx[t] * psx + gy[t] * psy;
        triplets.emplace_back(i, j, mu[t] * (phx * psx + phy * psy + beta[t] * g_psi * g_phi));
      }
    }
  }
  SparseMatrix B(test_->n_free(), trial_->n_free());
  B.setFromTriplets(triplets.begin(), triplets.end());
  return B;
}

SparseMatrix NonlinearForms::assemble_dJ(const Vector& r) const {
  std::vector<double> gx, gy;
  element_gradients(*test_, r, gx, gy);
  const std::size_t nt = gx.size();
  std::vector<double> dx(nt), dy(nt);
  kernels::componentwise_jacobian(p_, epsilon_, gx, gy, test_->geometry().area, dx, dy);

  const auto& geo = test_->geometry();
  const auto& conn = test_->mesh().triangle_edges();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * nt);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t a = 0; a < 3; ++a) {
      const int i = test_->free_index(conn[t][a]);
      if (i < 0) continue;
      const double ax = -2.0 * geo.gx[a][t];
      const double ay = -2.0 * geo.gy[a][t];
      for (std::size_t b = a; b < 3; ++b) {
        const int j = test_->free_index(conn[t][b]);
        if (j < 0) continue;
        const double bx = -2.0 * geo.gx[b][t];
        const double by = -2.0 * geo.gy[b][t];
        const double v = dx[t] * ax * bx + dy[t] * ay * by;
        triplets.emplace_back(i, j, v);
        if (b != a) triplets.emplace_back(j, i, v);
      }
    }
  }
  SparseMatrix G(test_->n_free(), test_->n_free());
  G.setFromTriplets(triplets.begin(), triplets.end());
  return G;
}

std::vector<double> NonlinearForms::local_indicators(const Vector& r) const {
  std::vector<double> gx, gy;
  element_gradients(*test_, r, gx, gy);
  std::vector<double> mass(gx.size());
  kernels::componentwise_power(p_, gx, gy, test_->geometry().area, mass);
  return mass;
}

Vector assemble_F(const LoadSpec& load, const DofMap& test, const QuadRule& quad) {
  const Mesh& m = test.mesh();
  const auto& geo = test.geometry();
  Vector out = Vector::Zero(test.n_free());
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    const Point a = m.vertex(tri[0]);
    const Point b = m.vertex(tri[1]);
    const Point c = m.vertex(tri[2]);
    const auto dofs = test.element_dofs(static_cast<int>(t));
    std::array<int, 3> idx{};
    for (std::size_t k = 0; k < 3; ++k) idx[k] = test.free_index(dofs[k]);
    if (idx[0] < 0 && idx[1] < 0 && idx[2] < 0) continue;
    const double jac = 2.0 * geo.area[t];
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const auto& l = quad.points[q];
      const Point x = l[0] * a + l[1] * b + l[2] * c;
      const double fw = quad.weights[q] * jac * load(x);
      for (std::size_t k = 0; k < 3; ++k) {
        if (idx[k] < 0) continue;
        const double basis = test.kind() == SpaceKind::P1 ? l[k] : 1.0 - 2.0 * l[k];
        out[idx[k]] += fw * basis;
      }
    }
  }
  return out;
}

}  // namespace pminres
