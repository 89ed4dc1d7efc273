#include "pminres/estimate.hpp"

#include "pminres/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pminres {

namespace {
constexpr double kDim = 2.0;
}

ExactSolution::ExactSolution(double p_, double sigma_, Point x0_) : p(p_), sigma(sigma_), x0(x0_) {
  if (!(p > 1.0)) throw std::invalid_argument("ExactSolution: p must exceed 1");
  if (!(sigma < kDim)) throw std::invalid_argument("ExactSolution: sigma must be below the dimension");
  // p = sigma gives a logarithmic profile that the power formula does not cover.
  if (p == sigma) throw std::invalid_argument("ExactSolution: p must differ from sigma");
}

double ExactSolution::value(Point x) const {
  const double r = distance(x, x0);
  const double expo = (p - sigma) / (p - 1.0);
  const double c = (p - 1.0) / (p - sigma) * std::pow(1.0 / (kDim - sigma), 1.0 / (p - 1.0));
  return c * (1.0 - std::pow(r, expo));
}

Point ExactSolution::gradient(Point x) const {
  const double r = distance(x, x0);
  const double expo = (p - sigma) / (p - 1.0) - 1.0;
  if (r == 0.0) {
    if (expo < 0.0) throw std::domain_error("ExactSolution: gradient singular at x0");
    if (expo > 0.0) return {0.0, 0.0};
  }
  // -(1/(d-sigma))^(1/(p-1)) r^expo (x - x0)/r
  const double c = std::pow(1.0 / (kDim - sigma), 1.0 / (p - 1.0));
  const double s = -c * std::pow(r, expo) / r;
  return s * (x - x0);
}

double ExactSolution::load(Point x) const { return load_spec()(x); }

ExactEval exact_eval(const ExactSolution& es, Point x) { return {es.value(x), es.gradient(x)}; }

double estimator_global(const NonlinearForms& forms, const Vector& r) {
  return std::pow(broken_seminorm(forms.test(), r, forms.p()), forms.p() - 1.0);
}

double true_error(const DofMap& trial, const Vector& u, const std::function<Point(Point)>& exact_gradient,
                  double p, const QuadRule& quad) {
  if (!(p > 1.0)) throw std::invalid_argument("true_error: p must exceed 1");
  const Mesh& m = trial.mesh();
  std::vector<double> gx, gy;
  element_gradients(trial, u, gx, gy);
  const std::size_t nq = quad.size();
  const std::size_t n = m.num_triangles() * nq;
  std::vector<double> ex(n), ey(n), w(n);
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    const Point a = m.vertex(tri[0]);
    const Point b = m.vertex(tri[1]);
    const Point c = m.vertex(tri[2]);
    const double jac = 2.0 * m.area(static_cast<int>(t));
    for (std::size_t q = 0; q < nq; ++q) {
      const auto& l = quad.points[q];
      const Point g = exact_gradient(l[0] * a + l[1] * b + l[2] * c);
      const std::size_t k = t * nq + q;
      ex[k] = g.x - gx[t];
      ey[k] = g.y - gy[t];
      w[k] = quad.weights[q] * jac;
    }
  }
  std::vector<double> mass(n);
  kernels::componentwise_power(p, ex, ey, w, mass);
  const double sum = std::accumulate(mass.begin(), mass.end(), 0.0);
  return std::pow(sum, 1.0 / p);
}

double true_error(const DofMap& trial, const Vector& u, const ExactSolution& es, const QuadRule& quad) {
  return true_error(trial, u, [&es](Point x) { return es.gradient(x); }, es.p, quad);
}

std::vector<int> dorfler_mark(std::span<const double> masses, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("dorfler_mark: theta must lie in (0, 1]");
  double total = 0.0;
  for (double m : masses) {
    if (!(m >= 0.0)) throw std::invalid_argument("dorfler_mark: masses must be non-negative");
    total += m;
  }
  if (total == 0.0) return {};

  std::vector<int> order(masses.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&masses](int a, int b) {
    return masses[static_cast<std::size_t>(a)] > masses[static_cast<std::size_t>(b)];
  });
  std::vector<int> marked;
  double acc = 0.0;
  const double goal = theta * total;
  for (int i : order) {
    const double m = masses[static_cast<std::size_t>(i)];
    if (acc >= goal) break;
    if (m == 0.0) break;
    marked.push_back(i);
    acc += m;
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

double fit_rate(std::span<const double> ndofs, std::span<const double> values) {
  if (ndofs.size() != values.size()) throw std::invalid_argument("fit_rate: size mismatch");
  if (ndofs.size() < 2) throw std::invalid_argument("fit_rate: need at least two points");
  const double n = static_cast<double>(ndofs.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> lx(ndofs.size()), ly(ndofs.size());
  for (std::size_t i = 0; i < ndofs.size(); ++i) {
    if (!(ndofs[i] > 0.0) || !(values[i] > 0.0)) throw std::invalid_argument("fit_rate: values must be positive");
    lx[i] = std::log(ndofs[i]);
    ly[i] = std::log(values[i]);
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_rate: ndofs must not all coincide");
  return sxy / sxx;
}

}  // namespace pminres
