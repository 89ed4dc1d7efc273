#include "pminres/quadrature.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace pminres {

GaussLine GaussLine::on_unit_interval(int n) {
  if (n < 1) throw std::invalid_argument("GaussLine: need at least one point");
  // Golub-Welsch: eigenvalues of the Legendre Jacobi matrix.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussLine rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double v0 = eig.eigenvectors()(0, k);
    rule.nodes[static_cast<std::size_t>(k)] = 0.5 * (eig.eigenvalues()(k) + 1.0);
    // Weight on [-1, 1] is 2 v0^2; halve it for [0, 1].
    rule.weights[static_cast<std::size_t>(k)] = v0 * v0;
  }
  return rule;
}

QuadRule QuadRule::triangle(int degree) {
  if (degree < 0) throw std::invalid_argument("QuadRule: negative degree");
  QuadRule rule;
  if (degree <= 2) {
    rule.degree = 2;
    const double a = 2.0 / 3.0;
    const double b = 1.0 / 6.0;
    rule.points = {{a, b, b}, {b, a, b}, {b, b, a}};
    rule.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
    return rule;
  }
  // s = u, t = v (1 - u), Jacobian (1 - u). A monomial of total degree k has
  // degree k + 1 in u and k in v, so n points per direction need 2n - 1 >= k + 1.
  const int n = (degree + 3) / 2;
  const GaussLine g = GaussLine::on_unit_interval(n);
  rule.degree = 2 * n - 2;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = g.nodes[static_cast<std::size_t>(i)];
      const double v = g.nodes[static_cast<std::size_t>(j)];
      const double s = u;
      const double t = v * (1.0 - u);
      rule.points.push_back({1.0 - s - t, s, t});
      rule.weights.push_back(g.weights[static_cast<std::size_t>(i)] *
                             g.weights[static_cast<std::size_t>(j)] * (1.0 - u));
    }
  }
  return rule;
}

}  // namespace pminres
