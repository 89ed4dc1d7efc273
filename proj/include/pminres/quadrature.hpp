#pragma once

#include <array>
#include <vector>

namespace pminres {

/// Quadrature on the reference triangle {(s, t) : s, t >= 0, s + t <= 1}.
/// Points are stored in barycentric form (l0, l1, l2) with the reference
/// coordinates being (l1, l2). Weights sum to the reference area 1/2.
struct QuadRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return weights.size(); }

  /// Rule exact for polynomials of total degree <= `degree`. Degree <= 2 uses
  /// the three-point interior rule; higher degrees use a collapsed
  /// Gauss-Legendre product rule. All points are strictly interior.
  static QuadRule triangle(int degree);
};

/// Gauss-Legendre rule with `n` points on [0, 1] (nodes ascending, weights sum
/// to 1).
struct GaussLine {
  std::vector<double> nodes;
  std::vector<double> weights;

  static GaussLine on_unit_interval(int n);
};

}  // namespace pminres
