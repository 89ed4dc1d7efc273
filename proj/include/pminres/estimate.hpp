#pragma once

#include "pminres/forms.hpp"
#include "pminres/quadrature.hpp"

#include <functional>
#include <span>
#include <vector>

namespace pminres {

/// Radially symmetric p-Laplacian benchmark on the plane:
///   u(x) = (p-1)/(p-sigma) (1/(2-sigma))^(1/(p-1)) (1 - r^((p-sigma)/(p-1))),
/// r = |x - x0|, which solves -div(|grad u|^(p-2) grad u) = r^(-sigma).
struct ExactSolution {
  double p = 2.0;
  double sigma = 0.97;
  Point x0{-1.0, -1.0};

  ExactSolution(double p, double sigma, Point x0);

  double value(Point x) const;
  /// Throws std::domain_error at x0 when the gradient is singular there.
  Point gradient(Point x) const;
  /// r^(-sigma), the matching load.
  double load(Point x) const;
  LoadSpec load_spec() const { return LoadSpec::radial(sigma, x0); }
};

struct ExactEval {
  double value;
  Point gradient;
};

ExactEval exact_eval(const ExactSolution& es, Point x);

/// eta = |r|_h^(p-1).
double estimator_global(const NonlinearForms& forms, const Vector& r);

/// (sum_T sum_q w_q |det| sum_k |d_k u(x_q) - d_k u_h|_T|^p)^(1/p), with the
/// exact gradient supplied as a callable.
double true_error(const DofMap& trial, const Vector& u, const std::function<Point(Point)>& exact_gradient,
                  double p, const QuadRule& quad);
double true_error(const DofMap& trial, const Vector& u, const ExactSolution& es, const QuadRule& quad);

/// Smallest set (greedy by descending mass, ties to the lower index) whose
/// mass reaches theta times the total. Returned indices are sorted ascending.
/// Returns an empty set when every mass is zero.
std::vector<int> dorfler_mark(std::span<const double> masses, double theta);

/// Least-squares slope of log(value) against log(ndofs).
double fit_rate(std::span<const double> ndofs, std::span<const double> values);

}  // namespace pminres
