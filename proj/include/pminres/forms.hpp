#pragma once

#include "pminres/quadrature.hpp"
#include "pminres/spaces.hpp"

#include <Eigen/SparseCore>

#include <functional>
#include <memory>

namespace pminres {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Right-hand side f. `RadialSingular` is f(x) = |x - x0|^(-sigma).
struct LoadSpec {
  enum class Kind { RadialSingular, Custom };

  Kind kind = Kind::RadialSingular;
  double sigma = 0.97;
  Point x0{-1.0, -1.0};
  std::function<double(Point)> custom;

  static LoadSpec radial(double sigma, Point x0);
  static LoadSpec from_function(std::function<double(Point)> f);

  /// Throws std::domain_error at the singular point of a radial load.
  double operator()(Point x) const;
};

/// The extended p-Laplacian A_h (P1 trial, CR test), the duality map J of the
/// componentwise broken W^{1,p} seminorm on the CR space, and their Jacobians.
///
/// All vectors returned are indexed by free DOFs of the test space (rows) or
/// the trial space (columns); coefficient arguments are complete vectors.
/// `epsilon` regularizes the Jacobian weights only; residual evaluations are
/// never regularized.
class NonlinearForms {
 public:
  NonlinearForms(double p, std::shared_ptr<const DofMap> trial, std::shared_ptr<const DofMap> test,
                 double epsilon = 0.0);

  double p() const { return p_; }
  /// Conjugate exponent p / (p - 1).
  double p_conjugate() const { return p_ / (p_ - 1.0); }
  double epsilon() const { return epsilon_; }
  const DofMap& trial() const { return *trial_; }
  const DofMap& test() const { return *test_; }
  const std::shared_ptr<const DofMap>& trial_ptr() const { return trial_; }
  const std::shared_ptr<const DofMap>& test_ptr() const { return test_; }

  NonlinearForms with_exponent(double p) const;
  NonlinearForms with_epsilon(double epsilon) const;

  /// <A_h(u), phi_i> = sum_T area |grad u|^(p-2) grad u . grad phi_i.
  Vector apply_A(const Vector& u) const;
  /// <J(r), phi_i> = sum_T area sum_k |d_k r|^(p-2) d_k r d_k phi_i.
  Vector apply_J(const Vector& r) const;
  /// Gateaux derivative of A_h at u: test rows x trial columns.
  SparseMatrix assemble_dA(const Vector& u) const;
  /// Hessian of (1/p)|r|^p in the broken seminorm: test x test, symmetric.
  SparseMatrix assemble_dJ(const Vector& r) const;
  /// m_T = area(T) sum_k |d_k r|^p, so that sum_T m_T = |r|_h^p.
  std::vector<double> local_indicators(const Vector& r) const;

 private:
  double p_;
  double epsilon_;
  std::shared_ptr<const DofMap> trial_;
  std::shared_ptr<const DofMap> test_;
};

/// <F, phi_i> = int f phi_i by quadrature, for the free DOFs of `test`
/// (P1 or CR).
Vector assemble_F(const LoadSpec& load, const DofMap& test, const QuadRule& quad);

}  // namespace pminres
