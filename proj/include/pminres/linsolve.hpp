#pragma once

#include "pminres/forms.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cstdint>
#include <string>

namespace pminres {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/// Linearized mixed system
///
///   [ G   B ] [dr]   [rhs_top   ]
///   [ B^T 0 ] [du] = [rhs_bottom]
///
/// with G symmetric (test x test) and B coupling test rows to trial columns.
struct SaddleSystem {
  SparseMatrix G;
  SparseMatrix B;
  Vector rhs_top;
  Vector rhs_bottom;
  ColMatrix K;  ///< the assembled symmetric matrix, both triangles stored
  Vector rhs;

  Eigen::Index n_top() const { return G.rows(); }
  Eigen::Index n_bottom() const { return B.cols(); }
  /// The (top, bottom) block read back from K.
  SparseMatrix coupling_block() const;
};

/// Throws std::invalid_argument on dimension mismatch.
SaddleSystem assemble_saddle(SparseMatrix G, SparseMatrix B, Vector rhs_top, Vector rhs_bottom);

enum class LinearMethod { Direct, Minres };

struct LinearSolverOptions {
  LinearMethod method = LinearMethod::Direct;
  double rel_tol = 1e-10;
  int max_iterations = 10000;  ///< Krylov only
};

struct LinearSolveResult {
  Vector dr;
  Vector du;
  double relative_residual = 0.0;  ///< ||K x - rhs|| / ||rhs||, recomputed after the solve
  int iterations = 0;              ///< refinement sweeps (direct) or Krylov steps
  bool ok = false;
  std::string message;
};

/// Solves saddle systems that share one sparsity pattern (one mesh). The
/// fill-reducing ordering is computed on the first solve and reused while the
/// pattern is unchanged.
class SaddleSolver {
 public:
  explicit SaddleSolver(LinearSolverOptions options = {}) : options_(options) {}

  LinearSolveResult solve(const SaddleSystem& sys);
  const LinearSolverOptions& options() const { return options_; }
  /// Number of symbolic analyses performed so far.
  int analyses() const { return analyses_; }

 private:
  LinearSolveResult solve_direct(const SaddleSystem& sys);
  LinearSolveResult solve_minres(const SaddleSystem& sys);

  LinearSolverOptions options_;
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu_;
  std::uint64_t pattern_hash_ = 0;
  bool analyzed_ = false;
  int analyses_ = 0;
};

/// One-shot direct solve.
LinearSolveResult solve_symmetric_indefinite(const SaddleSystem& sys, double rel_tol = 1e-10);

}  // namespace pminres
