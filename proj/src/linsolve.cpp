#include "pminres/linsolve.hpp"

#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/IterativeSolvers>

#include <stdexcept>

namespace pminres {

SaddleSystem assemble_saddle(SparseMatrix G, SparseMatrix B, Vector rhs_top, Vector rhs_bottom) {
  if (G.rows() != G.cols()) throw std::invalid_argument("assemble_saddle: G must be square");
  if (B.rows() != G.rows()) throw std::invalid_argument("assemble_saddle: B rows must match G");
  if (rhs_top.size() != G.rows()) throw std::invalid_argument("assemble_saddle: rhs_top size");
  if (rhs_bottom.size() != B.cols()) throw std::invalid_argument("assemble_saddle: rhs_bottom size");

  const Eigen::Index n = G.rows();
  const Eigen::Index m = B.cols();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(G.nonZeros() + 2 * B.nonZeros()));
  for (Eigen::Index i = 0; i < G.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(G, i); it; ++it) triplets.emplace_back(it.row(), it.col(), it.value());
  }
  for (Eigen::Index i = 0; i < B.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(B, i); it; ++it) {
      triplets.emplace_back(it.row(), n + it.col(), it.value());
      triplets.emplace_back(n + it.col(), it.row(), it.value());
    }
  }
  SaddleSystem sys;
  sys.K.resize(n + m, n + m);
  sys.K.setFromTriplets(triplets.begin(), triplets.end());
  sys.K.makeCompressed();
  sys.rhs.resize(n + m);
  sys.rhs << rhs_top, rhs_bottom;
  sys.G = std::move(G);
  sys.B = std::move(B);
  sys.rhs_top = std::move(rhs_top);
  sys.rhs_bottom = std::move(rhs_bottom);
  return sys;
}

SparseMatrix SaddleSystem::coupling_block() const {
  return SparseMatrix(K.block(0, n_top(), n_top(), n_bottom()));
}

namespace {

std::uint64_t pattern_hash(const ColMatrix& K) {
  // FNV-1a over dimensions and index arrays.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  mix(static_cast<std::uint64_t>(K.rows()));
  mix(static_cast<std::uint64_t>(K.nonZeros()));
  for (Eigen::Index j = 0; j <= K.outerSize(); ++j) mix(static_cast<std::uint64_t>(K.outerIndexPtr()[j]));
  for (Eigen::Index k = 0; k < K.nonZeros(); ++k) mix(static_cast<std::uint64_t>(K.innerIndexPtr()[k]));
  return h;
}

double relative_residual(const SaddleSystem& sys, const Vector& x, double rhs_norm) {
  return (sys.K * x - sys.rhs).norm() / rhs_norm;
}

LinearSolveResult split(const SaddleSystem& sys, const Vector& x) {
  LinearSolveResult res;
  res.dr = x.head(sys.n_top());
  res.du = x.tail(sys.n_bottom());
  return res;
}

// diag(G^-1, S^-1) with S = B^T diag(G)^-1 B; both blocks SPD when G is
// positive definite and B has full column rank.
class BlockDiagonalPreconditioner {
 public:
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  BlockDiagonalPreconditioner() = default;
  template <typename M>
  explicit BlockDiagonalPreconditioner(const M& mat) {
    compute(mat);
  }

  void set_split(Eigen::Index n_top) { n_top_ = n_top; }

  template <typename M>
  BlockDiagonalPreconditioner& analyzePattern(const M&) {
    return *this;
  }
  template <typename M>
  BlockDiagonalPreconditioner& factorize(const M& mat) {
    return compute(mat);
  }
  template <typename M>
  BlockDiagonalPreconditioner& compute(const M& mat) {
    const Eigen::Index n = n_top_;
    const Eigen::Index m = mat.rows() - n;
    ColMatrix K(mat);
    ColMatrix G = K.topLeftCorner(n, n);
    ColMatrix B = K.topRightCorner(n, m);
    Vector inv_diag = G.diagonal().cwiseInverse();
    ColMatrix S = B.transpose() * inv_diag.asDiagonal() * B;
    g_.compute(G);
    s_.compute(S);
    info_ = (g_.info() == Eigen::Success && s_.info() == Eigen::Success) ? Eigen::Success
                                                                        : Eigen::NumericalIssue;
    return *this;
  }

  template <typename Rhs>
  Vector solve(const Rhs& b) const {
    Vector x(b.size());
    x.head(n_top_) = g_.solve(b.head(n_top_));
    x.tail(b.size() - n_top_) = s_.solve(b.tail(b.size() - n_top_));
    return x;
  }

  Eigen::ComputationInfo info() const { return info_; }

 private:
  Eigen::Index n_top_ = 0;
  Eigen::SimplicialLDLT<ColMatrix> g_;
  Eigen::SimplicialLDLT<ColMatrix> s_;
  Eigen::ComputationInfo info_ = Eigen::Success;
};

}  // namespace

LinearSolveResult SaddleSolver::solve(const SaddleSystem& sys) {
  const double rhs_norm = sys.rhs.norm();
  if (rhs_norm == 0.0) {
    LinearSolveResult res = split(sys, Vector::Zero(sys.rhs.size()));
    res.ok = true;
    return res;
  }
  return options_.method == LinearMethod::Direct ? solve_direct(sys) : solve_minres(sys);
}

LinearSolveResult SaddleSolver::solve_direct(const SaddleSystem& sys) {
  const std::uint64_t h = pattern_hash(sys.K);
  if (!analyzed_ || h != pattern_hash_) {
    lu_.analyzePattern(sys.K);
    pattern_hash_ = h;
    analyzed_ = true;
    ++analyses_;
  }
  lu_.factorize(sys.K);
  if (lu_.info() != Eigen::Success) {
    LinearSolveResult res = split(sys, Vector::Zero(sys.rhs.size()));
    res.relative_residual = 1.0;
    res.message = "sparse LU factorization failed: " + lu_.lastErrorMessage();
    return res;
  }
  const double rhs_norm = sys.rhs.norm();
  Vector x = lu_.solve(sys.rhs);
  double rel = relative_residual(sys, x, rhs_norm);
  int sweeps = 0;
  // Iterative refinement when the first solve misses the tolerance.
  while (rel > options_.rel_tol && sweeps < 3) {
    const Vector corr = lu_.solve(sys.rhs - sys.K * x);
    const Vector candidate = x + corr;
    const double rel_new = relative_residual(sys, candidate, rhs_norm);
    ++sweeps;
    if (!(rel_new < rel)) break;
    x = candidate;
    rel = rel_new;
  }
  LinearSolveResult res = split(sys, x);
  res.relative_residual = rel;
  res.iterations = sweeps;
  res.ok = std::isfinite(rel) && rel <= options_.rel_tol;
  if (!res.ok) res.message = "direct solve residual " + std::to_string(rel) + " above tolerance";
  return res;
}

LinearSolveResult SaddleSolver::solve_minres(const SaddleSystem& sys) {
  Eigen::MINRES<ColMatrix, Eigen::Lower | Eigen::Upper, BlockDiagonalPreconditioner> minres;
  minres.preconditioner().set_split(sys.n_top());
  minres.setTolerance(options_.rel_tol * 0.1);
  minres.setMaxIterations(options_.max_iterations);
  minres.compute(sys.K);
  const Vector x = minres.solve(sys.rhs);
  const double rel = relative_residual(sys, x, sys.rhs.norm());
  LinearSolveResult res = split(sys, x);
  res.relative_residual = rel;
  res.iterations = static_cast<int>(minres.iterations());
  res.ok = std::isfinite(rel) && rel <= options_.rel_tol;
  if (!res.ok) res.message = "MINRES residual " + std::to_string(rel) + " above tolerance";
  return res;
}

LinearSolveResult solve_symmetric_indefinite(const SaddleSystem& sys, double rel_tol) {
  SaddleSolver solver(LinearSolverOptions{LinearMethod::Direct, rel_tol, 0});
  return solver.solve(sys);
}

}  // namespace pminres
