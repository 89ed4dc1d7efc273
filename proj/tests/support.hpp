#pragma once

// Oracles and helpers shared by the unit tests and the acceptance binary.
// Everything here is computed independently of the library's assembly code.

#include "pminres/driver.hpp"
#include "pminres/estimate.hpp"
#include "pminres/forms.hpp"
#include "pminres/mesh.hpp"
#include "pminres/spaces.hpp"

#include <Eigen/Dense>

#include <memory>
#include <random>

namespace support {

using pminres::Point;
using pminres::Vector;

struct Spaces {
  std::shared_ptr<const pminres::Mesh> mesh;
  std::shared_ptr<const pminres::DofMap> trial;
  std::shared_ptr<const pminres::DofMap> test;
};

/// P1 trial space with the given Dirichlet data, CR test space.
Spaces make_spaces(const pminres::Mesh& m, const std::function<double(Point)>& g = {});

/// unit_square_mesh(n) with vertices jittered by up to `amount` * h, boundary
/// vertices kept on the boundary.
pminres::Mesh jittered_square(int n, double amount, std::mt19937_64& rng);

/// Complete P1 vector: boundary values from the space, random interior.
Vector random_trial(const pminres::DofMap& trial, std::mt19937_64& rng, double scale = 1.0);
/// Complete CR vector, zero on boundary edges.
Vector random_test(const pminres::DofMap& test, std::mt19937_64& rng, double scale = 1.0);

/// Standard P1 Galerkin solution of -lap u = f, u = g on the boundary, from
/// an element loop written here with a Cholesky solve. Complete vector.
Vector galerkin_poisson(const pminres::DofMap& trial, const std::function<double(Point)>& f, int quad_degree);

/// W^{1,2} seminorm of a P1 function, by direct element loop.
double p1_h1_seminorm(const pminres::Mesh& m, const Vector& u);

/// Gaussian elimination with partial pivoting on a dense copy.
Eigen::VectorXd dense_solve(Eigen::MatrixXd a, Eigen::VectorXd b);

/// -div(|grad u|^(p-2) grad u) at x from nested centered differences of the
/// exact solution's value (flux from differences of u, divergence from
/// differences of the flux).
double fd_p_laplacian(const pminres::ExactSolution& es, Point x, double h_outer, double h_inner);

/// (int over the unit square of |d_x u|^p + |d_y u|^p)^(1/p) for the exact
/// solution with x0 outside or at a corner of the square, as a 1D integral in
/// the polar angle (the radial integral is done in closed form).
double radial_seminorm(const pminres::ExactSolution& es);

/// Continuous-trial pairing int |grad w|^(p-2) grad w . grad v for P1 w and
/// polynomial v given with its gradient, using an element quadrature rule.
double continuous_pairing(const pminres::DofMap& trial, const Vector& w, double p,
                          const std::function<Point(Point)>& grad_v, int quad_degree);

// Property checks. Each returns the worst observed value so callers can
// report it; `instances` random instances are drawn from `seed`.
struct PropertyResult {
  int instances = 0;
  double worst = 0.0;  ///< meaning depends on the property, see each function
  bool ok = false;
};

/// min over instances of <A(u) - A(w), embed(u - w)> / |u - w|^p (must stay > 0).
PropertyResult check_monotonicity(const std::vector<double>& ps, int instances, std::uint64_t seed);
/// max relative defect of <J(r), r> = |r|^p and of J(lambda r) = lambda|lambda|^(p-2) J(r).
PropertyResult check_duality(const std::vector<double>& ps, int instances, std::uint64_t seed,
                             double* worst_homogeneity = nullptr);
/// max |<A(w), v - Pi v>| for random P1 w and polynomial bubbles v.
PropertyResult check_fortin(const std::vector<double>& ps, int instances, std::uint64_t seed);
/// max relative centered-difference defect of dA and dJ.
PropertyResult check_jacobians(const std::vector<double>& ps, int instances, std::uint64_t seed);
/// max relative defect of the manufactured load at random points.
PropertyResult check_manufactured(double p, double sigma, Point x0, int points, std::uint64_t seed);

}  // namespace support
