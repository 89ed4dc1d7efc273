#include "kernels_impl.hpp"

#include <cmath>

namespace pminres::kernels::detail {

namespace {

void euclidean_flux(double p, const double* gx, const double* gy, const double* w, double* fx,
                    double* fy, std::size_t n) {
  const double half = 0.5 * (p - 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = gx[i] * gx[i] + gy[i] * gy[i];
    const double c = s > 0.0 ? w[i] * std::pow(s, half) : 0.0;
    fx[i] = c * gx[i];
    fy[i] = c * gy[i];
  }
}

double signed_power(double g, double q) {
  // sign(g) |g|^q
  if (g == 0.0) return 0.0;
  const double a = std::pow(std::abs(g), q);
  return g > 0.0 ? a : -a;
}

void componentwise_flux(double p, const double* gx, const double* gy, const double* w, double* fx,
                        double* fy, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    fx[i] = w[i] * signed_power(gx[i], p - 1.0);
    fy[i] = w[i] * signed_power(gy[i], p - 1.0);
  }
}

void componentwise_power(double p, const double* gx, const double* gy, const double* w,
                         double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = w[i] * (std::pow(std::abs(gx[i]), p) + std::pow(std::abs(gy[i]), p));
  }
}

double regularized_weight(double s, double half, double p) {
  if (s > 0.0) return std::pow(s, half);
  // Zero gradient without regularization: the weight is 1 for p = 2, 0 for
  // p > 2 and unbounded for p < 2, where zero is returned.
  return p == 2.0 ? 1.0 : 0.0;
}

void euclidean_jacobian(double p, double eps, const double* gx, const double* gy, const double* w,
                        double* mu, double* beta, std::size_t n) {
  const double half = 0.5 * (p - 2.0);
  const double e2 = eps * eps;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = gx[i] * gx[i] + gy[i] * gy[i] + e2;
    mu[i] = w[i] * regularized_weight(s, half, p);
    beta[i] = s > 0.0 ? (p - 2.0) / s : 0.0;
  }
}

void componentwise_jacobian(double p, double eps, const double* gx, const double* gy,
                            const double* w, double* dx, double* dy, std::size_t n) {
  const double half = 0.5 * (p - 2.0);
  const double e2 = eps * eps;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = w[i] * (p - 1.0);
    dx[i] = c * regularized_weight(gx[i] * gx[i] + e2, half, p);
    dy[i] = c * regularized_weight(gy[i] * gy[i] + e2, half, p);
  }
}

}  // namespace

const Table kScalarTable{Backend::Scalar,     "scalar",           &euclidean_flux,
                         &componentwise_flux, &componentwise_power, &euclidean_jacobian,
                         &componentwise_jacobian};

}  // namespace pminres::kernels::detail
