#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Elementwise nonlinear flux and weight kernels.
//
// Every kernel maps per-element (or per-quadrature-point) gradient components
// gx, gy and a weight w (element area or quadrature weight) to per-entry
// outputs. No kernel reduces across entries, so the choice of backend only
// affects the last bits of each output.

namespace pminres::kernels {

enum class Backend { Scalar, Avx2 };

struct Table {
  Backend backend;
  const char* name;

  // f = w |g|^(p-2) g  (Euclidean norm; zero where g = 0)
  void (*euclidean_flux)(double p, const double* gx, const double* gy, const double* w, double* fx,
                         double* fy, std::size_t n);
  // f_k = w |g_k|^(p-2) g_k
  void (*componentwise_flux)(double p, const double* gx, const double* gy, const double* w,
                             double* fx, double* fy, std::size_t n);
  // out = w (|gx|^p + |gy|^p)
  void (*componentwise_power)(double p, const double* gx, const double* gy, const double* w,
                              double* out, std::size_t n);
  // mu = w (|g|^2 + eps^2)^((p-2)/2),  beta = (p-2) / (|g|^2 + eps^2)
  void (*euclidean_jacobian)(double p, double eps, const double* gx, const double* gy,
                             const double* w, double* mu, double* beta, std::size_t n);
  // d_k = w (p-1) (g_k^2 + eps^2)^((p-2)/2)
  void (*componentwise_jacobian)(double p, double eps, const double* gx, const double* gy,
                                 const double* w, double* dx, double* dy, std::size_t n);
};

const Table& scalar_table();
/// Null when the library was built without AVX2 support or the CPU lacks
/// AVX2/FMA.
const Table* avx2_table();

bool available(Backend b);
/// Backend used by the span wrappers below. Chosen on first use: the
/// PMINRES_KERNELS environment variable (scalar, avx2, auto) if set, else the
/// widest available backend.
const Table& active();
/// Throws std::runtime_error when `b` is unavailable.
void select(Backend b);
std::string_view backend_name(Backend b);

void euclidean_flux(double p, std::span<const double> gx, std::span<const double> gy,
                    std::span<const double> w, std::span<double> fx, std::span<double> fy);
void componentwise_flux(double p, std::span<const double> gx, std::span<const double> gy,
                        std::span<const double> w, std::span<double> fx, std::span<double> fy);
void componentwise_power(double p, std::span<const double> gx, std::span<const double> gy,
                         std::span<const double> w, std::span<double> out);
void euclidean_jacobian(double p, double eps, std::span<const double> gx,
                        std::span<const double> gy, std::span<const double> w,
                        std::span<double> mu, std::span<double> beta);
void componentwise_jacobian(double p, double eps, std::span<const double> gx,
                            std::span<const double> gy, std::span<const double> w,
                            std::span<double> dx, std::span<double> dy);

}  // namespace pminres::kernels
