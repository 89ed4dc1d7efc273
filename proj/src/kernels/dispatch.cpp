#include "kernels_impl.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace pminres::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(PMINRES_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Table* initial_table() {
  const char* env = std::getenv("PMINRES_KERNELS");
  const std::string choice = env ? env : "auto";
  if (choice == "scalar") return &scalar_table();
  if (choice == "avx2") {
    if (const Table* t = avx2_table()) return t;
    throw std::runtime_error("PMINRES_KERNELS=avx2 requested but AVX2 is unavailable");
  }
  if (choice != "auto") throw std::runtime_error("PMINRES_KERNELS: unknown backend '" + choice + "'");
  if (const Table* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> table{initial_table()};
  return table;
}

void check_sizes(std::size_t n, std::initializer_list<std::size_t> others) {
  for (std::size_t m : others) {
    if (m != n) throw std::invalid_argument("kernels: span size mismatch");
  }
}

}  // namespace

const Table& scalar_table() { return detail::kScalarTable; }

const Table* avx2_table() {
#if defined(PMINRES_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &detail::kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

bool available(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
      return avx2_table() != nullptr;
  }
  return false;
}

const Table& active() { return *current().load(std::memory_order_acquire); }

void select(Backend b) {
  const Table* t = b == Backend::Scalar ? &scalar_table() : avx2_table();
  if (!t) throw std::runtime_error("kernels: backend " + std::string(backend_name(b)) + " unavailable");
  current().store(t, std::memory_order_release);
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "unknown";
}

void euclidean_flux(double p, std::span<const double> gx, std::span<const double> gy,
                    std::span<const double> w, std::span<double> fx, std::span<double> fy) {
  check_sizes(gx.size(), {gy.size(), w.size(), fx.size(), fy.size()});
  active().euclidean_flux(p, gx.data(), gy.data(), w.data(), fx.data(), fy.data(), gx.size());
}

void componentwise_flux(double p, std::span<const double> gx, std::span<const double> gy,
                        std::span<const double> w, std::span<double> fx, std::span<double> fy) {
  check_sizes(gx.size(), {gy.size(), w.size(), fx.size(), fy.size()});
  active().componentwise_flux(p, gx.data(), gy.data(), w.data(), fx.data(), fy.data(), gx.size());
}

void componentwise_power(double p, std::span<const double> gx, std::span<const double> gy,
                         std::span<const double> w, std::span<double> out) {
  check_sizes(gx.size(), {gy.size(), w.size(), out.size()});
  active().componentwise_power(p, gx.data(), gy.data(), w.data(), out.data(), gx.size());
}

void euclidean_jacobian(double p, double eps, std::span<const double> gx,
                        std::span<const double> gy, std::span<const double> w,
                        std::span<double> mu, std::span<double> beta) {
  check_sizes(gx.size(), {gy.size(), w.size(), mu.size(), beta.size()});
  active().euclidean_jacobian(p, eps, gx.data(), gy.data(), w.data(), mu.data(), beta.data(),
                              gx.size());
}

void componentwise_jacobian(double p, double eps, std::span<const double> gx,
                            std::span<const double> gy, std::span<const double> w,
                            std::span<double> dx, std::span<double> dy) {
  check_sizes(gx.size(), {gy.size(), w.size(), dx.size(), dy.size()});
  active().componentwise_jacobian(p, eps, gx.data(), gy.data(), w.data(), dx.data(), dy.data(),
                                  gx.size());
}

}  // namespace pminres::kernels
