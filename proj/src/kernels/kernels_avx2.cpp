// Built with -mavx2 -mfma. Only reached through the dispatch table after a
// runtime CPU check.

#include "kernels_impl.hpp"

#include <immintrin.h>

#include <cstdint>

namespace pminres::kernels::detail {

namespace {

constexpr std::size_t kLanes = 4;

inline __m256d set1(double v) { return _mm256_set1_pd(v); }

inline __m256d abs_pd(__m256d x) {
  return _mm256_andnot_pd(set1(-0.0), x);
}

// Copies the sign of `s` onto the non-negative `mag`.
inline __m256d with_sign(__m256d mag, __m256d s) {
  return _mm256_or_pd(mag, _mm256_and_pd(s, set1(-0.0)));
}

// exp(x) for x in [-700, 700].
inline __m256d exp_pd(__m256d x) {
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, set1(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, set1(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(n, set1(1.90821492927058770002e-10), r);

  // Taylor polynomial of degree 13 on |r| <= ln(2)/2.
  __m256d poly = set1(1.0 / 6227020800.0);
  poly = _mm256_fmadd_pd(poly, r, set1(1.0 / 479001600.0));
  poly = _mm256_fmadd_pd(poly, r, set1(1.0 / 39916800.0));
  poly = _mm256_fmadd_pd(poly, r, set1(1.0 / 3628800.0));
  poly = _mm256_fmadd_pd(poly, r, set1(1.0 / 362880.0));
  poly = _mm256_fmadd_pd(poly, r, set1(1.0 / 40320.0));
  poly = _mm256_fmadd_pd(poly, r, set1(1.0 / 5040.0));
  poly = _mm256_fmadd_pd(poly, r, set1(1.0 / 720.0));
  poly = _mm256_fmadd_pd(poly, r, set1(1.0 / 120.0));
  poly = _mm256_fmadd_pd(poly, r, set1(1.0 / 24.0));
  poly = _mm256_fmadd_pd(poly, r, set1(1.0 / 6.0));
  poly = _mm256_fmadd_pd(poly, r, set1(0.5));
  poly = _mm256_fmadd_pd(poly, r, set1(1.0));
  poly = _mm256_fmadd_pd(poly, r, set1(1.0));

  // 2^n assembled in the exponent field.
  const __m256d biased = _mm256_add_pd(n, set1(4503599627370496.0 + 1023.0));
  const __m256i bits = _mm256_slli_epi64(_mm256_castpd_si256(biased), 52);
  return _mm256_mul_pd(poly, _mm256_castsi256_pd(bits));
}

// Natural log for normal positive x.
inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i magic = _mm256_set1_epi64x(0x4330000000000000LL);
  const __m256i exp_bits = _mm256_or_si256(_mm256_srli_epi64(bits, 52), magic);
  __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(exp_bits), set1(4503599627370496.0 + 1023.0));

  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));

  // Fold m into [sqrt(1/2), sqrt(2)].
  const __m256d big = _mm256_cmp_pd(m, set1(1.4142135623730951), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, set1(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, set1(1.0)));

  // log(m) = 2 atanh(s), s = (m - 1) / (m + 1), |s| <= 0.1716.
  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, set1(1.0)), _mm256_add_pd(m, set1(1.0)));
  const __m256d s2 = _mm256_mul_pd(s, s);
  __m256d poly = set1(1.0 / 21.0);
  poly = _mm256_fmadd_pd(poly, s2, set1(1.0 / 19.0));
  poly = _mm256_fmadd_pd(poly, s2, set1(1.0 / 17.0));
  poly = _mm256_fmadd_pd(poly, s2, set1(1.0 / 15.0));
  poly = _mm256_fmadd_pd(poly, s2, set1(1.0 / 13.0));
  poly = _mm256_fmadd_pd(poly, s2, set1(1.0 / 11.0));
  poly = _mm256_fmadd_pd(poly, s2, set1(1.0 / 9.0));
  poly = _mm256_fmadd_pd(poly, s2, set1(1.0 / 7.0));
  poly = _mm256_fmadd_pd(poly, s2, set1(1.0 / 5.0));
  poly = _mm256_fmadd_pd(poly, s2, set1(1.0 / 3.0));
  poly = _mm256_fmadd_pd(poly, s2, set1(1.0));
  const __m256d log_m = _mm256_mul_pd(_mm256_add_pd(s, s), poly);

  const __m256d lo = _mm256_fmadd_pd(e, set1(1.90821492927058770002e-10), log_m);
  return _mm256_fmadd_pd(e, set1(6.93147180369123816490e-01), lo);
}

// base^y when every lane of `base` is a positive normal number and
// |y log(base)| stays inside the exp_pd range; false otherwise (NaN fails the
// ordered comparisons).
inline bool try_pow(__m256d base, double y, __m256d& out) {
  const __m256d ok_lo = _mm256_cmp_pd(base, set1(2.2250738585072014e-308), _CMP_GE_OQ);
  const __m256d ok_hi = _mm256_cmp_pd(base, set1(1.7976931348623157e308), _CMP_LE_OQ);
  if (_mm256_movemask_pd(_mm256_and_pd(ok_lo, ok_hi)) != 0xF) return false;
  const __m256d t = _mm256_mul_pd(set1(y), log_pd(base));
  if (_mm256_movemask_pd(_mm256_cmp_pd(abs_pd(t), set1(700.0), _CMP_LE_OQ)) != 0xF) return false;
  out = exp_pd(t);
  return true;
}

void euclidean_flux(double p, const double* gx, const double* gy, const double* w, double* fx,
                    double* fy, std::size_t n) {
  const double half = 0.5 * (p - 2.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d x = _mm256_loadu_pd(gx + i);
    const __m256d y = _mm256_loadu_pd(gy + i);
    const __m256d s = _mm256_fmadd_pd(x, x, _mm256_mul_pd(y, y));
    __m256d ps;
    if (!try_pow(s, half, ps)) {
      kScalarTable.euclidean_flux(p, gx + i, gy + i, w + i, fx + i, fy + i, kLanes);
      continue;
    }
    const __m256d c = _mm256_mul_pd(_mm256_loadu_pd(w + i), ps);
    _mm256_storeu_pd(fx + i, _mm256_mul_pd(c, x));
    _mm256_storeu_pd(fy + i, _mm256_mul_pd(c, y));
  }
  kScalarTable.euclidean_flux(p, gx + i, gy + i, w + i, fx + i, fy + i, n - i);
}

void componentwise_flux(double p, const double* gx, const double* gy, const double* w, double* fx,
                        double* fy, std::size_t n) {
  const double q = p - 1.0;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d x = _mm256_loadu_pd(gx + i);
    const __m256d y = _mm256_loadu_pd(gy + i);
    const __m256d ax = abs_pd(x);
    const __m256d ay = abs_pd(y);
    __m256d px, py;
    if (!try_pow(ax, q, px) || !try_pow(ay, q, py)) {
      kScalarTable.componentwise_flux(p, gx + i, gy + i, w + i, fx + i, fy + i, kLanes);
      continue;
    }
    const __m256d wt = _mm256_loadu_pd(w + i);
    _mm256_storeu_pd(fx + i, _mm256_mul_pd(wt, with_sign(px, x)));
    _mm256_storeu_pd(fy + i, _mm256_mul_pd(wt, with_sign(py, y)));
  }
  kScalarTable.componentwise_flux(p, gx + i, gy + i, w + i, fx + i, fy + i, n - i);
}

void componentwise_power(double p, const double* gx, const double* gy, const double* w,
                         double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d ax = abs_pd(_mm256_loadu_pd(gx + i));
    const __m256d ay = abs_pd(_mm256_loadu_pd(gy + i));
    __m256d px, py;
    if (!try_pow(ax, p, px) || !try_pow(ay, p, py)) {
      kScalarTable.componentwise_power(p, gx + i, gy + i, w + i, out + i, kLanes);
      continue;
    }
    const __m256d sum = _mm256_add_pd(px, py);
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(w + i), sum));
  }
  kScalarTable.componentwise_power(p, gx + i, gy + i, w + i, out + i, n - i);
}

void euclidean_jacobian(double p, double eps, const double* gx, const double* gy, const double* w,
                        double* mu, double* beta, std::size_t n) {
  const double half = 0.5 * (p - 2.0);
  const __m256d e2 = set1(eps * eps);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d x = _mm256_loadu_pd(gx + i);
    const __m256d y = _mm256_loadu_pd(gy + i);
    const __m256d s = _mm256_add_pd(_mm256_fmadd_pd(x, x, _mm256_mul_pd(y, y)), e2);
    __m256d ps;
    if (!try_pow(s, half, ps)) {
      kScalarTable.euclidean_jacobian(p, eps, gx + i, gy + i, w + i, mu + i, beta + i, kLanes);
      continue;
    }
    _mm256_storeu_pd(mu + i, _mm256_mul_pd(_mm256_loadu_pd(w + i), ps));
    _mm256_storeu_pd(beta + i, _mm256_div_pd(set1(p - 2.0), s));
  }
  kScalarTable.euclidean_jacobian(p, eps, gx + i, gy + i, w + i, mu + i, beta + i, n - i);
}

void componentwise_jacobian(double p, double eps, const double* gx, const double* gy,
                            const double* w, double* dx, double* dy, std::size_t n) {
  const double half = 0.5 * (p - 2.0);
  const __m256d e2 = set1(eps * eps);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d x = _mm256_loadu_pd(gx + i);
    const __m256d y = _mm256_loadu_pd(gy + i);
    const __m256d sx = _mm256_fmadd_pd(x, x, e2);
    const __m256d sy = _mm256_fmadd_pd(y, y, e2);
    __m256d px, py;
    if (!try_pow(sx, half, px) || !try_pow(sy, half, py)) {
      kScalarTable.componentwise_jacobian(p, eps, gx + i, gy + i, w + i, dx + i, dy + i, kLanes);
      continue;
    }
    const __m256d c = _mm256_mul_pd(_mm256_loadu_pd(w + i), set1(p - 1.0));
    _mm256_storeu_pd(dx + i, _mm256_mul_pd(c, px));
    _mm256_storeu_pd(dy + i, _mm256_mul_pd(c, py));
  }
  kScalarTable.componentwise_jacobian(p, eps, gx + i, gy + i, w + i, dx + i, dy + i, n - i);
}

}  // namespace

const Table kAvx2Table{Backend::Avx2,       "avx2",           &euclidean_flux,
                       &componentwise_flux, &componentwise_power, &euclidean_jacobian,
                       &componentwise_jacobian};

}  // namespace pminres::kernels::detail
