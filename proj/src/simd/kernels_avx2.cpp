// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "polyirl/simd/kernels.hpp"

namespace polyirl::simd {

namespace {

// exp(x) for x in (-708, 0], Cephes rational approximation (~1 ulp).
// Lanes at or below -708 are returned as 0.
inline __m256d exp_nonpositive(__m256d x) {
  const __m256d live = _mm256_cmp_pd(x, _mm256_set1_pd(-708.0), _CMP_GT_OQ);
  x = _mm256_max_pd(x, _mm256_set1_pd(-708.0));

  const __m256d n = _mm256_floor_pd(_mm256_fmadd_pd(x, _mm256_set1_pd(1.4426950408889634073599), _mm256_set1_pd(0.5)));
  x = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125e-1), x);
  x = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212e-6), x);

  const __m256d xx = _mm256_mul_pd(x, x);
  __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
  p = _mm256_fmadd_pd(p, xx, _mm256_set1_pd(3.02994407707441961300e-2));
  p = _mm256_fmadd_pd(p, xx, _mm256_set1_pd(9.99999999999999999910e-1));
  p = _mm256_mul_pd(p, x);

  __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(2.52448340349684104192e-3));
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(2.27265548208155028766e-1));
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(2.00000000000000000009e0));

  __m256d r = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  r = _mm256_fmadd_pd(r, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

  // 2^n for n in [-1022, 0]: biased exponent lands in the low mantissa bits
  // after adding 2^52 + 1023, then shifts into the exponent field.
  const __m256d biased = _mm256_add_pd(n, _mm256_set1_pd(4503599627370496.0 + 1023.0));
  const __m256d pow2 = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_castpd_si256(biased), 52));
  return _mm256_and_pd(_mm256_mul_pd(r, pow2), live);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

void squared_distances_avx2(const double* const* cols, std::size_t dims, std::size_t n, const double* query,
                            double* out) {
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < dims; ++k) {
      const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(cols[k] + j), _mm256_set1_pd(query[k]));
      acc = _mm256_fmadd_pd(diff, diff, acc);
    }
    _mm256_storeu_pd(out + j, acc);
  }
  for (; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < dims; ++k) {
      const double diff = cols[k][j] - query[k];
      acc += diff * diff;
    }
    out[j] = acc;
  }
}

double log_sum_exp_avx2(const double* x, const double* bias, std::size_t n, double scale) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const __m256d vscale = _mm256_set1_pd(scale);
  auto value = [&](std::size_t j) {
    const __m256d b = bias ? _mm256_loadu_pd(bias + j) : _mm256_setzero_pd();
    return _mm256_fmadd_pd(vscale, _mm256_loadu_pd(x + j), b);
  };
  auto value_scalar = [&](std::size_t j) { return scale * x[j] + (bias ? bias[j] : 0.0); };

  double top = kNegInf;
  std::size_t j = 0;
  if (n >= 4) {
    __m256d vmax = _mm256_set1_pd(kNegInf);
    for (; j + 4 <= n; j += 4) vmax = _mm256_max_pd(vmax, value(j));
    top = hmax(vmax);
  }
  for (; j < n; ++j) top = std::fmax(top, value_scalar(j));
  if (top == kNegInf) return kNegInf;

  const __m256d vtop = _mm256_set1_pd(top);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  j = 0;
  for (; j + 8 <= n; j += 8) {
    acc0 = _mm256_add_pd(acc0, exp_nonpositive(_mm256_sub_pd(value(j), vtop)));
    acc1 = _mm256_add_pd(acc1, exp_nonpositive(_mm256_sub_pd(value(j + 4), vtop)));
  }
  for (; j + 4 <= n; j += 4) acc0 = _mm256_add_pd(acc0, exp_nonpositive(_mm256_sub_pd(value(j), vtop)));
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; j < n; ++j) {
    const double v = value_scalar(j) - top;
    if (v > -708.0) sum += std::exp(v);
  }
  return top + std::log(sum);
}

}  // namespace

const KernelSet* avx2_kernels() {
  static const KernelSet set{Isa::Avx2, "avx2", &squared_distances_avx2, &log_sum_exp_avx2};
  return &set;
}

}  // namespace polyirl::simd
