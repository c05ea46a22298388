// AArch64 only; Advanced SIMD is part of the base ISA there.

#include <arm_neon.h>

#include <cmath>
#include <limits>

#include "polyirl/simd/kernels.hpp"

namespace polyirl::simd {

namespace {

// Same range reduction and rational approximation as the AVX2 variant.
inline float64x2_t exp_nonpositive(float64x2_t x) {
  const uint64x2_t live = vcgtq_f64(x, vdupq_n_f64(-708.0));
  x = vmaxq_f64(x, vdupq_n_f64(-708.0));

  const float64x2_t n = vrndmq_f64(vfmaq_f64(vdupq_n_f64(0.5), x, vdupq_n_f64(1.4426950408889634073599)));
  x = vfmsq_f64(x, n, vdupq_n_f64(6.93145751953125e-1));
  x = vfmsq_f64(x, n, vdupq_n_f64(1.42860682030941723212e-6));

  const float64x2_t xx = vmulq_f64(x, x);
  float64x2_t p = vdupq_n_f64(1.26177193074810590878e-4);
  p = vfmaq_f64(vdupq_n_f64(3.02994407707441961300e-2), p, xx);
  p = vfmaq_f64(vdupq_n_f64(9.99999999999999999910e-1), p, xx);
  p = vmulq_f64(p, x);

  float64x2_t q = vdupq_n_f64(3.00198505138664455042e-6);
  q = vfmaq_f64(vdupq_n_f64(2.52448340349684104192e-3), q, xx);
  q = vfmaq_f64(vdupq_n_f64(2.27265548208155028766e-1), q, xx);
  q = vfmaq_f64(vdupq_n_f64(2.00000000000000000009e0), q, xx);

  float64x2_t r = vdivq_f64(p, vsubq_f64(q, p));
  r = vfmaq_f64(vdupq_n_f64(1.0), r, vdupq_n_f64(2.0));

  const int64x2_t biased = vaddq_s64(vcvtq_s64_f64(n), vdupq_n_s64(1023));
  const float64x2_t pow2 = vreinterpretq_f64_s64(vshlq_n_s64(biased, 52));
  const float64x2_t out = vmulq_f64(r, pow2);
  return vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(out), live));
}

void squared_distances_neon(const double* const* cols, std::size_t dims, std::size_t n, const double* query,
                            double* out) {
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t k = 0; k < dims; ++k) {
      const float64x2_t diff = vsubq_f64(vld1q_f64(cols[k] + j), vdupq_n_f64(query[k]));
      acc = vfmaq_f64(acc, diff, diff);
    }
    vst1q_f64(out + j, acc);
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

double log_sum_exp_neon(const double* x, const double* bias, std::size_t n, double scale) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const float64x2_t vscale = vdupq_n_f64(scale);
  auto value = [&](std::size_t j) {
    const float64x2_t b = bias ? vld1q_f64(bias + j) : vdupq_n_f64(0.0);
    return vfmaq_f64(b, vscale, vld1q_f64(x + j));
  };
  auto value_scalar = [&](std::size_t j) { return scale * x[j] + (bias ? bias[j] : 0.0); };

  double top = kNegInf;
  std::size_t j = 0;
  if (n >= 2) {
    float64x2_t vmax = vdupq_n_f64(kNegInf);
    for (; j + 2 <= n; j += 2) vmax = vmaxq_f64(vmax, value(j));
    top = vmaxvq_f64(vmax);
  }
  for (; j < n; ++j) top = std::fmax(top, value_scalar(j));
  if (top == kNegInf) return kNegInf;

  const float64x2_t vtop = vdupq_n_f64(top);
  float64x2_t acc = vdupq_n_f64(0.0);
  j = 0;
  for (; j + 2 <= n; j += 2) acc = vaddq_f64(acc, exp_nonpositive(vsubq_f64(value(j), vtop)));
  double sum = vaddvq_f64(acc);
  for (; j < n; ++j) {
    const double v = value_scalar(j) - top;
    if (v > -708.0) sum += std::exp(v);
  }
  return top + std::log(sum);
}

}  // namespace

const KernelSet* neon_kernels() {
  static const KernelSet set{Isa::Neon, "neon", &squared_distances_neon, &log_sum_exp_neon};
  return &set;
}

}  // namespace polyirl::simd
