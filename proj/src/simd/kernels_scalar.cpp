#include <cmath>
#include <limits>

#include "polyirl/simd/kernels.hpp"

namespace polyirl::simd {

namespace {

void squared_distances_scalar(const double* const* cols, std::size_t dims, std::size_t n, const double* query,
                              double* out) {
  for (std::size_t j = 0; j < n; ++j) out[j] = 0.0;
  for (std::size_t k = 0; k < dims; ++k) {
    const double* col = cols[k];
    const double q = query[k];
    for (std::size_t j = 0; j < n; ++j) {
      const double diff = col[j] - q;
      out[j] += diff * diff;
    }
  }
}

double log_sum_exp_scalar(const double* x, const double* bias, std::size_t n, double scale) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double top = kNegInf;
  for (std::size_t j = 0; j < n; ++j) {
    const double v = scale * x[j] + (bias ? bias[j] : 0.0);
    if (v > top) top = v;
  }
  if (top == kNegInf) return kNegInf;

  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double v = scale * x[j] + (bias ? bias[j] : 0.0) - top;
    if (v > -708.0) sum += std::exp(v);
  }
  return top + std::log(sum);
}

}  // namespace

const KernelSet& scalar_kernels() {
  static const KernelSet set{Isa::Scalar, "scalar", &squared_distances_scalar, &log_sum_exp_scalar};
  return set;
}

}  // namespace polyirl::simd
