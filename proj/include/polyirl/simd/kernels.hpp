#pragma once

// Data-parallel inner loops shared by the density estimator and the transport
// solvers. Every kernel has a scalar reference implementation; vectorized
// variants are selected at runtime and must agree with it to rounding error.

#include <cstddef>
#include <span>
#include <string_view>

namespace polyirl::simd {

enum class Isa { Scalar, Avx2, Neon };

struct KernelSet {
  Isa isa;
  std::string_view name;

  // out[j] = sum_k (cols[k][j] - query[k])^2 for j in [0, n). Columns are
  // structure-of-arrays: cols[k] points at n contiguous values of coordinate k.
  void (*squared_distances)(const double* const* cols, std::size_t dims, std::size_t n, const double* query,
                            double* out);

  // log(sum_j exp(scale * x[j] + bias[j])), bias may be null (treated as 0).
  // Terms more than ~708 nats below the largest contribute nothing. Returns
  // -inf for n == 0 or when the largest exponent is -inf.
  double (*log_sum_exp)(const double* x, const double* bias, std::size_t n, double scale);
};

const KernelSet& scalar_kernels();

// Null when the variant was not compiled into this build.
const KernelSet* avx2_kernels();
const KernelSet* neon_kernels();

// Compiled in and supported by the running CPU.
bool isa_available(Isa isa);
const KernelSet& kernels_for(Isa isa);

// The process-wide selection. Defaults to the best available ISA; the
// POLYIRL_ISA environment variable (scalar|avx2|neon) overrides it.
const KernelSet& active();
void set_active(Isa isa);

std::string_view isa_name(Isa isa);
Isa parse_isa(std::string_view name);

// Span conveniences over the active kernel set.
void squared_distances(std::span<const double* const> cols, std::size_t n, std::span<const double> query,
                       std::span<double> out);
double log_sum_exp(std::span<const double> x, double scale);
double log_sum_exp(std::span<const double> x, std::span<const double> bias, double scale);

}  // namespace polyirl::simd
