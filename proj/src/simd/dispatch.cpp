#include <atomic>
#include <cstdlib>
#include <string>

#include "polyirl/error.hpp"
#include "polyirl/simd/kernels.hpp"

namespace polyirl::simd {

#if !POLYIRL_HAS_AVX2
const KernelSet* avx2_kernels() { return nullptr; }
#endif
#if !POLYIRL_HAS_NEON
const KernelSet* neon_kernels() { return nullptr; }
#endif

namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if POLYIRL_HAS_AVX2
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
      return POLYIRL_HAS_NEON != 0;
  }
  return false;
}

const KernelSet* lookup(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &scalar_kernels();
    case Isa::Avx2:
      return avx2_kernels();
    case Isa::Neon:
      return neon_kernels();
  }
  return nullptr;
}

const KernelSet* initial_selection() {
  if (const char* env = std::getenv("POLYIRL_ISA")) {
    const Isa wanted = parse_isa(env);
    if (!isa_available(wanted)) throw ConfigError(std::string("POLYIRL_ISA=") + env + " is not available on this CPU");
    return lookup(wanted);
  }
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (isa_available(isa)) return lookup(isa);
  }
  return &scalar_kernels();
}

std::atomic<const KernelSet*>& selection() {
  static std::atomic<const KernelSet*> current{initial_selection()};
  return current;
}

}  // namespace

bool isa_available(Isa isa) { return lookup(isa) != nullptr && cpu_supports(isa); }

const KernelSet& kernels_for(Isa isa) {
  if (!isa_available(isa)) throw InputError("kernel set '" + std::string(isa_name(isa)) + "' is not available");
  return *lookup(isa);
}

const KernelSet& active() { return *selection().load(std::memory_order_acquire); }

void set_active(Isa isa) { selection().store(&kernels_for(isa), std::memory_order_release); }

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  if (name == "neon") return Isa::Neon;
  throw ConfigError("unknown instruction set '" + std::string(name) + "'");
}

void squared_distances(std::span<const double* const> cols, std::size_t n, std::span<const double> query,
                       std::span<double> out) {
  if (query.size() != cols.size() || out.size() < n) throw InputError("squared_distances: shape mismatch");
  active().squared_distances(cols.data(), cols.size(), n, query.data(), out.data());
}

double log_sum_exp(std::span<const double> x, double scale) {
  return active().log_sum_exp(x.data(), nullptr, x.size(), scale);
}

double log_sum_exp(std::span<const double> x, std::span<const double> bias, double scale) {
  if (bias.size() != x.size()) throw InputError("log_sum_exp: bias length mismatch");
  return active().log_sum_exp(x.data(), bias.data(), x.size(), scale);
}

}  // namespace polyirl::simd
