#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"
#include "sagnac/simd/kernels.hpp"

namespace sagnac::simd {

namespace {

constexpr KernelTable kScalar{detail::advance_to_scalar, detail::first_unsorted_scalar,
                              detail::accumulate_deltas_scalar};

#if defined(SAGNAC_HAVE_AVX2)
constexpr KernelTable kAvx2{detail::advance_to_avx2, detail::first_unsorted_avx2, detail::accumulate_deltas_avx2};
#endif

// -1: not decided yet.
std::atomic<int> g_forced{-1};

Isa detect() {
  if (const char* env = std::getenv("SAGNAC_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && cpu_supports(Isa::avx2)) return Isa::avx2;
  }
  return cpu_supports(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

const KernelTable& scalar_kernels() { return kScalar; }

const KernelTable* avx2_kernels() {
#if defined(SAGNAC_HAVE_AVX2)
  return &kAvx2;
#else
  return nullptr;
#endif
}

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(SAGNAC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() {
  int f = g_forced.load(std::memory_order_relaxed);
  if (f < 0) {
    f = static_cast<int>(detect());
    g_forced.store(f, std::memory_order_relaxed);
  }
  return static_cast<Isa>(f);
}

void force_isa(Isa isa) {
  if (!cpu_supports(isa)) return;
  g_forced.store(static_cast<int>(isa), std::memory_order_relaxed);
}

void reset_isa() { g_forced.store(static_cast<int>(detect()), std::memory_order_relaxed); }

const KernelTable& kernels(Isa isa) {
  if (isa == Isa::avx2 && cpu_supports(Isa::avx2)) return *avx2_kernels();
  return kScalar;
}

const KernelTable& kernels() { return kernels(active_isa()); }

}  // namespace sagnac::simd
