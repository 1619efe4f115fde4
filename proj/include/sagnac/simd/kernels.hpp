#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace sagnac::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// Inner loops of the time-tag correlator. Every variant must return results
/// identical to the scalar reference.
struct KernelTable {
  /// First index k >= first with tags[k] >= value; tags sorted ascending.
  std::size_t (*advance_to)(const std::int64_t* tags, std::size_t first, std::size_t n, std::int64_t value);
  /// First index k >= 1 with tags[k] < tags[k-1], or n when sorted.
  std::size_t (*first_unsorted)(const std::int64_t* tags, std::size_t n);
  /// For every tag t in [first, n) with lo <= t - ref < lo + nbins*bin, increments
  /// counts[(t - ref - lo) / bin]. Stops at the first tag past the range and
  /// returns its index.
  std::size_t (*accumulate_deltas)(const std::int64_t* tags, std::size_t first, std::size_t n, std::int64_t ref,
                                   std::int64_t lo, std::int64_t bin, std::int64_t nbins, std::int64_t* counts);
};

const KernelTable& scalar_kernels();
/// nullptr when the variant is not compiled in.
const KernelTable* avx2_kernels();

bool cpu_supports(Isa isa);

/// Best available ISA, unless overridden by SAGNAC_SIMD=scalar|avx2 or force_isa().
Isa active_isa();
void force_isa(Isa isa);
void reset_isa();

const KernelTable& kernels();
const KernelTable& kernels(Isa isa);

}  // namespace sagnac::simd
