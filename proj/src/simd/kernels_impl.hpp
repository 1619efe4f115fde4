#pragma once

#include <cstddef>
#include <cstdint>

namespace sagnac::simd::detail {

std::size_t advance_to_scalar(const std::int64_t* tags, std::size_t first, std::size_t n, std::int64_t value);
std::size_t first_unsorted_scalar(const std::int64_t* tags, std::size_t n);
std::size_t accumulate_deltas_scalar(const std::int64_t* tags, std::size_t first, std::size_t n, std::int64_t ref,
                                     std::int64_t lo, std::int64_t bin, std::int64_t nbins, std::int64_t* counts);

#if defined(SAGNAC_HAVE_AVX2)
std::size_t advance_to_avx2(const std::int64_t* tags, std::size_t first, std::size_t n, std::int64_t value);
std::size_t first_unsorted_avx2(const std::int64_t* tags, std::size_t n);
std::size_t accumulate_deltas_avx2(const std::int64_t* tags, std::size_t first, std::size_t n, std::int64_t ref,
                                   std::int64_t lo, std::int64_t bin, std::int64_t nbins, std::int64_t* counts);
#endif

}  // namespace sagnac::simd::detail
