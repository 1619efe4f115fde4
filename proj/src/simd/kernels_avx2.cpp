#include <immintrin.h>

#include <bit>
#include <limits>

#include "kernels_impl.hpp"

namespace sagnac::simd::detail {

namespace {

inline __m256i load4(const std::int64_t* p) { return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p)); }

inline unsigned lane_mask(__m256i m) { return static_cast<unsigned>(_mm256_movemask_pd(_mm256_castsi256_pd(m))); }

}  // namespace

std::size_t advance_to_avx2(const std::int64_t* tags, std::size_t first, std::size_t n, std::int64_t value) {
  std::size_t k = first;
  // Short hops are the common case; try scalar first.
  for (int i = 0; i < 4 && k < n; ++i, ++k)
    if (tags[k] >= value) return k;
  const __m256i v = _mm256_set1_epi64x(value);
  for (; k + 8 <= n; k += 8) {
    // lanes with tags < value
    const unsigned lo = lane_mask(_mm256_cmpgt_epi64(v, load4(tags + k)));
    const unsigned hi = lane_mask(_mm256_cmpgt_epi64(v, load4(tags + k + 4)));
    const unsigned below = lo | (hi << 4);
    if (below != 0xFFu) return k + static_cast<std::size_t>(std::countr_one(below));
  }
  for (; k + 4 <= n; k += 4) {
    const unsigned below = lane_mask(_mm256_cmpgt_epi64(v, load4(tags + k)));
    if (below != 0xFu) return k + static_cast<std::size_t>(std::countr_one(below));
  }
  return advance_to_scalar(tags, k, n, value);
}

std::size_t first_unsorted_avx2(const std::int64_t* tags, std::size_t n) {
  std::size_t k = 1;
  for (; k + 4 <= n; k += 4) {
    const unsigned m = lane_mask(_mm256_cmpgt_epi64(load4(tags + k - 1), load4(tags + k)));
    if (m) return k + static_cast<std::size_t>(std::countr_zero(m));
  }
  for (; k < n; ++k)
    if (tags[k] < tags[k - 1]) return k;
  return n;
}

std::size_t accumulate_deltas_avx2(const std::int64_t* tags, std::size_t first, std::size_t n, std::int64_t ref,
                                   std::int64_t lo, std::int64_t bin, std::int64_t nbins, std::int64_t* counts) {
  const std::int64_t span = nbins * bin;
  if (span >= std::numeric_limits<std::int32_t>::max() || bin <= 0)
    return accumulate_deltas_scalar(tags, first, n, ref, lo, bin, nbins, counts);

  const __m256i origin = _mm256_set1_epi64x(ref + lo);
  const __m256i span_v = _mm256_set1_epi64x(span);
  const __m256i minus_one = _mm256_set1_epi64x(-1);
  const __m256i low_halves = _mm256_setr_epi32(0, 2, 4, 6, 0, 2, 4, 6);
  const __m256d inv_bin = _mm256_set1_pd(1.0 / static_cast<double>(bin));

  std::size_t k = first;
  alignas(32) std::int64_t x[4];
  alignas(16) std::int32_t q[4];
  for (; k + 4 <= n; k += 4) {
    __m256i d = _mm256_sub_epi64(load4(tags + k), origin);
    if (lane_mask(_mm256_cmpgt_epi64(span_v, d)) != 0xFu) break;  // some lane past the range
    // Negative lanes -> -1 so the int32 narrowing below is exact.
    d = _mm256_blendv_epi8(d, minus_one, _mm256_cmpgt_epi64(_mm256_setzero_si256(), d));
    _mm256_store_si256(reinterpret_cast<__m256i*>(x), d);
    const __m128i d32 = _mm256_castsi256_si128(_mm256_permutevar8x32_epi32(d, low_halves));
    const __m256d qd = _mm256_floor_pd(_mm256_mul_pd(_mm256_cvtepi32_pd(d32), inv_bin));
    _mm_store_si128(reinterpret_cast<__m128i*>(q), _mm256_cvttpd_epi32(qd));
    for (int lane = 0; lane < 4; ++lane) {
      if (x[lane] < 0) continue;
      std::int64_t b = q[lane];
      // The reciprocal product can be off by one near bin edges.
      if (b * bin > x[lane]) --b;
      else if ((b + 1) * bin <= x[lane]) ++b;
      ++counts[b];
    }
  }
  return accumulate_deltas_scalar(tags, k, n, ref, lo, bin, nbins, counts);
}

}  // namespace sagnac::simd::detail
