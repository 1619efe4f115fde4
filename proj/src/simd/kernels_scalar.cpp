#include "kernels_impl.hpp"

namespace sagnac::simd::detail {

std::size_t advance_to_scalar(const std::int64_t* tags, std::size_t first, std::size_t n, std::int64_t value) {
  std::size_t k = first;
  while (k < n && tags[k] < value) ++k;
  return k;
}

std::size_t first_unsorted_scalar(const std::int64_t* tags, std::size_t n) {
  for (std::size_t k = 1; k < n; ++k)
    if (tags[k] < tags[k - 1]) return k;
  return n;
}

std::size_t accumulate_deltas_scalar(const std::int64_t* tags, std::size_t first, std::size_t n, std::int64_t ref,
                                     std::int64_t lo, std::int64_t bin, std::int64_t nbins, std::int64_t* counts) {
  const std::int64_t span = nbins * bin;
  std::size_t k = first;
  for (; k < n; ++k) {
    const std::int64_t x = tags[k] - ref - lo;
    if (x >= span) break;
    if (x >= 0) ++counts[x / bin];
  }
  return k;
}

}  // namespace sagnac::simd::detail
