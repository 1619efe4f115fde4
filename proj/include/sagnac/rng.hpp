#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace sagnac {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A generator is identified by a 64-bit key and a 64-bit stream id; the
/// remaining 64 counter bits index 128-bit output blocks. Two generators with
/// the same (key, stream) produce identical sequences regardless of which
/// thread owns them, which is what makes batched simulation reproducible.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t key, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Bare 10-round bijection, exposed for known-answer tests.
  static Block bijection(Block counter, Key key);

 private:
  Key key_;
  Block counter_;
  Block buffer_{};
  int next_ = 4;
};

/// Derives independent sub-seeds from one top-level seed by name.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t tag);
std::uint64_t substream_seed(std::uint64_t seed, const char* name);

}  // namespace sagnac
