#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace sagnac {

using TimeTag = std::int64_t;  // ps since run start

/// Detection events of one detector channel, ascending in time.
struct TimeTagStream {
  std::uint8_t channel = 0;
  std::vector<TimeTag> tags;

  std::size_t size() const { return tags.size(); }
  bool empty() const { return tags.empty(); }
};

/// Throws UnsortedInput naming the first offending index.
void require_sorted(std::span<const TimeTag> tags, const char* what);
bool is_sorted(std::span<const TimeTag> tags);

/// Non-paralyzable dead time: keep a tag iff it is at least `dead_time_ns`
/// after the last kept tag.
TimeTagStream apply_dead_time(const TimeTagStream& in, double dead_time_ns);
std::vector<TimeTag> apply_dead_time(std::span<const TimeTag> tags, TimeTag dead_time_ps);

// Binary format: packed little-endian records {u64 timestamp_ps, u8 channel}.
inline constexpr std::size_t kBinaryRecordSize = 9;

void write_binary(std::ostream& os, const TimeTagStream& s);
std::vector<TimeTagStream> read_binary(std::istream& is);
void write_binary_file(const std::filesystem::path& path, const TimeTagStream& s);
std::vector<TimeTagStream> read_binary_file(const std::filesystem::path& path);

/// One JSON object per line: {"t": <ps>, "ch": <id>}.
void write_ndjson(std::ostream& os, const TimeTagStream& s);
std::vector<TimeTagStream> read_ndjson(std::istream& is);

}  // namespace sagnac
