#include "sagnac/timetag.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "sagnac/error.hpp"
#include "sagnac/simd/kernels.hpp"

namespace sagnac {

void require_sorted(std::span<const TimeTag> tags, const char* what) {
  const std::size_t k = simd::kernels().first_unsorted(tags.data(), tags.size());
  if (k < tags.size())
    throw UnsortedInput(std::string(what) + ": tags not sorted at index " + std::to_string(k));
}

bool is_sorted(std::span<const TimeTag> tags) {
  return simd::kernels().first_unsorted(tags.data(), tags.size()) >= tags.size();
}

std::vector<TimeTag> apply_dead_time(std::span<const TimeTag> tags, TimeTag dead_time_ps) {
  require_sorted(tags, "apply_dead_time");
  if (dead_time_ps < 0) throw InvalidArgument("dead time must be >= 0");
  if (dead_time_ps == 0) return {tags.begin(), tags.end()};
  std::vector<TimeTag> out;
  out.reserve(tags.size());
  for (const TimeTag t : tags)
    if (out.empty() || t - out.back() >= dead_time_ps) out.push_back(t);
  return out;
}

TimeTagStream apply_dead_time(const TimeTagStream& in, double dead_time_ns) {
  return {in.channel, apply_dead_time(in.tags, static_cast<TimeTag>(std::llround(dead_time_ns * 1e3)))};
}

void write_binary(std::ostream& os, const TimeTagStream& s) {
  std::array<char, kBinaryRecordSize> rec{};
  for (const TimeTag t : s.tags) {
    const auto u = static_cast<std::uint64_t>(t);
    for (int b = 0; b < 8; ++b) rec[b] = static_cast<char>((u >> (8 * b)) & 0xFF);
    rec[8] = static_cast<char>(s.channel);
    os.write(rec.data(), rec.size());
  }
}

namespace {

std::vector<TimeTagStream> group_by_channel(const std::vector<std::pair<std::uint8_t, TimeTag>>& records) {
  std::map<std::uint8_t, TimeTagStream> by_channel;
  for (const auto& [ch, t] : records) {
    auto& s = by_channel[ch];
    s.channel = ch;
    s.tags.push_back(t);
  }
  std::vector<TimeTagStream> out;
  for (auto& [ch, s] : by_channel) {
    require_sorted(s.tags, "time-tag file");
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<TimeTagStream> read_binary(std::istream& is) {
  std::vector<std::pair<std::uint8_t, TimeTag>> records;
  std::array<unsigned char, kBinaryRecordSize> rec{};
  while (is.read(reinterpret_cast<char*>(rec.data()), rec.size())) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(rec[b]) << (8 * b);
    records.emplace_back(rec[8], static_cast<TimeTag>(u));
  }
  if (is.gcount() != 0) throw Error("truncated binary time-tag record");
  return group_by_channel(records);
}

void write_binary_file(const std::filesystem::path& path, const TimeTagStream& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string());
  write_binary(os, s);
}

std::vector<TimeTagStream> read_binary_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  return read_binary(is);
}

void write_ndjson(std::ostream& os, const TimeTagStream& s) {
  for (const TimeTag t : s.tags) os << R"({"t":)" << t << R"(,"ch":)" << static_cast<int>(s.channel) << "}\n";
}

std::vector<TimeTagStream> read_ndjson(std::istream& is) {
  std::vector<std::pair<std::uint8_t, TimeTag>> records;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    records.emplace_back(j.at("ch").get<std::uint8_t>(), j.at("t").get<TimeTag>());
  }
  return group_by_channel(records);
}

}  // namespace sagnac
