#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gridstream {

// Variables the ingest pipeline knows how to name in files.
inline constexpr std::string_view kKnownVariables[] = {"gst", "pres", "airtemp", "wind"};
bool is_known_variable(std::string_view code) noexcept;

// Parsed form of `navgem_<YYYYMMDDHH>_t<TTT>_<var>(-<var>)*.sgf`.
struct FileMeta {
  std::int64_t cycle = 0;  // unix seconds, UTC
  int tau = 0;             // hours, 0..999
  std::vector<std::string> variables;

  bool operator==(const FileMeta&) const = default;
};

// Accepts a bare name or a path (only the last component is parsed).
// Throws FilenameError naming the failing component.
FileMeta parse_filename(std::string_view name);
std::string format_filename(const FileMeta& meta);

// YYYYMMDDHH <-> unix seconds. parse_cycle throws FilenameError("cycle").
std::int64_t parse_cycle(std::string_view yyyymmddhh);
std::string format_cycle(std::int64_t unix_seconds);

}  // namespace gridstream
