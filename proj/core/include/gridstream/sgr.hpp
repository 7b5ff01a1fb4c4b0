#pragma once

// SGR1 text dump of results:
//
//   SGR1
//   <stat>_<var> <nrows> <ncols>
//   v v v ...        (nrows lines of ncols values)
//   ...
//
// Values use the shortest decimal form that parses back to the same double;
// masked cells print as `_`.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gridstream/result.hpp"

namespace gridstream {

std::string format_sgr(const ResultTensor& result);
// Atomic write (temp file + rename). Throws IoError.
void export_text(const ResultTensor& result, const std::filesystem::path& path);

std::string format_double(double value);

struct SgrBlock {
  std::string name;  // "<stat>_<var>"
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<double> values;  // NaN where the dump shows `_`
};

// Throws FormatError.
std::vector<SgrBlock> parse_sgr(std::string_view text);
std::vector<SgrBlock> read_sgr(const std::filesystem::path& path);

}  // namespace gridstream
