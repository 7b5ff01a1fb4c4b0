#pragma once

// SGF1: the binary grid file format.
//
//   offset  size  field
//   0       4     magic "SGF1"
//   4       2     u16 version (= 1)
//   6       2     u16 var_count (>= 1)
//   8       4     u32 nlat
//   12      4     u32 nlon
//   16      8     i64 cycle time, unix seconds
//   24      2     u16 tau, hours
//   26      ...   var_count records:
//                   u16 name length, name bytes,
//                   nlat*nlon f64, row-major from latitude index 0
//
// All integers and floats little-endian. A quiet NaN marks a missing cell.
// Geometry is implicit: GridGeometry::canonical(nlat, nlon).

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "gridstream/grid.hpp"

namespace gridstream {

using Bytes = std::vector<std::byte>;

inline constexpr std::uint16_t kSgfVersion = 1;
inline constexpr std::size_t kSgfHeaderSize = 26;

// Throws FormatError for empty tensors or non-canonical geometry.
Bytes write_sgf(const GridTensor& tensor);

// Throws FormatError (bad magic, version, counts, trailing bytes),
// TruncationError (payload shorter than the header promises) or
// DuplicateVariableError. Never reads past `bytes`.
GridTensor parse_sgf(std::span<const std::byte> bytes);

Bytes read_file(const std::filesystem::path& path);
// Writes to a sibling temp file, then renames over `path`. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes);

// Union of the variables of tensors sharing cycle, tau and geometry, in
// input order. Throws MergeError or DuplicateVariableError.
GridTensor merge_tensors(std::span<const GridTensor> tensors);

// Merges SGF1 files on disk and writes the result into `out_dir` under the
// standard file name (variables hyphen-joined in input order).
std::filesystem::path merge_files(std::span<const std::filesystem::path> files,
                                  const std::filesystem::path& out_dir);

}  // namespace gridstream
