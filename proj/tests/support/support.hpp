#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gridstream/analytics.hpp"
#include "gridstream/grid.hpp"
#include "gridstream/summaries.hpp"

namespace gstest {

namespace fs = std::filesystem;

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// Random variable code of 1..8 chars.
std::string random_code(std::mt19937_64& rng);

// Field on a canonical grid with roughly `missing` of its cells masked.
// With `extremes`, values also include signed zeros, subnormals and huge
// finite numbers.
gridstream::GridField random_field(std::mt19937_64& rng, const gridstream::GridGeometry& g,
                                   const std::string& variable, double missing,
                                   bool extremes = false);

gridstream::GridTensor random_tensor(std::mt19937_64& rng, std::uint32_t max_dim = 12,
                                     std::uint32_t max_vars = 4, bool extremes = true);

// Brute-force reference: every output cell pools the flat list of valid
// inputs feeding it and evaluates the statistic in long double, two passes
// for the standard deviation.
struct Reference {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::optional<long double>> cells;
};

Reference reference_stat(const std::vector<gridstream::GridTensor>& files, gridstream::StatKind stat,
                         gridstream::Variation variation, const std::string& variable);

// Empty string when `got` matches: same shape and mask, MIN/MAX exact,
// others within `rel` relative error. Otherwise a description of the first
// mismatch.
std::string compare(const gridstream::GridField& got, const Reference& want,
                    gridstream::StatKind stat, double rel);

// Same check between two engine results.
std::string compare(const gridstream::GridField& got, const gridstream::GridField& want,
                    gridstream::StatKind stat, double rel);

std::vector<gridstream::GridTensor> load_dir(const fs::path& dir);
std::vector<fs::path> sgf_files(const fs::path& dir);

std::string slurp(const fs::path& path);

}  // namespace gstest
