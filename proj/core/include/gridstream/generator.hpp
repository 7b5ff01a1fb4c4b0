#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gridstream/grid.hpp"

namespace gridstream {

// Synthetic stand-in for forecast model output. Each field is a smooth
// seeded sinusoid pattern plus uniform noise, with a seeded set of
// missing cells. Same spec, same bytes, on every platform.
struct GeneratorSpec {
  std::uint64_t seed = 0;
  std::uint32_t cycles = 1;
  std::int64_t first_cycle = 1514764800;  // 2018-01-01T00Z
  int cadence_hours = 6;
  std::vector<int> taus = {24, 48, 72, 96, 120, 144, 168};  // every 24 h up to 180 h
  std::vector<std::string> variables = {"gst", "pres", "airtemp", "wind"};
  GridGeometry geometry = GridGeometry::canonical(361, 720);
  double missing_fraction = 0.0;  // [0, 1)
  int harmonics = 4;
  // When set, one multi-variable file per (cycle, tau) instead of one per variable.
  bool merge_variables = false;

  // Throws ConfigError.
  void validate() const;
};

GridField generate_field(const GeneratorSpec& spec, std::uint32_t cycle_index, int tau,
                         const std::string& variable);

// Writes one SGF1 file per (cycle, tau, variable) and returns the file
// names in generation order. Throws IoError when `out_dir` is unusable.
std::vector<std::string> generate(const GeneratorSpec& spec, const std::filesystem::path& out_dir);

}  // namespace gridstream
