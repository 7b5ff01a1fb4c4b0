#include "gridstream/generator.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "gridstream/errors.hpp"
#include "gridstream/filename.hpp"
#include "gridstream/sgf.hpp"

namespace gridstream {
namespace {

struct ValueModel {
  double base;
  double amplitude;
  double noise;
};

ValueModel model_for(const std::string& variable) {
  if (variable == "gst") return {290.0, 12.0, 0.5};
  if (variable == "pres") return {1013.0, 18.0, 1.0};
  if (variable == "airtemp") return {280.0, 20.0, 0.8};
  if (variable == "wind") return {8.0, 5.0, 0.6};
  return {0.0, 1.0, 0.1};
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_name(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

// The std distributions are implementation-defined; these are not.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace

void GeneratorSpec::validate() const {
  geometry.validate();
  if (!geometry.is_canonical()) throw ConfigError("generator geometry must be canonical");
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0)) {
    throw ConfigError("missing fraction must be in [0, 1), got " + std::to_string(missing_fraction));
  }
  if (cadence_hours <= 0) throw ConfigError("cadence must be positive");
  if (taus.empty()) throw ConfigError("at least one tau required");
  for (int t : taus) {
    if (t < 0 || t > 999 || t % 6 != 0) {
      throw ConfigError("tau " + std::to_string(t) + " must be a multiple of 6 in [0, 999]");
    }
  }
  if (variables.empty()) throw ConfigError("at least one variable required");
  for (const auto& v : variables) {
    if (!is_known_variable(v)) throw ConfigError("unknown variable '" + v + "'");
  }
  if (harmonics < 1) throw ConfigError("harmonics must be positive");
}

GridField generate_field(const GeneratorSpec& spec, std::uint32_t cycle_index, int tau,
                         const std::string& variable) {
  const GridGeometry& g = spec.geometry;
  const ValueModel m = model_for(variable);
  // Spatial pattern depends on seed and variable; the phase drifts with
  // cycle and forecast offset so consecutive files differ smoothly.
  std::mt19937_64 pattern(mix(spec.seed ^ hash_name(variable)));
  struct Harmonic {
    double weight, lat_freq, lon_freq, lat_phase, lon_phase;
  };
  std::vector<Harmonic> harmonics(static_cast<std::size_t>(spec.harmonics));
  double total_weight = 0.0;
  for (auto& h : harmonics) {
    h.weight = 0.2 + unit(pattern);
    h.lat_freq = 1.0 + std::floor(unit(pattern) * 4.0);
    h.lon_freq = 1.0 + std::floor(unit(pattern) * 6.0);
    h.lat_phase = unit(pattern) * 2.0 * std::numbers::pi;
    h.lon_phase = unit(pattern) * 2.0 * std::numbers::pi;
    total_weight += h.weight;
  }
  const double drift = 0.05 * cycle_index + 0.01 * tau;

  std::mt19937_64 noise(mix(mix(spec.seed ^ hash_name(variable)) + cycle_index * 1000003ULL +
                            static_cast<std::uint64_t>(tau)));
  constexpr double kDeg = std::numbers::pi / 180.0;
  std::vector<double> values(g.cells());
  for (std::uint32_t r = 0; r < g.nlat; ++r) {
    const double lat = g.lat(r) * kDeg;
    for (std::uint32_t c = 0; c < g.nlon; ++c) {
      const double lon = g.lon(c) * kDeg;
      double s = 0.0;
      for (const auto& h : harmonics) {
        s += h.weight * std::sin(h.lat_freq * lat + h.lat_phase + drift) *
             std::cos(h.lon_freq * lon + h.lon_phase - drift);
      }
      values[static_cast<std::size_t>(r) * g.nlon + c] =
          m.base + m.amplitude * s / total_weight + m.noise * (unit(noise) - 0.5);
    }
  }

  std::vector<std::uint8_t> mask(g.cells(), 1);
  const auto missing = static_cast<std::size_t>(
      std::llround(spec.missing_fraction * static_cast<double>(g.cells())));
  if (missing > 0) {
    std::vector<std::size_t> idx(g.cells());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < missing; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(below(noise, idx.size() - i));
      std::swap(idx[i], idx[j]);
      mask[idx[i]] = 0;
    }
  }
  return GridField(g, variable, std::move(values), std::move(mask));
}

std::vector<std::string> generate(const GeneratorSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw IoError("cannot use output directory " + out_dir.string());
  }
  std::vector<std::string> names;
  for (std::uint32_t ci = 0; ci < spec.cycles; ++ci) {
    const std::int64_t cycle = spec.first_cycle + static_cast<std::int64_t>(ci) * spec.cadence_hours * 3600;
    for (int tau : spec.taus) {
      std::vector<GridField> fields;
      for (const auto& var : spec.variables) fields.push_back(generate_field(spec, ci, tau, var));
      if (spec.merge_variables) {
        const std::string name = format_filename({cycle, tau, spec.variables});
        write_file_atomic(out_dir / name, write_sgf(GridTensor(cycle, tau, std::move(fields))));
        names.push_back(name);
        continue;
      }
      for (auto& f : fields) {
        const std::string name = format_filename({cycle, tau, {f.variable()}});
        write_file_atomic(out_dir / name, write_sgf(GridTensor(cycle, tau, {std::move(f)})));
        names.push_back(name);
      }
    }
  }
  return names;
}

}  // namespace gridstream
