#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "gridstream/sgf.hpp"
#include "gridstream/summaries.hpp"

namespace gstest {

using namespace gridstream;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  for (;;) {
    path_ = fs::temp_directory_path() /
            ("gridstream-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::error_code ec;
    if (fs::create_directory(path_, ec)) return;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string random_code(std::mt19937_64& rng) {
  static constexpr char kChars[] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
  std::uniform_int_distribution<int> len(1, 8);
  std::uniform_int_distribution<int> ch(0, sizeof kChars - 2);
  std::string s(static_cast<std::size_t>(len(rng)), 'x');
  for (auto& c : s) c = kChars[ch(rng)];
  return s;
}

GridField random_field(std::mt19937_64& rng, const GridGeometry& g, const std::string& variable,
                       double missing, bool extremes) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(g.cells());
  for (auto& v : values) {
    if (u(rng) < missing) {
      v = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    v = normal(rng) * std::pow(10.0, std::floor(u(rng) * 6.0) - 2.0);
    if (extremes) {
      const double pick = u(rng);
      if (pick < 0.02) {
        v = -0.0;
      } else if (pick < 0.04) {
        v = std::numeric_limits<double>::denorm_min() * (1.0 + std::floor(u(rng) * 100.0));
      } else if (pick < 0.05) {
        v = (u(rng) < 0.5 ? -1.0 : 1.0) * std::numeric_limits<double>::max() * u(rng);
      }
    }
  }
  return GridField::from_values(g, variable, std::move(values));
}

GridTensor random_tensor(std::mt19937_64& rng, std::uint32_t max_dim, std::uint32_t max_vars,
                         bool extremes) {
  std::uniform_int_distribution<std::uint32_t> dim(1, max_dim);
  std::uniform_int_distribution<std::uint32_t> nvars(1, max_vars);
  std::uniform_int_distribution<int> tau(0, 166);
  std::uniform_int_distribution<std::int64_t> ts(-(std::int64_t{1} << 40), std::int64_t{1} << 40);
  std::uniform_real_distribution<double> missing(0.0, 0.6);
  const GridGeometry g = GridGeometry::canonical(dim(rng), dim(rng));
  const std::uint32_t n = nvars(rng);
  std::set<std::string> used;
  std::vector<GridField> fields;
  while (fields.size() < n) {
    std::string code = random_code(rng);
    if (!used.insert(code).second) continue;
    fields.push_back(random_field(rng, g, code, missing(rng), extremes));
  }
  return GridTensor(ts(rng), tau(rng) * 6, std::move(fields));
}

Reference reference_stat(const std::vector<GridTensor>& files, StatKind stat, Variation variation,
                         const std::string& variable) {
  Reference ref;
  std::optional<GridGeometry> geom;
  for (const auto& t : files) {
    if (t.has(variable)) {
      geom = t.geometry();
      break;
    }
  }
  if (!geom) {
    ref.rows = ref.cols = 1;
    ref.cells.assign(1, std::nullopt);
    return ref;
  }
  const bool keep_rows = variation == Variation::kPerCell || variation == Variation::kPerLat;
  const bool keep_cols = variation == Variation::kPerCell || variation == Variation::kPerLon;
  ref.rows = keep_rows ? geom->nlat : 1;
  ref.cols = keep_cols ? geom->nlon : 1;

  std::vector<std::vector<double>> pools(static_cast<std::size_t>(ref.rows) * ref.cols);
  for (const auto& t : files) {
    const GridField* f = t.find(variable);
    if (!f) continue;
    for (std::uint32_t r = 0; r < geom->nlat; ++r) {
      for (std::uint32_t c = 0; c < geom->nlon; ++c) {
        if (!f->valid_at(r, c)) continue;
        const std::uint32_t orow = keep_rows ? r : 0;
        const std::uint32_t ocol = keep_cols ? c : 0;
        pools[static_cast<std::size_t>(orow) * ref.cols + ocol].push_back(f->at(r, c));
      }
    }
  }

  ref.cells.resize(pools.size());
  for (std::size_t i = 0; i < pools.size(); ++i) {
    const auto& p = pools[i];
    if (p.empty()) continue;
    switch (stat) {
      case StatKind::kMin:
        ref.cells[i] = *std::min_element(p.begin(), p.end());
        break;
      case StatKind::kMax:
        ref.cells[i] = *std::max_element(p.begin(), p.end());
        break;
      case StatKind::kMean:
      case StatKind::kStddev: {
        long double sum = 0;
        for (double v : p) sum += v;
        const long double mean = sum / static_cast<long double>(p.size());
        if (stat == StatKind::kMean) {
          ref.cells[i] = mean;
          break;
        }
        long double ss = 0;
        for (double v : p) ss += (v - mean) * (v - mean);
        ref.cells[i] = std::sqrt(ss / static_cast<long double>(p.size()));
        break;
      }
    }
  }
  return ref;
}

namespace {

std::string check_cell(std::size_t i, bool valid, double got, const std::optional<long double>& want,
                       StatKind stat, double rel) {
  std::ostringstream why;
  if (valid != want.has_value()) {
    why << "cell " << i << ": engine " << (valid ? "valid" : "masked") << ", reference "
        << (want ? "valid" : "masked");
    return why.str();
  }
  if (!valid) return {};
  const bool exact = stat == StatKind::kMin || stat == StatKind::kMax;
  const long double w = *want;
  const long double err = std::fabs(static_cast<long double>(got) - w);
  const bool ok = exact ? static_cast<long double>(got) == w : err <= rel * std::fabs(w);
  if (ok) return {};
  why.precision(17);
  why << "cell " << i << ": engine " << got << ", reference " << static_cast<double>(w)
      << " (rel err " << static_cast<double>(w == 0 ? err : err / std::fabs(w)) << ")";
  return why.str();
}

}  // namespace

std::string compare(const GridField& got, const Reference& want, StatKind stat, double rel) {
  if (got.geometry().nlat != want.rows || got.geometry().nlon != want.cols) {
    return "shape " + std::to_string(got.geometry().nlat) + "x" + std::to_string(got.geometry().nlon) +
           ", expected " + std::to_string(want.rows) + "x" + std::to_string(want.cols);
  }
  for (std::size_t i = 0; i < got.size(); ++i) {
    auto why = check_cell(i, got.valid(i), got.value(i), want.cells[i], stat, rel);
    if (!why.empty()) return why;
  }
  return {};
}

std::string compare(const GridField& got, const GridField& want, StatKind stat, double rel) {
  Reference ref;
  ref.rows = want.geometry().nlat;
  ref.cols = want.geometry().nlon;
  ref.cells.resize(want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want.valid(i)) ref.cells[i] = want.value(i);
  }
  return compare(got, ref, stat, rel);
}

std::vector<fs::path> sgf_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".sgf") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<GridTensor> load_dir(const fs::path& dir) {
  std::vector<GridTensor> out;
  for (const auto& p : sgf_files(dir)) out.push_back(parse_sgf(read_file(p)));
  return out;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace gstest
