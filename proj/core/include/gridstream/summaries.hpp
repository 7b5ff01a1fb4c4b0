#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridstream/grid.hpp"

namespace gridstream {

enum class StatKind { kMean, kMin, kMax, kStddev };

std::string_view to_string(StatKind stat) noexcept;
// Accepts "mean", "min", "max", "stddev" (case-sensitive). Throws ConfigError.
StatKind parse_stat(std::string_view text);

// kLon collapses the longitude dimension (one value per latitude row);
// kLat collapses latitudes (one value per longitude column).
enum class Axis { kLat, kLon };

std::string_view to_string(Axis axis) noexcept;
Axis parse_axis(std::string_view text);

// Mergeable per-cell aggregation state. `m2` is the sum of squared
// deviations from the cell mean, so the population variance is m2 / count.
//
// A default-constructed summary is the identity element: it has no geometry
// and merges with anything to yield the other operand.
class CellSummaries {
 public:
  CellSummaries() = default;
  // Raw constructor, used by deserialisation and tests. Validates sizes and
  // the count/m2/min/max invariants.
  CellSummaries(GridGeometry geometry, std::string variable, std::vector<std::int64_t> count,
                std::vector<double> sum, std::vector<double> min, std::vector<double> max,
                std::vector<double> m2);

  static CellSummaries identity() { return {}; }
  static CellSummaries empty(GridGeometry geometry, std::string variable = {});

  bool is_identity() const noexcept { return !geometry_.has_value(); }
  // Throws GeometryError on the identity element.
  const GridGeometry& geometry() const;
  const std::string& variable() const noexcept { return variable_; }
  std::size_t size() const noexcept { return count_.size(); }

  std::int64_t count(std::size_t cell) const noexcept { return count_[cell]; }
  double sum(std::size_t cell) const noexcept { return sum_[cell]; }
  double min(std::size_t cell) const noexcept { return min_[cell]; }
  double max(std::size_t cell) const noexcept { return max_[cell]; }
  double m2(std::size_t cell) const noexcept { return m2_[cell]; }
  double mean(std::size_t cell) const noexcept {
    return count_[cell] == 0 ? 0.0 : sum_[cell] / static_cast<double>(count_[cell]);
  }

  std::int64_t total_count() const noexcept;
  std::size_t byte_size() const noexcept { return count_.size() * 5 * sizeof(double); }

  friend CellSummaries accumulate(const CellSummaries& summary, const GridField& field);
  friend CellSummaries merge(const CellSummaries& a, const CellSummaries& b);
  friend CellSummaries reduce_axis(const CellSummaries& summary, Axis axis);
  friend bool bit_identical(const CellSummaries& a, const CellSummaries& b) noexcept;

 private:
  std::optional<GridGeometry> geometry_;
  std::string variable_;
  std::vector<std::int64_t> count_;
  std::vector<double> sum_;
  std::vector<double> min_;
  std::vector<double> max_;
  std::vector<double> m2_;
};

// Folds one observation per valid cell into a new summary (Welford update).
// Accumulating into the identity element starts from an empty summary on
// the field's geometry.
CellSummaries accumulate(const CellSummaries& summary, const GridField& field);

// Exact pairwise combine of two summaries on the same geometry.
CellSummaries merge(const CellSummaries& a, const CellSummaries& b);

// Cells with count == 0 come out masked. STDDEV is the population form.
GridField finalize(const CellSummaries& summary, StatKind stat);

// Pools all cells along `axis` into one summary per remaining row/column.
CellSummaries reduce_axis(const CellSummaries& summary, Axis axis);
GridField reduce_axis(const CellSummaries& summary, Axis axis, StatKind stat);
GridField reduce_axis(const GridField& field, Axis axis, StatKind stat);

bool bit_identical(const CellSummaries& a, const CellSummaries& b) noexcept;

// Order-dependent (a + b) / 2 per cell. A cell valid on one side only keeps
// that side's value. Mirrors the naive streaming mean; not associative.
GridField pairwise_mean(const GridField& a, const GridField& b);

}  // namespace gridstream
