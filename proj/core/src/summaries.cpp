#include "gridstream/summaries.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "gridstream/errors.hpp"

namespace gridstream {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Cell {
  std::int64_t count = 0;
  double sum = 0.0;
  double min = kInf;
  double max = -kInf;
  double m2 = 0.0;
};

Cell combine(const Cell& a, const Cell& b) {
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  const double ca = static_cast<double>(a.count);
  const double cb = static_cast<double>(b.count);
  const double delta = b.sum / cb - a.sum / ca;
  Cell out;
  out.count = a.count + b.count;
  out.sum = a.sum + b.sum;
  out.min = std::min(a.min, b.min);
  out.max = std::max(a.max, b.max);
  out.m2 = a.m2 + b.m2 + delta * delta * (ca * cb / (ca + cb));
  return out;
}

std::string result_name(const std::string& variable) {
  return variable.empty() ? std::string("value") : variable;
}

}  // namespace

std::string_view to_string(StatKind stat) noexcept {
  switch (stat) {
    case StatKind::kMean:
      return "mean";
    case StatKind::kMin:
      return "min";
    case StatKind::kMax:
      return "max";
    case StatKind::kStddev:
      return "stddev";
  }
  return "?";
}

StatKind parse_stat(std::string_view text) {
  if (text == "mean") return StatKind::kMean;
  if (text == "min") return StatKind::kMin;
  if (text == "max") return StatKind::kMax;
  if (text == "stddev") return StatKind::kStddev;
  throw ConfigError("unknown statistic '" + std::string(text) +
                    "' (expected mean, min, max or stddev)");
}

std::string_view to_string(Axis axis) noexcept { return axis == Axis::kLat ? "lat" : "lon"; }

Axis parse_axis(std::string_view text) {
  if (text == "lat") return Axis::kLat;
  if (text == "lon") return Axis::kLon;
  throw ConfigError("unknown axis '" + std::string(text) + "' (expected lat or lon)");
}

CellSummaries::CellSummaries(GridGeometry geometry, std::string variable,
                             std::vector<std::int64_t> count, std::vector<double> sum,
                             std::vector<double> min, std::vector<double> max,
                             std::vector<double> m2)
    : geometry_(geometry),
      variable_(std::move(variable)),
      count_(std::move(count)),
      sum_(std::move(sum)),
      min_(std::move(min)),
      max_(std::move(max)),
      m2_(std::move(m2)) {
  geometry.validate();
  const std::size_t n = geometry.cells();
  if (count_.size() != n || sum_.size() != n || min_.size() != n || max_.size() != n ||
      m2_.size() != n) {
    throw GeometryError("summary arrays do not match " + to_string(geometry));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (count_[i] < 0 || m2_[i] < 0.0 || std::isnan(m2_[i]) || std::isnan(sum_[i])) {
      throw GeometryError("summary cell " + std::to_string(i) + " violates count/m2 invariants");
    }
    if (count_[i] == 0) {
      if (sum_[i] != 0.0 || m2_[i] != 0.0) {
        throw GeometryError("empty summary cell " + std::to_string(i) + " carries data");
      }
      min_[i] = kInf;
      max_[i] = -kInf;
    } else if (!(min_[i] <= max_[i])) {
      throw GeometryError("summary cell " + std::to_string(i) + " has min > max");
    }
  }
}

CellSummaries CellSummaries::empty(GridGeometry geometry, std::string variable) {
  geometry.validate();
  const std::size_t n = geometry.cells();
  CellSummaries s;
  s.geometry_ = geometry;
  s.variable_ = std::move(variable);
  s.count_.assign(n, 0);
  s.sum_.assign(n, 0.0);
  s.min_.assign(n, kInf);
  s.max_.assign(n, -kInf);
  s.m2_.assign(n, 0.0);
  return s;
}

const GridGeometry& CellSummaries::geometry() const {
  if (!geometry_) throw GeometryError("identity summary has no geometry");
  return *geometry_;
}

std::int64_t CellSummaries::total_count() const noexcept {
  std::int64_t n = 0;
  for (auto c : count_) n += c;
  return n;
}

CellSummaries accumulate(const CellSummaries& summary, const GridField& field) {
  CellSummaries out = summary.is_identity() ? CellSummaries::empty(field.geometry(), field.variable())
                                            : summary;
  if (out.geometry() != field.geometry()) {
    throw GeometryError("cannot accumulate " + to_string(field.geometry()) + " field into " +
                        to_string(out.geometry()) + " summary");
  }
  if (out.variable_.empty()) out.variable_ = field.variable();
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!field.valid(i)) continue;
    const double v = field.value(i);
    const double mean_before = out.count_[i] == 0 ? 0.0 : out.sum_[i] / static_cast<double>(out.count_[i]);
    out.count_[i] += 1;
    out.sum_[i] += v;
    const double mean_after = out.sum_[i] / static_cast<double>(out.count_[i]);
    out.min_[i] = std::min(out.min_[i], v);
    out.max_[i] = std::max(out.max_[i], v);
    if (out.count_[i] > 1) {
      out.m2_[i] = std::max(0.0, out.m2_[i] + (v - mean_before) * (v - mean_after));
    }
  }
  return out;
}

CellSummaries merge(const CellSummaries& a, const CellSummaries& b) {
  if (a.is_identity()) return b;
  if (b.is_identity()) return a;
  if (*a.geometry_ != *b.geometry_) {
    throw GeometryError("cannot merge summaries on " + to_string(*a.geometry_) + " and " +
                        to_string(*b.geometry_));
  }
  CellSummaries out = a;
  if (out.variable_.empty()) out.variable_ = b.variable_;
  for (std::size_t i = 0; i < out.count_.size(); ++i) {
    const Cell c = combine({a.count_[i], a.sum_[i], a.min_[i], a.max_[i], a.m2_[i]},
                           {b.count_[i], b.sum_[i], b.min_[i], b.max_[i], b.m2_[i]});
    out.count_[i] = c.count;
    out.sum_[i] = c.sum;
    out.min_[i] = c.min;
    out.max_[i] = c.max;
    out.m2_[i] = c.m2;
  }
  return out;
}

GridField finalize(const CellSummaries& summary, StatKind stat) {
  const GridGeometry& g = summary.geometry();
  std::vector<double> values(g.cells(), 0.0);
  std::vector<std::uint8_t> mask(g.cells(), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::int64_t n = summary.count(i);
    if (n == 0) continue;
    mask[i] = 1;
    switch (stat) {
      case StatKind::kMean:
        values[i] = summary.sum(i) / static_cast<double>(n);
        break;
      case StatKind::kMin:
        values[i] = summary.min(i);
        break;
      case StatKind::kMax:
        values[i] = summary.max(i);
        break;
      case StatKind::kStddev:
        values[i] = std::sqrt(summary.m2(i) / static_cast<double>(n));
        break;
    }
  }
  return GridField(g, result_name(summary.variable()), std::move(values), std::move(mask));
}

CellSummaries reduce_axis(const CellSummaries& summary, Axis axis) {
  if (summary.is_identity()) return summary;
  const GridGeometry& g = summary.geometry();
  GridGeometry reduced = g;
  if (axis == Axis::kLon) {
    reduced.nlon = 1;
  } else {
    reduced.nlat = 1;
  }
  CellSummaries out = CellSummaries::empty(reduced, summary.variable());
  const std::size_t outer = axis == Axis::kLon ? g.nlat : g.nlon;
  const std::size_t inner = axis == Axis::kLon ? g.nlon : g.nlat;
  for (std::size_t o = 0; o < outer; ++o) {
    Cell acc;
    for (std::size_t k = 0; k < inner; ++k) {
      const std::size_t i = axis == Axis::kLon ? o * g.nlon + k : k * g.nlon + o;
      acc = combine(acc, {summary.count_[i], summary.sum_[i], summary.min_[i], summary.max_[i],
                          summary.m2_[i]});
    }
    out.count_[o] = acc.count;
    out.sum_[o] = acc.sum;
    out.min_[o] = acc.min;
    out.max_[o] = acc.max;
    out.m2_[o] = acc.m2;
  }
  return out;
}

GridField reduce_axis(const CellSummaries& summary, Axis axis, StatKind stat) {
  return finalize(reduce_axis(summary, axis), stat);
}

GridField reduce_axis(const GridField& field, Axis axis, StatKind stat) {
  return reduce_axis(accumulate(CellSummaries::identity(), field), axis, stat);
}

bool bit_identical(const CellSummaries& a, const CellSummaries& b) noexcept {
  if (a.geometry_ != b.geometry_ || a.variable_ != b.variable_ || a.count_ != b.count_) {
    return false;
  }
  auto same = [](const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::bit_cast<std::uint64_t>(x[i]) != std::bit_cast<std::uint64_t>(y[i])) return false;
    }
    return true;
  };
  return same(a.sum_, b.sum_) && same(a.min_, b.min_) && same(a.max_, b.max_) &&
         same(a.m2_, b.m2_);
}

GridField pairwise_mean(const GridField& a, const GridField& b) {
  if (a.geometry() != b.geometry()) {
    throw GeometryError("pairwise mean operands differ: " + to_string(a.geometry()) + " vs " +
                        to_string(b.geometry()));
  }
  std::vector<double> values(a.size(), 0.0);
  std::vector<std::uint8_t> mask(a.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.valid(i) && b.valid(i)) {
      values[i] = (a.value(i) + b.value(i)) / 2.0;
    } else if (a.valid(i)) {
      values[i] = a.value(i);
    } else if (b.valid(i)) {
      values[i] = b.value(i);
    } else {
      continue;
    }
    mask[i] = 1;
  }
  return GridField(a.geometry(), a.variable(), std::move(values), std::move(mask));
}

}  // namespace gridstream
