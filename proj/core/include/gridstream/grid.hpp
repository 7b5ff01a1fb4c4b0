#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridstream {

// Regular lat/lon grid. Rows are latitudes, columns longitudes, both
// ascending from (lat0, lon0) in increments of `step` degrees.
struct GridGeometry {
  std::uint32_t nlat = 361;
  std::uint32_t nlon = 720;
  double lat0 = -90.0;
  double lon0 = 0.0;
  double step = 0.5;

  // Geometry implied by a bare nlat x nlon array: longitudes cover the full
  // circle from 0, latitudes start at the south pole.
  static GridGeometry canonical(std::uint32_t nlat, std::uint32_t nlon);

  std::size_t cells() const noexcept {
    return static_cast<std::size_t>(nlat) * static_cast<std::size_t>(nlon);
  }
  double lat(std::uint32_t row) const noexcept { return lat0 + step * row; }
  double lon(std::uint32_t col) const noexcept { return lon0 + step * col; }
  bool is_canonical() const noexcept;

  // Throws GeometryError when nlat/nlon is zero or step is not positive.
  void validate() const;

  bool operator==(const GridGeometry&) const = default;
};

std::string to_string(const GridGeometry& g);

// True when `code` is usable as a variable name: 1-64 chars of [A-Za-z0-9_].
bool is_valid_variable_code(std::string_view code) noexcept;

// One variable on a grid. Masked cells carry value 0.0 internally; a NaN
// supplied at a cell marks that cell masked.
class GridField {
 public:
  GridField(GridGeometry geometry, std::string variable, std::vector<double> values,
            std::vector<std::uint8_t> mask);

  // All cells valid except NaN entries.
  static GridField from_values(GridGeometry geometry, std::string variable,
                               std::vector<double> values);
  static GridField filled(GridGeometry geometry, std::string variable, double value);
  static GridField fully_masked(GridGeometry geometry, std::string variable);

  const GridGeometry& geometry() const noexcept { return geometry_; }
  const std::string& variable() const noexcept { return variable_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const std::uint8_t> mask() const noexcept { return mask_; }

  std::size_t size() const noexcept { return values_.size(); }
  bool valid(std::size_t cell) const noexcept { return mask_[cell] != 0; }
  double value(std::size_t cell) const noexcept { return values_[cell]; }
  double at(std::uint32_t row, std::uint32_t col) const noexcept {
    return values_[static_cast<std::size_t>(row) * geometry_.nlon + col];
  }
  bool valid_at(std::uint32_t row, std::uint32_t col) const noexcept {
    return mask_[static_cast<std::size_t>(row) * geometry_.nlon + col] != 0;
  }
  std::size_t valid_count() const noexcept;

  GridField renamed(std::string variable) const;

  std::size_t byte_size() const noexcept {
    return values_.size() * (sizeof(double) + sizeof(std::uint8_t));
  }

 private:
  GridGeometry geometry_;
  std::string variable_;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

// Same geometry, name, mask and bit pattern of every valid value.
bool bit_identical(const GridField& a, const GridField& b) noexcept;

// A set of variables sharing one model cycle and forecast offset.
class GridTensor {
 public:
  GridTensor() = default;
  // Throws DuplicateVariableError on repeated codes, GeometryError on mixed
  // geometries and FormatError when tau is not a non-negative multiple of 6.
  GridTensor(std::int64_t timestamp, int tau_hours, std::vector<GridField> fields);

  std::int64_t timestamp() const noexcept { return timestamp_; }
  int tau() const noexcept { return tau_; }
  const std::vector<GridField>& fields() const noexcept { return fields_; }
  bool empty() const noexcept { return fields_.empty(); }

  bool has(std::string_view variable) const noexcept { return find(variable) != nullptr; }
  const GridField* find(std::string_view variable) const noexcept;
  // Throws VariableAbsentError.
  const GridField& field(std::string_view variable) const;
  const GridGeometry& geometry() const;
  std::vector<std::string> variables() const;

  GridTensor select(std::string_view variable) const;

  std::size_t byte_size() const noexcept;

 private:
  std::int64_t timestamp_ = 0;
  int tau_ = 0;
  std::vector<GridField> fields_;
};

bool bit_identical(const GridTensor& a, const GridTensor& b) noexcept;

enum class ArithmeticOp { kAdd, kSub, kMul, kDiv };

// Cell-wise arithmetic. An output cell is valid only when both inputs are
// valid there (and, for division, the divisor is non-zero).
GridField elementwise(ArithmeticOp op, const GridField& a, const GridField& b);

}  // namespace gridstream
