#include "gridstream/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "gridstream/errors.hpp"

namespace gridstream {

GridGeometry GridGeometry::canonical(std::uint32_t nlat, std::uint32_t nlon) {
  GridGeometry g;
  g.nlat = nlat;
  g.nlon = nlon;
  g.lat0 = -90.0;
  g.lon0 = 0.0;
  g.step = nlon == 0 ? 0.0 : 360.0 / nlon;
  return g;
}

bool GridGeometry::is_canonical() const noexcept {
  return *this == canonical(nlat, nlon);
}

void GridGeometry::validate() const {
  if (nlat == 0 || nlon == 0) {
    throw GeometryError("grid must have at least one row and column, got " + to_string(*this));
  }
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw GeometryError("grid step must be positive, got " + to_string(*this));
  }
}

std::string to_string(const GridGeometry& g) {
  std::ostringstream os;
  os << g.nlat << "x" << g.nlon << " from (" << g.lat0 << ", " << g.lon0 << ") step " << g.step;
  return os.str();
}

bool is_valid_variable_code(std::string_view code) noexcept {
  if (code.empty() || code.size() > 64) return false;
  return std::all_of(code.begin(), code.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

GridField::GridField(GridGeometry geometry, std::string variable, std::vector<double> values,
                     std::vector<std::uint8_t> mask)
    : geometry_(geometry),
      variable_(std::move(variable)),
      values_(std::move(values)),
      mask_(std::move(mask)) {
  geometry_.validate();
  if (!is_valid_variable_code(variable_)) {
    throw FormatError("invalid variable code '" + variable_ + "'");
  }
  if (values_.size() != geometry_.cells() || mask_.size() != geometry_.cells()) {
    throw GeometryError("field '" + variable_ + "' has " + std::to_string(values_.size()) +
                        " values and " + std::to_string(mask_.size()) + " mask entries for a " +
                        to_string(geometry_) + " grid");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (mask_[i] != 0 && std::isnan(values_[i])) mask_[i] = 0;
    if (mask_[i] == 0) {
      values_[i] = 0.0;
    } else {
      mask_[i] = 1;
    }
  }
}

GridField GridField::from_values(GridGeometry geometry, std::string variable,
                                 std::vector<double> values) {
  std::vector<std::uint8_t> mask(values.size(), 1);
  return GridField(geometry, std::move(variable), std::move(values), std::move(mask));
}

GridField GridField::filled(GridGeometry geometry, std::string variable, double value) {
  return from_values(geometry, std::move(variable), std::vector<double>(geometry.cells(), value));
}

GridField GridField::fully_masked(GridGeometry geometry, std::string variable) {
  return GridField(geometry, std::move(variable), std::vector<double>(geometry.cells(), 0.0),
                   std::vector<std::uint8_t>(geometry.cells(), 0));
}

std::size_t GridField::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

GridField GridField::renamed(std::string variable) const {
  return GridField(geometry_, std::move(variable), values_, mask_);
}

bool bit_identical(const GridField& a, const GridField& b) noexcept {
  if (a.geometry() != b.geometry() || a.variable() != b.variable() || a.size() != b.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.mask()[i] != b.mask()[i]) return false;
    if (std::bit_cast<std::uint64_t>(a.value(i)) != std::bit_cast<std::uint64_t>(b.value(i))) {
      return false;
    }
  }
  return true;
}

GridTensor::GridTensor(std::int64_t timestamp, int tau_hours, std::vector<GridField> fields)
    : timestamp_(timestamp), tau_(tau_hours), fields_(std::move(fields)) {
  if (tau_ < 0 || tau_ % 6 != 0) {
    throw FormatError("tau must be a non-negative multiple of 6 hours, got " +
                      std::to_string(tau_));
  }
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (fields_[i].geometry() != fields_.front().geometry()) {
      throw GeometryError("field '" + fields_[i].variable() + "' geometry " +
                          to_string(fields_[i].geometry()) + " differs from " +
                          to_string(fields_.front().geometry()));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (fields_[j].variable() == fields_[i].variable()) {
        throw DuplicateVariableError("variable '" + fields_[i].variable() +
                                     "' appears more than once");
      }
    }
  }
}

const GridField* GridTensor::find(std::string_view variable) const noexcept {
  for (const auto& f : fields_) {
    if (f.variable() == variable) return &f;
  }
  return nullptr;
}

const GridField& GridTensor::field(std::string_view variable) const {
  if (const auto* f = find(variable)) return *f;
  throw VariableAbsentError(std::string(variable));
}

const GridGeometry& GridTensor::geometry() const {
  if (fields_.empty()) throw GeometryError("tensor has no fields");
  return fields_.front().geometry();
}

std::vector<std::string> GridTensor::variables() const {
  std::vector<std::string> out;
  out.reserve(fields_.size());
  for (const auto& f : fields_) out.push_back(f.variable());
  return out;
}

GridTensor GridTensor::select(std::string_view variable) const {
  return GridTensor(timestamp_, tau_, {field(variable)});
}

std::size_t GridTensor::byte_size() const noexcept {
  std::size_t n = 0;
  for (const auto& f : fields_) n += f.byte_size();
  return n;
}

bool bit_identical(const GridTensor& a, const GridTensor& b) noexcept {
  if (a.timestamp() != b.timestamp() || a.tau() != b.tau() ||
      a.fields().size() != b.fields().size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.fields().size(); ++i) {
    if (!bit_identical(a.fields()[i], b.fields()[i])) return false;
  }
  return true;
}

GridField elementwise(ArithmeticOp op, const GridField& a, const GridField& b) {
  if (a.geometry() != b.geometry()) {
    throw GeometryError("elementwise operands differ: " + to_string(a.geometry()) + " vs " +
                        to_string(b.geometry()));
  }
  const std::size_t n = a.size();
  std::vector<double> values(n, 0.0);
  std::vector<std::uint8_t> mask(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!a.valid(i) || !b.valid(i)) continue;
    const double x = a.value(i);
    const double y = b.value(i);
    switch (op) {
      case ArithmeticOp::kAdd:
        values[i] = x + y;
        break;
      case ArithmeticOp::kSub:
        values[i] = x - y;
        break;
      case ArithmeticOp::kMul:
        values[i] = x * y;
        break;
      case ArithmeticOp::kDiv:
        if (y == 0.0) continue;
        values[i] = x / y;
        break;
    }
    mask[i] = std::isnan(values[i]) ? 0 : 1;
  }
  return GridField(a.geometry(), a.variable(), std::move(values), std::move(mask));
}

}  // namespace gridstream
