#include "gridstream/sgr.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "gridstream/errors.hpp"
#include "gridstream/sgf.hpp"

namespace gridstream {

std::string lat_axis_name(const std::string& variable) { return "lat_" + variable; }
std::string lon_axis_name(const std::string& variable) { return "lon_" + variable; }

void ResultTensor::add(StatKind stat, const std::string& variable, GridField field) {
  for (auto& e : entries_) {
    if (e.stat == stat && e.variable == variable) {
      e.field = std::move(field);
      return;
    }
  }
  entries_.push_back(
      {stat, variable, std::move(field), lat_axis_name(variable), lon_axis_name(variable)});
}

const ResultEntry* ResultTensor::find(StatKind stat, const std::string& variable) const noexcept {
  for (const auto& e : entries_) {
    if (e.stat == stat && e.variable == variable) return &e;
  }
  return nullptr;
}

const GridField& ResultTensor::field(StatKind stat, const std::string& variable) const {
  if (const auto* e = find(stat, variable)) return e->field;
  throw VariableAbsentError(variable);
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string format_sgr(const ResultTensor& result) {
  std::string out = "SGR1\n";
  for (const auto& e : result.entries()) {
    const GridGeometry& g = e.field.geometry();
    out += std::string(to_string(e.stat)) + "_" + e.variable + " " + std::to_string(g.nlat) + " " +
           std::to_string(g.nlon) + "\n";
    for (std::uint32_t r = 0; r < g.nlat; ++r) {
      for (std::uint32_t c = 0; c < g.nlon; ++c) {
        if (c) out += ' ';
        out += e.field.valid_at(r, c) ? format_double(e.field.at(r, c)) : std::string("_");
      }
      out += '\n';
    }
  }
  return out;
}

void export_text(const ResultTensor& result, const std::filesystem::path& path) {
  const std::string text = format_sgr(result);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  write_file_atomic(path, std::as_bytes(std::span<const char>(text.data(), text.size())));
}

std::vector<SgrBlock> parse_sgr(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  if (lines.empty() || lines.front() != "SGR1") throw FormatError("missing SGR1 header");

  auto tokens = [](std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && line[i] == ' ') ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ') ++j;
      if (j > i) out.push_back(line.substr(i, j - i));
      i = j;
    }
    return out;
  };
  auto parse_u32 = [](std::string_view s) {
    std::uint32_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw FormatError("bad dimension '" + std::string(s) + "'");
    }
    return v;
  };

  std::vector<SgrBlock> blocks;
  std::size_t li = 1;
  while (li < lines.size()) {
    if (lines[li].empty()) {
      ++li;
      continue;
    }
    const auto head = tokens(lines[li++]);
    if (head.size() != 3) throw FormatError("bad block header on line " + std::to_string(li));
    SgrBlock b;
    b.name = std::string(head[0]);
    b.rows = parse_u32(head[1]);
    b.cols = parse_u32(head[2]);
    b.values.reserve(static_cast<std::size_t>(b.rows) * b.cols);
    for (std::uint32_t r = 0; r < b.rows; ++r) {
      if (li >= lines.size()) throw FormatError("block '" + b.name + "' is truncated");
      const auto row = tokens(lines[li++]);
      if (row.size() != b.cols) {
        throw FormatError("block '" + b.name + "' row " + std::to_string(r) + " has " +
                          std::to_string(row.size()) + " values");
      }
      for (auto tok : row) {
        if (tok == "_") {
          b.values.push_back(std::numeric_limits<double>::quiet_NaN());
          continue;
        }
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
          throw FormatError("bad value '" + std::string(tok) + "' in block '" + b.name + "'");
        }
        b.values.push_back(v);
      }
    }
    blocks.push_back(std::move(b));
  }
  return blocks;
}

std::vector<SgrBlock> read_sgr(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  return parse_sgr(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace gridstream
