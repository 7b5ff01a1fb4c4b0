#include "gridstream/sgf.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "gridstream/errors.hpp"
#include "gridstream/filename.hpp"

namespace gridstream {
namespace {

constexpr std::uint64_t kQuietNaN = 0x7FF8000000000000ULL;

class Writer {
 public:
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::byte*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  template <typename T>
  void le(T value) {
    auto u = static_cast<std::make_unsigned_t<T>>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::byte>((u >> (8 * i)) & 0xFF));
    }
  }
  Bytes take() { return std::move(out_); }
  void reserve(std::size_t n) { out_.reserve(n); }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> in) : in_(in) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw TruncationError(pos_, std::string("truncated ") + what + ": need " + std::to_string(n) +
                                      " bytes, have " + std::to_string(remaining()));
    }
  }
  template <typename T>
  T le(const char* what) {
    need(sizeof(T), what);
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(std::to_integer<std::uint8_t>(in_[pos_ + i]))
           << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  std::string_view chars(std::size_t n, const char* what) {
    need(n, what);
    std::string_view s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

}  // namespace

Bytes write_sgf(const GridTensor& tensor) {
  if (tensor.empty()) throw FormatError("SGF1 requires at least one variable");
  const GridGeometry& g = tensor.geometry();
  if (!g.is_canonical()) {
    throw FormatError("SGF1 stores only canonical geometries, got " + to_string(g));
  }
  if (tensor.fields().size() > std::numeric_limits<std::uint16_t>::max()) {
    throw FormatError("too many variables for SGF1");
  }
  if (tensor.tau() > std::numeric_limits<std::uint16_t>::max()) {
    throw FormatError("tau does not fit in u16");
  }
  Writer w;
  w.reserve(kSgfHeaderSize + tensor.fields().size() * (2 + 64 + g.cells() * 8));
  w.raw("SGF1", 4);
  w.le<std::uint16_t>(kSgfVersion);
  w.le<std::uint16_t>(static_cast<std::uint16_t>(tensor.fields().size()));
  w.le<std::uint32_t>(g.nlat);
  w.le<std::uint32_t>(g.nlon);
  w.le<std::int64_t>(tensor.timestamp());
  w.le<std::uint16_t>(static_cast<std::uint16_t>(tensor.tau()));
  for (const auto& f : tensor.fields()) {
    w.le<std::uint16_t>(static_cast<std::uint16_t>(f.variable().size()));
    w.raw(f.variable().data(), f.variable().size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      w.le<std::uint64_t>(f.valid(i) ? std::bit_cast<std::uint64_t>(f.value(i)) : kQuietNaN);
    }
  }
  return w.take();
}

GridTensor parse_sgf(std::span<const std::byte> bytes) {
  Reader r(bytes);
  const auto magic = r.chars(4, "magic");
  if (magic != "SGF1") throw FormatError("bad magic: not an SGF1 file");
  const auto version = r.le<std::uint16_t>("version");
  if (version != kSgfVersion) {
    throw FormatError("unsupported SGF version " + std::to_string(version));
  }
  const auto var_count = r.le<std::uint16_t>("var_count");
  if (var_count == 0) throw FormatError("var_count must be at least 1");
  const auto nlat = r.le<std::uint32_t>("nlat");
  const auto nlon = r.le<std::uint32_t>("nlon");
  if (nlat == 0 || nlon == 0) throw FormatError("grid dimensions must be non-zero");
  const auto cycle = r.le<std::int64_t>("cycle");
  const auto tau = r.le<std::uint16_t>("tau");

  const GridGeometry g = GridGeometry::canonical(nlat, nlon);
  const std::uint64_t cells = static_cast<std::uint64_t>(nlat) * nlon;
  // Each record holds at least 2 + 1 + 8*cells bytes; reject impossible
  // headers before allocating anything.
  if (cells > r.remaining() / 8) {
    throw TruncationError(r.offset(), "payload too short for a " + std::to_string(nlat) + "x" +
                                          std::to_string(nlon) + " grid");
  }

  std::vector<GridField> fields;
  fields.reserve(var_count);
  for (std::uint16_t v = 0; v < var_count; ++v) {
    const auto name_len = r.le<std::uint16_t>("name length");
    if (name_len == 0) throw FormatError("empty variable name in record " + std::to_string(v));
    std::string name(r.chars(name_len, "variable name"));
    if (!is_valid_variable_code(name)) {
      throw FormatError("invalid variable name in record " + std::to_string(v));
    }
    for (const auto& f : fields) {
      if (f.variable() == name) {
        throw DuplicateVariableError("variable '" + name + "' appears more than once");
      }
    }
    r.need(static_cast<std::size_t>(cells) * 8, "variable payload");
    std::vector<double> values(cells);
    std::vector<std::uint8_t> mask(cells, 1);
    for (std::size_t i = 0; i < cells; ++i) {
      values[i] = std::bit_cast<double>(r.le<std::uint64_t>("value"));
      if (std::isnan(values[i])) mask[i] = 0;
    }
    fields.emplace_back(g, std::move(name), std::move(values), std::move(mask));
  }
  if (r.remaining() != 0) {
    throw FormatError(std::to_string(r.remaining()) + " trailing bytes after last variable");
  }
  return GridTensor(cycle, tau, std::move(fields));
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  Bytes out(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(size))) {
    throw IoError("cannot read " + path.string());
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("cannot write " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + " to " + path.string() + ": " + ec.message());
}

GridTensor merge_tensors(std::span<const GridTensor> tensors) {
  if (tensors.empty()) throw MergeError("nothing to merge");
  const GridTensor& first = tensors.front();
  std::vector<GridField> fields;
  for (const auto& t : tensors) {
    if (t.timestamp() != first.timestamp() || t.tau() != first.tau()) {
      throw MergeError("cannot merge cycle/tau " + std::to_string(t.timestamp()) + "/" +
                       std::to_string(t.tau()) + " into " + std::to_string(first.timestamp()) +
                       "/" + std::to_string(first.tau()));
    }
    if (!t.empty() && !first.empty() && t.geometry() != first.geometry()) {
      throw MergeError("cannot merge different geometries");
    }
    for (const auto& f : t.fields()) {
      for (const auto& existing : fields) {
        if (existing.variable() == f.variable()) {
          throw DuplicateVariableError("variable '" + f.variable() + "' present in two inputs");
        }
      }
      fields.push_back(f);
    }
  }
  return GridTensor(first.timestamp(), first.tau(), std::move(fields));
}

std::filesystem::path merge_files(std::span<const std::filesystem::path> files,
                                  const std::filesystem::path& out_dir) {
  std::vector<GridTensor> tensors;
  tensors.reserve(files.size());
  for (const auto& f : files) {
    const auto bytes = read_file(f);
    tensors.push_back(parse_sgf(bytes));
  }
  const GridTensor merged = merge_tensors(tensors);
  FileMeta meta{merged.timestamp(), merged.tau(), merged.variables()};
  const auto out = out_dir / format_filename(meta);
  write_file_atomic(out, write_sgf(merged));
  return out;
}

}  // namespace gridstream
