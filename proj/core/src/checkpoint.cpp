#include <bit>
#include <cstring>

#include "gridstream/errors.hpp"
#include "gridstream/streaming.hpp"

namespace gridstream {

namespace {

constexpr char kMagic[4] = {'G', 'S', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<std::byte>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    for (char c : s) u8(static_cast<std::uint8_t>(c));
  }
  void bytes(std::span<const std::byte> b) {
    u64(b.size());
    out_.insert(out_.end(), b.begin(), b.end());
  }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  // Bounds a count by the bytes left, given each item needs `min_size`.
  std::size_t count(std::size_t min_size) {
    const std::uint64_t n = u64();
    if (n > (in_.size() - pos_) / std::max<std::size_t>(min_size, 1)) {
      throw CheckpointError("checkpoint count out of range at byte " + std::to_string(pos_));
    }
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    const std::size_t n = count(1);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  Bytes bytes() {
    const std::size_t n = count(1);
    Bytes b(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
            in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return b;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) {
    if (in_.size() - pos_ < n) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

void put_geometry(Writer& w, const GridGeometry& g) {
  w.u32(g.nlat);
  w.u32(g.nlon);
  w.f64(g.lat0);
  w.f64(g.lon0);
  w.f64(g.step);
}

GridGeometry get_geometry(Reader& r) {
  GridGeometry g;
  g.nlat = r.u32();
  g.nlon = r.u32();
  g.lat0 = r.f64();
  g.lon0 = r.f64();
  g.step = r.f64();
  return g;
}

void put_field(Writer& w, const GridField& f) {
  put_geometry(w, f.geometry());
  w.str(f.variable());
  for (double v : f.values()) w.f64(v);
  for (std::uint8_t m : f.mask()) w.u8(m);
}

GridField get_field(Reader& r) {
  const GridGeometry g = get_geometry(r);
  std::string var = r.str();
  g.validate();
  const std::size_t n = g.cells();
  std::vector<double> values(n);
  std::vector<std::uint8_t> mask(n);
  for (auto& v : values) v = r.f64();
  for (auto& m : mask) m = r.u8();
  return GridField(g, std::move(var), std::move(values), std::move(mask));
}

void put_element(Writer& w, const Element& e) {
  if (const auto* s = std::get_if<CellSummaries>(&e)) {
    w.u8(1);
    w.u8(s->is_identity() ? 1 : 0);
    if (s->is_identity()) return;
    put_geometry(w, s->geometry());
    w.str(s->variable());
    for (std::size_t i = 0; i < s->size(); ++i) {
      w.i64(s->count(i));
      w.f64(s->sum(i));
      w.f64(s->min(i));
      w.f64(s->max(i));
      w.f64(s->m2(i));
    }
  } else if (const auto* f = std::get_if<GridField>(&e)) {
    w.u8(2);
    put_field(w, *f);
  } else {
    throw CheckpointError("stream state cannot hold raw tensors");
  }
}

Element get_element(Reader& r) {
  const std::uint8_t tag = r.u8();
  if (tag == 2) return get_field(r);
  if (tag != 1) throw CheckpointError("unknown state element tag " + std::to_string(tag));
  if (r.u8() == 1) return CellSummaries::identity();
  const GridGeometry g = get_geometry(r);
  std::string var = r.str();
  g.validate();
  const std::size_t n = g.cells();
  std::vector<std::int64_t> count(n);
  std::vector<double> sum(n), min(n), max(n), m2(n);
  for (std::size_t i = 0; i < n; ++i) {
    count[i] = r.i64();
    sum[i] = r.f64();
    min[i] = r.f64();
    max[i] = r.f64();
    m2[i] = r.f64();
  }
  return CellSummaries(g, std::move(var), std::move(count), std::move(sum), std::move(min),
                       std::move(max), std::move(m2));
}

// Fields of the config that change what the state means.
Sha256 config_fingerprint(const StreamConfig& c) {
  Sha256Builder h;
  h.update_u64(static_cast<std::uint64_t>(c.window));
  h.update_u64(static_cast<std::uint64_t>(c.phase));
  h.update_u64(static_cast<std::uint64_t>(to_int(c.variation)));
  h.update(to_string(c.combine_mode));
  h.update_u64(c.stats.size());
  for (StatKind s : c.stats) h.update(to_string(s));
  h.update_u64(c.variables.size());
  for (const auto& v : c.variables) h.update(v);
  return h.finish();
}

}  // namespace

Bytes encode_checkpoint(const StreamConfig& config, std::int64_t next_batch,
                        const StreamState& state, const ResultTensor& latest,
                        const std::vector<Arrival>& pending, std::uint64_t files_seen,
                        std::uint64_t batches_processed) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kVersion);
  const Sha256 fp = config_fingerprint(config);
  for (auto b : fp) w.u8(b);
  w.i64(next_batch);
  w.u64(files_seen);
  w.u64(batches_processed);
  w.u64(state.size());
  for (const auto& [key, element] : state) {
    w.str(key.first);
    w.u8(static_cast<std::uint8_t>(key.second));
    put_element(w, element);
  }
  w.u64(latest.entries().size());
  for (const auto& e : latest.entries()) {
    w.u8(static_cast<std::uint8_t>(e.stat));
    w.str(e.variable);
    put_field(w, e.field);
  }
  w.u64(pending.size());
  for (const auto& a : pending) {
    w.i64(a.time);
    w.str(a.name);
    w.bytes(a.data);
  }
  Bytes out = w.take();
  const Sha256 digest = sha256(out);
  for (auto b : digest) out.push_back(static_cast<std::byte>(b));
  return out;
}

CheckpointData decode_checkpoint(std::span<const std::byte> bytes, const StreamConfig& config) {
  constexpr std::size_t kTrailer = 32;
  if (bytes.size() < sizeof kMagic + 4 + kTrailer) throw CheckpointError("checkpoint too short");
  const auto body = bytes.first(bytes.size() - kTrailer);
  Sha256 stored{};
  std::memcpy(stored.data(), bytes.data() + body.size(), kTrailer);
  if (sha256(body) != stored) throw CheckpointError("checkpoint hash mismatch");

  Reader r(body);
  for (char c : kMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) throw CheckpointError("not a checkpoint file");
  }
  if (r.u32() != kVersion) throw CheckpointError("unsupported checkpoint version");
  Sha256 fp{};
  for (auto& b : fp) b = r.u8();
  if (fp != config_fingerprint(config)) {
    throw CheckpointError("checkpoint was taken under a different stream configuration");
  }

  CheckpointData d;
  try {
    d.next_batch = r.i64();
    d.files_seen = r.u64();
    d.batches_processed = r.u64();
    for (std::size_t n = r.count(10); n > 0; --n) {
      std::string var = r.str();
      const auto stat = static_cast<StatKind>(r.u8());
      if (static_cast<int>(stat) > static_cast<int>(StatKind::kStddev)) {
        throw CheckpointError("bad stat code in checkpoint");
      }
      d.state.emplace(std::make_pair(std::move(var), stat), get_element(r));
    }
    for (std::size_t n = r.count(10); n > 0; --n) {
      const auto stat = static_cast<StatKind>(r.u8());
      if (static_cast<int>(stat) > static_cast<int>(StatKind::kStddev)) {
        throw CheckpointError("bad stat code in checkpoint");
      }
      std::string var = r.str();
      d.latest.add(stat, var, get_field(r));
    }
    for (std::size_t n = r.count(24); n > 0; --n) {
      Arrival a;
      a.time = r.i64();
      a.name = r.str();
      a.data = r.bytes();
      d.pending.push_back(std::move(a));
    }
  } catch (const CheckpointError&) {
    throw;
  } catch (const Error& e) {
    throw CheckpointError(std::string("checkpoint content invalid: ") + e.what());
  }
  if (!r.done()) throw CheckpointError("trailing bytes in checkpoint");
  return d;
}

}  // namespace gridstream
