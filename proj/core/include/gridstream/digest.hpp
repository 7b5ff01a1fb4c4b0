#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace gridstream {

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::span<const std::byte> data);
Sha256 sha256(std::string_view text);
std::string to_hex(std::span<const std::uint8_t> bytes);

// Incremental hashing for content-addressed identifiers.
class Sha256Builder {
 public:
  Sha256Builder();
  ~Sha256Builder();
  Sha256Builder(const Sha256Builder&) = delete;
  Sha256Builder& operator=(const Sha256Builder&) = delete;

  Sha256Builder& update(std::span<const std::byte> data);
  Sha256Builder& update(std::string_view text);
  Sha256Builder& update_u64(std::uint64_t value);
  Sha256 finish();

 private:
  void* ctx_;
};

}  // namespace gridstream
