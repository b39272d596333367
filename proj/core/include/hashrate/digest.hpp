#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace hashrate {

/// Opaque 32-byte value: block ids, report nonces and chained nonces.
/// Hex form is the bytes in storage order, lowercase, 64 characters.
struct Digest256 {
  std::array<std::uint8_t, 32> bytes{};

  static Digest256 from_hex(std::string_view hex);
  std::string to_hex() const;
  bool is_zero() const;

  friend bool operator==(const Digest256&, const Digest256&) = default;
  friend std::strong_ordering operator<=>(const Digest256&, const Digest256&) = default;
};

struct Digest256Hasher {
  std::size_t operator()(const Digest256& d) const noexcept;
};

Digest256 sha256(std::span<const std::uint8_t> data);
Digest256 sha256(std::string_view data);

/// SHA-256 over the 64-byte concatenation `left || right`.
Digest256 sha256_concat(const Digest256& left, const Digest256& right);

} // namespace hashrate
