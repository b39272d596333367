#include "hashrate/digest.hpp"

#include <cstring>

#include <openssl/sha.h>

#include "hashrate/errors.hpp"

namespace hashrate {

namespace {

int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

constexpr char kHexDigits[] = "0123456789abcdef";

} // namespace

Digest256 Digest256::from_hex(std::string_view hex) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  if (hex.size() != 64) {
    throw InvalidArgument("expected 64 hex characters, got " + std::to_string(hex.size()));
  }
  Digest256 out;
  for (std::size_t i = 0; i < 32; ++i) {
    const int hi = hex_nibble(hex[2 * i]);
    const int lo = hex_nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw InvalidArgument("invalid hex digit in '" + std::string(hex) + "'");
    out.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

std::string Digest256::to_hex() const {
  std::string out(64, '0');
  for (std::size_t i = 0; i < 32; ++i) {
    out[2 * i] = kHexDigits[bytes[i] >> 4];
    out[2 * i + 1] = kHexDigits[bytes[i] & 0x0f];
  }
  return out;
}

bool Digest256::is_zero() const {
  for (auto b : bytes)
    if (b != 0) return false;
  return true;
}

std::size_t Digest256Hasher::operator()(const Digest256& d) const noexcept {
  std::size_t h;
  std::memcpy(&h, d.bytes.data(), sizeof h);
  return h;
}

Digest256 sha256(std::span<const std::uint8_t> data) {
  Digest256 out;
  SHA256(data.data(), data.size(), out.bytes.data());
  return out;
}

Digest256 sha256(std::string_view data) {
  return sha256(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

Digest256 sha256_concat(const Digest256& left, const Digest256& right) {
  std::array<std::uint8_t, 64> buf;
  std::memcpy(buf.data(), left.bytes.data(), 32);
  std::memcpy(buf.data() + 32, right.bytes.data(), 32);
  return sha256(buf);
}

} // namespace hashrate
