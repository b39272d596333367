#include "hashrate/hash_value.hpp"

#include <cmath>

#include "hashrate/errors.hpp"

namespace hashrate {

namespace {

const uint256& max_value() {
  static const uint256 s = ~uint256(0);
  return s;
}

const UnitReal& max_as_real() {
  static const UnitReal s(max_value());
  return s;
}

int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

} // namespace

HashValue HashValue::max() { return HashValue(max_value()); }

HashValue HashValue::from_hex(std::string_view hex) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  if (hex.empty() || hex.size() > 64) {
    throw InvalidArgument("hash value must have 1 to 64 hex digits, got " +
                          std::to_string(hex.size()));
  }
  uint256 v = 0;
  for (char c : hex) {
    const int nib = hex_nibble(c);
    if (nib < 0) throw InvalidArgument("invalid hex digit in '" + std::string(hex) + "'");
    v = (v << 4) | nib;
  }
  return HashValue(v);
}

HashValue HashValue::from_unit(double u) {
  if (!(u > 0.0)) return HashValue();
  if (u >= 1.0) return max();
  int exponent = 0;
  const double mantissa = std::frexp(u, &exponent); // u = mantissa * 2^exponent
  const auto bits = static_cast<std::uint64_t>(std::ldexp(mantissa, 53));
  // u * 2^256 = bits * 2^(exponent - 53 + 256)
  const int shift = exponent + 203;
  uint256 v(bits);
  if (shift >= 0) {
    v <<= shift;
  } else if (shift > -64) {
    v >>= -shift;
  } else {
    v = 0;
  }
  return HashValue(v);
}

std::string HashValue::to_hex() const {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(64, '0');
  uint256 v = v_;
  for (int i = 63; i >= 0 && v != 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[static_cast<unsigned>(v & 0xf)];
    v >>= 4;
  }
  return out;
}

double HashValue::to_double() const {
  if (v_ == 0) return 0.0;
  const auto msb = static_cast<int>(boost::multiprecision::msb(v_));
  if (msb < 64) return static_cast<double>(static_cast<std::uint64_t>(v_));
  const int shift = msb - 63;
  const auto top = static_cast<std::uint64_t>(v_ >> shift);
  return std::ldexp(static_cast<double>(top), shift);
}

double HashValue::unit() const {
  // v / (2^256 - 1) and v / 2^256 agree to far below double resolution.
  return std::ldexp(to_double(), -256);
}

UnitReal normalize_hash(const HashValue& v) { return UnitReal(v.value()) / max_as_real(); }

HashValue denormalize_hash(const UnitReal& u) {
  if (u <= 0) return HashValue();
  if (u >= 1) return HashValue::max();
  const UnitReal scaled = boost::multiprecision::round(u * max_as_real());
  return HashValue(scaled.convert_to<uint256>());
}

} // namespace hashrate
