#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace hashrate {

using uint256 = boost::multiprecision::uint256_t;

/// Binary float wide enough to represent every 256-bit integer exactly.
using UnitReal = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<320, boost::multiprecision::digit_base_2>,
    boost::multiprecision::et_off>;

/// A proof-of-work hash read as an unsigned integer in [0, S], S = 2^256 - 1.
///
/// Estimators never do arithmetic on the 256-bit form; they work with the
/// unit-normalized double returned by unit(). The integer form is kept for
/// validation (pow <= target) and for the on-disk hex representation.
class HashValue {
public:
  HashValue() = default;
  explicit HashValue(const uint256& v) : v_(v) {}
  explicit HashValue(std::uint64_t v) : v_(v) {}

  /// S, the largest hash value.
  static HashValue max();

  /// Parses up to 64 hex digits (optional 0x prefix), big-endian.
  static HashValue from_hex(std::string_view hex);

  /// Inverse of unit() at double precision. u is clamped to [0, 1].
  static HashValue from_unit(double u);

  /// 64 lowercase hex digits, zero padded.
  std::string to_hex() const;

  /// Nearest double to the integer value (truncated to 64 significant bits
  /// before the final rounding).
  double to_double() const;

  /// v / S as a double in [0, 1].
  double unit() const;

  const uint256& value() const { return v_; }

  friend bool operator==(const HashValue& a, const HashValue& b) { return a.v_ == b.v_; }
  friend std::strong_ordering operator<=>(const HashValue& a, const HashValue& b) {
    if (a.v_ < b.v_) return std::strong_ordering::less;
    if (b.v_ < a.v_) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

private:
  uint256 v_{0};
};

/// v / S in extended precision (exact to ~96 decimal digits).
UnitReal normalize_hash(const HashValue& v);

/// round(u * S), clamped to [0, S].
HashValue denormalize_hash(const UnitReal& u);

} // namespace hashrate
