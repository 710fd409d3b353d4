#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>

#include "cmsent/errors.hpp"

namespace cmsent::ser {

// ---------------------------------------------------------------------------
// FNV-1a hashes. The 32-bit variant feeds n-gram bucketing; the 64-bit
// variant fingerprints serialized artifacts.
// ---------------------------------------------------------------------------

inline std::uint32_t fnv1a32(std::string_view bytes) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 14695981039346656037ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Little-endian binary IO. Explicit byte order keeps the formats portable.
// ---------------------------------------------------------------------------

template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  U u = static_cast<U>(value);
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((u >> (8 * i)) & 0xFF);
  os.write(buf, sizeof(U));
}

template <typename T>
T read_le(std::istream& is, const std::string& what) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  char buf[sizeof(U)];
  if (!is.read(buf, sizeof(U))) {
    throw TruncationError(std::string("truncated while reading ") + what);
  }
  U u = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    u |= static_cast<U>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return static_cast<T>(u);
}

inline void write_f32_le(std::ostream& os, float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, sizeof(bits));
  write_le<std::uint32_t>(os, bits);
}

inline float read_f32_le(std::istream& is, const std::string& what) {
  std::uint32_t bits = read_le<std::uint32_t>(is, what);
  float value;
  std::memcpy(&value, &bits, sizeof(value));
  return value;
}

inline void write_f64_le(std::ostream& os, double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, sizeof(bits));
  write_le<std::uint64_t>(os, bits);
}

inline double read_f64_le(std::istream& is, const std::string& what) {
  std::uint64_t bits = read_le<std::uint64_t>(is, what);
  double value;
  std::memcpy(&value, &bits, sizeof(value));
  return value;
}

// ---------------------------------------------------------------------------
// Round-trip-exact decimal float formatting (shortest form via to_chars).
// ---------------------------------------------------------------------------

inline std::string format_float(float v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline float parse_float(std::string_view s, const std::string& what) {
  float v = 0.0f;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw FormatError(std::string("bad float value '") + std::string(s) + "' in " + what);
  }
  return v;
}

}  // namespace cmsent::ser
