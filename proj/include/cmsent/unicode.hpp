#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cmsent/unicode_tables.hpp"

namespace cmsent::uni {

inline constexpr char32_t kReplacement = 0xFFFD;

/// Decodes UTF-8 into codepoints. Invalid sequences decode to U+FFFD,
/// consuming one byte at a time.
inline std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char b = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    std::size_t len = 0;
    if (b < 0x80) {
      cp = b;
      len = 1;
    } else if ((b & 0xE0) == 0xC0) {
      cp = b & 0x1F;
      len = 2;
    } else if ((b & 0xF0) == 0xE0) {
      cp = b & 0x0F;
      len = 3;
    } else if ((b & 0xF8) == 0xF0) {
      cp = b & 0x07;
      len = 4;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      unsigned char c = static_cast<unsigned char>(s[i + k]);
      if ((c & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (c & 0x3F);
    }
    // Reject overlong forms, surrogates, and out-of-range values.
    if (ok) {
      if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
          (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
          (cp >= 0xD800 && cp <= 0xDFFF)) {
        ok = false;
      }
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode_utf8(const std::vector<char32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append_utf8(out, cp);
  return out;
}

/// True iff the codepoint's general category is P* or S*.
inline bool is_punct_or_symbol(char32_t cp) {
  using uni_tables::kPunctSymbolRangeCount;
  using uni_tables::kPunctSymbolRanges;
  std::size_t lo = 0, hi = kPunctSymbolRangeCount;
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (cp < kPunctSymbolRanges[mid].lo) {
      hi = mid;
    } else if (cp > kPunctSymbolRanges[mid].hi) {
      lo = mid + 1;
    } else {
      return true;
    }
  }
  return false;
}

/// Unicode White_Space property.
inline bool is_whitespace(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20: case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

/// Unicode simple lowercase: single-codepoint mapping, identity if none.
inline char32_t to_lower(char32_t cp) {
  // ASCII fast path.
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  using uni_tables::kSimpleLower;
  using uni_tables::kSimpleLowerCount;
  std::size_t lo = 0, hi = kSimpleLowerCount;
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (cp < kSimpleLower[mid].cp) {
      hi = mid;
    } else if (cp > kSimpleLower[mid].cp) {
      lo = mid + 1;
    } else {
      return kSimpleLower[mid].lower;
    }
  }
  return cp;
}

}  // namespace cmsent::uni
