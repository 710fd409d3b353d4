#!/usr/bin/env python3
"""Regenerates include/cmsent/unicode_tables.hpp from Python's unicodedata.

Emits two tables:
  * closed [lo, hi] codepoint ranges whose general category is P* or S*
  * simple lowercase mappings (single-codepoint only; U+0130 maps to U+0069)

Run from the repository root:  python3 scripts/gen_unicode_tables.py
"""

import unicodedata
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "include" / "cmsent" / "unicode_tables.hpp"


def punct_symbol_ranges():
    ranges = []
    start = None
    for cp in range(0x110000):
        ps = unicodedata.category(chr(cp))[0] in "PS"
        if ps and start is None:
            start = cp
        elif not ps and start is not None:
            ranges.append((start, cp - 1))
            start = None
    if start is not None:
        ranges.append((start, 0x10FFFF))
    return ranges


def simple_lower_pairs():
    pairs = []
    for cp in range(0x110000):
        if cp == 0x130:
            pairs.append((cp, 0x69))
            continue
        low = chr(cp).lower()
        if len(low) == 1 and low != chr(cp):
            pairs.append((cp, ord(low)))
    return pairs


def fmt_rows(items, per_line, fmt):
    lines = []
    for i in range(0, len(items), per_line):
        lines.append("    " + " ".join(fmt(x) for x in items[i : i + per_line]))
    return "\n".join(lines)


def main():
    ranges = punct_symbol_ranges()
    lowers = simple_lower_pairs()
    body = f"""// Generated by scripts/gen_unicode_tables.py from Python unicodedata
// (Unicode {unicodedata.unidata_version}). Do not edit by hand.
#pragma once

#include <cstdint>
#include <cstddef>

namespace cmsent::uni_tables {{

struct CpRange {{
  char32_t lo;
  char32_t hi;
}};

struct CpPair {{
  char32_t cp;
  char32_t lower;
}};

// Closed ranges of codepoints with general category P* or S*, ascending.
inline constexpr CpRange kPunctSymbolRanges[] = {{
{fmt_rows(ranges, 4, lambda r: f"{{0x{r[0]:X}, 0x{r[1]:X}}},")}
}};
inline constexpr std::size_t kPunctSymbolRangeCount =
    sizeof(kPunctSymbolRanges) / sizeof(kPunctSymbolRanges[0]);

// Simple lowercase mappings (cp != lower(cp)), ascending by cp.
inline constexpr CpPair kSimpleLower[] = {{
{fmt_rows(lowers, 4, lambda p: f"{{0x{p[0]:X}, 0x{p[1]:X}}},")}
}};
inline constexpr std::size_t kSimpleLowerCount =
    sizeof(kSimpleLower) / sizeof(kSimpleLower[0]);

}}  // namespace cmsent::uni_tables
"""
    OUT.write_text(body)
    print(f"wrote {OUT}: {len(ranges)} ranges, {len(lowers)} lowercase pairs")


if __name__ == "__main__":
    main()
