#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "cmsent/errors.hpp"
#include "cmsent/labels.hpp"
#include "cmsent/rng.hpp"
#include "cmsent/unicode.hpp"

namespace cmsent::corpus {

struct LabeledExample {
  std::string text;
  std::optional<SentimentLabel> label;
};

struct TokenizedSentence {
  std::vector<std::string> tokens;
  std::optional<SentimentLabel> label;
};

struct DatasetSplit {
  std::vector<TokenizedSentence> train;
  std::vector<TokenizedSentence> heldout;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Tokenizer. Deterministic rules, applied in order:
//   1. split on Unicode whitespace;
//   2. peel leading/trailing punctuation-or-symbol codepoints (category P*/S*)
//      off each chunk as separate tokens, where a maximal run of one repeated
//      codepoint stays a single token ("!!" or "...");
//   3. lowercase every token via the Unicode simple mapping;
//   4. drop empty tokens.
// Interior punctuation ("don't") is left alone.
// ---------------------------------------------------------------------------

namespace detail {

inline void emit_token(std::vector<std::string>& out, const std::vector<char32_t>& cps,
                       std::size_t begin, std::size_t end) {
  if (begin >= end) return;
  std::string tok;
  for (std::size_t i = begin; i < end; ++i) uni::append_utf8(tok, uni::to_lower(cps[i]));
  out.push_back(std::move(tok));
}

inline void split_chunk(std::vector<std::string>& out, const std::vector<char32_t>& cps,
                        std::size_t begin, std::size_t end) {
  // Peel leading runs of identical punctuation.
  while (begin < end && uni::is_punct_or_symbol(cps[begin])) {
    std::size_t run = begin + 1;
    while (run < end && cps[run] == cps[begin]) ++run;
    emit_token(out, cps, begin, run);
    begin = run;
  }
  // Peel trailing runs; they are emitted after the core, in text order.
  std::vector<std::pair<std::size_t, std::size_t>> tail;
  while (end > begin && uni::is_punct_or_symbol(cps[end - 1])) {
    std::size_t run = end - 1;
    while (run > begin && cps[run - 1] == cps[end - 1]) --run;
    tail.emplace_back(run, end);
    end = run;
  }
  emit_token(out, cps, begin, end);
  for (auto it = tail.rbegin(); it != tail.rend(); ++it) emit_token(out, cps, it->first, it->second);
}

}  // namespace detail

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::vector<char32_t> cps = uni::decode_utf8(text);
  std::size_t i = 0;
  while (i < cps.size()) {
    if (uni::is_whitespace(cps[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && !uni::is_whitespace(cps[j])) ++j;
    detail::split_chunk(out, cps, i, j);
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// TSV ingestion: `text<TAB>label` or bare `text` per non-empty line.
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_blank(std::string_view s) {
  for (char32_t cp : uni::decode_utf8(s)) {
    if (!uni::is_whitespace(cp)) return false;
  }
  return true;
}

}  // namespace detail

inline std::vector<LabeledExample> read_tsv(std::istream& in) {
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    std::size_t tab2 = tab == std::string::npos ? std::string::npos : line.find('\t', tab + 1);
    if (tab2 != std::string::npos) {
      throw TsvFormatError("line " + std::to_string(line_no) + ": expected at most one tab");
    }
    LabeledExample ex;
    if (tab == std::string::npos) {
      ex.text = line;
    } else {
      ex.text = line.substr(0, tab);
      std::string raw = line.substr(tab + 1);
      auto label = try_parse_label(raw);
      if (!label) {
        throw LabelParseError("line " + std::to_string(line_no) + ": unknown sentiment label '" +
                              raw + "'");
      }
      ex.label = *label;
    }
    if (detail::is_blank(ex.text)) {
      throw TsvFormatError("line " + std::to_string(line_no) + ": empty text field");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

inline void write_tsv(std::ostream& out, const std::vector<LabeledExample>& examples) {
  for (const auto& ex : examples) {
    out << ex.text;
    if (ex.label) out << '\t' << label_name(*ex.label);
    out << '\n';
  }
}

/// Tokenizes every example; sentences that tokenize to nothing are skipped
/// (counted via `dropped` when given).
inline std::vector<TokenizedSentence> tokenize_examples(const std::vector<LabeledExample>& examples,
                                                        std::size_t* dropped = nullptr) {
  std::vector<TokenizedSentence> out;
  out.reserve(examples.size());
  std::size_t skipped = 0;
  for (const auto& ex : examples) {
    TokenizedSentence s{tokenize(ex.text), ex.label};
    if (s.tokens.empty()) {
      ++skipped;
      continue;
    }
    out.push_back(std::move(s));
  }
  if (dropped) *dropped = skipped;
  return out;
}

// ---------------------------------------------------------------------------
// Validation split: SplitMix64-fed Fisher-Yates shuffle, then the last
// round(fraction * N) items become the heldout set.
// ---------------------------------------------------------------------------

inline DatasetSplit split_validation(const std::vector<TokenizedSentence>& data, double fraction,
                                     std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must be in [0, 1): " +
                                std::to_string(fraction));
  }
  std::vector<TokenizedSentence> shuffled = data;
  SplitMix64 rng(seed);
  seeded_shuffle(shuffled, rng);
  std::size_t heldout_count =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(shuffled.size())));
  DatasetSplit split;
  split.seed = seed;
  split.heldout.assign(shuffled.end() - static_cast<std::ptrdiff_t>(heldout_count), shuffled.end());
  shuffled.resize(shuffled.size() - heldout_count);
  split.train = std::move(shuffled);
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic fixture: class-separable by construction. Every class-k sentence
// contains marker token k at two distinct positions; fillers are shared across
// classes but drawn with a per-class block bias.
// ---------------------------------------------------------------------------

namespace detail {

inline const std::vector<std::string>& synth_markers() {
  static const std::vector<std::string> markers = {"semma", "mokka", "paravala", "subscribe",
                                                   "theriyala"};
  return markers;
}

/// Shared filler vocabulary. Every filler can appear in every class, but
/// sampling is biased towards the class's own 5-word block (rows below) so the
/// corpus carries real co-occurrence structure for the embedding stage.
inline const std::vector<std::string>& synth_fillers() {
  static const std::vector<std::string> fillers = {
      "movie",  "padam", "song",    "scene",  "bgm",     // block 0
      "vera",   "level", "thala",   "mass",   "first",   // block 1
      "day",    "show",  "watch",   "nalla",  "irukku",  // block 2
      "enna",   "da",    "the",     "is",     "trailer",  // block 3
      "climax", "hero",  "music",   "dance",  "this"};   // block 4
  return fillers;
}

constexpr std::size_t kSynthBlockSize = 5;
constexpr double kSynthBlockBias = 0.85;

}  // namespace detail

inline std::vector<LabeledExample> synth_fixture(std::uint64_t seed, std::size_t n) {
  if (n < 5) {
    throw std::invalid_argument("synth_fixture needs n >= 5, got " + std::to_string(n));
  }
  const auto& markers = detail::synth_markers();
  const auto& fillers = detail::synth_fillers();
  SplitMix64 rng(seed);
  std::vector<LabeledExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    int cls = static_cast<int>(i % kLabelCount);
    std::size_t slots = 6 + rng.next_below(4);  // 6..9 tokens per sentence
    // The marker appears at two distinct positions so the encoder sees class
    // evidence regardless of truncation direction or position.
    std::size_t marker_pos = rng.next_below(slots);
    std::size_t marker_pos2 = rng.next_below(slots - 1);
    if (marker_pos2 >= marker_pos) ++marker_pos2;
    std::string text;
    for (std::size_t t = 0; t < slots; ++t) {
      if (!text.empty()) text.push_back(' ');
      if (t == marker_pos || t == marker_pos2) {
        text += markers[static_cast<std::size_t>(cls)];
      } else if (rng.next_double() < detail::kSynthBlockBias) {
        std::size_t block = static_cast<std::size_t>(cls) * detail::kSynthBlockSize;
        text += fillers[block + rng.next_below(detail::kSynthBlockSize)];
      } else {
        text += fillers[rng.next_below(fillers.size())];
      }
    }
    out.push_back(LabeledExample{std::move(text), index_to_label(cls)});
  }
  return out;
}

}  // namespace cmsent::corpus
