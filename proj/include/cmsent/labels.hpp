#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "cmsent/errors.hpp"

namespace cmsent::labels {

/// The five sentiment classes, with stable integer codes 0..4.
enum class SentimentLabel : int {
  Positive = 0,
  Negative = 1,
  MixedFeelings = 2,
  NotTamil = 3,
  UnknownState = 4,
};

inline constexpr int kLabelCount = 5;

/// Version of the label codec recorded in checkpoints.
inline constexpr std::uint32_t kLabelCodecVersion = 1;

inline int label_to_index(SentimentLabel label) { return static_cast<int>(label); }

inline SentimentLabel index_to_label(int index) {
  if (index < 0 || index >= kLabelCount) {
    throw std::invalid_argument("label index out of range: " + std::to_string(index));
  }
  return static_cast<SentimentLabel>(index);
}

/// Canonical display names, index order.
inline std::string_view label_name(SentimentLabel label) {
  static constexpr std::array<std::string_view, kLabelCount> names = {
      "Positive", "Negative", "Mixed Feelings", "Not Tamil", "Unknown State"};
  return names[static_cast<std::size_t>(label_to_index(label))];
}

/// Case-insensitive parse; spaces, tabs, underscores, and hyphens are ignored
/// so the spellings seen in the wild ("Mixed_feelings", "not-Tamil",
/// "unknown state") all resolve to the same label.
inline std::optional<SentimentLabel> try_parse_label(std::string_view text) {
  std::string key;
  key.reserve(text.size());
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '_' || c == '-') continue;
    key.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c);
  }
  if (key == "positive") return SentimentLabel::Positive;
  if (key == "negative") return SentimentLabel::Negative;
  if (key == "mixedfeelings") return SentimentLabel::MixedFeelings;
  if (key == "nottamil") return SentimentLabel::NotTamil;
  if (key == "unknownstate") return SentimentLabel::UnknownState;
  return std::nullopt;
}

inline SentimentLabel parse_label(std::string_view text) {
  auto label = try_parse_label(text);
  if (!label) {
    throw LabelParseError("unknown sentiment label '" + std::string(text) + "'");
  }
  return *label;
}

}  // namespace cmsent::labels

namespace cmsent {
// The label vocabulary is also visible one level up for convenience.
using labels::SentimentLabel;
using labels::kLabelCount;
using labels::kLabelCodecVersion;
using labels::label_to_index;
using labels::index_to_label;
using labels::label_name;
using labels::try_parse_label;
using labels::parse_label;
}  // namespace cmsent
