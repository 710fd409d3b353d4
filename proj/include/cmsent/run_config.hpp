#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>

#include "cmsent/embedding.hpp"
#include "cmsent/errors.hpp"
#include "cmsent/pipeline.hpp"

namespace cmsent::runcfg {

/// Every tunable of the pipeline in one place. Values resolve with the
/// precedence: command-line flag > config file > built-in default.
struct RunConfig {
  // Embedding training
  std::uint64_t seed = 0;
  int dim = 100;
  int minn = 3;
  int maxn = 6;
  int window = 5;
  int negatives = 5;
  int embed_epochs = 5;
  double embed_lr = 0.05;
  int bucket_count = 100000;
  int min_count = 1;
  double subsample_t = 1e-4;

  // Classifier training
  int epochs = 50;
  int batch_size = 32;
  double val_fraction = 0.1;
  int max_seq_len = 60;
  int hidden = 64;
  bool lang_tag = true;
  bool bidirectional = true;

  // Paths
  std::string out_dir = "out";
  std::string data;        // labeled TSV
  std::string embedding;   // vector file (the .ngrams companion sits beside it)
  std::string wordlist;    // known-words list
  std::string checkpoint;  // classifier checkpoint
  std::string input;       // raw text file for prediction

  embedding::EmbedConfig embed_config() const {
    embedding::EmbedConfig cfg;
    cfg.dim = dim;
    cfg.minn = minn;
    cfg.maxn = maxn;
    cfg.window = window;
    cfg.negatives = negatives;
    cfg.epochs = embed_epochs;
    cfg.initial_lr = embed_lr;
    cfg.bucket_count = bucket_count;
    cfg.min_count = min_count;
    cfg.subsample_t = subsample_t;
    cfg.seed = derive_seed(seed, 1);
    return cfg;
  }

  pipeline::TrainConfig train_config() const {
    pipeline::TrainConfig cfg;
    cfg.batch_size = batch_size;
    cfg.epochs = epochs;
    cfg.val_fraction = val_fraction;
    cfg.max_seq_len = max_seq_len;
    cfg.hidden = hidden;
    cfg.seed = derive_seed(seed, 2);
    return cfg;
  }

  pipeline::FeatureConfig feature_config() const {
    pipeline::FeatureConfig cfg;
    cfg.use_lang_tag = lang_tag;
    cfg.bidirectional = bidirectional;
    return cfg;
  }

  void validate() const {
    embed_config().validate();
    train_config().validate();
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline long long parse_int(std::string_view value, const std::string& where) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(where + ": expected an integer, got '" + std::string(value) + "'");
  }
  return out;
}

inline std::uint64_t parse_u64(std::string_view value, const std::string& where) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(where + ": expected an unsigned integer, got '" + std::string(value) + "'");
  }
  return out;
}

inline double parse_double(std::string_view value, const std::string& where) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(where + ": expected a number, got '" + std::string(value) + "'");
  }
  return out;
}

inline bool parse_bool(std::string_view value, const std::string& where) {
  std::string lower;
  for (char c : value) lower.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32) : c);
  if (lower == "true" || lower == "1" || lower == "yes" || lower == "on") return true;
  if (lower == "false" || lower == "0" || lower == "no" || lower == "off") return false;
  throw ConfigError(where + ": expected a boolean, got '" + std::string(value) + "'");
}

}  // namespace detail

/// Applies one key=value assignment. `where` names the source for error
/// messages (e.g. "run.cfg:12").
inline void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value,
                          const std::string& where) {
  using namespace detail;
  auto as_int = [&](int lo) {
    long long v = parse_int(value, where);
    if (v < lo || v > 1000000000LL) {
      throw ConfigError(where + ": value " + std::to_string(v) + " out of range");
    }
    return static_cast<int>(v);
  };
  if (key == "seed") cfg.seed = parse_u64(value, where);
  else if (key == "dim") cfg.dim = as_int(1);
  else if (key == "minn") cfg.minn = as_int(1);
  else if (key == "maxn") cfg.maxn = as_int(1);
  else if (key == "window") cfg.window = as_int(1);
  else if (key == "negatives") cfg.negatives = as_int(0);
  else if (key == "embed_epochs") cfg.embed_epochs = as_int(0);
  else if (key == "embed_lr") cfg.embed_lr = parse_double(value, where);
  else if (key == "bucket_count") cfg.bucket_count = as_int(1);
  else if (key == "min_count") cfg.min_count = as_int(1);
  else if (key == "subsample_t") cfg.subsample_t = parse_double(value, where);
  else if (key == "epochs") cfg.epochs = as_int(0);
  else if (key == "batch_size") cfg.batch_size = as_int(1);
  else if (key == "val_fraction") cfg.val_fraction = parse_double(value, where);
  else if (key == "max_seq_len") cfg.max_seq_len = as_int(1);
  else if (key == "hidden") cfg.hidden = as_int(1);
  else if (key == "lang_tag") cfg.lang_tag = parse_bool(value, where);
  else if (key == "bidirectional") cfg.bidirectional = parse_bool(value, where);
  else if (key == "out_dir") cfg.out_dir = std::string(value);
  else if (key == "data") cfg.data = std::string(value);
  else if (key == "embedding") cfg.embedding = std::string(value);
  else if (key == "wordlist") cfg.wordlist = std::string(value);
  else if (key == "checkpoint") cfg.checkpoint = std::string(value);
  else if (key == "input") cfg.input = std::string(value);
  else throw ConfigError(where + ": unknown config key '" + std::string(key) + "'");
}

/// Reads `key = value` lines into `cfg`. Blank lines and lines whose first
/// non-space character is '#' are skipped.
inline void load_config(RunConfig& cfg, std::istream& is, const std::string& source_name) {
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string_view view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    std::size_t eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where + ": expected key=value, got '" + std::string(view) + "'");
    }
    std::string_view key = detail::trim(view.substr(0, eq));
    std::string_view value = detail::trim(view.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    apply_setting(cfg, key, value, where);
  }
  if (is.bad()) throw FileError("read failed: " + source_name);
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FileError("cannot open config file: " + path);
  load_config(cfg, is, path);
}

}  // namespace cmsent::runcfg
