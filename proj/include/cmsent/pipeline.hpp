#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "cmsent/corpus.hpp"
#include "cmsent/embedding.hpp"
#include "cmsent/errors.hpp"
#include "cmsent/eval.hpp"
#include "cmsent/labels.hpp"
#include "cmsent/langid.hpp"
#include "cmsent/model.hpp"
#include "cmsent/rng.hpp"
#include "cmsent/serialize.hpp"

namespace cmsent::pipeline {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Which feature and encoder variant to build. The four ablation variants
/// enumerate the cross product of the two switches.
struct FeatureConfig {
  bool use_lang_tag = true;
  bool bidirectional = true;

  int feature_dim(int emb_dim) const {
    return emb_dim + (use_lang_tag ? langid::kTagDim : 0);
  }

  std::string variant_name() const {
    std::string name = bidirectional ? "Bi-LSTM" : "LSTM";
    if (use_lang_tag) name += " + lang tag";
    return name;
  }
};

struct TrainConfig {
  int batch_size = 32;
  int epochs = 50;
  double val_fraction = 0.1;
  int max_seq_len = 60;
  int hidden = 64;
  double lr = 1e-3;  // Adam learning rate
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (!(val_fraction >= 0.0) || val_fraction >= 1.0) {
      throw ConfigError("val_fraction must be in [0, 1)");
    }
    if (max_seq_len < 1) throw ConfigError("max_seq_len must be >= 1");
    if (hidden < 1) throw ConfigError("hidden must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  }
};

// ---------------------------------------------------------------------------
// Featurization
// ---------------------------------------------------------------------------

/// Maps tokens to feature vectors: the subword embedding mean, optionally
/// concatenated with the two-dimensional language-tag one-hot. Vectors are
/// cached per token.
class Featurizer {
 public:
  Featurizer(const embedding::EmbeddingModel& emb, const langid::Wordlist& wordlist,
             FeatureConfig feature)
      : emb_(&emb), wordlist_(&wordlist), feature_(feature) {}

  int feature_dim() const { return feature_.feature_dim(emb_->config.dim); }
  const FeatureConfig& feature_config() const { return feature_; }

  const std::vector<double>& token_features(const std::string& token) {
    auto it = cache_.find(token);
    if (it != cache_.end()) return it->second;
    std::vector<double> vec = emb_->word_vector(token);
    if (feature_.use_lang_tag) {
      auto tag = langid::encode(langid::tag_token(token, *wordlist_));
      vec.insert(vec.end(), tag.begin(), tag.end());
    }
    return cache_.emplace(token, std::move(vec)).first->second;
  }

 private:
  const embedding::EmbeddingModel* emb_;
  const langid::Wordlist* wordlist_;
  FeatureConfig feature_;
  std::unordered_map<std::string, std::vector<double>> cache_;
};

/// Builds a right-padded batch from tokenized sentences. Sequences longer
/// than `max_seq_len` keep their first `max_seq_len` tokens; `steps` is the
/// longest kept length in the batch. With `with_labels`, every sentence must
/// carry a label.
inline model::SequenceBatch pad_batch(Featurizer& featurizer,
                                      std::span<const corpus::TokenizedSentence> sentences,
                                      int max_seq_len, bool with_labels) {
  if (sentences.empty()) throw std::invalid_argument("pad_batch: empty batch");
  if (max_seq_len < 1) throw std::invalid_argument("pad_batch: max_seq_len must be >= 1");
  model::SequenceBatch batch;
  batch.batch = static_cast<int>(sentences.size());
  batch.dim = featurizer.feature_dim();
  for (const auto& sent : sentences) {
    const int len = std::min(static_cast<int>(sent.tokens.size()), max_seq_len);
    batch.steps = std::max(batch.steps, len);
    batch.mask_len.push_back(len);
  }
  batch.x.assign(static_cast<std::size_t>(batch.batch) * static_cast<std::size_t>(batch.steps) *
                     static_cast<std::size_t>(batch.dim),
                 0.0);
  for (int b = 0; b < batch.batch; ++b) {
    const auto& sent = sentences[static_cast<std::size_t>(b)];
    const int len = batch.mask_len[static_cast<std::size_t>(b)];
    for (int t = 0; t < len; ++t) {
      const auto& vec = featurizer.token_features(sent.tokens[static_cast<std::size_t>(t)]);
      double* dst = batch.x.data() +
                    (static_cast<std::size_t>(b) * static_cast<std::size_t>(batch.steps) +
                     static_cast<std::size_t>(t)) *
                        static_cast<std::size_t>(batch.dim);
      std::copy(vec.begin(), vec.end(), dst);
    }
    if (with_labels) {
      if (!sent.label.has_value()) {
        throw std::invalid_argument("pad_batch: sentence without label in labeled batch");
      }
      batch.labels.push_back(labels::label_to_index(*sent.label));
    }
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Checkpoint
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[4] = {'C', 'M', 'S', 'C'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

struct Checkpoint {
  FeatureConfig feature;
  TrainConfig train;
  model::ModelConfig model_config;
  model::ClassifierParams params;
  std::uint64_t embedding_hash = 0;  // embedding::content_hash of the paired model
};

inline void save_checkpoint(const Checkpoint& ck, std::ostream& os) {
  os.write(kCheckpointMagic, 4);
  ser::write_le<std::uint8_t>(os, kCheckpointVersion);
  ser::write_le<std::uint8_t>(os, ck.feature.use_lang_tag ? 1 : 0);
  ser::write_le<std::uint8_t>(os, ck.feature.bidirectional ? 1 : 0);
  ser::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ck.train.batch_size));
  ser::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ck.train.epochs));
  ser::write_f64_le(os, ck.train.val_fraction);
  ser::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ck.train.max_seq_len));
  ser::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ck.train.hidden));
  ser::write_f64_le(os, ck.train.lr);
  ser::write_le<std::uint64_t>(os, ck.train.seed);
  ser::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ck.model_config.input_dim));
  ser::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ck.model_config.hidden));
  ser::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ck.model_config.classes));
  ser::write_le<std::uint8_t>(os, ck.model_config.bidirectional ? 1 : 0);
  ser::write_le<std::uint64_t>(os, ck.embedding_hash);
  ser::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(ck.params.flat.size()));
  for (double v : ck.params.flat) ser::write_f64_le(os, v);
}

inline Checkpoint load_checkpoint(std::istream& is) {
  char magic[4] = {0, 0, 0, 0};
  is.read(magic, 4);
  if (is.gcount() != 4) throw TruncationError("checkpoint: missing magic");
  if (!std::equal(magic, magic + 4, kCheckpointMagic)) {
    throw BadMagicError("checkpoint: bad magic, not a classifier checkpoint");
  }
  auto version = ser::read_le<std::uint8_t>(is, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.feature.use_lang_tag = ser::read_le<std::uint8_t>(is, "use_lang_tag") != 0;
  ck.feature.bidirectional = ser::read_le<std::uint8_t>(is, "feature bidirectional") != 0;
  ck.train.batch_size = static_cast<int>(ser::read_le<std::uint32_t>(is, "batch_size"));
  ck.train.epochs = static_cast<int>(ser::read_le<std::uint32_t>(is, "epochs"));
  ck.train.val_fraction = ser::read_f64_le(is, "val_fraction");
  ck.train.max_seq_len = static_cast<int>(ser::read_le<std::uint32_t>(is, "max_seq_len"));
  ck.train.hidden = static_cast<int>(ser::read_le<std::uint32_t>(is, "hidden"));
  ck.train.lr = ser::read_f64_le(is, "lr");
  ck.train.seed = ser::read_le<std::uint64_t>(is, "seed");
  ck.model_config.input_dim = static_cast<int>(ser::read_le<std::uint32_t>(is, "input_dim"));
  ck.model_config.hidden = static_cast<int>(ser::read_le<std::uint32_t>(is, "model hidden"));
  ck.model_config.classes = static_cast<int>(ser::read_le<std::uint32_t>(is, "classes"));
  ck.model_config.bidirectional = ser::read_le<std::uint8_t>(is, "model bidirectional") != 0;
  ck.embedding_hash = ser::read_le<std::uint64_t>(is, "embedding hash");
  ck.train.validate();
  ck.model_config.validate();
  const auto stored = ser::read_le<std::uint64_t>(is, "parameter count");
  const std::uint64_t expected = model::ClassifierParams::param_count(ck.model_config);
  if (stored != expected) {
    throw DimensionError("checkpoint: parameter count " + std::to_string(stored) +
                         " does not match model shape (expected " + std::to_string(expected) + ")");
  }
  ck.params = model::ClassifierParams(ck.model_config);
  for (std::size_t idx = 0; idx < ck.params.flat.size(); ++idx) {
    ck.params.flat[idx] = ser::read_f64_le(is, "parameter " + std::to_string(idx));
    if (!std::isfinite(ck.params.flat[idx])) {
      throw FormatError("checkpoint: non-finite parameter at index " + std::to_string(idx));
    }
  }
  return ck;
}

inline void save_checkpoint_file(const Checkpoint& ck, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FileError("cannot open for writing: " + path);
  save_checkpoint(ck, os);
  os.flush();
  if (!os) throw FileError("write failed: " + path);
}

inline Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FileError("cannot open: " + path);
  return load_checkpoint(is);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;       // mean per-example loss, as trained
  double train_accuracy = 0.0;   // accuracy of the in-training forward passes
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double val_weighted_f1 = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochStats> history;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
  eval::MetricsReport final_val;  // clean validation pass with the final parameters
};

namespace detail {

inline int argmax_class(const double* probs, int classes) {
  int best = 0;
  for (int k = 1; k < classes; ++k) {
    if (probs[static_cast<std::size_t>(k)] > probs[static_cast<std::size_t>(best)]) best = k;
  }
  return best;  // ties keep the lowest index
}

struct ValStats {
  double loss = 0.0;
  eval::MetricsReport report;
};

inline ValStats run_validation(const model::ClassifierParams& params, Featurizer& featurizer,
                               const std::vector<corpus::TokenizedSentence>& val, int batch_size,
                               int max_seq_len) {
  ValStats stats;
  if (val.empty()) {
    stats.report = eval::compute_metrics(eval::ConfusionMatrix(labels::kLabelCount));
    return stats;
  }
  eval::ConfusionMatrix cm(labels::kLabelCount);
  double loss_sum = 0.0;
  for (std::size_t begin = 0; begin < val.size(); begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(val.size(), begin + static_cast<std::size_t>(batch_size));
    auto batch = pad_batch(featurizer, {val.data() + begin, end - begin}, max_seq_len, true);
    auto out = model::forward_batch(params, batch);
    loss_sum += out.loss * static_cast<double>(batch.batch);
    for (int b = 0; b < batch.batch; ++b) {
      const double* probs = out.probs.data() +
                            static_cast<std::size_t>(b) * static_cast<std::size_t>(labels::kLabelCount);
      cm.add(batch.labels[static_cast<std::size_t>(b)], argmax_class(probs, labels::kLabelCount));
    }
  }
  stats.loss = loss_sum / static_cast<double>(val.size());
  stats.report = eval::compute_metrics(cm);
  return stats;
}

}  // namespace detail

/// Trains the classifier on labeled, tokenized sentences. The data is split
/// into train/validation with derive_seed(seed, 0); parameters initialize
/// with derive_seed(seed, 1); epoch e shuffles with derive_seed(seed, 2 + e).
/// Every example must carry a label.
inline TrainResult train(const std::vector<corpus::TokenizedSentence>& data,
                         const embedding::EmbeddingModel& emb, const langid::Wordlist& wordlist,
                         const FeatureConfig& fc, const TrainConfig& tc,
                         const std::function<void(const EpochStats&)>& on_epoch = {}) {
  tc.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  for (const auto& sent : data) {
    if (!sent.label.has_value()) throw std::invalid_argument("train: unlabeled example");
  }

  corpus::DatasetSplit split = corpus::split_validation(data, tc.val_fraction, derive_seed(tc.seed, 0));
  if (split.train.empty()) throw UserInputError("training split is empty; lower val_fraction");

  Featurizer featurizer(emb, wordlist, fc);
  model::ModelConfig mc;
  mc.input_dim = featurizer.feature_dim();
  mc.hidden = tc.hidden;
  mc.classes = labels::kLabelCount;
  mc.bidirectional = fc.bidirectional;
  model::ClassifierParams params = model::init_params(mc, derive_seed(tc.seed, 1));
  model::AdamState adam(params.flat.size(), tc.lr);

  TrainResult result;
  result.train_size = split.train.size();
  result.val_size = split.heldout.size();

  const std::size_t n_train = split.train.size();
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<corpus::TokenizedSentence> batch_sentences;

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    SplitMix64 shuffle_rng(derive_seed(tc.seed, 2 + static_cast<std::uint64_t>(epoch)));
    std::iota(order.begin(), order.end(), std::size_t{0});
    seeded_shuffle(order, shuffle_rng);

    double loss_sum = 0.0;
    std::uint64_t correct = 0;
    int batch_index = 0;
    for (std::size_t begin = 0; begin < n_train; begin += static_cast<std::size_t>(tc.batch_size)) {
      const std::size_t end = std::min(n_train, begin + static_cast<std::size_t>(tc.batch_size));
      batch_sentences.clear();
      for (std::size_t pos = begin; pos < end; ++pos) {
        batch_sentences.push_back(split.train[order[pos]]);
      }
      auto batch = pad_batch(featurizer, batch_sentences, tc.max_seq_len, true);
      ++batch_index;
      try {
        model::BatchCache cache;
        auto out = model::forward_batch(params, batch, &cache);
        if (!std::isfinite(out.loss)) {
          throw NumericError("non-finite training loss");
        }
        loss_sum += out.loss * static_cast<double>(batch.batch);
        for (int b = 0; b < batch.batch; ++b) {
          const double* probs = out.probs.data() + static_cast<std::size_t>(b) *
                                                       static_cast<std::size_t>(labels::kLabelCount);
          if (detail::argmax_class(probs, labels::kLabelCount) ==
              batch.labels[static_cast<std::size_t>(b)]) {
            ++correct;
          }
        }
        auto grad = model::backward_batch(params, cache);
        model::adam_step(params.flat, grad, adam);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch + 1) + " batch " +
                           std::to_string(batch_index) + ": " + e.what());
      }
    }

    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.train_loss = loss_sum / static_cast<double>(n_train);
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(n_train);
    auto val = detail::run_validation(params, featurizer, split.heldout, tc.batch_size,
                                      tc.max_seq_len);
    stats.val_loss = val.loss;
    stats.val_accuracy = val.report.accuracy;
    stats.val_weighted_f1 = val.report.weighted_f1;
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }

  result.final_val =
      detail::run_validation(params, featurizer, split.heldout, tc.batch_size, tc.max_seq_len)
          .report;
  result.checkpoint.feature = fc;
  result.checkpoint.train = tc;
  result.checkpoint.model_config = mc;
  result.checkpoint.params = std::move(params);
  result.checkpoint.embedding_hash = embedding::content_hash(emb);
  return result;
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

struct Prediction {
  labels::SentimentLabel label = labels::SentimentLabel::UnknownState;
  std::array<double, labels::kLabelCount> probs{};
  bool empty_input = false;  // nothing survived tokenization; uniform fallback
};

/// Classifies raw texts with a checkpoint and its paired embedding model.
/// Throws HashMismatchError when the embedding is not the one the checkpoint
/// was trained against, and DimensionError when the feature shape disagrees.
inline std::vector<Prediction> predict(const Checkpoint& ck, const embedding::EmbeddingModel& emb,
                                       const langid::Wordlist& wordlist,
                                       const std::vector<std::string>& texts) {
  const std::uint64_t hash = embedding::content_hash(emb);
  if (hash != ck.embedding_hash) {
    throw HashMismatchError("embedding content hash does not match checkpoint");
  }
  if (ck.feature.feature_dim(emb.config.dim) != ck.model_config.input_dim) {
    throw DimensionError("embedding dim " + std::to_string(emb.config.dim) +
                         " is incompatible with checkpoint input_dim " +
                         std::to_string(ck.model_config.input_dim));
  }

  Featurizer featurizer(emb, wordlist, ck.feature);
  std::vector<Prediction> out(texts.size());
  std::vector<corpus::TokenizedSentence> pending;
  std::vector<std::size_t> pending_index;
  const int chunk = std::max(ck.train.batch_size, 1);

  auto flush = [&]() {
    if (pending.empty()) return;
    auto batch = pad_batch(featurizer, pending, ck.train.max_seq_len, false);
    auto fwd = model::forward_batch(ck.params, batch);
    for (int b = 0; b < batch.batch; ++b) {
      Prediction& p = out[pending_index[static_cast<std::size_t>(b)]];
      const double* probs =
          fwd.probs.data() + static_cast<std::size_t>(b) * static_cast<std::size_t>(labels::kLabelCount);
      for (int k = 0; k < labels::kLabelCount; ++k) p.probs[static_cast<std::size_t>(k)] = probs[k];
      p.label = labels::index_to_label(detail::argmax_class(probs, labels::kLabelCount));
    }
    pending.clear();
    pending_index.clear();
  };

  for (std::size_t idx = 0; idx < texts.size(); ++idx) {
    std::vector<std::string> tokens = corpus::tokenize(texts[idx]);
    if (tokens.empty()) {
      Prediction& p = out[idx];
      p.empty_input = true;
      p.label = labels::SentimentLabel::UnknownState;
      p.probs.fill(1.0 / static_cast<double>(labels::kLabelCount));
      continue;
    }
    pending.push_back(corpus::TokenizedSentence{std::move(tokens), std::nullopt});
    pending_index.push_back(idx);
    if (static_cast<int>(pending.size()) == chunk) flush();
  }
  flush();
  return out;
}

inline Prediction predict_one(const Checkpoint& ck, const embedding::EmbeddingModel& emb,
                              const langid::Wordlist& wordlist, const std::string& text) {
  return predict(ck, emb, wordlist, {text})[0];
}

/// Confusion-matrix evaluation of a checkpoint on labeled raw examples.
/// Empty-tokenization examples count with their uniform fallback prediction.
inline eval::MetricsReport evaluate(const Checkpoint& ck, const embedding::EmbeddingModel& emb,
                                    const langid::Wordlist& wordlist,
                                    const std::vector<corpus::LabeledExample>& examples) {
  std::vector<std::string> texts;
  texts.reserve(examples.size());
  for (const auto& ex : examples) {
    if (!ex.label.has_value()) throw std::invalid_argument("evaluate: unlabeled example");
    texts.push_back(ex.text);
  }
  auto predictions = predict(ck, emb, wordlist, texts);
  eval::ConfusionMatrix cm(labels::kLabelCount);
  for (std::size_t idx = 0; idx < examples.size(); ++idx) {
    cm.add(labels::label_to_index(*examples[idx].label),
           labels::label_to_index(predictions[idx].label));
  }
  return eval::compute_metrics(cm);
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

struct AblationEntry {
  std::string name;
  FeatureConfig feature;
  TrainResult result;
};

/// Trains the four feature/encoder variants sequentially with the same
/// TrainConfig. The dataset split depends only on the data and
/// derive_seed(seed, 0), so all four variants see identical splits.
inline std::vector<AblationEntry> ablate(const std::vector<corpus::TokenizedSentence>& data,
                                         const embedding::EmbeddingModel& emb,
                                         const langid::Wordlist& wordlist, const TrainConfig& tc,
                                         const std::function<void(const AblationEntry&)>& on_variant = {}) {
  const std::array<FeatureConfig, 4> variants{{
      {true, true},    // Bi-LSTM + lang tag
      {false, true},   // Bi-LSTM
      {true, false},   // LSTM + lang tag
      {false, false},  // LSTM
  }};
  std::vector<AblationEntry> entries;
  for (const auto& fc : variants) {
    AblationEntry entry;
    entry.name = fc.variant_name();
    entry.feature = fc;
    entry.result = train(data, emb, wordlist, fc, tc);
    entries.push_back(std::move(entry));
    if (on_variant) on_variant(entries.back());
  }
  return entries;
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json history_json(const TrainResult& result) {
  nlohmann::ordered_json j;
  j["train_size"] = result.train_size;
  j["val_size"] = result.val_size;
  j["epochs"] = result.history.size();
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& e : result.history) {
    nlohmann::ordered_json row;
    row["epoch"] = e.epoch;
    row["train_loss"] = e.train_loss;
    row["train_accuracy"] = e.train_accuracy;
    row["val_loss"] = e.val_loss;
    row["val_accuracy"] = e.val_accuracy;
    row["val_weighted_f1"] = e.val_weighted_f1;
    rows.push_back(std::move(row));
  }
  j["history"] = std::move(rows);
  return j;
}

inline nlohmann::ordered_json ablation_json(const std::vector<AblationEntry>& entries) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& entry : entries) {
    nlohmann::ordered_json j;
    j["name"] = entry.name;
    j["use_lang_tag"] = entry.feature.use_lang_tag;
    j["bidirectional"] = entry.feature.bidirectional;
    const auto& report = entry.result.final_val;
    j["val_accuracy"] = report.accuracy;
    j["val_weighted"] = {{"precision", report.weighted_precision},
                         {"recall", report.weighted_recall},
                         {"f1", report.weighted_f1}};
    j["val_macro"] = {{"precision", report.macro_precision},
                      {"recall", report.macro_recall},
                      {"f1", report.macro_f1}};
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace cmsent::pipeline
