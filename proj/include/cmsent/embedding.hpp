#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "cmsent/corpus.hpp"
#include "cmsent/errors.hpp"
#include "cmsent/math.hpp"
#include "cmsent/rng.hpp"
#include "cmsent/serialize.hpp"
#include "cmsent/unicode.hpp"

namespace cmsent::embedding {

struct EmbedConfig {
  int dim = 100;
  int minn = 3;
  int maxn = 6;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double initial_lr = 0.05;  // decays linearly to 0 over all epochs
  int bucket_count = 100000;
  int min_count = 1;
  double subsample_t = 1e-4;
  std::uint64_t seed = 0;

  void validate() const {
    if (dim <= 0) throw ConfigError("embedding dim must be positive");
    if (minn <= 0 || minn > maxn) throw ConfigError("need 0 < minn <= maxn");
    if (bucket_count <= 0) throw ConfigError("bucket_count must be positive");
    if (window < 1) throw ConfigError("window must be >= 1");
    if (negatives < 0) throw ConfigError("negatives must be >= 0");
    if (epochs < 0) throw ConfigError("embedding epochs must be >= 0");
    if (!(initial_lr > 0.0)) throw ConfigError("initial_lr must be positive");
    if (min_count < 1) throw ConfigError("min_count must be >= 1");
    if (subsample_t < 0.0) throw ConfigError("subsample_t must be >= 0");
  }
};

template <typename Scalar>
struct RowMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<Scalar> data;

  RowMatrix() = default;
  RowMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, Scalar(0)) {}

  Scalar* row(std::size_t r) { return data.data() + r * cols; }
  const Scalar* row(std::size_t r) const { return data.data() + r * cols; }
};

// ---------------------------------------------------------------------------
// Vocabulary and subwords
// ---------------------------------------------------------------------------

struct SubwordVocab {
  std::vector<std::string> words;        // id -> word, ids dense 0..size-1
  std::vector<std::uint64_t> counts;     // id -> corpus frequency
  std::unordered_map<std::string, int> word_to_id;
  int min_count = 1;

  int size() const { return static_cast<int>(words.size()); }

  int id_of(std::string_view word) const {
    auto it = word_to_id.find(std::string(word));
    return it == word_to_id.end() ? -1 : it->second;
  }

  std::uint64_t total_tokens() const {
    std::uint64_t sum = 0;
    for (auto c : counts) sum += c;
    return sum;
  }
};

/// All contiguous codepoint substrings of the boundary-wrapped word
/// `<word>` with lengths minn..maxn, shortest length first, left to right
/// within a length.
inline std::vector<std::string> extract_ngrams(std::string_view word, int minn, int maxn) {
  std::vector<char32_t> cps;
  cps.push_back(U'<');
  for (char32_t cp : uni::decode_utf8(word)) cps.push_back(cp);
  cps.push_back(U'>');
  const int len = static_cast<int>(cps.size());
  std::vector<std::string> out;
  for (int n = minn; n <= std::min(maxn, len); ++n) {
    for (int i = 0; i + n <= len; ++i) {
      std::string gram;
      for (int k = 0; k < n; ++k) uni::append_utf8(gram, cps[i + k]);
      out.push_back(std::move(gram));
    }
  }
  return out;
}

/// Bucket row index for an n-gram: FNV-1a 32-bit over its UTF-8 bytes,
/// modulo bucket_count, offset past the vocabulary rows.
inline int hash_ngram(std::string_view ngram, int vocab_size, int bucket_count) {
  return vocab_size + static_cast<int>(ser::fnv1a32(ngram) % static_cast<std::uint32_t>(bucket_count));
}

/// Words with frequency >= min_count, ids in descending frequency then
/// lexicographic order.
inline SubwordVocab build_vocab(const std::vector<corpus::TokenizedSentence>& corpus_data,
                                const EmbedConfig& cfg) {
  if (corpus_data.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::unordered_map<std::string, std::uint64_t> freq;
  for (const auto& sent : corpus_data) {
    for (const auto& tok : sent.tokens) ++freq[tok];
  }
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  entries.reserve(freq.size());
  for (auto& [word, count] : freq) {
    if (count >= static_cast<std::uint64_t>(cfg.min_count)) entries.emplace_back(word, count);
  }
  if (entries.empty()) {
    throw UserInputError("vocabulary is empty after min_count filtering");
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  SubwordVocab vocab;
  vocab.min_count = cfg.min_count;
  vocab.words.reserve(entries.size());
  vocab.counts.reserve(entries.size());
  for (auto& [word, count] : entries) {
    vocab.word_to_id.emplace(word, vocab.size());
    vocab.words.push_back(word);
    vocab.counts.push_back(count);
  }
  return vocab;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct EmbeddingModel {
  SubwordVocab vocab;
  EmbedConfig config;
  RowMatrix<float> input;               // (|V| + bucket_count) x dim
  RowMatrix<float> output;              // |V| x dim
  std::vector<std::vector<int>> subword_rows;  // per word id: own row + n-gram rows

  /// Input rows representing `word`: its own row plus hashed n-gram rows for
  /// vocabulary words, n-gram rows only for out-of-vocabulary words.
  std::vector<int> input_rows_for(std::string_view word) const {
    int id = vocab.id_of(word);
    if (id >= 0) return subword_rows[static_cast<std::size_t>(id)];
    std::vector<int> rows;
    for (const auto& gram : extract_ngrams(word, config.minn, config.maxn)) {
      rows.push_back(hash_ngram(gram, vocab.size(), config.bucket_count));
    }
    return rows;
  }

  /// Mean of the word's input rows, accumulated in double in row-list order.
  std::vector<double> word_vector(std::string_view word) const {
    std::vector<double> vec(static_cast<std::size_t>(config.dim), 0.0);
    std::vector<int> rows = input_rows_for(word);
    if (rows.empty()) return vec;
    for (int r : rows) {
      const float* src = input.row(static_cast<std::size_t>(r));
      for (int d = 0; d < config.dim; ++d) vec[static_cast<std::size_t>(d)] += src[d];
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (double& v : vec) v *= inv;
    return vec;
  }
};

/// Free-function form of EmbeddingModel::word_vector.
inline std::vector<double> word_vector(const EmbeddingModel& model, std::string_view word) {
  return model.word_vector(word);
}

// ---------------------------------------------------------------------------
// Negative-sampling math. The loss for one (center -> context) pair with
// negatives n_1..n_k is
//   L = -log s(h . u_o) - sum_k log s(-h . u_nk),   h = mean of input rows.
// All accumulation is in double regardless of the storage scalar.
// ---------------------------------------------------------------------------

using nn::sigmoid;
using nn::softplus;

namespace detail {

template <typename Scalar>
void mean_rows(const RowMatrix<Scalar>& m, std::span<const int> rows, std::vector<double>& h) {
  h.assign(m.cols, 0.0);
  for (int r : rows) {
    const Scalar* src = m.row(static_cast<std::size_t>(r));
    for (std::size_t d = 0; d < m.cols; ++d) h[d] += static_cast<double>(src[d]);
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double& v : h) v *= inv;
}

}  // namespace detail

/// Applies one negative-sampling update with learning rate `lr` and returns
/// the pair loss evaluated at the pre-update parameters.
template <typename Scalar>
double ns_step(RowMatrix<Scalar>& input, RowMatrix<Scalar>& output, std::span<const int> in_rows,
               int target_row, std::span<const int> neg_rows, double lr) {
  const std::size_t dim = input.cols;
  std::vector<double> h;
  detail::mean_rows(input, in_rows, h);
  std::vector<double> dh(dim, 0.0);
  double loss = 0.0;

  auto update_output = [&](int row, double label) {
    Scalar* out = output.row(static_cast<std::size_t>(row));
    double score = 0.0;
    for (std::size_t d = 0; d < dim; ++d) score += h[d] * static_cast<double>(out[d]);
    loss += softplus(label > 0.5 ? -score : score);
    double g = label - sigmoid(score);
    for (std::size_t d = 0; d < dim; ++d) {
      dh[d] += g * static_cast<double>(out[d]);
      out[d] = static_cast<Scalar>(static_cast<double>(out[d]) + lr * g * h[d]);
    }
  };

  update_output(target_row, 1.0);
  for (int neg : neg_rows) update_output(neg, 0.0);

  // h is a mean, so each contributing input row receives dh / n.
  const double scale = lr / static_cast<double>(in_rows.size());
  for (int r : in_rows) {
    Scalar* in = input.row(static_cast<std::size_t>(r));
    for (std::size_t d = 0; d < dim; ++d) {
      in[d] = static_cast<Scalar>(static_cast<double>(in[d]) + scale * dh[d]);
    }
  }
  return loss;
}

/// Pair loss without any update.
template <typename Scalar>
double ns_objective(const RowMatrix<Scalar>& input, const RowMatrix<Scalar>& output,
                    std::span<const int> in_rows, int target_row, std::span<const int> neg_rows) {
  const std::size_t dim = input.cols;
  std::vector<double> h;
  detail::mean_rows(input, in_rows, h);
  double loss = 0.0;
  auto score_of = [&](int row) {
    const Scalar* out = output.row(static_cast<std::size_t>(row));
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) s += h[d] * static_cast<double>(out[d]);
    return s;
  };
  loss += softplus(-score_of(target_row));
  for (int neg : neg_rows) loss += softplus(score_of(neg));
  return loss;
}

/// Analytic gradients of ns_objective w.r.t. every entry of `input` and
/// `output`, written dense into the given double matrices.
template <typename Scalar>
void ns_gradients(const RowMatrix<Scalar>& input, const RowMatrix<Scalar>& output,
                  std::span<const int> in_rows, int target_row, std::span<const int> neg_rows,
                  RowMatrix<double>& grad_input, RowMatrix<double>& grad_output) {
  const std::size_t dim = input.cols;
  grad_input = RowMatrix<double>(input.rows, input.cols);
  grad_output = RowMatrix<double>(output.rows, output.cols);
  std::vector<double> h;
  detail::mean_rows(input, in_rows, h);
  std::vector<double> dh(dim, 0.0);

  auto accumulate = [&](int row, double label) {
    const Scalar* out = output.row(static_cast<std::size_t>(row));
    double score = 0.0;
    for (std::size_t d = 0; d < dim; ++d) score += h[d] * static_cast<double>(out[d]);
    double dscore = sigmoid(score) - label;  // dL/dscore
    double* gout = grad_output.row(static_cast<std::size_t>(row));
    for (std::size_t d = 0; d < dim; ++d) {
      gout[d] += dscore * h[d];
      dh[d] += dscore * static_cast<double>(out[d]);
    }
  };

  accumulate(target_row, 1.0);
  for (int neg : neg_rows) accumulate(neg, 0.0);

  const double inv = 1.0 / static_cast<double>(in_rows.size());
  for (int r : in_rows) {
    double* gin = grad_input.row(static_cast<std::size_t>(r));
    for (std::size_t d = 0; d < dim; ++d) gin[d] += dh[d] * inv;
  }
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

struct SkipgramStats {
  std::vector<double> epoch_loss;  // mean pair loss per epoch
  std::uint64_t total_pairs = 0;
};

namespace detail {

struct TrainTables {
  std::vector<double> cumulative;  // unigram^0.75 cumulative weights
  std::vector<double> keep_prob;   // subsampling keep probability per word id
};

inline TrainTables build_train_tables(const SubwordVocab& vocab, const EmbedConfig& cfg) {
  TrainTables t;
  t.cumulative.reserve(static_cast<std::size_t>(vocab.size()));
  double acc = 0.0;
  for (auto c : vocab.counts) {
    acc += std::pow(static_cast<double>(c), 0.75);
    t.cumulative.push_back(acc);
  }
  t.keep_prob.reserve(static_cast<std::size_t>(vocab.size()));
  const double total = static_cast<double>(vocab.total_tokens());
  for (auto c : vocab.counts) {
    if (cfg.subsample_t <= 0.0) {
      t.keep_prob.push_back(1.0);
      continue;
    }
    double f = static_cast<double>(c) / total;
    double keep = (std::sqrt(f / cfg.subsample_t) + 1.0) * (cfg.subsample_t / f);
    t.keep_prob.push_back(std::min(keep, 1.0));
  }
  return t;
}

inline int sample_negative(const std::vector<double>& cumulative, SplitMix64& rng) {
  double u = rng.next_double() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<int>(it - cumulative.begin());
}

/// Runs one worker over sentences [begin, end) for all epochs. The learning
/// rate decays linearly to zero against the worker's own token budget.
inline void skipgram_worker(EmbeddingModel& model, const std::vector<std::vector<int>>& sentences,
                            std::size_t begin, std::size_t end, const TrainTables& tables,
                            std::uint64_t worker_seed, std::vector<double>& epoch_loss,
                            std::vector<std::uint64_t>& epoch_pairs) {
  const EmbedConfig& cfg = model.config;
  SplitMix64 rng(worker_seed);
  std::uint64_t shard_tokens = 0;
  for (std::size_t s = begin; s < end; ++s) shard_tokens += sentences[s].size();
  const double budget = static_cast<double>(cfg.epochs) * static_cast<double>(shard_tokens);
  if (budget <= 0.0) return;

  std::uint64_t processed = 0;
  std::vector<int> reduced;
  std::vector<int> negs;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::uint64_t pairs = 0;
    for (std::size_t s = begin; s < end; ++s) {
      const auto& ids = sentences[s];
      double lr = cfg.initial_lr *
                  std::max(0.0, 1.0 - static_cast<double>(processed) / budget);
      processed += ids.size();
      reduced.clear();
      for (int id : ids) {
        if (cfg.subsample_t > 0.0) {
          if (rng.next_double() >= tables.keep_prob[static_cast<std::size_t>(id)]) continue;
        }
        reduced.push_back(id);
      }
      const int count = static_cast<int>(reduced.size());
      for (int c = 0; c < count; ++c) {
        int b = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cfg.window)));
        int lo = std::max(0, c - b);
        int hi = std::min(count - 1, c + b);
        for (int k = lo; k <= hi; ++k) {
          if (k == c) continue;
          int target = reduced[static_cast<std::size_t>(k)];
          negs.clear();
          for (int j = 0; j < cfg.negatives; ++j) {
            int neg = sample_negative(tables.cumulative, rng);
            if (neg == target) continue;
            negs.push_back(neg);
          }
          loss_sum += ns_step(model.input, model.output,
                              model.subword_rows[static_cast<std::size_t>(
                                  reduced[static_cast<std::size_t>(c)])],
                              target, negs, lr);
          ++pairs;
        }
      }
    }
    epoch_loss[static_cast<std::size_t>(epoch)] = loss_sum;
    epoch_pairs[static_cast<std::size_t>(epoch)] = pairs;
  }
}

}  // namespace detail

/// Trains a skip-gram model with subword units and negative sampling.
/// `workers == 1` (the default) is bit-reproducible for a fixed seed; with
/// more workers the corpus is split into contiguous shards trained
/// hogwild-style with per-shard derived seeds.
inline EmbeddingModel train_skipgram(const std::vector<corpus::TokenizedSentence>& corpus_data,
                                     const EmbedConfig& cfg, int workers = 1,
                                     SkipgramStats* stats = nullptr) {
  cfg.validate();
  if (workers < 1) throw std::invalid_argument("train_skipgram: workers must be >= 1");

  EmbeddingModel model;
  model.config = cfg;
  model.vocab = build_vocab(corpus_data, cfg);
  const int vocab_size = model.vocab.size();
  const std::size_t dim = static_cast<std::size_t>(cfg.dim);
  model.input = RowMatrix<float>(static_cast<std::size_t>(vocab_size + cfg.bucket_count), dim);
  model.output = RowMatrix<float>(static_cast<std::size_t>(vocab_size), dim);

  // Input rows start uniform in [-1/dim, 1/dim], output rows at zero.
  SplitMix64 init_rng(derive_seed(cfg.seed, 0));
  const double bound = 1.0 / static_cast<double>(cfg.dim);
  for (float& v : model.input.data) v = static_cast<float>(init_rng.uniform(-bound, bound));

  model.subword_rows.resize(static_cast<std::size_t>(vocab_size));
  for (int id = 0; id < vocab_size; ++id) {
    auto& rows = model.subword_rows[static_cast<std::size_t>(id)];
    rows.push_back(id);
    for (const auto& gram :
         extract_ngrams(model.vocab.words[static_cast<std::size_t>(id)], cfg.minn, cfg.maxn)) {
      rows.push_back(hash_ngram(gram, vocab_size, cfg.bucket_count));
    }
  }

  std::vector<std::vector<int>> sentences;
  sentences.reserve(corpus_data.size());
  for (const auto& sent : corpus_data) {
    std::vector<int> ids;
    ids.reserve(sent.tokens.size());
    for (const auto& tok : sent.tokens) {
      int id = model.vocab.id_of(tok);
      if (id >= 0) ids.push_back(id);
    }
    if (!ids.empty()) sentences.push_back(std::move(ids));
  }

  detail::TrainTables tables = detail::build_train_tables(model.vocab, cfg);

  const int epochs = std::max(cfg.epochs, 0);
  std::vector<std::vector<double>> worker_loss(
      static_cast<std::size_t>(workers), std::vector<double>(static_cast<std::size_t>(epochs), 0.0));
  std::vector<std::vector<std::uint64_t>> worker_pairs(
      static_cast<std::size_t>(workers),
      std::vector<std::uint64_t>(static_cast<std::size_t>(epochs), 0));

  if (workers == 1) {
    detail::skipgram_worker(model, sentences, 0, sentences.size(), tables, derive_seed(cfg.seed, 1),
                            worker_loss[0], worker_pairs[0]);
  } else {
    std::vector<std::thread> threads;
    const std::size_t n = sentences.size();
    for (int w = 0; w < workers; ++w) {
      std::size_t begin = n * static_cast<std::size_t>(w) / static_cast<std::size_t>(workers);
      std::size_t end = n * static_cast<std::size_t>(w + 1) / static_cast<std::size_t>(workers);
      threads.emplace_back([&, w, begin, end] {
        detail::skipgram_worker(model, sentences, begin, end, tables,
                                derive_seed(cfg.seed, 1 + static_cast<std::uint64_t>(w)),
                                worker_loss[static_cast<std::size_t>(w)],
                                worker_pairs[static_cast<std::size_t>(w)]);
      });
    }
    for (auto& t : threads) t.join();
  }

  if (stats) {
    stats->epoch_loss.assign(static_cast<std::size_t>(epochs), 0.0);
    stats->total_pairs = 0;
    for (int e = 0; e < epochs; ++e) {
      double loss = 0.0;
      std::uint64_t pairs = 0;
      for (int w = 0; w < workers; ++w) {
        loss += worker_loss[static_cast<std::size_t>(w)][static_cast<std::size_t>(e)];
        pairs += worker_pairs[static_cast<std::size_t>(w)][static_cast<std::size_t>(e)];
      }
      stats->epoch_loss[static_cast<std::size_t>(e)] =
          pairs == 0 ? 0.0 : loss / static_cast<double>(pairs);
      stats->total_pairs += pairs;
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Serialization. The text stream is a word2vec-style table of the vocabulary
// input rows; the companion stream carries the config, the n-gram bucket
// matrix (f32 little-endian), and the vocabulary counts. Output rows are not
// persisted, matching word2vec convention.
// ---------------------------------------------------------------------------

inline constexpr char kNgramMagic[4] = {'C', 'M', 'S', 'E'};
inline constexpr std::uint8_t kNgramVersion = 1;

inline void save_text(const EmbeddingModel& model, std::ostream& vectors_out,
                      std::ostream& ngrams_out) {
  const int dim = model.config.dim;
  vectors_out << model.vocab.size() << ' ' << dim << '\n';
  for (int id = 0; id < model.vocab.size(); ++id) {
    vectors_out << model.vocab.words[static_cast<std::size_t>(id)];
    const float* row = model.input.row(static_cast<std::size_t>(id));
    for (int d = 0; d < dim; ++d) vectors_out << ' ' << ser::format_float(row[d]);
    vectors_out << '\n';
  }

  ngrams_out.write(kNgramMagic, 4);
  ser::write_le<std::uint8_t>(ngrams_out, kNgramVersion);
  const EmbedConfig& cfg = model.config;
  ser::write_le<std::uint32_t>(ngrams_out, static_cast<std::uint32_t>(cfg.dim));
  ser::write_le<std::uint32_t>(ngrams_out, static_cast<std::uint32_t>(cfg.minn));
  ser::write_le<std::uint32_t>(ngrams_out, static_cast<std::uint32_t>(cfg.maxn));
  ser::write_le<std::uint32_t>(ngrams_out, static_cast<std::uint32_t>(cfg.window));
  ser::write_le<std::uint32_t>(ngrams_out, static_cast<std::uint32_t>(cfg.negatives));
  ser::write_le<std::uint32_t>(ngrams_out, static_cast<std::uint32_t>(cfg.epochs));
  ser::write_f64_le(ngrams_out, cfg.initial_lr);
  ser::write_le<std::uint32_t>(ngrams_out, static_cast<std::uint32_t>(cfg.bucket_count));
  ser::write_le<std::uint32_t>(ngrams_out, static_cast<std::uint32_t>(cfg.min_count));
  ser::write_f64_le(ngrams_out, cfg.subsample_t);
  ser::write_le<std::uint64_t>(ngrams_out, cfg.seed);
  ser::write_le<std::uint32_t>(ngrams_out, static_cast<std::uint32_t>(model.vocab.size()));
  const std::size_t bucket_rows = static_cast<std::size_t>(cfg.bucket_count);
  const std::size_t vocab_rows = static_cast<std::size_t>(model.vocab.size());
  for (std::size_t r = 0; r < bucket_rows; ++r) {
    const float* row = model.input.row(vocab_rows + r);
    for (int d = 0; d < cfg.dim; ++d) ser::write_f32_le(ngrams_out, row[d]);
  }
  for (auto c : model.vocab.counts) ser::write_le<std::uint64_t>(ngrams_out, c);
}

inline EmbeddingModel load_text(std::istream& vectors_in, std::istream& ngrams_in) {
  std::string header;
  if (!std::getline(vectors_in, header)) throw TruncationError("vector file: missing header");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::istringstream hs(header);
  long long vocab_size = -1, dim = -1;
  if (!(hs >> vocab_size >> dim) || vocab_size < 0 || dim <= 0) {
    throw FormatError("vector file: malformed header '" + header + "'");
  }

  // The companion stream is read first so the matrix can be sized up front.
  char magic[4] = {0, 0, 0, 0};
  ngrams_in.read(magic, 4);
  if (ngrams_in.gcount() != 4) throw TruncationError("n-gram file: missing magic");
  if (!std::equal(magic, magic + 4, kNgramMagic)) {
    throw BadMagicError("n-gram file: bad magic, not an embedding companion file");
  }
  auto version = ser::read_le<std::uint8_t>(ngrams_in, "n-gram file version");
  if (version != kNgramVersion) {
    throw VersionError("n-gram file: unsupported version " + std::to_string(version));
  }
  EmbedConfig cfg;
  cfg.dim = static_cast<int>(ser::read_le<std::uint32_t>(ngrams_in, "dim"));
  cfg.minn = static_cast<int>(ser::read_le<std::uint32_t>(ngrams_in, "minn"));
  cfg.maxn = static_cast<int>(ser::read_le<std::uint32_t>(ngrams_in, "maxn"));
  cfg.window = static_cast<int>(ser::read_le<std::uint32_t>(ngrams_in, "window"));
  cfg.negatives = static_cast<int>(ser::read_le<std::uint32_t>(ngrams_in, "negatives"));
  cfg.epochs = static_cast<int>(ser::read_le<std::uint32_t>(ngrams_in, "epochs"));
  cfg.initial_lr = ser::read_f64_le(ngrams_in, "initial_lr");
  cfg.bucket_count = static_cast<int>(ser::read_le<std::uint32_t>(ngrams_in, "bucket_count"));
  cfg.min_count = static_cast<int>(ser::read_le<std::uint32_t>(ngrams_in, "min_count"));
  cfg.subsample_t = ser::read_f64_le(ngrams_in, "subsample_t");
  cfg.seed = ser::read_le<std::uint64_t>(ngrams_in, "seed");
  auto stored_vocab = ser::read_le<std::uint32_t>(ngrams_in, "vocab size");
  if (cfg.dim != dim) {
    throw DimensionError("n-gram file dim " + std::to_string(cfg.dim) +
                         " does not match vector file dim " + std::to_string(dim));
  }
  if (static_cast<long long>(stored_vocab) != vocab_size) {
    throw DimensionError("n-gram file vocab size " + std::to_string(stored_vocab) +
                         " does not match vector file vocab size " + std::to_string(vocab_size));
  }
  cfg.validate();

  EmbeddingModel model;
  model.config = cfg;
  model.vocab.min_count = cfg.min_count;
  model.input = RowMatrix<float>(static_cast<std::size_t>(vocab_size + cfg.bucket_count),
                                 static_cast<std::size_t>(dim));
  model.output =
      RowMatrix<float>(static_cast<std::size_t>(vocab_size), static_cast<std::size_t>(dim));

  std::string line;
  for (long long id = 0; id < vocab_size; ++id) {
    if (!std::getline(vectors_in, line)) {
      throw TruncationError("vector file: expected " + std::to_string(vocab_size) +
                            " rows, got " + std::to_string(id));
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t pos = line.find(' ');
    if (pos == std::string::npos || pos == 0) {
      throw FormatError("vector file: malformed row " + std::to_string(id));
    }
    std::string word = line.substr(0, pos);
    float* row = model.input.row(static_cast<std::size_t>(id));
    std::size_t start = pos + 1;
    for (long long d = 0; d < dim; ++d) {
      std::size_t end = line.find(' ', start);
      std::string_view field(line.data() + start,
                             (end == std::string::npos ? line.size() : end) - start);
      if (field.empty()) {
        throw FormatError("vector file: row " + std::to_string(id) + " has too few values");
      }
      float value = ser::parse_float(field, "vector file row " + std::to_string(id));
      if (!std::isfinite(value)) {
        throw FormatError("vector file: non-finite value in row " + std::to_string(id));
      }
      row[d] = value;
      if (end == std::string::npos) {
        if (d + 1 != dim) {
          throw FormatError("vector file: row " + std::to_string(id) + " has too few values");
        }
        start = line.size();
      } else {
        start = end + 1;
      }
    }
    if (start != line.size() && start != line.size() + 1) {
      throw FormatError("vector file: row " + std::to_string(id) + " has too many values");
    }
    if (model.vocab.word_to_id.count(word) != 0u) {
      throw FormatError("vector file: duplicate word '" + word + "'");
    }
    model.vocab.word_to_id.emplace(word, static_cast<int>(id));
    model.vocab.words.push_back(std::move(word));
  }

  const std::size_t vocab_rows = static_cast<std::size_t>(vocab_size);
  for (std::size_t r = 0; r < static_cast<std::size_t>(cfg.bucket_count); ++r) {
    float* row = model.input.row(vocab_rows + r);
    for (int d = 0; d < cfg.dim; ++d) {
      row[d] = ser::read_f32_le(ngrams_in, "bucket row " + std::to_string(r));
      if (!std::isfinite(row[d])) {
        throw FormatError("n-gram file: non-finite value in bucket row " + std::to_string(r));
      }
    }
  }
  model.vocab.counts.reserve(vocab_rows);
  for (long long id = 0; id < vocab_size; ++id) {
    model.vocab.counts.push_back(
        ser::read_le<std::uint64_t>(ngrams_in, "word count " + std::to_string(id)));
  }

  model.subword_rows.resize(vocab_rows);
  for (int id = 0; id < model.vocab.size(); ++id) {
    auto& rows = model.subword_rows[static_cast<std::size_t>(id)];
    rows.push_back(id);
    for (const auto& gram :
         extract_ngrams(model.vocab.words[static_cast<std::size_t>(id)], cfg.minn, cfg.maxn)) {
      rows.push_back(hash_ngram(gram, model.vocab.size(), cfg.bucket_count));
    }
  }
  return model;
}

inline void save_files(const EmbeddingModel& model, const std::string& vectors_path) {
  std::ofstream vec(vectors_path, std::ios::binary);
  if (!vec) throw FileError("cannot open for writing: " + vectors_path);
  std::ofstream ng(vectors_path + ".ngrams", std::ios::binary);
  if (!ng) throw FileError("cannot open for writing: " + vectors_path + ".ngrams");
  save_text(model, vec, ng);
  vec.flush();
  ng.flush();
  if (!vec || !ng) throw FileError("write failed: " + vectors_path);
}

inline EmbeddingModel load_files(const std::string& vectors_path) {
  std::ifstream vec(vectors_path, std::ios::binary);
  if (!vec) throw FileError("cannot open: " + vectors_path);
  std::ifstream ng(vectors_path + ".ngrams", std::ios::binary);
  if (!ng) throw FileError("cannot open: " + vectors_path + ".ngrams");
  return load_text(vec, ng);
}

/// FNV-1a 64-bit hash over the serialized form (vector stream then companion
/// stream). Checkpoints store this to detect classifier/embedding mismatches.
inline std::uint64_t content_hash(const EmbeddingModel& model) {
  std::ostringstream vec, ng;
  save_text(model, vec, ng);
  std::uint64_t h = ser::fnv1a64(vec.str());
  return ser::fnv1a64(ng.str(), h);
}

}  // namespace cmsent::embedding
