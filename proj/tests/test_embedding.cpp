// Subword skip-gram embeddings: n-gram extraction, hashing, vocabulary
// construction, the negative-sampling objective and its gradients, training
// determinism, word-vector composition, and the text serialization format.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cmsent/corpus.hpp"
#include "cmsent/embedding.hpp"
#include "cmsent/errors.hpp"
#include "cmsent/rng.hpp"
#include "cmsent/serialize.hpp"

using namespace cmsent;
using embedding::EmbedConfig;
using embedding::EmbeddingModel;
using embedding::RowMatrix;

namespace {

std::vector<corpus::TokenizedSentence> sentences_from(
    const std::vector<std::vector<std::string>>& raw) {
  std::vector<corpus::TokenizedSentence> out;
  for (const auto& toks : raw) out.push_back({toks, std::nullopt});
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// n-gram extraction and hashing
// ---------------------------------------------------------------------------

TEST_CASE("extract_ngrams on 'her' is length-major, shortest first", "[embedding]") {
  auto grams = embedding::extract_ngrams("her", 3, 6);
  CHECK(grams == std::vector<std::string>{"<he", "her", "er>", "<her", "her>", "<her>"});
}

TEST_CASE("extract_ngrams on a single letter yields the wrapped word", "[embedding]") {
  CHECK(embedding::extract_ngrams("a", 3, 6) == std::vector<std::string>{"<a>"});
}

TEST_CASE("extract_ngrams respects codepoints, not bytes", "[embedding]") {
  // Tamil "தமிழ்" is 5 codepoints -> wrapped length 7.
  const std::string word = "தமிழ்";
  auto grams = embedding::extract_ngrams(word, 3, 6);
  // Closed form: sum over n=3..6 of (7 - n + 1) = 5 + 4 + 3 + 2 = 14.
  CHECK(grams.size() == 14);
  // First 3-gram covers '<' plus the first two Tamil codepoints.
  CHECK(grams[0] == std::string("<") + "தம");
}

TEST_CASE("extract_ngrams counts match the closed form on random words", "[embedding]") {
  SplitMix64 g(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const int len = 1 + static_cast<int>(g.next_below(12));
    std::string word;
    for (int i = 0; i < len; ++i) {
      word.push_back(static_cast<char>('a' + g.next_below(26)));
    }
    const int minn = 3, maxn = 6;
    const int wrapped = len + 2;
    std::size_t expect = 0;
    for (int n = minn; n <= std::min(maxn, wrapped); ++n) {
      expect += static_cast<std::size_t>(wrapped - n + 1);
    }
    auto grams = embedding::extract_ngrams(word, minn, maxn);
    INFO("word " << word);
    REQUIRE(grams.size() == expect);
  }
}

TEST_CASE("hash_ngram is vocab offset plus FNV-1a-32 modulo buckets", "[embedding]") {
  // fnv1a32("<he") = 1133188580, fnv1a32("her>") = 3929739062,
  // fnv1a32("<her>") = 1702972692, fnv1a32("<a>") = 2359087600.
  CHECK(embedding::hash_ngram("<he", 10, 1000) == 10 + 580);
  CHECK(embedding::hash_ngram("her>", 10, 1000) == 10 + 62);
  CHECK(embedding::hash_ngram("<her>", 0, 1000) == 692);
  CHECK(embedding::hash_ngram("<a>", 7, 1000) == 7 + 600);
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

TEST_CASE("build_vocab orders by count desc then lexicographic", "[embedding]") {
  auto corpus_data = sentences_from({{"b", "a", "b", "c", "a", "b"}, {"c", "d"}});
  EmbedConfig cfg;
  cfg.min_count = 1;
  auto vocab = embedding::build_vocab(corpus_data, cfg);
  REQUIRE(vocab.size() == 4);
  CHECK(vocab.words == std::vector<std::string>{"b", "a", "c", "d"});
  CHECK(vocab.counts == std::vector<std::uint64_t>{3, 2, 2, 1});
  CHECK(vocab.id_of("b") == 0);
  CHECK(vocab.id_of("d") == 3);
  CHECK(vocab.id_of("zzz") == -1);
  CHECK(vocab.total_tokens() == 8);
}

TEST_CASE("build_vocab applies min_count", "[embedding]") {
  auto corpus_data = sentences_from({{"x", "x", "y"}});
  EmbedConfig cfg;
  cfg.min_count = 2;
  auto vocab = embedding::build_vocab(corpus_data, cfg);
  REQUIRE(vocab.size() == 1);
  CHECK(vocab.words[0] == "x");
  // total_tokens reflects kept words only.
  CHECK(vocab.total_tokens() == 2);
}

TEST_CASE("build_vocab error cases", "[embedding]") {
  EmbedConfig cfg;
  CHECK_THROWS_AS(embedding::build_vocab({}, cfg), std::invalid_argument);
  cfg.min_count = 10;
  auto corpus_data = sentences_from({{"rare", "words"}});
  CHECK_THROWS_AS(embedding::build_vocab(corpus_data, cfg), UserInputError);
}

TEST_CASE("subsampling keep probabilities follow the documented formula", "[embedding]") {
  auto corpus_data = sentences_from({{"a", "a", "a", "a", "b"}});
  EmbedConfig cfg;
  cfg.subsample_t = 0.5;
  auto vocab = embedding::build_vocab(corpus_data, cfg);
  auto tables = embedding::detail::build_train_tables(vocab, cfg);
  REQUIRE(tables.keep_prob.size() == 2);
  // word "a": f = 4/5; keep = min(1, (sqrt(f/t)+1) * t/f)
  const double fa = 4.0 / 5.0;
  const double expect_a = std::min(1.0, (std::sqrt(fa / 0.5) + 1.0) * (0.5 / fa));
  CHECK(tables.keep_prob[0] == Catch::Approx(expect_a).epsilon(1e-15));
  // word "b": f = 1/5 < t -> keep prob clamps to 1.
  CHECK(tables.keep_prob[1] == 1.0);

  cfg.subsample_t = 0.0;
  auto no_sub = embedding::detail::build_train_tables(vocab, cfg);
  CHECK(no_sub.keep_prob[0] == 1.0);
  CHECK(no_sub.keep_prob[1] == 1.0);
}

TEST_CASE("negative table is the unigram^0.75 cumulative sum", "[embedding]") {
  auto corpus_data = sentences_from({{"a", "a", "a", "a", "b"}});
  EmbedConfig cfg;
  auto vocab = embedding::build_vocab(corpus_data, cfg);
  auto tables = embedding::detail::build_train_tables(vocab, cfg);
  REQUIRE(tables.cumulative.size() == 2);
  CHECK(tables.cumulative[0] == Catch::Approx(std::pow(4.0, 0.75)).epsilon(1e-15));
  CHECK(tables.cumulative[1] ==
        Catch::Approx(std::pow(4.0, 0.75) + 1.0).epsilon(1e-15));
}

// ---------------------------------------------------------------------------
// Negative-sampling objective and gradients
// ---------------------------------------------------------------------------

namespace {

void fill_random(RowMatrix<double>& m, std::uint64_t seed, double scale) {
  SplitMix64 g(seed);
  for (auto& v : m.data) v = g.uniform(-scale, scale);
}

}  // namespace

TEST_CASE("ns_gradients matches central finite differences", "[embedding]") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    RowMatrix<double> input(6, 5), output(6, 5);
    fill_random(input, seed, 0.8);
    fill_random(output, seed + 100, 0.8);
    std::vector<int> in_rows = {0, 2, 5};
    const int target = 1;
    std::vector<int> negs = {3, 4};

    RowMatrix<double> gi, go;
    embedding::ns_gradients(input, output, in_rows, target, negs, gi, go);

    const double eps = 1e-6;
    double max_err = 0.0;
    auto check_matrix = [&](RowMatrix<double>& m, const RowMatrix<double>& grad) {
      for (std::size_t idx = 0; idx < m.data.size(); ++idx) {
        const double save = m.data[idx];
        m.data[idx] = save + eps;
        const double up = embedding::ns_objective(input, output, in_rows, target, negs);
        m.data[idx] = save - eps;
        const double dn = embedding::ns_objective(input, output, in_rows, target, negs);
        m.data[idx] = save;
        const double numeric = (up - dn) / (2.0 * eps);
        max_err = std::max(max_err, std::abs(numeric - grad.data[idx]));
      }
    };
    check_matrix(input, gi);
    check_matrix(output, go);
    INFO("seed " << seed);
    CHECK(max_err < 1e-6);
  }
}

TEST_CASE("ns_step applies exactly -lr times the analytic gradient", "[embedding]") {
  RowMatrix<double> input(4, 3), output(4, 3);
  fill_random(input, 11, 0.5);
  fill_random(output, 12, 0.5);
  RowMatrix<double> before_in = input, before_out = output;
  std::vector<int> in_rows = {0, 3};
  std::vector<int> negs = {2};
  const double lr = 0.07;

  RowMatrix<double> gi, go;
  embedding::ns_gradients(input, output, in_rows, 1, negs, gi, go);
  const double objective = embedding::ns_objective(input, output, in_rows, 1, negs);

  const double step_loss = embedding::ns_step(input, output, in_rows, 1, negs, lr);
  // The returned loss is the pre-update objective, computed identically.
  CHECK(step_loss == objective);

  for (std::size_t idx = 0; idx < input.data.size(); ++idx) {
    const double expect = before_in.data[idx] - lr * gi.data[idx];
    CHECK(input.data[idx] == Catch::Approx(expect).epsilon(1e-12).margin(1e-15));
  }
  for (std::size_t idx = 0; idx < output.data.size(); ++idx) {
    const double expect = before_out.data[idx] - lr * go.data[idx];
    CHECK(output.data[idx] == Catch::Approx(expect).epsilon(1e-12).margin(1e-15));
  }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

// Three planted synonym pairs. Members of a pair never co-occur but are
// interchangeable in their group's dedicated contexts, so their context
// distributions — and hence their skip-gram input vectors — should converge.
const std::vector<std::vector<std::string>> kPlantedPairs = {
    {"alpha", "beta"}, {"gamma", "delta"}, {"epsi", "zeta"}};
const std::vector<std::vector<std::string>> kGroupContexts = {
    {"red", "blue", "green", "stone", "river", "cloud"},
    {"light", "sound", "metal", "paper", "glass", "brick"},
    {"horse", "field", "space", "ocean", "torch", "plant"}};

std::vector<corpus::TokenizedSentence> planted_corpus(std::uint64_t seed, int n_sentences) {
  std::vector<std::string> all;
  for (const auto& ctx : kGroupContexts) all.insert(all.end(), ctx.begin(), ctx.end());
  SplitMix64 g(seed);
  std::vector<corpus::TokenizedSentence> out;
  for (int i = 0; i < n_sentences; ++i) {
    const std::size_t grp = static_cast<std::size_t>(i) % kPlantedPairs.size();
    const std::string& member = kPlantedPairs[grp][(static_cast<std::size_t>(i) / 3) % 2];
    const std::size_t slots = 6;
    const std::size_t pos = g.next_below(slots + 1);
    std::vector<std::string> toks;
    for (std::size_t t = 0; t <= slots; ++t) {
      if (t == pos) toks.push_back(member);
      if (t < slots) {
        // Mostly the group's own context words, sometimes any filler.
        if (g.next_double() < 0.9) toks.push_back(kGroupContexts[grp][g.next_below(6)]);
        else toks.push_back(all[g.next_below(all.size())]);
      }
    }
    out.push_back({toks, std::nullopt});
  }
  return out;
}

}  // namespace

TEST_CASE("train_skipgram is deterministic for a fixed seed", "[embedding]") {
  auto corpus_data = planted_corpus(5, 40);
  EmbedConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 2;
  cfg.bucket_count = 500;
  cfg.subsample_t = 0.0;
  cfg.seed = 33;
  auto a = embedding::train_skipgram(corpus_data, cfg);
  auto b = embedding::train_skipgram(corpus_data, cfg);
  CHECK(embedding::content_hash(a) == embedding::content_hash(b));
  CHECK(std::memcmp(a.input.data.data(), b.input.data.data(),
                    a.input.data.size() * sizeof(float)) == 0);

  cfg.seed = 34;
  auto c = embedding::train_skipgram(corpus_data, cfg);
  CHECK(embedding::content_hash(a) != embedding::content_hash(c));
}

TEST_CASE("mean epoch loss is non-increasing early for most seeds", "[embedding]") {
  int good = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto corpus_data = planted_corpus(seed + 50, 60);
    EmbedConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 3;
    cfg.bucket_count = 500;
    cfg.subsample_t = 0.0;
    cfg.seed = seed;
    embedding::SkipgramStats stats;
    embedding::train_skipgram(corpus_data, cfg, 1, &stats);
    REQUIRE(stats.epoch_loss.size() == 3);
    if (stats.epoch_loss[0] >= stats.epoch_loss[1] &&
        stats.epoch_loss[1] >= stats.epoch_loss[2]) {
      ++good;
    }
  }
  CHECK(good >= 8);
}

TEST_CASE("planted synonym pairs beat random word pairs in cosine", "[embedding]") {
  auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      d += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    return d / (std::sqrt(na) * std::sqrt(nb) + 1e-30);
  };
  std::vector<std::string> all;
  for (const auto& ctx : kGroupContexts) all.insert(all.end(), ctx.begin(), ctx.end());

  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto corpus_data = planted_corpus(seed * 101 + 4, 120);
    EmbedConfig cfg;
    cfg.dim = 24;
    cfg.epochs = 10;
    cfg.window = 3;
    cfg.bucket_count = 2000;
    cfg.subsample_t = 0.0;
    cfg.seed = seed;
    auto model = embedding::train_skipgram(corpus_data, cfg);

    double planted = 0;
    for (const auto& pair : kPlantedPairs) {
      planted += cosine(embedding::word_vector(model, pair[0]),
                        embedding::word_vector(model, pair[1]));
    }
    planted /= static_cast<double>(kPlantedPairs.size());

    SplitMix64 pick(seed * 7 + 1);
    double random_mean = 0;
    int cnt = 0;
    for (int k = 0; k < 40; ++k) {
      const auto& a = all[pick.next_below(all.size())];
      const auto& b = all[pick.next_below(all.size())];
      if (a == b) continue;
      random_mean += cosine(embedding::word_vector(model, a), embedding::word_vector(model, b));
      ++cnt;
    }
    random_mean /= static_cast<double>(cnt);
    if (planted > random_mean) ++wins;
  }
  CHECK(wins >= 8);
}

// ---------------------------------------------------------------------------
// Word vectors
// ---------------------------------------------------------------------------

TEST_CASE("word_vector is the mean of the word row and its n-gram rows", "[embedding]") {
  auto corpus_data = sentences_from({{"hat", "cat"}});
  EmbedConfig cfg;
  cfg.dim = 8;
  cfg.bucket_count = 100;
  cfg.epochs = 0;
  cfg.seed = 4;
  auto model = embedding::train_skipgram(corpus_data, cfg);

  auto rows = model.input_rows_for("hat");
  REQUIRE_FALSE(rows.empty());
  std::vector<double> expect(8, 0.0);
  for (int r : rows) {
    const float* p = model.input.row(static_cast<std::size_t>(r));
    for (int d = 0; d < 8; ++d) expect[static_cast<std::size_t>(d)] += static_cast<double>(p[d]);
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (auto& v : expect) v *= inv;
  auto got = embedding::word_vector(model, "hat");
  REQUIRE(got.size() == 8);
  for (int d = 0; d < 8; ++d) CHECK(got[static_cast<std::size_t>(d)] == expect[static_cast<std::size_t>(d)]);
}

TEST_CASE("word_vector for OOV words uses n-gram rows only", "[embedding]") {
  auto corpus_data = sentences_from({{"hat", "cat"}});
  EmbedConfig cfg;
  cfg.dim = 8;
  cfg.bucket_count = 100;
  cfg.epochs = 0;
  auto model = embedding::train_skipgram(corpus_data, cfg);

  auto rows = model.input_rows_for("bat");
  REQUIRE_FALSE(rows.empty());
  for (int r : rows) CHECK(r >= model.vocab.size());  // all hashed bucket rows
  auto vec = embedding::word_vector(model, "bat");
  bool nonzero = false;
  for (double v : vec) {
    if (v != 0.0) nonzero = true;
  }
  CHECK(nonzero);
}

TEST_CASE("word_vector of the empty string is all zeros", "[embedding]") {
  auto corpus_data = sentences_from({{"hat"}});
  EmbedConfig cfg;
  cfg.dim = 8;
  cfg.bucket_count = 100;
  cfg.epochs = 0;
  auto model = embedding::train_skipgram(corpus_data, cfg);
  auto vec = embedding::word_vector(model, "");
  for (double v : vec) CHECK(v == 0.0);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

EmbeddingModel tiny_trained_model() {
  auto corpus_data = planted_corpus(9, 30);
  EmbedConfig cfg;
  cfg.dim = 12;
  cfg.epochs = 2;
  cfg.bucket_count = 300;
  cfg.subsample_t = 0.0;
  cfg.seed = 77;
  return embedding::train_skipgram(corpus_data, cfg);
}

}  // namespace

TEST_CASE("save_text/load_text round-trips vectors exactly", "[embedding]") {
  auto model = tiny_trained_model();
  std::stringstream vec_s, ngr_s(std::ios::in | std::ios::out | std::ios::binary);
  embedding::save_text(model, vec_s, ngr_s);
  auto back = embedding::load_text(vec_s, ngr_s);

  CHECK(back.vocab.words == model.vocab.words);
  CHECK(back.vocab.counts == model.vocab.counts);
  CHECK(back.config.dim == model.config.dim);
  CHECK(back.config.bucket_count == model.config.bucket_count);
  REQUIRE(back.input.data.size() == model.input.data.size());
  CHECK(std::memcmp(back.input.data.data(), model.input.data.data(),
                    model.input.data.size() * sizeof(float)) == 0);
  CHECK(embedding::content_hash(back) == embedding::content_hash(model));
  // Output vectors are not persisted; a reloaded model starts them at zero.
  for (float v : back.output.data) CHECK(v == 0.0f);
}

TEST_CASE("loaded model produces identical word vectors", "[embedding]") {
  auto model = tiny_trained_model();
  std::stringstream vec_s, ngr_s(std::ios::in | std::ios::out | std::ios::binary);
  embedding::save_text(model, vec_s, ngr_s);
  auto back = embedding::load_text(vec_s, ngr_s);
  for (const auto& w : {"alpha", "beta", "red", "unseen"}) {
    auto a = embedding::word_vector(model, w);
    auto b = embedding::word_vector(back, w);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
}

namespace {

/// Serializes the fixture model and returns the two streams' contents.
std::pair<std::string, std::string> serialized_model() {
  auto model = tiny_trained_model();
  std::stringstream vec_s, ngr_s(std::ios::in | std::ios::out | std::ios::binary);
  embedding::save_text(model, vec_s, ngr_s);
  return {vec_s.str(), ngr_s.str()};
}

embedding::EmbeddingModel load_from(const std::string& vec, const std::string& ngr) {
  std::istringstream vec_s(vec);
  std::istringstream ngr_s(ngr, std::ios::in | std::ios::binary);
  return embedding::load_text(vec_s, ngr_s);
}

}  // namespace

TEST_CASE("corrupted companion magic raises BadMagicError", "[embedding]") {
  auto [vec, ngr] = serialized_model();
  ngr[0] = 'X';
  CHECK_THROWS_AS(load_from(vec, ngr), BadMagicError);
}

TEST_CASE("unsupported companion version raises VersionError", "[embedding]") {
  auto [vec, ngr] = serialized_model();
  ngr[4] = 99;  // version byte follows the 4-byte magic
  CHECK_THROWS_AS(load_from(vec, ngr), VersionError);
}

TEST_CASE("vector/companion dimension mismatch raises DimensionError", "[embedding]") {
  auto [vec, ngr] = serialized_model();
  // Rewrite the header line "V dim" with a different dim.
  auto nl = vec.find('\n');
  REQUIRE(nl != std::string::npos);
  std::string header = vec.substr(0, nl);
  auto sp = header.rfind(' ');
  std::string tweaked = header.substr(0, sp) + " 13" + vec.substr(nl);
  CHECK_THROWS_AS(load_from(tweaked, ngr), DimensionError);
}

TEST_CASE("truncated vector file raises TruncationError", "[embedding]") {
  auto [vec, ngr] = serialized_model();
  // Drop the last vocab row from the vectors file.
  auto pos = vec.find_last_of('\n', vec.size() - 2);
  std::string truncated = vec.substr(0, pos + 1);
  CHECK_THROWS_AS(load_from(truncated, ngr), TruncationError);
}

TEST_CASE("non-finite vector values raise FormatError", "[embedding]") {
  auto [vec, ngr] = serialized_model();
  auto nl = vec.find('\n');
  auto sp = vec.find(' ', nl + 1);
  auto next = vec.find(' ', sp + 1);
  std::string poisoned = vec.substr(0, sp + 1) + "nan" + vec.substr(next);
  CHECK_THROWS_AS(load_from(poisoned, ngr), FormatError);
}

TEST_CASE("wrong value count in a row raises FormatError", "[embedding]") {
  auto [vec, ngr] = serialized_model();
  auto nl = vec.find('\n');
  auto row_end = vec.find('\n', nl + 1);
  std::string extra = vec.substr(0, row_end) + " 0.5" + vec.substr(row_end);
  CHECK_THROWS_AS(load_from(extra, ngr), FormatError);
}

TEST_CASE("save_files/load_files round-trips through the filesystem", "[embedding]") {
  auto model = tiny_trained_model();
  const std::string dir = "/tmp/cmsent_embed_test";
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/vectors.vec";
  embedding::save_files(model, path);
  auto back = embedding::load_files(path);
  CHECK(embedding::content_hash(back) == embedding::content_hash(model));
  CHECK_THROWS_AS(embedding::load_files(dir + "/missing.vec"), FileError);
}
