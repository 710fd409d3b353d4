// Command-line front end for the code-mixed sentiment pipeline:
//   cmsent embed    trains subword skip-gram embeddings from a TSV corpus
//   cmsent train    trains the recurrent classifier on labeled TSV data
//   cmsent eval     scores a checkpoint against labeled TSV data
//   cmsent ablate   trains the four feature/encoder variants on one split
//   cmsent predict  labels raw texts, one per input line
//
// Exit codes: 0 success, 1 internal/numeric failure, 2 bad input or usage.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cmsent/corpus.hpp"
#include "cmsent/embedding.hpp"
#include "cmsent/errors.hpp"
#include "cmsent/eval.hpp"
#include "cmsent/labels.hpp"
#include "cmsent/langid.hpp"
#include "cmsent/pipeline.hpp"
#include "cmsent/run_config.hpp"

namespace {

using cmsent::runcfg::RunConfig;

struct CommonFlags {
  RunConfig staged;
  std::vector<std::string> staged_data;
  int staged_epochs = 0;
  bool no_lang_tag = false;
  bool unidirectional = false;
  std::string config_path;
  CLI::Option* config = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* dim = nullptr;
  CLI::Option* epochs = nullptr;
  CLI::Option* batch_size = nullptr;
  CLI::Option* hidden = nullptr;
  CLI::Option* max_seq_len = nullptr;
  CLI::Option* out_dir = nullptr;
  CLI::Option* data = nullptr;
  CLI::Option* embedding = nullptr;
  CLI::Option* wordlist = nullptr;
  CLI::Option* checkpoint = nullptr;
  CLI::Option* input = nullptr;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f, bool epochs_for_embedding) {
  f.config = cmd->add_option("--config", f.config_path, "key=value configuration file");
  f.seed = cmd->add_option("--seed", f.staged.seed, "master RNG seed");
  f.dim = cmd->add_option("--dim", f.staged.dim, "embedding dimension");
  f.epochs = cmd->add_option("--epochs", f.staged_epochs,
                             epochs_for_embedding ? "embedding training epochs"
                                                  : "classifier training epochs");
  f.batch_size = cmd->add_option("--batch-size", f.staged.batch_size, "mini-batch size");
  f.hidden = cmd->add_option("--hidden", f.staged.hidden, "recurrent units per direction");
  f.max_seq_len = cmd->add_option("--max-seq-len", f.staged.max_seq_len,
                                  "maximum tokens kept per sentence");
  cmd->add_flag("--no-lang-tag", f.no_lang_tag, "drop the language-tag feature dimensions");
  cmd->add_flag("--unidirectional", f.unidirectional, "use a single-direction encoder");
  f.out_dir = cmd->add_option("--out-dir", f.staged.out_dir, "output directory");
  f.data = cmd->add_option("--data", f.staged_data,
                           "TSV data file (text<TAB>label); repeatable for embed");
  f.embedding = cmd->add_option("--embedding", f.staged.embedding, "embedding vector file");
  f.wordlist = cmd->add_option("--wordlist", f.staged.wordlist, "known-words list");
  f.checkpoint = cmd->add_option("--checkpoint", f.staged.checkpoint, "classifier checkpoint");
  f.input = cmd->add_option("--input", f.staged.input, "raw text file, one example per line");
}

/// Flags beat the config file, the config file beats defaults.
RunConfig resolve_config(const CommonFlags& f, bool epochs_for_embedding) {
  RunConfig cfg;
  if (f.config->count() > 0) cmsent::runcfg::load_config_file(cfg, f.config_path);
  if (f.seed->count() > 0) cfg.seed = f.staged.seed;
  if (f.dim->count() > 0) cfg.dim = f.staged.dim;
  if (f.epochs->count() > 0) {
    if (f.staged_epochs < 0) throw cmsent::ConfigError("--epochs must be >= 0");
    (epochs_for_embedding ? cfg.embed_epochs : cfg.epochs) = f.staged_epochs;
  }
  if (f.batch_size->count() > 0) cfg.batch_size = f.staged.batch_size;
  if (f.hidden->count() > 0) cfg.hidden = f.staged.hidden;
  if (f.max_seq_len->count() > 0) cfg.max_seq_len = f.staged.max_seq_len;
  if (f.no_lang_tag) cfg.lang_tag = false;
  if (f.unidirectional) cfg.bidirectional = false;
  if (f.out_dir->count() > 0) cfg.out_dir = f.staged.out_dir;
  if (!f.staged_data.empty()) cfg.data = f.staged_data.front();
  if (f.embedding->count() > 0) cfg.embedding = f.staged.embedding;
  if (f.wordlist->count() > 0) cfg.wordlist = f.staged.wordlist;
  if (f.checkpoint->count() > 0) cfg.checkpoint = f.staged.checkpoint;
  if (f.input->count() > 0) cfg.input = f.staged.input;
  cfg.validate();
  return cfg;
}

/// All corpus paths for a command: the repeatable --data flags, else the
/// config-file `data` entry.
std::vector<std::string> data_paths(const CommonFlags& f, const RunConfig& cfg) {
  if (!f.staged_data.empty()) return f.staged_data;
  if (!cfg.data.empty()) return {cfg.data};
  return {};
}

/// Commands other than embed take exactly one data file.
std::string single_data_path(const CommonFlags& f, const RunConfig& cfg) {
  auto paths = data_paths(f, cfg);
  if (paths.size() > 1) {
    throw cmsent::UserInputError("this command takes exactly one --data file");
  }
  return paths.empty() ? std::string() : paths.front();
}

void require_path(const std::string& value, const std::string& flag) {
  if (value.empty()) {
    throw cmsent::UserInputError("missing required " + flag + " (flag or config key)");
  }
}

std::vector<cmsent::corpus::LabeledExample> read_tsv_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw cmsent::FileError("cannot open: " + path);
  return cmsent::corpus::read_tsv(is);
}

void require_labels(const std::vector<cmsent::corpus::LabeledExample>& examples,
                    const std::string& path) {
  if (examples.empty()) throw cmsent::UserInputError(path + ": no examples");
  for (std::size_t idx = 0; idx < examples.size(); ++idx) {
    if (!examples[idx].label.has_value()) {
      throw cmsent::TsvFormatError(path + ": example " + std::to_string(idx + 1) +
                                   " has no label; this command needs labeled data");
    }
  }
}

/// Loads the wordlist when the active configuration needs one; otherwise an
/// empty list suffices because no language tags will be computed.
cmsent::langid::Wordlist load_wordlist_if(bool needed, const std::string& path) {
  if (!path.empty()) return cmsent::langid::load_wordlist_file(path);
  if (needed) {
    throw cmsent::UserInputError(
        "missing required --wordlist (flag or config key); needed for language tags");
  }
  return cmsent::langid::Wordlist{};
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw cmsent::FileError("cannot open for writing: " + path);
  os << content;
  os.flush();
  if (!os) throw cmsent::FileError("write failed: " + path);
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

class WallClock {
 public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  void report() const {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    char buf[48];
    std::snprintf(buf, sizeof(buf), "wall time: %.3f s", secs);
    std::cout << buf << '\n';
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

int cmd_embed(const CommonFlags& flags) {
  WallClock clock;
  RunConfig cfg = resolve_config(flags, /*epochs_for_embedding=*/true);
  const auto paths = data_paths(flags, cfg);
  if (paths.empty()) {
    throw cmsent::UserInputError("missing required --data (flag or config key)");
  }
  // Labels, when present, are ignored; corpora are concatenated.
  std::vector<cmsent::corpus::LabeledExample> examples;
  for (const auto& path : paths) {
    auto part = read_tsv_file(path);
    examples.insert(examples.end(), std::make_move_iterator(part.begin()),
                    std::make_move_iterator(part.end()));
  }
  std::size_t dropped = 0;
  auto sentences = cmsent::corpus::tokenize_examples(examples, &dropped);
  if (sentences.empty()) throw cmsent::UserInputError("no usable sentences in the input data");
  if (dropped > 0) {
    std::cout << "skipped " << dropped << " sentence(s) with no tokens\n";
  }

  cmsent::embedding::SkipgramStats stats;
  auto model = cmsent::embedding::train_skipgram(sentences, cfg.embed_config(), 1, &stats);
  std::cout << "vocabulary: " << model.vocab.size() << " words\n";
  std::cout << "tokens: " << model.vocab.total_tokens() << '\n';
  for (std::size_t e = 0; e < stats.epoch_loss.size(); ++e) {
    std::cout << "epoch " << (e + 1) << "/" << stats.epoch_loss.size() << "  mean pair loss "
              << fixed4(stats.epoch_loss[e]) << '\n';
  }
  std::cout << "training pairs per epoch: "
            << (stats.epoch_loss.empty() ? 0 : stats.total_pairs / stats.epoch_loss.size())
            << '\n';

  const std::string vec_path = out_path(cfg, "embedding.vec");
  cmsent::embedding::save_files(model, vec_path);
  std::cout << "wrote " << vec_path << '\n';
  std::cout << "wrote " << vec_path << ".ngrams\n";
  clock.report();
  return 0;
}

int cmd_train(const CommonFlags& flags) {
  WallClock clock;
  RunConfig cfg = resolve_config(flags, /*epochs_for_embedding=*/false);
  const std::string data = single_data_path(flags, cfg);
  require_path(data, "--data");
  require_path(cfg.embedding, "--embedding");

  auto emb = cmsent::embedding::load_files(cfg.embedding);
  auto wordlist = load_wordlist_if(cfg.lang_tag, cfg.wordlist);
  auto examples = read_tsv_file(data);
  require_labels(examples, data);
  std::size_t dropped = 0;
  auto sentences = cmsent::corpus::tokenize_examples(examples, &dropped);
  if (sentences.empty()) throw cmsent::UserInputError(data + ": no usable sentences");
  if (dropped > 0) std::cout << "skipped " << dropped << " sentence(s) with no tokens\n";

  const auto tc = cfg.train_config();
  const auto fc = cfg.feature_config();
  std::cout << "variant: " << fc.variant_name() << '\n';
  auto result = cmsent::pipeline::train(
      sentences, emb, wordlist, fc, tc, [&](const cmsent::pipeline::EpochStats& e) {
        std::cout << "epoch " << e.epoch << "/" << tc.epochs << "  train_loss "
                  << fixed4(e.train_loss) << "  train_acc " << fixed4(e.train_accuracy)
                  << "  val_loss " << fixed4(e.val_loss) << "  val_acc "
                  << fixed4(e.val_accuracy) << "  val_f1 " << fixed4(e.val_weighted_f1) << '\n';
      });

  const std::string ck_path = out_path(cfg, "checkpoint.cmsc");
  cmsent::pipeline::save_checkpoint_file(result.checkpoint, ck_path);
  write_text_file(out_path(cfg, "history.json"),
                  cmsent::pipeline::history_json(result).dump(2) + "\n");
  write_text_file(out_path(cfg, "metrics.json"),
                  cmsent::eval::report_json(result.final_val).dump(2) + "\n");
  std::cout << "train/val split: " << result.train_size << "/" << result.val_size << '\n';
  std::cout << "final val accuracy " << fixed4(result.final_val.accuracy) << ", weighted F1 "
            << fixed4(result.final_val.weighted_f1) << '\n';
  std::cout << "wrote " << ck_path << '\n';
  std::cout << "wrote " << out_path(cfg, "history.json") << '\n';
  std::cout << "wrote " << out_path(cfg, "metrics.json") << '\n';
  clock.report();
  return 0;
}

int cmd_eval(const CommonFlags& flags) {
  WallClock clock;
  RunConfig cfg = resolve_config(flags, /*epochs_for_embedding=*/false);
  const std::string data = single_data_path(flags, cfg);
  require_path(data, "--data");
  require_path(cfg.embedding, "--embedding");
  require_path(cfg.checkpoint, "--checkpoint");

  auto emb = cmsent::embedding::load_files(cfg.embedding);
  auto ck = cmsent::pipeline::load_checkpoint_file(cfg.checkpoint);
  auto wordlist = load_wordlist_if(ck.feature.use_lang_tag, cfg.wordlist);
  auto examples = read_tsv_file(data);
  require_labels(examples, data);

  auto report = cmsent::pipeline::evaluate(ck, emb, wordlist, examples);
  std::cout << cmsent::eval::format_report_text(report);
  write_text_file(out_path(cfg, "metrics.json"),
                  cmsent::eval::report_json(report).dump(2) + "\n");
  write_text_file(out_path(cfg, "confusion.csv"), cmsent::eval::confusion_csv(report.confusion));
  std::cout << "wrote " << out_path(cfg, "metrics.json") << '\n';
  std::cout << "wrote " << out_path(cfg, "confusion.csv") << '\n';
  clock.report();
  return 0;
}

int cmd_ablate(const CommonFlags& flags) {
  WallClock clock;
  RunConfig cfg = resolve_config(flags, /*epochs_for_embedding=*/false);
  const std::string data = single_data_path(flags, cfg);
  require_path(data, "--data");
  require_path(cfg.embedding, "--embedding");

  auto emb = cmsent::embedding::load_files(cfg.embedding);
  // Two of the four variants use language tags, so a wordlist is always needed.
  auto wordlist = load_wordlist_if(true, cfg.wordlist);
  auto examples = read_tsv_file(data);
  require_labels(examples, data);
  std::size_t dropped = 0;
  auto sentences = cmsent::corpus::tokenize_examples(examples, &dropped);
  if (sentences.empty()) throw cmsent::UserInputError(data + ": no usable sentences");
  if (dropped > 0) std::cout << "skipped " << dropped << " sentence(s) with no tokens\n";

  const auto tc = cfg.train_config();
  std::cout << "all variants share one data split (split seed "
            << cmsent::derive_seed(tc.seed, 0) << ")\n";
  auto entries = cmsent::pipeline::ablate(sentences, emb, wordlist, tc,
                                          [&](const cmsent::pipeline::AblationEntry& e) {
                                            std::cout << "trained " << e.name << '\n';
                                          });

  std::cout << "variant              val_acc  val_P    val_R    val_F1\n";
  for (const auto& entry : entries) {
    const auto& r = entry.result.final_val;
    std::string name = entry.name;
    if (name.size() < 21) name.append(21 - name.size(), ' ');
    std::cout << name << fixed4(r.accuracy) << "   " << fixed4(r.weighted_precision) << "   "
              << fixed4(r.weighted_recall) << "   " << fixed4(r.weighted_f1) << '\n';
  }
  write_text_file(out_path(cfg, "ablation.json"),
                  cmsent::pipeline::ablation_json(entries).dump(2) + "\n");
  std::cout << "wrote " << out_path(cfg, "ablation.json") << '\n';
  clock.report();
  return 0;
}

int cmd_predict(const CommonFlags& flags) {
  WallClock clock;
  RunConfig cfg = resolve_config(flags, /*epochs_for_embedding=*/false);
  require_path(cfg.input, "--input");
  require_path(cfg.embedding, "--embedding");
  require_path(cfg.checkpoint, "--checkpoint");

  auto emb = cmsent::embedding::load_files(cfg.embedding);
  auto ck = cmsent::pipeline::load_checkpoint_file(cfg.checkpoint);
  auto wordlist = load_wordlist_if(ck.feature.use_lang_tag, cfg.wordlist);

  std::ifstream is(cfg.input, std::ios::binary);
  if (!is) throw cmsent::FileError("cannot open: " + cfg.input);
  std::vector<std::string> texts;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    texts.push_back(line);
  }

  auto predictions = cmsent::pipeline::predict(ck, emb, wordlist, texts);
  std::string tsv;
  for (std::size_t idx = 0; idx < texts.size(); ++idx) {
    std::string echoed = texts[idx];
    for (char& c : echoed) {
      if (c == '\t') c = ' ';  // keep the output strictly tab-separated
    }
    const auto& p = predictions[idx];
    tsv += echoed;
    tsv += '\t';
    tsv += cmsent::labels::label_name(p.label);
    tsv += '\t';
    for (int k = 0; k < cmsent::labels::kLabelCount; ++k) {
      if (k > 0) tsv += ' ';
      tsv += fixed4(p.probs[static_cast<std::size_t>(k)]);
    }
    tsv += '\t';
    tsv += p.empty_input ? "empty" : "ok";
    tsv += '\n';
  }
  const std::string pred_path = out_path(cfg, "predictions.tsv");
  write_text_file(pred_path, tsv);
  std::cout << "wrote " << predictions.size() << " prediction(s) to " << pred_path << '\n';
  clock.report();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sentiment classification for code-mixed Tamil-English text"};
  app.require_subcommand(1);

  CLI::App* embed = app.add_subcommand("embed", "train subword skip-gram embeddings");
  CLI::App* train = app.add_subcommand("train", "train the sentiment classifier");
  CLI::App* evalc = app.add_subcommand("eval", "score a checkpoint on labeled data");
  CLI::App* ablate = app.add_subcommand("ablate", "train all four model variants");
  CLI::App* predict = app.add_subcommand("predict", "label raw texts");

  CommonFlags embed_flags, train_flags, eval_flags, ablate_flags, predict_flags;
  add_common_flags(embed, embed_flags, /*epochs_for_embedding=*/true);
  add_common_flags(train, train_flags, false);
  add_common_flags(evalc, eval_flags, false);
  add_common_flags(ablate, ablate_flags, false);
  add_common_flags(predict, predict_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems are input errors
  }

  try {
    if (embed->parsed()) return cmd_embed(embed_flags);
    if (train->parsed()) return cmd_train(train_flags);
    if (evalc->parsed()) return cmd_eval(eval_flags);
    if (ablate->parsed()) return cmd_ablate(ablate_flags);
    if (predict->parsed()) return cmd_predict(predict_flags);
  } catch (const cmsent::UserInputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;  // no subcommand selected (unreachable with require_subcommand)
}
