// slrtm: train / perplexity / docvec / classify / generate / topwords
//
// Machine-readable outputs go to files under --out; progress goes to
// stderr; each subcommand prints a one-line summary to stdout.
// Exit codes: 0 ok, 1 config error, 2 I/O error, 3 numerical failure,
// 4 checkpoint/vocabulary mismatch.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "slrtm/corpus.hpp"
#include "slrtm/errors.hpp"
#include "slrtm/evaluation.hpp"
#include "slrtm/generation.hpp"
#include "slrtm/inference.hpp"
#include "slrtm/model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  slrtm::TrainConfig train;
  slrtm::GenConfig gen;
  std::string corpus_path;
  std::string corpus_format = "presplit";  // dir | lines | presplit
  std::string labels_path;
  std::string checkpoint_dir;
  std::string out_path;
  std::string stoplist_path;
  std::int64_t min_count = 5;
  bool keep_punct = true;
  std::string mode_name = "softmax_logit";
  std::string preset;  // "", "paper", "generation"
};

json config_to_json(const RunConfig& c) {
  return json{
      {"alpha", c.train.alpha},
      {"topics", c.train.topics},
      {"d_w", c.train.d_w},
      {"d_k", c.train.d_k},
      {"d_h", c.train.d_h},
      {"d_s", c.train.d_s},
      {"minibatch", c.train.minibatch},
      {"tau0", c.train.tau0},
      {"kappa", c.train.kappa},
      {"e_step_iters", c.train.e_step_iters},
      {"learning_rate", c.train.learning_rate},
      {"adagrad_epsilon", c.train.adagrad_epsilon},
      {"clip", c.train.clip},
      {"epochs", c.train.epochs},
      {"seed", c.train.seed},
      {"mode", c.mode_name},
      {"threads", c.train.threads},
      {"gamma0", c.train.gamma0},
      {"faithful_gamma_scale", c.train.faithful_gamma_scale},
      {"orthogonal_proj", c.train.orthogonal_proj},
      {"emb_range", c.train.emb_range},
      {"min_count", c.min_count},
      {"keep_punct", c.keep_punct},
      {"corpus_format", c.corpus_format},
      {"beam_size", c.gen.beam_size},
      {"max_len", c.gen.max_len},
      {"temperature", c.gen.temperature},
      {"corpus", c.corpus_path},
      {"labels", c.labels_path},
      {"checkpoint", c.checkpoint_dir},
      {"out", c.out_path},
  };
}

template <typename T>
void maybe(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

void config_from_json(const json& j, RunConfig& c) {
  maybe(j, "alpha", c.train.alpha);
  maybe(j, "topics", c.train.topics);
  maybe(j, "d_w", c.train.d_w);
  maybe(j, "d_k", c.train.d_k);
  maybe(j, "d_h", c.train.d_h);
  maybe(j, "d_s", c.train.d_s);
  maybe(j, "minibatch", c.train.minibatch);
  maybe(j, "tau0", c.train.tau0);
  maybe(j, "kappa", c.train.kappa);
  maybe(j, "e_step_iters", c.train.e_step_iters);
  maybe(j, "learning_rate", c.train.learning_rate);
  maybe(j, "adagrad_epsilon", c.train.adagrad_epsilon);
  maybe(j, "clip", c.train.clip);
  maybe(j, "epochs", c.train.epochs);
  maybe(j, "seed", c.train.seed);
  maybe(j, "mode", c.mode_name);
  maybe(j, "threads", c.train.threads);
  maybe(j, "gamma0", c.train.gamma0);
  maybe(j, "faithful_gamma_scale", c.train.faithful_gamma_scale);
  maybe(j, "orthogonal_proj", c.train.orthogonal_proj);
  maybe(j, "emb_range", c.train.emb_range);
  maybe(j, "min_count", c.min_count);
  maybe(j, "keep_punct", c.keep_punct);
  maybe(j, "corpus_format", c.corpus_format);
  maybe(j, "beam_size", c.gen.beam_size);
  maybe(j, "max_len", c.gen.max_len);
  maybe(j, "temperature", c.gen.temperature);
  maybe(j, "corpus", c.corpus_path);
  maybe(j, "labels", c.labels_path);
  maybe(j, "checkpoint", c.checkpoint_dir);
  maybe(j, "out", c.out_path);
}

slrtm::CorpusLayout parse_layout(const std::string& name) {
  if (name == "dir" || name == "directory") return slrtm::CorpusLayout::directory;
  if (name == "lines" || name == "doc_per_line")
    return slrtm::CorpusLayout::doc_per_line;
  if (name == "presplit") return slrtm::CorpusLayout::presplit;
  throw slrtm::ConfigError("unknown corpus format: " + name);
}

void apply_preset(RunConfig& c) {
  if (c.preset.empty()) return;
  if (c.preset == "paper") {
    c.train.d_w = 128;
    c.train.d_k = 128;
    c.train.d_h = 600;
  } else if (c.preset == "generation") {
    c.train.d_w = 512;
    c.train.d_k = 1024;
    c.train.d_h = 1024;
  } else {
    throw slrtm::ConfigError("unknown preset: " + c.preset);
  }
}

void echo_config(const RunConfig& c, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw slrtm::IoError("cannot create output directory: " + dir.string());
  std::ofstream out(dir / "config.json");
  if (!out) throw slrtm::IoError("cannot write config echo in " + dir.string());
  out << config_to_json(c).dump(2) << '\n';
}

slrtm::Corpus load_and_encode(const RunConfig& c,
                              const slrtm::Vocabulary* fixed_vocab) {
  if (c.corpus_path.empty()) throw slrtm::ConfigError("--corpus is required");
  auto raw = read_raw_corpus(c.corpus_path, parse_layout(c.corpus_format));
  slrtm::TokenizerOptions topts{c.keep_punct};
  slrtm::Vocabulary vocab;
  if (fixed_vocab != nullptr) {
    vocab = *fixed_vocab;
  } else {
    vocab = slrtm::build_vocabulary(slrtm::count_tokens(raw, topts), c.min_count);
  }
  auto corpus = slrtm::encode_corpus(raw, vocab, topts);
  if (!c.labels_path.empty()) slrtm::attach_labels(corpus, c.labels_path);
  return corpus;
}

std::string detok(const std::vector<int>& ids, const slrtm::Vocabulary& vocab) {
  std::string line;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) line += ' ';
    line += vocab.tokens[static_cast<std::size_t>(ids[i])];
  }
  return line;
}

int cmd_train(RunConfig& c) {
  apply_preset(c);
  c.train.mode = slrtm::output_mode_from_name(c.mode_name);
  c.train.validate();
  if (c.out_path.empty()) throw slrtm::ConfigError("--out is required");

  auto corpus = load_and_encode(c, nullptr);
  std::cerr << "corpus: " << corpus.documents.size() << " documents, "
            << corpus.total_sentences() << " sentences, vocab "
            << corpus.vocabulary.size() << "\n";

  auto result = slrtm::train(corpus, c.train);

  const fs::path out(c.out_path);
  echo_config(c, out);
  slrtm::save_checkpoint(out.string(), result.params, corpus.vocabulary,
                         c.train.mode);
  std::vector<std::string> ids;
  ids.reserve(corpus.documents.size());
  for (const auto& d : corpus.documents) ids.push_back(d.doc_id);
  slrtm::write_gamma_tsv(ids, result.gammas, (out / "gamma.tsv").string());
  slrtm::write_train_log(result.log, (out / "trainlog.jsonl").string());

  double last_elbo = 0.0;
  if (!result.log.records.empty()) last_elbo = result.log.records.back().elbo;
  std::cout << "train: " << result.log.records.size() << " steps, "
            << result.log.skipped_steps << " skipped, last minibatch elbo "
            << last_elbo << ", checkpoint " << c.out_path << "\n";
  return 0;
}

int cmd_perplexity(RunConfig& c, bool include_eos, bool elbo_estimator) {
  if (c.checkpoint_dir.empty())
    throw slrtm::ConfigError("--checkpoint is required");
  if (c.out_path.empty()) throw slrtm::ConfigError("--out is required");
  auto model = slrtm::load_checkpoint(c.checkpoint_dir);
  auto corpus = load_and_encode(c, &model.vocab);

  c.train.topics = model.params.dims.topics;
  c.train.mode = model.mode;
  slrtm::PerplexityOptions opts{include_eos, elbo_estimator};
  auto rep = slrtm::perplexity(corpus, model.params, c.train, opts);

  const fs::path out(c.out_path);
  echo_config(c, out);
  json j{{"perplexity", rep.perplexity},
         {"total_log_prob", rep.total_log_prob},
         {"word_count", rep.word_count},
         {"documents", rep.per_document.size()},
         {"include_eos", include_eos},
         {"estimator", elbo_estimator ? "elbo" : "plugin"}};
  auto rows = json::array();
  for (const auto& d : rep.per_document)
    rows.push_back({{"doc_id", d.doc_id},
                    {"log_prob", d.log_prob},
                    {"words", d.words}});
  j["per_document"] = rows;
  std::ofstream f(out / "perplexity.json");
  if (!f) throw slrtm::IoError("cannot write perplexity.json");
  f << j.dump(2) << '\n';

  std::cout << "perplexity: " << rep.perplexity << " over " << rep.word_count
            << " words (" << rep.per_document.size() << " docs)\n";
  return 0;
}

int cmd_docvec(RunConfig& c) {
  if (c.checkpoint_dir.empty())
    throw slrtm::ConfigError("--checkpoint is required");
  if (c.out_path.empty()) throw slrtm::ConfigError("--out is required");
  auto model = slrtm::load_checkpoint(c.checkpoint_dir);
  auto corpus = load_and_encode(c, &model.vocab);

  c.train.topics = model.params.dims.topics;
  c.train.mode = model.mode;
  auto vecs = slrtm::doc_vectors(corpus, model.params, c.train);
  slrtm::write_doc_vectors(corpus, vecs, c.out_path);
  std::cout << "docvec: " << vecs.rows << " rows x " << vecs.cols
            << " topics -> " << c.out_path << "\n";
  return 0;
}

struct FeatureTable {
  std::vector<std::string> ids;
  slrtm::DenseMatrix x;
};

FeatureTable read_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw slrtm::IoError("cannot open features file: " + path);
  std::vector<std::vector<double>> rows;
  FeatureTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = line.find('\t');
    if (pos == std::string::npos)
      throw slrtm::IoError("features file: bad line: " + line);
    t.ids.push_back(line.substr(0, pos));
    while (pos != std::string::npos) {
      const std::size_t next = line.find('\t', pos + 1);
      row.push_back(std::stod(line.substr(
          pos + 1, next == std::string::npos ? next : next - pos - 1)));
      pos = next;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw slrtm::IoError("features file is empty: " + path);
  t.x = slrtm::DenseMatrix(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != t.x.cols)
      throw slrtm::IoError("features file: ragged rows in " + path);
    std::copy(rows[i].begin(), rows[i].end(), t.x.row(i));
  }
  return t;
}

std::map<std::string, std::vector<std::string>> read_label_map(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw slrtm::IoError("cannot open labels file: " + path);
  std::map<std::string, std::vector<std::string>> m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw slrtm::IoError("labels file: missing tab: " + line);
    std::vector<std::string> names;
    std::stringstream ss(line.substr(tab + 1));
    std::string part;
    while (std::getline(ss, part, ','))
      if (!part.empty()) names.push_back(part);
    m[line.substr(0, tab)] = std::move(names);
  }
  return m;
}

int cmd_classify(RunConfig& c, const std::string& train_features_path,
                 const std::string& train_labels_path,
                 const std::string& test_features_path,
                 const std::string& test_labels_path,
                 const std::string& clf_mode, double reg, double val_fraction) {
  if (c.out_path.empty()) throw slrtm::ConfigError("--out is required");
  auto tr = read_features(train_features_path);
  auto te = read_features(test_features_path);
  auto tr_labels = read_label_map(train_labels_path);
  auto te_labels = read_label_map(test_labels_path);

  std::map<std::string, int> name_id;
  for (const auto& [_, names] : tr_labels)
    for (const auto& n : names) name_id.emplace(n, 0);
  std::vector<std::string> label_names;
  for (auto& [n, id] : name_id) {
    id = static_cast<int>(label_names.size());
    label_names.push_back(n);
  }

  auto to_ids = [&](const FeatureTable& t,
                    const std::map<std::string, std::vector<std::string>>& lm) {
    std::vector<std::vector<int>> out(t.ids.size());
    for (std::size_t i = 0; i < t.ids.size(); ++i) {
      auto it = lm.find(t.ids[i]);
      if (it == lm.end())
        throw slrtm::IoError("no labels for doc " + t.ids[i]);
      for (const auto& n : it->second) {
        auto nit = name_id.find(n);
        if (nit != name_id.end()) out[i].push_back(nit->second);
      }
      std::sort(out[i].begin(), out[i].end());
    }
    return out;
  };
  auto y_tr = to_ids(tr, tr_labels);
  auto y_te = to_ids(te, te_labels);

  const auto mode = clf_mode == "ovr" ? slrtm::ClassifierMode::one_vs_rest
                                      : slrtm::ClassifierMode::multiclass;
  slrtm::ClassifierOptions opts;
  opts.reg_strength = reg;
  opts.validation_fraction = val_fraction;
  opts.seed = c.train.seed;
  auto model = slrtm::train_classifier(tr.x, y_tr, mode, opts);
  model.label_names = label_names;
  auto metrics = slrtm::evaluate_classifier(model, te.x, y_te);

  const fs::path out(c.out_path);
  echo_config(c, out);
  json j{{"accuracy", metrics.accuracy}, {"micro_f1", metrics.micro_f1},
         {"tp", metrics.tp},             {"fp", metrics.fp},
         {"fn", metrics.fn},             {"examples", metrics.examples},
         {"mode", clf_mode},             {"reg_strength", reg},
         {"labels", label_names}};
  std::ofstream f(out / "metrics.json");
  if (!f) throw slrtm::IoError("cannot write metrics.json");
  f << j.dump(2) << '\n';

  std::cout << "classify: accuracy " << metrics.accuracy << ", micro_f1 "
            << metrics.micro_f1 << " on " << metrics.examples << " examples\n";
  return 0;
}

int cmd_generate(RunConfig& c, const std::string& topic_arg,
                 const std::string& gen_mode, std::size_t num) {
  if (c.checkpoint_dir.empty())
    throw slrtm::ConfigError("--checkpoint is required");
  if (c.out_path.empty()) throw slrtm::ConfigError("--out is required");
  auto model = slrtm::load_checkpoint(c.checkpoint_dir);
  const std::size_t topics = model.params.dims.topics;

  std::vector<std::size_t> topic_ids;
  if (topic_arg == "all") {
    for (std::size_t k = 0; k < topics; ++k) topic_ids.push_back(k);
  } else {
    const auto k = static_cast<std::size_t>(std::stoull(topic_arg));
    if (k >= topics) throw slrtm::ConfigError("topic id out of range");
    topic_ids.push_back(k);
  }

  std::ofstream out(c.out_path, std::ios::binary);
  if (!out) throw slrtm::IoError("cannot write output file: " + c.out_path);
  out.precision(17);

  std::size_t lines = 0;
  slrtm::GenConfig gcfg = c.gen;
  if (gen_mode == "greedy") gcfg.beam_size = 1;
  for (std::size_t k : topic_ids) {
    if (gen_mode == "sample") {
      for (std::size_t i = 0; i < num; ++i) {
        double lp = 0.0;
        auto ids = slrtm::sample_sentence(k, model.params, model.mode, gcfg,
                                          i, &lp);
        out << k << '\t' << lp << '\t' << detok(ids, model.vocab) << '\n';
        ++lines;
      }
    } else {  // beam | greedy
      auto hyps = slrtm::beam_search(k, model.params, model.mode, gcfg);
      if (hyps.size() > num) hyps.resize(num);
      for (const auto& h : hyps) {
        auto ids = h.token_ids;
        if (h.finished) ids.pop_back();  // drop EOS for display
        out << k << '\t' << h.log_prob << '\t' << detok(ids, model.vocab)
            << '\n';
        ++lines;
      }
    }
  }
  std::cout << "generate: " << lines << " sentences (" << gen_mode << ") -> "
            << c.out_path << "\n";
  return 0;
}

int cmd_topwords(RunConfig& c, std::size_t n) {
  if (c.checkpoint_dir.empty())
    throw slrtm::ConfigError("--checkpoint is required");
  if (c.out_path.empty()) throw slrtm::ConfigError("--out is required");
  auto model = slrtm::load_checkpoint(c.checkpoint_dir);

  std::vector<std::string> stop = slrtm::default_stoplist();
  if (!c.stoplist_path.empty()) {
    std::ifstream in(c.stoplist_path);
    if (!in) throw slrtm::IoError("cannot open stoplist: " + c.stoplist_path);
    stop.clear();
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) stop.push_back(line);
  }
  const auto stop_ids = slrtm::resolve_stoplist(model.vocab, stop);

  std::ofstream out(c.out_path, std::ios::binary);
  if (!out) throw slrtm::IoError("cannot write output file: " + c.out_path);
  out.precision(17);
  for (std::size_t k = 0; k < model.params.dims.topics; ++k) {
    auto words = slrtm::top_words(k, model.params, model.mode, n, stop_ids);
    for (std::size_t r = 0; r < words.size(); ++r)
      out << k << '\t' << (r + 1) << '\t'
          << model.vocab.tokens[static_cast<std::size_t>(words[r].token_id)]
          << '\t' << words[r].prob << '\n';
  }
  std::cout << "topwords: " << n << " words x " << model.params.dims.topics
            << " topics -> " << c.out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;

  // --config is honored before flag overrides.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) {
        std::cerr << "error: cannot open config file: " << argv[i + 1] << "\n";
        return 2;
      }
      try {
        json j;
        in >> j;
        config_from_json(j, cfg);
      } catch (const json::exception& e) {
        std::cerr << "error: bad config file: " << e.what() << "\n";
        return 1;
      }
    }
  }

  CLI::App app{"Sentence-level recurrent topic model toolchain"};
  app.require_subcommand(1);
  std::string config_path;

  auto add_shared = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (defaults)");
    sub->add_option("--seed", cfg.train.seed, "random seed")
        ->capture_default_str();
    sub->add_option("--threads", cfg.train.threads, "worker threads")
        ->capture_default_str();
    sub->add_option("--checkpoint", cfg.checkpoint_dir, "checkpoint directory");
    sub->add_option("--corpus", cfg.corpus_path, "corpus path");
    sub->add_option("--corpus-format", cfg.corpus_format,
                    "dir | lines | presplit")
        ->capture_default_str();
    sub->add_option("--out", cfg.out_path, "output path");
    sub->add_flag("!--drop-punct", cfg.keep_punct,
                  "drop punctuation tokens instead of keeping them");
  };

  auto* t = app.add_subcommand("train", "train a model (stochastic variational EM)");
  add_shared(t);
  t->add_option("--labels", cfg.labels_path, "labels TSV (doc_id, names)");
  t->add_option("--alpha", cfg.train.alpha, "Dirichlet prior")->capture_default_str();
  t->add_option("-K,--topics", cfg.train.topics, "topic count")->capture_default_str();
  t->add_option("--d-w", cfg.train.d_w, "word embedding size")->capture_default_str();
  t->add_option("--d-k", cfg.train.d_k, "topic embedding size")->capture_default_str();
  t->add_option("--d-h", cfg.train.d_h, "LSTM hidden size")->capture_default_str();
  t->add_option("--d-s", cfg.train.d_s, "output projection size (0 = d_w)")
      ->capture_default_str();
  t->add_option("-L,--minibatch", cfg.train.minibatch, "sentences per minibatch")
      ->capture_default_str();
  t->add_option("--tau0", cfg.train.tau0, "schedule offset")->capture_default_str();
  t->add_option("--kappa", cfg.train.kappa, "schedule exponent, in (0.5, 1]")
      ->capture_default_str();
  t->add_option("--e-step-iters", cfg.train.e_step_iters, "E-step iterations")
      ->capture_default_str();
  t->add_option("--lr", cfg.train.learning_rate, "Adagrad learning rate")
      ->capture_default_str();
  t->add_option("--adagrad-eps", cfg.train.adagrad_epsilon, "Adagrad epsilon")
      ->capture_default_str();
  t->add_option("--clip", cfg.train.clip, "global-norm gradient clip")
      ->capture_default_str();
  t->add_option("--epochs", cfg.train.epochs, "epochs over the corpus")
      ->capture_default_str();
  t->add_option("--mode", cfg.mode_name, "softmax_logit | normalized_sigmoid")
      ->capture_default_str();
  t->add_option("--gamma0", cfg.train.gamma0, "initial gamma value")
      ->capture_default_str();
  t->add_option("--min-count", cfg.min_count, "vocabulary frequency cutoff")
      ->capture_default_str();
  t->add_option("--preset", cfg.preset, "paper | generation (dimension presets)");
  t->add_flag("--faithful-gamma-scale", cfg.train.faithful_gamma_scale,
              "use the corpus-total sentence scale in the gamma update");
  t->add_flag("!--uniform-proj", cfg.train.orthogonal_proj,
              "initialize W1..W3 uniformly instead of orthogonally");

  bool eos_inclusive = false, elbo_estimator = false;
  auto* p = app.add_subcommand("perplexity", "held-out perplexity per word");
  add_shared(p);
  p->add_option("--alpha", cfg.train.alpha, "Dirichlet prior")->capture_default_str();
  p->add_flag("--eos-inclusive", eos_inclusive, "count EOS tokens in N'");
  p->add_flag("--elbo-estimator", elbo_estimator,
              "use the per-document ELBO instead of the plug-in estimator");

  auto* d = app.add_subcommand("docvec", "export normalized gamma document vectors");
  add_shared(d);
  d->add_option("--alpha", cfg.train.alpha, "Dirichlet prior")->capture_default_str();

  std::string train_features, train_labels, test_features, test_labels;
  std::string clf_mode = "multiclass";
  double reg = 1e-3, val_fraction = 0.1;
  auto* cl = app.add_subcommand("classify", "logistic regression over doc vectors");
  add_shared(cl);
  cl->add_option("--train-features", train_features, "doc-vector TSV")->required();
  cl->add_option("--train-labels", train_labels, "labels TSV")->required();
  cl->add_option("--test-features", test_features, "doc-vector TSV")->required();
  cl->add_option("--test-labels", test_labels, "labels TSV")->required();
  cl->add_option("--clf-mode", clf_mode, "multiclass | ovr")->capture_default_str();
  cl->add_option("--reg", reg, "L2 regularization strength")->capture_default_str();
  cl->add_option("--val-fraction", val_fraction, "validation fraction")
      ->capture_default_str();

  std::string topic_arg = "all", gen_mode = "sample";
  std::size_t num = 5;
  auto* g = app.add_subcommand("generate", "topic2sentence generation");
  add_shared(g);
  g->add_option("--topic", topic_arg, "topic id or 'all'")->capture_default_str();
  g->add_option("--mode", gen_mode, "sample | beam | greedy")->capture_default_str();
  g->add_option("--num", num, "sentences per topic")->capture_default_str();
  g->add_option("--beam", cfg.gen.beam_size, "beam size")->capture_default_str();
  g->add_option("--max-len", cfg.gen.max_len, "maximum sentence length")
      ->capture_default_str();
  g->add_option("--temperature", cfg.gen.temperature, "sampling temperature")
      ->capture_default_str();
  g->add_flag("--resample-unk", cfg.gen.resample_unk,
              "redraw UNK samples up to 10 times");

  std::size_t topn = 5;
  auto* w = app.add_subcommand("topwords", "representative words per topic");
  add_shared(w);
  w->add_option("-n,--num", topn, "words per topic")->capture_default_str();
  w->add_option("--stoplist", cfg.stoplist_path, "stoplist file, one token per line");

  CLI11_PARSE(app, argc, argv);
  cfg.gen.seed = cfg.train.seed;

  try {
    if (t->parsed()) return cmd_train(cfg);
    if (p->parsed()) return cmd_perplexity(cfg, eos_inclusive, elbo_estimator);
    if (d->parsed()) return cmd_docvec(cfg);
    if (cl->parsed())
      return cmd_classify(cfg, train_features, train_labels, test_features,
                          test_labels, clf_mode, reg, val_fraction);
    if (g->parsed()) return cmd_generate(cfg, topic_arg, gen_mode, num);
    if (w->parsed()) return cmd_topwords(cfg, topn);
  } catch (const slrtm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const slrtm::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 2;
  } catch (const slrtm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const slrtm::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
