#include "slrtm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "slrtm/errors.hpp"
#include "slrtm/kernels.hpp"

namespace slrtm {

PerplexityReport perplexity(const Corpus& test, const ModelParams& params,
                            const TrainConfig& cfg,
                            const PerplexityOptions& opts) {
  PerplexityReport rep;
  for (const auto& doc : test.documents) {
    auto inf = infer_document(doc, params, cfg);
    double log_p = 0.0;
    if (opts.elbo_estimator) {
      log_p = elbo(inf.state.phi, inf.state.gamma, inf.beta, cfg.alpha);
    } else {
      double sum_gamma = 0.0;
      for (double g : inf.state.gamma) sum_gamma += g;
      std::vector<double> log_theta(cfg.topics);
      for (std::size_t k = 0; k < cfg.topics; ++k)
        log_theta[k] = std::log(inf.state.gamma[k] / sum_gamma);
      std::vector<double> mix(cfg.topics);
      for (std::size_t j = 0; j < doc.sentences.size(); ++j) {
        for (std::size_t k = 0; k < cfg.topics; ++k)
          mix[k] = log_theta[k] + inf.beta(j, k);
        log_p += log_sum_exp(mix);
      }
    }
    std::size_t words = 0;
    for (const auto& s : doc.sentences)
      words += opts.include_eos ? s.token_ids.size() : s.word_count();
    rep.per_document.push_back({doc.doc_id, log_p, words});
    rep.total_log_prob += log_p;
    rep.word_count += words;
  }
  rep.perplexity =
      std::exp(-rep.total_log_prob / static_cast<double>(rep.word_count));
  return rep;
}

DenseMatrix doc_vectors(const Corpus& corpus, const ModelParams& params,
                        const TrainConfig& cfg) {
  DenseMatrix out(corpus.documents.size(), cfg.topics);
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    auto inf = infer_document(corpus.documents[i], params, cfg);
    double sum = 0.0;
    for (double g : inf.state.gamma) sum += g;
    for (std::size_t k = 0; k < cfg.topics; ++k)
      out(i, k) = inf.state.gamma[k] / sum;
  }
  return out;
}

void write_doc_vectors(const Corpus& corpus, const DenseMatrix& vectors,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write doc vectors: " + path);
  out.precision(17);
  for (std::size_t i = 0; i < vectors.rows; ++i) {
    out << corpus.documents[i].doc_id;
    for (std::size_t k = 0; k < vectors.cols; ++k) out << '\t' << vectors(i, k);
    out << '\n';
  }
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double score_row(const DenseMatrix& w, std::size_t c, const DenseMatrix& x,
                 std::size_t i) {
  const std::size_t f = x.cols;
  return kern::dot(w.row(c), x.row(i), f) + w(c, f);
}

}  // namespace

double classifier_objective(const DenseMatrix& weights,
                            const DenseMatrix& features,
                            const std::vector<std::vector<int>>& labels,
                            ClassifierMode mode, double reg_strength,
                            DenseMatrix* grad_out) {
  const std::size_t n = features.rows, f = features.cols;
  const std::size_t c = weights.rows;
  if (grad_out != nullptr) *grad_out = DenseMatrix(c, f + 1);

  double obj = 0.0;
  std::vector<double> scores(c);
  if (mode == ClassifierMode::multiclass) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < c; ++j) scores[j] = score_row(weights, j, features, i);
      const double lse = log_sum_exp(scores);
      const int y = labels[i].at(0);
      obj += scores[y] - lse;
      if (grad_out != nullptr) {
        for (std::size_t j = 0; j < c; ++j) {
          const double p = std::exp(scores[j] - lse);
          const double coef = (static_cast<int>(j) == y ? 1.0 : 0.0) - p;
          kern::axpy(coef, features.row(i), grad_out->row(j), f);
          (*grad_out)(j, f) += coef;
        }
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        const double s = score_row(weights, j, features, i);
        const bool pos = std::find(labels[i].begin(), labels[i].end(),
                                   static_cast<int>(j)) != labels[i].end();
        // log-likelihood of a Bernoulli with logit s
        obj += pos ? (s >= 0 ? -std::log1p(std::exp(-s))
                             : s - std::log1p(std::exp(s)))
                   : (s >= 0 ? -s - std::log1p(std::exp(-s))
                             : -std::log1p(std::exp(s)));
        if (grad_out != nullptr) {
          const double coef = (pos ? 1.0 : 0.0) - sigmoid(s);
          kern::axpy(coef, features.row(i), grad_out->row(j), f);
          (*grad_out)(j, f) += coef;
        }
      }
    }
  }

  // L2 on non-bias weights.
  for (std::size_t j = 0; j < c; ++j) {
    obj -= 0.5 * reg_strength * kern::sq_sum(weights.row(j), f);
    if (grad_out != nullptr)
      kern::axpy(-reg_strength, weights.row(j), grad_out->row(j), f);
  }
  return obj;
}

ClassifierModel train_classifier(const DenseMatrix& features,
                                 const std::vector<std::vector<int>>& labels,
                                 ClassifierMode mode,
                                 const ClassifierOptions& opts) {
  const std::size_t n = features.rows, f = features.cols;
  if (labels.size() != n)
    throw std::invalid_argument("train_classifier: label count mismatch");
  int max_label = -1;
  for (const auto& ls : labels)
    for (int l : ls) max_label = std::max(max_label, l);
  const std::size_t c = static_cast<std::size_t>(max_label + 1);
  if (mode == ClassifierMode::multiclass) {
    if (c < 2) throw ConfigError("multiclass classifier needs >= 2 classes");
    for (const auto& ls : labels)
      if (ls.size() != 1)
        throw std::invalid_argument(
            "multiclass classifier needs exactly one label per example");
  } else if (c < 1) {
    throw ConfigError("one-vs-rest classifier needs >= 1 label");
  }

  // Deterministic validation split.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(opts.seed);
  for (std::size_t i = n; i > 1; --i)
    std::swap(order[i - 1], order[rng.next_u64() % i]);
  const std::size_t n_val =
      static_cast<std::size_t>(opts.validation_fraction * static_cast<double>(n));
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val);
  std::vector<std::size_t> tr_idx(order.begin() + n_val, order.end());

  auto subset = [&](const std::vector<std::size_t>& idx, DenseMatrix& x,
                    std::vector<std::vector<int>>& y) {
    x = DenseMatrix(idx.size(), f);
    y.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      std::copy(features.row(idx[i]), features.row(idx[i]) + f, x.row(i));
      y[i] = labels[idx[i]];
    }
  };
  DenseMatrix x_tr, x_val;
  std::vector<std::vector<int>> y_tr, y_val;
  subset(tr_idx, x_tr, y_tr);
  subset(val_idx, x_val, y_val);

  ClassifierModel model;
  model.mode = mode;
  model.weights = DenseMatrix(c, f + 1);
  AdagradState opt(model.weights.size(), opts.learning_rate, 1e-8);

  DenseMatrix best = model.weights;
  double best_metric = -1.0;
  DenseMatrix grad;
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    classifier_objective(model.weights, x_tr, y_tr, mode, opts.reg_strength,
                         &grad);
    std::span<double> pb[] = {model.weights.v};
    std::span<const double> gb[] = {grad.v};
    adagrad_step(pb, gb, opt);
    if (!y_val.empty()) {
      ClassifierMetrics m = evaluate_classifier(model, x_val, y_val);
      const double metric =
          mode == ClassifierMode::multiclass ? m.accuracy : m.micro_f1;
      if (metric > best_metric) {
        best_metric = metric;
        best = model.weights;
      }
    }
  }
  if (best_metric >= 0.0) model.weights = best;
  return model;
}

double micro_f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const double denom = static_cast<double>(2 * tp + fp + fn);
  return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

ClassifierMetrics evaluate_classifier(
    const ClassifierModel& model, const DenseMatrix& features,
    const std::vector<std::vector<int>>& gold_labels) {
  const std::size_t n = features.rows;
  const std::size_t c = model.weights.rows;
  ClassifierMetrics m;
  m.examples = n;
  std::size_t correct = 0;
  std::vector<double> scores(c);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j)
      scores[j] = score_row(model.weights, j, features, i);
    const auto& gold = gold_labels[i];
    if (model.mode == ClassifierMode::multiclass) {
      const std::size_t pred = static_cast<std::size_t>(
          std::max_element(scores.begin(), scores.end()) - scores.begin());
      const bool ok = !gold.empty() && static_cast<int>(pred) == gold[0];
      correct += ok ? 1 : 0;
      m.tp += ok ? 1 : 0;
      m.fp += ok ? 0 : 1;
      m.fn += ok ? 0 : 1;
    } else {
      bool exact = true;
      for (std::size_t j = 0; j < c; ++j) {
        const bool pred = sigmoid(scores[j]) >= 0.5;
        const bool is_gold =
            std::find(gold.begin(), gold.end(), static_cast<int>(j)) !=
            gold.end();
        if (pred && is_gold) ++m.tp;
        if (pred && !is_gold) ++m.fp;
        if (!pred && is_gold) ++m.fn;
        if (pred != is_gold) exact = false;
      }
      correct += exact ? 1 : 0;
    }
  }
  m.accuracy = n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
  m.micro_f1 = micro_f1(m.tp, m.fp, m.fn);
  return m;
}

}  // namespace slrtm
