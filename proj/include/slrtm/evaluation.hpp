#pragma once

// Held-out perplexity, document-vector export, and the built-in logistic
// regression classifier (accuracy / Micro-F1 protocol).

#include <cstdint>
#include <string>
#include <vector>

#include "slrtm/corpus.hpp"
#include "slrtm/inference.hpp"
#include "slrtm/model.hpp"

namespace slrtm {

struct DocPerplexity {
  std::string doc_id;
  double log_prob = 0.0;
  std::size_t words = 0;
};

struct PerplexityReport {
  double total_log_prob = 0.0;
  std::size_t word_count = 0;  // N' total
  double perplexity = 0.0;     // exp(-total_log_prob / word_count)
  std::vector<DocPerplexity> per_document;
};

struct PerplexityOptions {
  bool include_eos = false;     // count EOS tokens in N'
  bool elbo_estimator = false;  // per-document ELBO instead of plug-in
};

// For each document: infer_document, theta = gamma / sum(gamma), then
// log P(d) ~= sum_j LSE_k(log theta_k + beta_jk) (plug-in estimator).
PerplexityReport perplexity(const Corpus& test, const ModelParams& params,
                            const TrainConfig& cfg,
                            const PerplexityOptions& opts = {});

// Row i = gamma_i / sum_k gamma_ik from infer_document; M x K.
DenseMatrix doc_vectors(const Corpus& corpus, const ModelParams& params,
                        const TrainConfig& cfg);

void write_doc_vectors(const Corpus& corpus, const DenseMatrix& vectors,
                       const std::string& path);

enum class ClassifierMode { multiclass, one_vs_rest };

struct ClassifierModel {
  DenseMatrix weights;  // labels x (features + 1), last column is the bias
  std::vector<std::string> label_names;
  ClassifierMode mode = ClassifierMode::multiclass;
};

struct ClassifierOptions {
  double reg_strength = 1e-3;        // L2 on non-bias weights
  double validation_fraction = 0.1;  // held-out split for early stopping
  std::size_t epochs = 500;
  double learning_rate = 0.5;
  std::uint64_t seed = 7;
};

// labels[i]: label ids of row i (exactly one in multiclass mode).
ClassifierModel train_classifier(const DenseMatrix& features,
                                 const std::vector<std::vector<int>>& labels,
                                 ClassifierMode mode,
                                 const ClassifierOptions& opts = {});

struct ClassifierMetrics {
  double accuracy = 0.0;  // multiclass exact match
  double micro_f1 = 0.0;  // pooled over all label decisions
  std::size_t tp = 0, fp = 0, fn = 0;
  std::size_t examples = 0;
};

ClassifierMetrics evaluate_classifier(
    const ClassifierModel& model, const DenseMatrix& features,
    const std::vector<std::vector<int>>& gold_labels);

// 2PR / (P + R) from pooled counts; 0 when the denominator vanishes.
double micro_f1(std::size_t tp, std::size_t fp, std::size_t fn);

// Gradient of the L2-regularized log-likelihood; exposed for the
// finite-difference check.
double classifier_objective(const DenseMatrix& weights,
                            const DenseMatrix& features,
                            const std::vector<std::vector<int>>& labels,
                            ClassifierMode mode, double reg_strength,
                            DenseMatrix* grad_out);

}  // namespace slrtm
