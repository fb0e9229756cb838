#pragma once

// Stochastic variational EM training loop and held-out inference.
//
//   gamma[k]  Dirichlet variational parameters of one document's topic mix
//   phi[l,k]  per-sentence multinomial over topics
//   beta[l,k] log P(s_l | k) from the LSTM forward pass
//
// Per minibatch (global step t, never reset):
//   E-step   phi_lk = exp(Psi(gamma_k) + beta_lk - LSE_j(...))
//            gamma~ = alpha + (n_doc / L) sum_l phi_l
//            gamma  = (1 - rho_t) gamma + rho_t gamma~,  rho_t = (tau0+t)^-kappa
//   M-step   grad = sum_l sum_k phi_lk d beta_lk / d Theta, clipped, Adagrad.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slrtm/corpus.hpp"
#include "slrtm/model.hpp"
#include "slrtm/numerics.hpp"

namespace slrtm {

struct VariationalState {
  std::vector<double> gamma;  // K positive reals
  DenseMatrix phi;            // L x K, rows on the simplex
};

struct TrainConfig {
  double alpha = 0.5;
  std::size_t topics = 16;
  std::size_t d_w = 128;
  std::size_t d_k = 128;
  std::size_t d_h = 600;
  std::size_t d_s = 0;  // 0 means d_w
  std::size_t minibatch = 5;  // L
  double tau0 = 1.0;
  double kappa = 0.6;
  std::size_t e_step_iters = 1;
  double learning_rate = 0.05;
  double adagrad_epsilon = 1e-8;
  double clip = 20.0;
  std::size_t epochs = 1;
  std::uint64_t seed = 42;
  OutputMode mode = OutputMode::softmax_logit;
  std::size_t threads = 1;
  double gamma0 = 0.5;             // initial gamma value
  bool faithful_gamma_scale = false;  // corpus-total scale instead of n_doc
  bool orthogonal_proj = true;
  double emb_range = 0.015;
  double phi_weight_cutoff = 1e-8;  // skip backward below this weight

  std::size_t d_s_effective() const { return d_s == 0 ? d_w : d_s; }
  // Throws ConfigError on invalid settings (kappa outside (0.5, 1], ...).
  void validate() const;
};

struct TrainLogRecord {
  std::size_t t = 0;
  double rho = 0.0;
  double elbo = 0.0;       // minibatch ELBO estimate
  double grad_norm = 0.0;  // pre-clip
  double wall_ms = 0.0;
};

struct TrainLog {
  std::vector<TrainLogRecord> records;
  std::size_t skipped_steps = 0;  // non-finite gradients
};

void write_train_log(const TrainLog& log, const std::string& path);

// rho_t = (tau0 + t)^-kappa
double rho_schedule(std::size_t t, double tau0, double kappa);

// phi_k = exp(Psi(gamma_k) + beta_k - LSE_j(Psi(gamma_j) + beta_j))
std::vector<double> update_phi(std::span<const double> beta,
                               std::span<const double> gamma);

// gamma~_k = alpha + (n_doc / L) sum_l phi_lk
std::vector<double> gamma_candidate(double alpha, const DenseMatrix& phi,
                                    std::size_t n_doc);

// (1 - rho) gamma_prev + rho gamma~
std::vector<double> gamma_blend(std::span<const double> gamma_prev,
                                std::span<const double> gamma_tilde,
                                double rho);

struct EStepResult {
  DenseMatrix phi;            // L x K
  std::vector<double> gamma;  // K
  DenseMatrix beta;           // L x K
  std::size_t iterations = 0;
};

// Computes beta once, then alternates update_phi / gamma updates for
// `iters` rounds or until max_k |delta gamma_k| < 1e-4. `n_doc` is the
// scale count for gamma_candidate (the document's sentence count, or the
// corpus total in faithful mode).
EStepResult e_step(std::span<const Sentence> batch,
                   std::span<const double> gamma_prev,
                   const ModelParams& params, const TrainConfig& cfg,
                   double rho, std::size_t n_doc, std::size_t iters);

EStepResult e_step(std::span<const Sentence> batch,
                   std::span<const double> gamma_prev,
                   const ModelParams& params, const TrainConfig& cfg,
                   double rho, std::size_t n_doc);

// Mean-field lower bound for the sentences covered by phi/beta.
double elbo(const DenseMatrix& phi, std::span<const double> gamma,
            const DenseMatrix& beta, double alpha);

struct MStepResult {
  double grad_norm = 0.0;  // pre-clip global L2 norm
  bool applied = false;    // false when non-finite gradients were skipped
};

MStepResult m_step(std::span<const Sentence> batch, const DenseMatrix& phi,
                   ModelParams& params, AdagradState& opt,
                   const TrainConfig& cfg);

struct TrainResult {
  ModelParams params;
  std::vector<std::vector<double>> gammas;  // per document, corpus order
  TrainLog log;
};

TrainResult train(const Corpus& corpus, const TrainConfig& cfg);

struct InferResult {
  VariationalState state;
  DenseMatrix beta;
  std::size_t iterations = 0;
};

// Full-batch coordinate ascent with rho = 1 and frozen params, from
// gamma = alpha + n_doc / K; max 100 iterations, tolerance 1e-4.
InferResult infer_document(const Document& doc, const ModelParams& params,
                           const TrainConfig& cfg);

// TSV: doc_id followed by K unnormalized gamma values.
void write_gamma_tsv(const std::vector<std::string>& doc_ids,
                     const std::vector<std::vector<double>>& gammas,
                     const std::string& path);

}  // namespace slrtm
