#pragma once

// SLRTM parameterization and its differentiable sentence likelihood.
//
// Notation used throughout:
//   V    vocabulary size        K    topic count
//   d_w  word embedding size    d_k  topic embedding size
//   d_h  LSTM hidden size       d_s  output projection size
//
// Per step t (h_0 = 0, y_0 = BOS), with x_t = [emb(y_{t-1}); emb(topic)]:
//   gates   a = b_lstm + Wx x_t + Wh h_{t-1}           (order i, f, g, o)
//   cell    c_t = sigmoid(a_f) . c_{t-1} + sigmoid(a_i) . tanh(a_g)
//   hidden  h_t = sigmoid(a_o) . tanh(c_t)
//   scores  s_t = b + W1 h_t + W2 emb(y_{t-1}) + W3 emb(topic)
//   logits  l_w = out_emb_w . s_t
// and the word distribution is softmax(l) or sigmoid(l)/sum sigmoid(l).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slrtm/corpus.hpp"
#include "slrtm/numerics.hpp"

namespace slrtm {

enum class OutputMode { softmax_logit, normalized_sigmoid };

const char* output_mode_name(OutputMode mode);
OutputMode output_mode_from_name(const std::string& name);

struct ModelDims {
  std::size_t vocab = 0;
  std::size_t topics = 0;
  std::size_t d_w = 0;
  std::size_t d_k = 0;
  std::size_t d_h = 0;
  std::size_t d_s = 0;

  std::size_t d_x() const { return d_w + d_k; }
  bool operator==(const ModelDims&) const = default;
};

struct ModelParams {
  ModelDims dims;
  DenseMatrix word_in_emb;        // V x d_w
  DenseMatrix word_out_emb;       // V x d_s
  DenseMatrix topic_emb;          // K x d_k
  DenseMatrix lstm_wx;            // 4 d_h x d_x
  DenseMatrix lstm_wh;            // 4 d_h x d_h
  std::vector<double> lstm_b;     // 4 d_h
  DenseMatrix proj_h;             // d_s x d_h   (W1)
  DenseMatrix proj_y;             // d_s x d_w   (W2)
  DenseMatrix proj_k;             // d_s x d_k   (W3)
  std::vector<double> out_bias;   // d_s        (b)

  static ModelParams zeros(const ModelDims& dims);

  // Blocks in the fixed manifest/serialization order.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;
  static std::vector<std::string> block_names();
  std::size_t total_size() const;
};

// Gradients are shape-congruent with the parameters they differentiate.
using ParamGrads = ModelParams;

struct InitOptions {
  double emb_range = 0.015;    // uniform(-emb_range, emb_range)
  bool orthogonal_proj = true; // W1..W3 orthogonal; uniform otherwise
  double forget_bias = 1.0;
};

ModelParams init_params(const ModelDims& dims, std::uint64_t seed,
                        const InitOptions& opts = {});

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;

  explicit LstmState(std::size_t d_h = 0) : h(d_h, 0.0), c(d_h, 0.0) {}
};

LstmState lstm_step(const LstmState& state, std::span<const double> word_emb,
                    std::span<const double> topic_emb,
                    const ModelParams& params);

// Distribution over the vocabulary for the next word.
std::vector<double> word_distribution(const LstmState& state,
                                      std::span<const double> prev_word_emb,
                                      std::span<const double> topic_emb,
                                      const ModelParams& params,
                                      OutputMode mode);

// log of word_distribution, computed stably; per-step values agree exactly
// with the terms sentence_log_prob accumulates.
std::vector<double> log_word_distribution(const LstmState& state,
                                          std::span<const double> prev_word_emb,
                                          std::span<const double> topic_emb,
                                          const ModelParams& params,
                                          OutputMode mode);

// beta = sum_t log P(y_t | y_{<t}, topic), EOS term included.
double sentence_log_prob(const Sentence& sentence, std::size_t topic,
                         const ModelParams& params, OutputMode mode);

struct SentenceGrad {
  double log_prob = 0.0;
  ParamGrads grads;
};

// Full BPTT over the sentence; log_prob matches sentence_log_prob
// bit-for-bit (both run the same forward code).
SentenceGrad sentence_grad(const Sentence& sentence, std::size_t topic,
                           const ModelParams& params, OutputMode mode);

// Accumulates weight * d(log prob)/d(params) into `into`; returns log_prob.
// This is the M-step workhorse: grads stay in one accumulator.
double sentence_grad_accum(const Sentence& sentence, std::size_t topic,
                           const ModelParams& params, OutputMode mode,
                           double weight, ParamGrads& into);

// Checkpoint directory: manifest.json + params.bin (little-endian float32
// blocks in manifest order) + vocab.tsv. Loading verifies shapes and the
// vocabulary content hash.
void save_checkpoint(const std::string& dir, const ModelParams& params,
                     const Vocabulary& vocab, OutputMode mode);

struct LoadedModel {
  ModelParams params;
  Vocabulary vocab;
  OutputMode mode = OutputMode::softmax_logit;
};

LoadedModel load_checkpoint(const std::string& dir);

}  // namespace slrtm
