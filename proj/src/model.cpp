#include "slrtm/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "slrtm/kernels.hpp"

namespace slrtm {

namespace {

constexpr int kBosId = 0;
constexpr int kEosId = 1;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

void validate_sentence(const Sentence& s, std::size_t topic,
                       const ModelDims& d) {
  if (topic >= d.topics) throw std::out_of_range("invalid topic id");
  if (s.token_ids.empty())
    throw std::invalid_argument("sentence must be nonempty");
  if (s.token_ids.back() != kEosId)
    throw std::invalid_argument("sentence must end with EOS");
  for (int id : s.token_ids)
    if (id < 0 || static_cast<std::size_t>(id) >= d.vocab)
      throw std::invalid_argument("token id outside vocabulary");
}

// One LSTM cell evaluation. gates (4 d_h) receives the post-activation
// i, f, g, o blocks.
void cell_forward(const ModelParams& p, const double* x, const double* h_prev,
                  const double* c_prev, double* gates, double* c_out,
                  double* tanh_c, double* h_out) {
  const std::size_t dh = p.dims.d_h;
  std::copy(p.lstm_b.begin(), p.lstm_b.end(), gates);
  matvec_acc(p.lstm_wx, x, gates);
  matvec_acc(p.lstm_wh, h_prev, gates);
  for (std::size_t i = 0; i < dh; ++i) {
    const double gi = sigmoid(gates[i]);
    const double gf = sigmoid(gates[dh + i]);
    const double gg = std::tanh(gates[2 * dh + i]);
    const double go = sigmoid(gates[3 * dh + i]);
    gates[i] = gi;
    gates[dh + i] = gf;
    gates[2 * dh + i] = gg;
    gates[3 * dh + i] = go;
    c_out[i] = gf * c_prev[i] + gi * gg;
    tanh_c[i] = std::tanh(c_out[i]);
    h_out[i] = go * tanh_c[i];
  }
}

// s = b + W1 h + W2 y + W3 k; logits = word_out_emb s
void score_logits(const ModelParams& p, const double* h, const double* yemb,
                  const double* kemb, double* s, double* logits) {
  std::copy(p.out_bias.begin(), p.out_bias.end(), s);
  matvec_acc(p.proj_h, h, s);
  matvec_acc(p.proj_y, yemb, s);
  matvec_acc(p.proj_k, kemb, s);
  matvec(p.word_out_emb, s, logits);
}

struct StepTape {
  int prev_id = 0;
  std::vector<double> gates;   // 4 d_h post-activation
  std::vector<double> tanh_c;  // d_h
  std::vector<double> s;       // d_s
  // softmax mode: normalized probabilities; sigmoid mode: raw sigmoid(l_v)
  std::vector<double> probs;
  double zsig = 0.0;  // sum of sigmoids (sigmoid mode only)
};

struct Tape {
  std::vector<std::vector<double>> h;  // T+1, h[0] = 0
  std::vector<std::vector<double>> c;  // T+1, c[0] = 0
  std::vector<StepTape> steps;         // T
};

double forward_sentence(const Sentence& sent, std::size_t topic,
                        const ModelParams& p, OutputMode mode, Tape* tape) {
  validate_sentence(sent, topic, p.dims);
  const auto& d = p.dims;
  const std::size_t T = sent.token_ids.size();
  const std::size_t dh = d.d_h, dw = d.d_w, dk = d.d_k, ds = d.d_s;
  const std::size_t V = d.vocab;
  const double* kemb = p.topic_emb.row(topic);

  std::vector<double> h(dh, 0.0), c(dh, 0.0);
  std::vector<double> x(d.d_x()), gates(4 * dh), c_new(dh), tanh_c(dh),
      h_new(dh), s(ds), logits(V);
  if (tape != nullptr) {
    tape->h.assign(T + 1, {});
    tape->c.assign(T + 1, {});
    tape->h[0] = h;
    tape->c[0] = c;
    tape->steps.assign(T, {});
  }

  double beta = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const int prev = t == 0 ? kBosId : sent.token_ids[t - 1];
    const int cur = sent.token_ids[t];
    const double* yemb = p.word_in_emb.row(prev);
    std::copy(yemb, yemb + dw, x.begin());
    std::copy(kemb, kemb + dk, x.begin() + dw);

    cell_forward(p, x.data(), h.data(), c.data(), gates.data(), c_new.data(),
                 tanh_c.data(), h_new.data());
    score_logits(p, h_new.data(), yemb, kemb, s.data(), logits.data());

    double zsig = 0.0;
    if (mode == OutputMode::softmax_logit) {
      const double m = kern::vmax(logits.data(), V);
      double sum = 0.0;
      for (std::size_t v = 0; v < V; ++v) sum += std::exp(logits[v] - m);
      beta += logits[cur] - m - std::log(sum);
      if (tape != nullptr) {
        auto& pr = tape->steps[t].probs;
        pr.resize(V);
        for (std::size_t v = 0; v < V; ++v)
          pr[v] = std::exp(logits[v] - m) / sum;
      }
    } else {
      double z = 0.0;
      for (std::size_t v = 0; v < V; ++v) z += sigmoid(logits[v]);
      beta += log_sigmoid(logits[cur]) - std::log(z);
      zsig = z;
      if (tape != nullptr) {
        auto& pr = tape->steps[t].probs;
        pr.resize(V);
        for (std::size_t v = 0; v < V; ++v) pr[v] = sigmoid(logits[v]);
      }
    }

    if (tape != nullptr) {
      StepTape& st = tape->steps[t];
      st.prev_id = prev;
      st.gates = gates;
      st.tanh_c = tanh_c;
      st.s = s;
      st.zsig = zsig;
      tape->h[t + 1] = h_new;
      tape->c[t + 1] = c_new;
    }
    std::swap(h, h_new);
    std::swap(c, c_new);
  }
  return beta;
}

}  // namespace

const char* output_mode_name(OutputMode mode) {
  return mode == OutputMode::softmax_logit ? "softmax_logit"
                                           : "normalized_sigmoid";
}

OutputMode output_mode_from_name(const std::string& name) {
  if (name == "softmax_logit" || name == "softmax")
    return OutputMode::softmax_logit;
  if (name == "normalized_sigmoid" || name == "norm_sigmoid" ||
      name == "sigmoid")
    return OutputMode::normalized_sigmoid;
  throw std::invalid_argument("unknown output mode: " + name);
}

ModelParams ModelParams::zeros(const ModelDims& dims) {
  ModelParams p;
  p.dims = dims;
  p.word_in_emb = DenseMatrix(dims.vocab, dims.d_w);
  p.word_out_emb = DenseMatrix(dims.vocab, dims.d_s);
  p.topic_emb = DenseMatrix(dims.topics, dims.d_k);
  p.lstm_wx = DenseMatrix(4 * dims.d_h, dims.d_x());
  p.lstm_wh = DenseMatrix(4 * dims.d_h, dims.d_h);
  p.lstm_b.assign(4 * dims.d_h, 0.0);
  p.proj_h = DenseMatrix(dims.d_s, dims.d_h);
  p.proj_y = DenseMatrix(dims.d_s, dims.d_w);
  p.proj_k = DenseMatrix(dims.d_s, dims.d_k);
  p.out_bias.assign(dims.d_s, 0.0);
  return p;
}

std::vector<std::span<double>> ModelParams::blocks() {
  return {word_in_emb.v, word_out_emb.v, topic_emb.v, lstm_wx.v,
          lstm_wh.v,     lstm_b,         proj_h.v,    proj_y.v,
          proj_k.v,      out_bias};
}

std::vector<std::span<const double>> ModelParams::blocks() const {
  return {word_in_emb.v, word_out_emb.v, topic_emb.v, lstm_wx.v,
          lstm_wh.v,     lstm_b,         proj_h.v,    proj_y.v,
          proj_k.v,      out_bias};
}

std::vector<std::string> ModelParams::block_names() {
  return {"word_in_emb", "word_out_emb", "topic_emb", "lstm_wx", "lstm_wh",
          "lstm_b",      "proj_h",       "proj_y",    "proj_k",  "out_bias"};
}

std::size_t ModelParams::total_size() const {
  std::size_t n = 0;
  for (const auto& b : blocks()) n += b.size();
  return n;
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed,
                        const InitOptions& opts) {
  ModelParams p = ModelParams::zeros(dims);
  Rng emb_rng(derive_seed(seed, 1));
  fill_uniform(p.word_in_emb.v, -opts.emb_range, opts.emb_range, emb_rng);
  fill_uniform(p.word_out_emb.v, -opts.emb_range, opts.emb_range, emb_rng);
  fill_uniform(p.topic_emb.v, -opts.emb_range, opts.emb_range, emb_rng);

  // One orthogonal block per gate, stacked in i,f,g,o order.
  const std::size_t dh = dims.d_h;
  for (std::size_t gate = 0; gate < 4; ++gate) {
    DenseMatrix wx =
        orthogonal_matrix(dh, dims.d_x(), derive_seed(seed, 10 + gate));
    DenseMatrix wh = orthogonal_matrix(dh, dh, derive_seed(seed, 20 + gate));
    for (std::size_t r = 0; r < dh; ++r) {
      std::copy(wx.row(r), wx.row(r) + dims.d_x(),
                p.lstm_wx.row(gate * dh + r));
      std::copy(wh.row(r), wh.row(r) + dh, p.lstm_wh.row(gate * dh + r));
    }
  }
  for (std::size_t i = 0; i < dh; ++i) p.lstm_b[dh + i] = opts.forget_bias;

  if (opts.orthogonal_proj) {
    p.proj_h = orthogonal_matrix(dims.d_s, dims.d_h, derive_seed(seed, 30));
    p.proj_y = orthogonal_matrix(dims.d_s, dims.d_w, derive_seed(seed, 31));
    p.proj_k = orthogonal_matrix(dims.d_s, dims.d_k, derive_seed(seed, 32));
  } else {
    Rng proj_rng(derive_seed(seed, 33));
    fill_uniform(p.proj_h.v, -opts.emb_range, opts.emb_range, proj_rng);
    fill_uniform(p.proj_y.v, -opts.emb_range, opts.emb_range, proj_rng);
    fill_uniform(p.proj_k.v, -opts.emb_range, opts.emb_range, proj_rng);
  }
  return p;
}

LstmState lstm_step(const LstmState& state, std::span<const double> word_emb,
                    std::span<const double> topic_emb,
                    const ModelParams& params) {
  const auto& d = params.dims;
  if (word_emb.size() != d.d_w || topic_emb.size() != d.d_k ||
      state.h.size() != d.d_h || state.c.size() != d.d_h)
    throw std::invalid_argument("lstm_step: dimension mismatch");
  std::vector<double> x(d.d_x());
  std::copy(word_emb.begin(), word_emb.end(), x.begin());
  std::copy(topic_emb.begin(), topic_emb.end(), x.begin() + d.d_w);
  LstmState out(d.d_h);
  std::vector<double> gates(4 * d.d_h), tanh_c(d.d_h);
  cell_forward(params, x.data(), state.h.data(), state.c.data(), gates.data(),
               out.c.data(), tanh_c.data(), out.h.data());
  return out;
}

std::vector<double> word_distribution(const LstmState& state,
                                      std::span<const double> prev_word_emb,
                                      std::span<const double> topic_emb,
                                      const ModelParams& params,
                                      OutputMode mode) {
  const auto& d = params.dims;
  std::vector<double> s(d.d_s), logits(d.vocab);
  score_logits(params, state.h.data(), prev_word_emb.data(), topic_emb.data(),
               s.data(), logits.data());
  if (mode == OutputMode::softmax_logit) {
    softmax_inplace(logits);
    return logits;
  }
  double z = 0.0;
  for (double& l : logits) {
    l = sigmoid(l);
    z += l;
  }
  kern::scal(1.0 / z, logits.data(), logits.size());
  return logits;
}

std::vector<double> log_word_distribution(
    const LstmState& state, std::span<const double> prev_word_emb,
    std::span<const double> topic_emb, const ModelParams& params,
    OutputMode mode) {
  const auto& d = params.dims;
  std::vector<double> s(d.d_s), logits(d.vocab);
  score_logits(params, state.h.data(), prev_word_emb.data(), topic_emb.data(),
               s.data(), logits.data());
  if (mode == OutputMode::softmax_logit) {
    const double m = kern::vmax(logits.data(), d.vocab);
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - m);
    // Same per-token expression as the forward pass: l - m - log(sum).
    const double log_sum = std::log(sum);
    for (double& l : logits) l = l - m - log_sum;
    return logits;
  }
  double z = 0.0;
  for (double l : logits) z += sigmoid(l);
  const double log_z = std::log(z);
  for (double& l : logits) l = log_sigmoid(l) - log_z;
  return logits;
}

double sentence_log_prob(const Sentence& sentence, std::size_t topic,
                         const ModelParams& params, OutputMode mode) {
  return forward_sentence(sentence, topic, params, mode, nullptr);
}

double sentence_grad_accum(const Sentence& sentence, std::size_t topic,
                           const ModelParams& p, OutputMode mode,
                           double weight, ParamGrads& acc) {
  Tape tape;
  const double beta = forward_sentence(sentence, topic, p, mode, &tape);
  if (weight == 0.0) return beta;

  const auto& d = p.dims;
  const std::size_t T = sentence.token_ids.size();
  const std::size_t dh = d.d_h, dw = d.d_w, dk = d.d_k, dsz = d.d_s;
  const std::size_t V = d.vocab;
  const double* kemb = p.topic_emb.row(topic);

  std::vector<double> dh_vec(dh, 0.0), dc(dh, 0.0);
  std::vector<double> dlogits(V), ds(dsz), dyemb(dw), dkemb(dk, 0.0);
  std::vector<double> da(4 * dh), dx(d.d_x()), x(d.d_x());

  for (std::size_t ti = T; ti-- > 0;) {
    const StepTape& st = tape.steps[ti];
    const int cur = sentence.token_ids[ti];
    const double* yemb = p.word_in_emb.row(st.prev_id);

    if (mode == OutputMode::softmax_logit) {
      for (std::size_t v = 0; v < V; ++v) dlogits[v] = -weight * st.probs[v];
      dlogits[cur] += weight;
    } else {
      const double z = st.zsig;
      const double sig_cur = st.probs[cur];
      for (std::size_t v = 0; v < V; ++v) {
        const double sig = st.probs[v];
        dlogits[v] = -weight * (sig / z) * (1.0 - sig);
      }
      dlogits[cur] += weight * (1.0 - sig_cur);
    }

    // Output layer.
    ger_acc(acc.word_out_emb, dlogits.data(), st.s.data());
    std::fill(ds.begin(), ds.end(), 0.0);
    matvec_t_acc(p.word_out_emb, dlogits.data(), ds.data());

    const double* h_cur = tape.h[ti + 1].data();
    ger_acc(acc.proj_h, ds.data(), h_cur);
    ger_acc(acc.proj_y, ds.data(), yemb);
    ger_acc(acc.proj_k, ds.data(), kemb);
    kern::axpy(1.0, ds.data(), acc.out_bias.data(), dsz);

    matvec_t_acc(p.proj_h, ds.data(), dh_vec.data());
    std::fill(dyemb.begin(), dyemb.end(), 0.0);
    matvec_t_acc(p.proj_y, ds.data(), dyemb.data());
    matvec_t_acc(p.proj_k, ds.data(), dkemb.data());

    // LSTM cell backward.
    const double* gates = st.gates.data();
    const double* tc = st.tanh_c.data();
    const double* c_prev = tape.c[ti].data();
    for (std::size_t i = 0; i < dh; ++i) {
      const double gi = gates[i];
      const double gf = gates[dh + i];
      const double gg = gates[2 * dh + i];
      const double go = gates[3 * dh + i];
      const double dhi = dh_vec[i];
      da[3 * dh + i] = dhi * tc[i] * go * (1.0 - go);
      const double dci = dc[i] + dhi * go * (1.0 - tc[i] * tc[i]);
      da[dh + i] = dci * c_prev[i] * gf * (1.0 - gf);
      da[i] = dci * gg * gi * (1.0 - gi);
      da[2 * dh + i] = dci * gi * (1.0 - gg * gg);
      dc[i] = dci * gf;
    }

    std::copy(yemb, yemb + dw, x.begin());
    std::copy(kemb, kemb + dk, x.begin() + dw);
    ger_acc(acc.lstm_wx, da.data(), x.data());
    ger_acc(acc.lstm_wh, da.data(), tape.h[ti].data());
    kern::axpy(1.0, da.data(), acc.lstm_b.data(), 4 * dh);

    std::fill(dx.begin(), dx.end(), 0.0);
    matvec_t_acc(p.lstm_wx, da.data(), dx.data());
    for (std::size_t j = 0; j < dw; ++j) dyemb[j] += dx[j];
    for (std::size_t j = 0; j < dk; ++j) dkemb[j] += dx[dw + j];

    std::fill(dh_vec.begin(), dh_vec.end(), 0.0);
    matvec_t_acc(p.lstm_wh, da.data(), dh_vec.data());

    kern::axpy(1.0, dyemb.data(), acc.word_in_emb.row(st.prev_id), dw);
  }
  kern::axpy(1.0, dkemb.data(), acc.topic_emb.row(topic), dk);
  return beta;
}

SentenceGrad sentence_grad(const Sentence& sentence, std::size_t topic,
                           const ModelParams& params, OutputMode mode) {
  SentenceGrad out{0.0, ParamGrads::zeros(params.dims)};
  out.log_prob =
      sentence_grad_accum(sentence, topic, params, mode, 1.0, out.grads);
  return out;
}

}  // namespace slrtm
