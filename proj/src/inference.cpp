#include "slrtm/inference.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "slrtm/errors.hpp"
#include "slrtm/kernels.hpp"

namespace slrtm {

namespace {

constexpr double kGammaTol = 1e-4;
constexpr std::size_t kMaxBadSteps = 10;

double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

void TrainConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (topics < 1) throw ConfigError("topics must be >= 1");
  if (minibatch < 1) throw ConfigError("minibatch size L must be >= 1");
  if (!(kappa > 0.5 && kappa <= 1.0))
    throw ConfigError("kappa must lie in (0.5, 1]");
  if (!(tau0 >= 0.0)) throw ConfigError("tau0 must be >= 0");
  if (e_step_iters < 1) throw ConfigError("e_step_iters must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(adagrad_epsilon > 0.0)) throw ConfigError("adagrad_epsilon must be positive");
  if (!(clip > 0.0)) throw ConfigError("clip must be positive");
  if (!(gamma0 > 0.0)) throw ConfigError("gamma0 must be positive");
  if (d_w < 1 || d_k < 1 || d_h < 1 || d_s_effective() < 1)
    throw ConfigError("embedding/hidden sizes must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

double rho_schedule(std::size_t t, double tau0, double kappa) {
  return std::pow(tau0 + static_cast<double>(t), -kappa);
}

std::vector<double> update_phi(std::span<const double> beta,
                               std::span<const double> gamma) {
  const std::size_t k = beta.size();
  std::vector<double> score(k);
  for (std::size_t i = 0; i < k; ++i) score[i] = digamma(gamma[i]) + beta[i];
  const double lse = log_sum_exp(score);
  for (std::size_t i = 0; i < k; ++i) score[i] = std::exp(score[i] - lse);
  return score;
}

std::vector<double> gamma_candidate(double alpha, const DenseMatrix& phi,
                                    std::size_t n_doc) {
  const std::size_t l = phi.rows, k = phi.cols;
  const double scale = static_cast<double>(n_doc) / static_cast<double>(l);
  std::vector<double> tilde(k, 0.0);
  for (std::size_t r = 0; r < l; ++r)
    kern::axpy(1.0, phi.row(r), tilde.data(), k);
  for (double& g : tilde) g = alpha + scale * g;
  return tilde;
}

std::vector<double> gamma_blend(std::span<const double> gamma_prev,
                                std::span<const double> gamma_tilde,
                                double rho) {
  std::vector<double> out(gamma_prev.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (1.0 - rho) * gamma_prev[i] + rho * gamma_tilde[i];
  return out;
}

EStepResult e_step(std::span<const Sentence> batch,
                   std::span<const double> gamma_prev,
                   const ModelParams& params, const TrainConfig& cfg,
                   double rho, std::size_t n_doc, std::size_t iters) {
  const std::size_t l = batch.size();
  const std::size_t k = cfg.topics;
  if (l == 0) throw std::invalid_argument("e_step: empty batch");

  EStepResult res;
  res.beta = DenseMatrix(l, k);
  for (std::size_t r = 0; r < l; ++r)
    for (std::size_t j = 0; j < k; ++j)
      res.beta(r, j) = sentence_log_prob(batch[r], j, params, cfg.mode);

  res.phi = DenseMatrix(l, k);
  std::vector<double> gamma(gamma_prev.begin(), gamma_prev.end());
  for (std::size_t it = 0; it < iters; ++it) {
    for (std::size_t r = 0; r < l; ++r) {
      auto row = update_phi({res.beta.row(r), k}, gamma);
      std::copy(row.begin(), row.end(), res.phi.row(r));
    }
    auto tilde = gamma_candidate(cfg.alpha, res.phi, n_doc);
    auto next = gamma_blend(gamma, tilde, rho);
    double delta = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      delta = std::max(delta, std::abs(next[j] - gamma[j]));
    gamma = std::move(next);
    ++res.iterations;
    if (delta < kGammaTol) break;
  }
  res.gamma = std::move(gamma);
  return res;
}

EStepResult e_step(std::span<const Sentence> batch,
                   std::span<const double> gamma_prev,
                   const ModelParams& params, const TrainConfig& cfg,
                   double rho, std::size_t n_doc) {
  return e_step(batch, gamma_prev, params, cfg, rho, n_doc, cfg.e_step_iters);
}

double elbo(const DenseMatrix& phi, std::span<const double> gamma,
            const DenseMatrix& beta, double alpha) {
  const std::size_t l = phi.rows, k = phi.cols;
  double sum_gamma = 0.0;
  for (double g : gamma) sum_gamma += g;
  const double psi_sum = digamma(sum_gamma);
  std::vector<double> e_log_theta(k);
  for (std::size_t j = 0; j < k; ++j)
    e_log_theta[j] = digamma(gamma[j]) - psi_sum;

  double acc = 0.0;
  for (std::size_t r = 0; r < l; ++r) {
    for (std::size_t j = 0; j < k; ++j) {
      const double w = phi(r, j);
      acc += w * beta(r, j);
      acc += w * e_log_theta[j];
      if (w > 0.0) acc -= w * std::log(w);
    }
  }
  const double kd = static_cast<double>(k);
  acc += std::lgamma(kd * alpha) - kd * std::lgamma(alpha);
  acc -= std::lgamma(sum_gamma);
  for (std::size_t j = 0; j < k; ++j) {
    acc += std::lgamma(gamma[j]);
    acc += (alpha - gamma[j]) * e_log_theta[j];
  }
  return acc;
}

MStepResult m_step(std::span<const Sentence> batch, const DenseMatrix& phi,
                   ModelParams& params, AdagradState& opt,
                   const TrainConfig& cfg) {
  if (phi.rows != batch.size() || phi.cols != cfg.topics)
    throw std::invalid_argument("m_step: phi shape mismatch");

  ParamGrads grads = ParamGrads::zeros(params.dims);
  for (std::size_t l = 0; l < batch.size(); ++l) {
    for (std::size_t k = 0; k < cfg.topics; ++k) {
      const double w = phi(l, k);
      if (w < cfg.phi_weight_cutoff) continue;
      sentence_grad_accum(batch[l], k, params, cfg.mode, w, grads);
    }
  }

  auto gblocks = grads.blocks();
  MStepResult res;
  res.grad_norm = clip_global_norm(gblocks, cfg.clip);
  if (!std::isfinite(res.grad_norm)) return res;

  auto pblocks = params.blocks();
  auto cgblocks = std::as_const(grads).blocks();
  adagrad_step(pblocks, cgblocks, opt);
  res.applied = true;
  return res;
}

namespace {

// Asynchronous trainer: workers own disjoint document shards and private
// variational state; model parameters and Adagrad accumulators are shared
// with relaxed per-cell atomics (lossy by contract, no torn values).
void train_async(const Corpus& corpus, const TrainConfig& cfg,
                 ModelParams& params, AdagradState& opt,
                 std::vector<std::vector<double>>& gammas, TrainLog& log) {
  const std::size_t n_workers =
      std::min(cfg.threads, std::max<std::size_t>(corpus.documents.size(), 1));
  std::atomic<std::size_t> global_t{0};
  std::atomic<std::size_t> skipped{0};
  std::mutex log_mu;

  auto flat_params = params.blocks();
  const std::size_t corpus_sentences = corpus.total_sentences();

  auto worker = [&](std::size_t wid) {
    ModelParams local = ModelParams::zeros(params.dims);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (std::size_t di = wid; di < corpus.documents.size();
           di += n_workers) {
        const Document& doc = corpus.documents[di];
        const std::size_t n_doc = doc.sentences.size();
        const std::size_t scale =
            cfg.faithful_gamma_scale ? corpus_sentences : n_doc;
        for (std::size_t start = 0; start < n_doc; start += cfg.minibatch) {
          const std::size_t len = std::min(cfg.minibatch, n_doc - start);
          std::span<const Sentence> batch(doc.sentences.data() + start, len);
          const std::size_t t = ++global_t;
          const double rho = rho_schedule(t, cfg.tau0, cfg.kappa);
          const double t0 = now_ms();

          // Snapshot shared parameters cell-wise.
          auto lblocks = local.blocks();
          for (std::size_t b = 0; b < flat_params.size(); ++b) {
            const auto& src = flat_params[b];
            auto dst = lblocks[b];
            for (std::size_t i = 0; i < src.size(); ++i)
              dst[i] = std::atomic_ref<double>(src[i]).load(
                  std::memory_order_relaxed);
          }

          auto es = e_step(batch, gammas[di], local, cfg, rho, scale,
                           cfg.e_step_iters);
          gammas[di] = es.gamma;

          ParamGrads grads = ParamGrads::zeros(local.dims);
          for (std::size_t l = 0; l < batch.size(); ++l)
            for (std::size_t k = 0; k < cfg.topics; ++k) {
              const double w = es.phi(l, k);
              if (w < cfg.phi_weight_cutoff) continue;
              sentence_grad_accum(batch[l], k, local, cfg.mode, w, grads);
            }
          auto gblocks = grads.blocks();
          const double norm = clip_global_norm(gblocks, cfg.clip);
          if (!std::isfinite(norm)) {
            skipped.fetch_add(1);
            continue;
          }

          // Apply cell-wise with relaxed atomics.
          std::size_t off = 0;
          for (std::size_t b = 0; b < gblocks.size(); ++b) {
            const auto g = gblocks[b];
            const auto p = flat_params[b];
            for (std::size_t i = 0; i < g.size(); ++i) {
              if (g[i] == 0.0) continue;
              std::atomic_ref<double> acc(opt.accum[off + i]);
              const double a =
                  acc.fetch_add(g[i] * g[i], std::memory_order_relaxed) +
                  g[i] * g[i];
              std::atomic_ref<double> pr(p[i]);
              pr.fetch_add(
                  cfg.learning_rate * g[i] / (std::sqrt(a) + cfg.adagrad_epsilon),
                  std::memory_order_relaxed);
            }
            off += g.size();
          }

          TrainLogRecord rec{t, rho, elbo(es.phi, es.gamma, es.beta, cfg.alpha),
                             norm, now_ms() - t0};
          std::scoped_lock lk(log_mu);
          log.records.push_back(rec);
        }
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker, w);
  for (auto& th : threads) th.join();
  log.skipped_steps = skipped.load();
  std::sort(log.records.begin(), log.records.end(),
            [](const auto& a, const auto& b) { return a.t < b.t; });
}

}  // namespace

TrainResult train(const Corpus& corpus, const TrainConfig& cfg) {
  cfg.validate();
  if (corpus.documents.empty()) throw ConfigError("corpus has no documents");

  ModelDims dims;
  dims.vocab = corpus.vocabulary.size();
  dims.topics = cfg.topics;
  dims.d_w = cfg.d_w;
  dims.d_k = cfg.d_k;
  dims.d_h = cfg.d_h;
  dims.d_s = cfg.d_s_effective();

  TrainResult out;
  out.params = init_params(
      dims, cfg.seed, {cfg.emb_range, cfg.orthogonal_proj, 1.0});
  out.gammas.assign(corpus.documents.size(),
                    std::vector<double>(cfg.topics, cfg.gamma0));
  if (cfg.epochs == 0) return out;

  AdagradState opt(out.params.total_size(), cfg.learning_rate,
                   cfg.adagrad_epsilon);

  if (cfg.threads > 1) {
    train_async(corpus, cfg, out.params, opt, out.gammas, out.log);
    return out;
  }

  const std::size_t corpus_sentences = corpus.total_sentences();
  std::size_t t = 0;
  std::size_t consecutive_bad = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t di = 0; di < corpus.documents.size(); ++di) {
      const Document& doc = corpus.documents[di];
      const std::size_t n_doc = doc.sentences.size();
      const std::size_t scale =
          cfg.faithful_gamma_scale ? corpus_sentences : n_doc;
      for (std::size_t start = 0; start < n_doc; start += cfg.minibatch) {
        const std::size_t len = std::min(cfg.minibatch, n_doc - start);
        std::span<const Sentence> batch(doc.sentences.data() + start, len);
        ++t;
        const double rho = rho_schedule(t, cfg.tau0, cfg.kappa);
        const double t0 = now_ms();

        auto es = e_step(batch, out.gammas[di], out.params, cfg, rho, scale,
                         cfg.e_step_iters);
        out.gammas[di] = es.gamma;
        auto ms = m_step(batch, es.phi, out.params, opt, cfg);

        out.log.records.push_back(
            {t, rho, elbo(es.phi, es.gamma, es.beta, cfg.alpha), ms.grad_norm,
             now_ms() - t0});
        if (!ms.applied) {
          ++out.log.skipped_steps;
          if (++consecutive_bad > kMaxBadSteps)
            throw NumericalError(
                "non-finite gradients persisted beyond " +
                std::to_string(kMaxBadSteps) + " consecutive steps");
        } else {
          consecutive_bad = 0;
        }
      }
    }
  }
  return out;
}

InferResult infer_document(const Document& doc, const ModelParams& params,
                           const TrainConfig& cfg) {
  const std::size_t n_doc = doc.sentences.size();
  std::vector<double> gamma0(
      cfg.topics, cfg.alpha + static_cast<double>(n_doc) /
                                  static_cast<double>(cfg.topics));
  auto es = e_step(doc.sentences, gamma0, params, cfg, 1.0, n_doc, 100);
  InferResult res;
  res.state.gamma = std::move(es.gamma);
  res.state.phi = std::move(es.phi);
  res.beta = std::move(es.beta);
  res.iterations = es.iterations;
  return res;
}

void write_gamma_tsv(const std::vector<std::string>& doc_ids,
                     const std::vector<std::vector<double>>& gammas,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write gamma file: " + path);
  out.precision(17);
  for (std::size_t i = 0; i < doc_ids.size(); ++i) {
    out << doc_ids[i];
    for (double g : gammas[i]) out << '\t' << g;
    out << '\n';
  }
}

void write_train_log(const TrainLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write train log: " + path);
  for (const auto& r : log.records) {
    nlohmann::json j{{"t", r.t},
                     {"rho", r.rho},
                     {"elbo", r.elbo},
                     {"grad_norm", r.grad_norm},
                     {"wall_ms", r.wall_ms}};
    out << j.dump() << '\n';
  }
}

}  // namespace slrtm
