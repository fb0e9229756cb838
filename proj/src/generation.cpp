#include "slrtm/generation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "slrtm/numerics.hpp"

namespace slrtm {

namespace {

constexpr int kBosId = 0;
constexpr int kEosId = 1;
constexpr int kUnkId = 2;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t idx) {
  std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ull + idx);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::span<const double> emb_row(const DenseMatrix& m, int id) {
  return {m.row(static_cast<std::size_t>(id)), m.cols};
}

int draw_index(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t v = 0; v < probs.size(); ++v) {
    cum += probs[v];
    if (u < cum) return static_cast<int>(v);
  }
  return static_cast<int>(probs.size() - 1);  // guard against rounding
}

}  // namespace

std::vector<int> sample_sentence(std::size_t topic, const ModelParams& params,
                                 OutputMode mode, const GenConfig& cfg,
                                 std::uint64_t call_index,
                                 double* log_prob_out) {
  if (topic >= params.dims.topics) throw std::out_of_range("invalid topic id");
  if (cfg.max_len < 1) throw std::invalid_argument("max_len must be >= 1");

  Rng rng(mix_seed(cfg.seed, call_index));
  const auto kemb = emb_row(params.topic_emb, static_cast<int>(topic));
  LstmState state(params.dims.d_h);
  int prev = kBosId;
  std::vector<int> out;
  double log_prob = 0.0;

  for (std::size_t t = 0; t < cfg.max_len; ++t) {
    const auto yemb = emb_row(params.word_in_emb, prev);
    state = lstm_step(state, yemb, kemb, params);
    const auto logp = log_word_distribution(state, yemb, kemb, params, mode);
    std::vector<double> probs(logp);
    if (cfg.temperature == 1.0) {
      for (double& p : probs) p = std::exp(p);
    } else {
      for (double& p : probs) p /= cfg.temperature;
      softmax_inplace(probs);
    }
    int token = draw_index(probs, rng);
    if (cfg.resample_unk && token == kUnkId) {
      for (int retry = 0; retry < 10 && token == kUnkId; ++retry)
        token = draw_index(probs, rng);
    }
    log_prob += logp[token];
    if (token == kEosId) break;
    out.push_back(token);
    prev = token;
  }
  if (log_prob_out != nullptr) *log_prob_out = log_prob;
  return out;
}

std::vector<Hypothesis> beam_search(std::size_t topic,
                                    const ModelParams& params, OutputMode mode,
                                    const GenConfig& cfg) {
  if (topic >= params.dims.topics) throw std::out_of_range("invalid topic id");
  if (cfg.beam_size < 1) throw std::invalid_argument("beam_size must be >= 1");

  const auto kemb = emb_row(params.topic_emb, static_cast<int>(topic));
  const std::size_t vocab = params.dims.vocab;

  struct Item {
    std::vector<int> tokens;
    double log_prob = 0.0;
    LstmState state;  // state after consuming tokens
    int prev = kBosId;
  };
  struct Candidate {
    double log_prob;
    std::size_t parent;
    int token;
  };
  // lp desc, then lower token id, then earlier parent
  auto cand_less = [](const Candidate& a, const Candidate& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    if (a.token != b.token) return a.token < b.token;
    return a.parent < b.parent;
  };

  std::vector<Item> active;
  active.push_back({{}, 0.0, LstmState(params.dims.d_h), kBosId});
  std::vector<Hypothesis> finished;

  for (std::size_t t = 0; t < cfg.max_len && !active.empty(); ++t) {
    std::vector<Candidate> cands;
    cands.reserve(active.size() * vocab);
    std::vector<LstmState> stepped(active.size(), LstmState());
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto yemb = emb_row(params.word_in_emb, active[a].prev);
      stepped[a] = lstm_step(active[a].state, yemb, kemb, params);
      const auto logp =
          log_word_distribution(stepped[a], yemb, kemb, params, mode);
      for (std::size_t v = 0; v < vocab; ++v)
        cands.push_back({active[a].log_prob + logp[v], a,
                         static_cast<int>(v)});
    }
    std::sort(cands.begin(), cands.end(), cand_less);

    std::vector<Item> next;
    next.reserve(cfg.beam_size);
    for (const auto& cd : cands) {
      if (cd.token == kEosId) {
        Hypothesis h;
        h.token_ids = active[cd.parent].tokens;
        h.token_ids.push_back(kEosId);
        h.log_prob = cd.log_prob;
        h.finished = true;
        finished.push_back(std::move(h));
        continue;
      }
      if (next.size() >= cfg.beam_size) continue;
      Item it;
      it.tokens = active[cd.parent].tokens;
      it.tokens.push_back(cd.token);
      it.log_prob = cd.log_prob;
      it.state = stepped[cd.parent];
      it.prev = cd.token;
      next.push_back(std::move(it));
    }
    // Keep the finished pool bounded; only the best beam_size can matter.
    if (finished.size() > cfg.beam_size) {
      std::sort(finished.begin(), finished.end(),
                [](const Hypothesis& a, const Hypothesis& b) {
                  return a.log_prob > b.log_prob;
                });
      finished.resize(cfg.beam_size);
    }
    active = std::move(next);
  }

  std::vector<Hypothesis> results = std::move(finished);
  for (auto& it : active)
    results.push_back({std::move(it.tokens), it.log_prob, false});
  std::sort(results.begin(), results.end(),
            [](const Hypothesis& a, const Hypothesis& b) {
              if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
              return a.token_ids < b.token_ids;
            });
  if (results.size() > cfg.beam_size) results.resize(cfg.beam_size);
  return results;
}

std::vector<TopWord> top_words(std::size_t topic, const ModelParams& params,
                               OutputMode mode, std::size_t n,
                               const std::unordered_set<int>& stoplist_ids) {
  if (topic >= params.dims.topics) throw std::out_of_range("invalid topic id");
  if (n < 1) throw std::invalid_argument("top_words: n must be >= 1");

  const auto kemb = emb_row(params.topic_emb, static_cast<int>(topic));
  const auto bos = emb_row(params.word_in_emb, kBosId);
  LstmState state(params.dims.d_h);
  state = lstm_step(state, bos, kemb, params);
  const auto probs = word_distribution(state, bos, kemb, params, mode);

  std::vector<TopWord> ranked;
  ranked.reserve(probs.size());
  for (std::size_t v = 0; v < probs.size(); ++v) {
    const int id = static_cast<int>(v);
    if (id == kBosId || id == kEosId || id == kUnkId) continue;
    if (stoplist_ids.count(id) != 0) continue;
    ranked.push_back({id, probs[v]});
  }
  std::sort(ranked.begin(), ranked.end(), [](const TopWord& a, const TopWord& b) {
    if (a.prob != b.prob) return a.prob > b.prob;
    return a.token_id < b.token_id;
  });
  if (ranked.size() > n) ranked.resize(n);
  return ranked;
}

std::unordered_set<int> resolve_stoplist(
    const Vocabulary& vocab, const std::vector<std::string>& words) {
  std::unordered_set<int> ids;
  for (const auto& w : words) {
    auto it = vocab.id_of.find(w);
    if (it != vocab.id_of.end()) ids.insert(it->second);
  }
  return ids;
}

const std::vector<std::string>& default_stoplist() {
  static const std::vector<std::string> kWords = {
      "the", "a",  "an", "he",   "she", "it", "they", "there",
      "this", "that", "in", "on", "of", "to", "is", "was", "and"};
  return kWords;
}

}  // namespace slrtm
