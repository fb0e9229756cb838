#pragma once

// topic2sentence: ancestral sampling, beam-search decoding, and per-topic
// representative words.

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "slrtm/corpus.hpp"
#include "slrtm/model.hpp"

namespace slrtm {

struct Hypothesis {
  std::vector<int> token_ids;  // last token is EOS iff finished
  double log_prob = 0.0;
  bool finished = false;
};

struct GenConfig {
  std::size_t beam_size = 30;
  std::size_t max_len = 25;   // step budget; EOS ends a hypothesis early
  double temperature = 1.0;   // sampling only
  std::uint64_t seed = 0;
  std::vector<std::string> stoplist;
  bool resample_unk = false;  // redraw UNK up to 10 times when sampling
};

// Ancestral sampling from h_0 = 0, y_0 = BOS; the returned sequence
// excludes the terminating EOS. Deterministic in (seed, call_index).
// log_prob_out, when set, receives the model log-probability of the emitted
// sequence (including the EOS term when one was drawn).
std::vector<int> sample_sentence(std::size_t topic, const ModelParams& params,
                                 OutputMode mode, const GenConfig& cfg,
                                 std::uint64_t call_index = 0,
                                 double* log_prob_out = nullptr);

// Standard beam search, no length normalization; finished hypotheses are
// set aside and compete in the final ranking. Up to beam_size results,
// scores nonincreasing.
std::vector<Hypothesis> beam_search(std::size_t topic,
                                    const ModelParams& params, OutputMode mode,
                                    const GenConfig& cfg);

struct TopWord {
  int token_id = 0;
  double prob = 0.0;
};

// Ranks the first-step distribution (BOS input, given topic); reserved
// tokens and the stoplist are removed. Ties broken by token id.
std::vector<TopWord> top_words(std::size_t topic, const ModelParams& params,
                               OutputMode mode, std::size_t n,
                               const std::unordered_set<int>& stoplist_ids);

std::unordered_set<int> resolve_stoplist(const Vocabulary& vocab,
                                         const std::vector<std::string>& words);

// Non-normative default list of frequent sentence starters.
const std::vector<std::string>& default_stoplist();

}  // namespace slrtm
