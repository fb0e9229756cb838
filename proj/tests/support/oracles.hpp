#pragma once

// Test-only oracles and builders, independent of the library code paths
// they check: finite differences, simplex quadrature of the document
// likelihood, and random tiny-model construction.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "slrtm/corpus.hpp"
#include "slrtm/model.hpp"
#include "slrtm/numerics.hpp"

namespace oracle {

inline slrtm::ModelDims tiny_dims(std::size_t vocab, std::size_t topics,
                                  std::size_t d) {
  slrtm::ModelDims dims;
  dims.vocab = vocab;
  dims.topics = topics;
  dims.d_w = d;
  dims.d_k = d;
  dims.d_h = d;
  dims.d_s = d;
  return dims;
}

// Uniform random parameters, not the training initializer: gradient and
// enumeration oracles want generic dense values.
inline slrtm::ModelParams random_params(const slrtm::ModelDims& dims,
                                        std::uint64_t seed,
                                        double scale = 0.5) {
  slrtm::ModelParams p = slrtm::ModelParams::zeros(dims);
  slrtm::Rng rng(seed);
  for (auto block : p.blocks())
    for (double& x : block) x = rng.uniform(-scale, scale);
  return p;
}

inline slrtm::Sentence make_sentence(std::vector<int> words) {
  slrtm::Sentence s;
  s.token_ids = std::move(words);
  s.token_ids.push_back(1);  // EOS
  return s;
}

inline slrtm::Sentence random_sentence(const slrtm::ModelDims& dims,
                                       std::size_t max_words,
                                       slrtm::Rng& rng) {
  const std::size_t len = 1 + rng.next_u64() % max_words;
  std::vector<int> words;
  for (std::size_t i = 0; i < len; ++i)
    words.push_back(
        static_cast<int>(rng.next_u64() % dims.vocab));
  return make_sentence(std::move(words));
}

// Central finite differences of `f` over every parameter coordinate,
// compared against `analytic`; returns the max relative error with
// denominator max(|fd|, |analytic|, floor).
inline double max_fd_rel_error(
    slrtm::ModelParams& params, const slrtm::ParamGrads& analytic,
    const std::function<double()>& f, double step = 1e-5,
    double floor = 1e-8) {
  double worst = 0.0;
  auto pblocks = params.blocks();
  auto gblocks = analytic.blocks();
  for (std::size_t b = 0; b < pblocks.size(); ++b) {
    for (std::size_t i = 0; i < pblocks[b].size(); ++i) {
      const double saved = pblocks[b][i];
      pblocks[b][i] = saved + step;
      const double up = f();
      pblocks[b][i] = saved - step;
      const double down = f();
      pblocks[b][i] = saved;
      const double fd = (up - down) / (2.0 * step);
      const double got = gblocks[b][i];
      const double denom = std::max({std::abs(fd), std::abs(got), floor});
      worst = std::max(worst, std::abs(fd - got) / denom);
    }
  }
  return worst;
}

// log P(d) for K = 2 by quadrature of the Dirichlet mixture integral over
// the 1-simplex. beta is N x 2 (per-sentence topic log-likelihoods).
// Substituting theta = sin^2(u) removes the endpoint singularities for
// alpha >= 0.5; midpoint rule over `cells` cells.
inline double quadrature_log_prob_k2(const slrtm::DenseMatrix& beta,
                                     double alpha,
                                     std::size_t cells = 10000) {
  const std::size_t n = beta.rows;
  // Factor the per-sentence max out of the product for stability.
  std::vector<double> m(n);
  double m_total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    m[j] = std::max(beta(j, 0), beta(j, 1));
    m_total += m[j];
  }
  const double log_b = 2.0 * std::lgamma(alpha) - std::lgamma(2.0 * alpha);
  const double h = (M_PI / 2.0) / static_cast<double>(cells);
  double sum = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    const double u = (static_cast<double>(c) + 0.5) * h;
    const double s = std::sin(u), co = std::cos(u);
    const double theta = s * s;
    double prod = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      prod *= theta * std::exp(beta(j, 0) - m[j]) +
              (1.0 - theta) * std::exp(beta(j, 1) - m[j]);
    // Dirichlet density times the substitution Jacobian:
    // theta^(a-1) (1-theta)^(a-1) / B * 2 sin u cos u
    //   = 2 sin^(2a-1) cos^(2a-1) / B.
    const double dens =
        2.0 * std::pow(s, 2.0 * alpha - 1.0) * std::pow(co, 2.0 * alpha - 1.0);
    sum += dens * prod;
  }
  return m_total - log_b + std::log(sum * h);
}

// Unigram maximum-likelihood perplexity of a corpus, EOS excluded, fit on
// the same data it scores.
inline double unigram_mle_perplexity(const slrtm::Corpus& corpus) {
  std::vector<double> counts(corpus.vocabulary.size(), 0.0);
  double total = 0.0;
  for (const auto& d : corpus.documents)
    for (const auto& s : d.sentences)
      for (std::size_t i = 0; i + 1 < s.token_ids.size(); ++i) {
        counts[static_cast<std::size_t>(s.token_ids[i])] += 1.0;
        total += 1.0;
      }
  double log_sum = 0.0;
  for (double c : counts)
    if (c > 0.0) log_sum += c * std::log(c / total);
  return std::exp(-log_sum / total);
}

}  // namespace oracle
