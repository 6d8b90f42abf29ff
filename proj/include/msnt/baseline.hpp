#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "msnt/corpus.hpp"
#include "msnt/rng.hpp"

namespace msnt {

// Plain collapsed-Gibbs LDA over the merged corpus: one document per user,
// concatenating that user's posts from every network. Comparison point for
// the directional perplexity claim.
struct LdaModel {
  std::uint32_t docs = 0;   // = user count
  std::uint32_t topics = 0;
  std::uint32_t vocab = 0;
  std::vector<double> theta;  // D x K
  std::vector<double> phi;    // K x V
  double alpha = 0.0;
  double beta = 0.0;
};

// Token-level collapsed Gibbs chain; exposed (like GibbsSampler) so tiny
// instances can be checked against a recount oracle.
class LdaSampler {
 public:
  LdaSampler(const Corpus& corpus, std::uint32_t topics, double alpha, double beta,
             std::uint64_t seed);

  void sweep();
  LdaModel model() const;

  std::size_t doc_count() const { return doc_begin_.size() - 1; }
  std::span<const std::int32_t> doc_tokens(std::size_t d) const;
  std::int32_t topic_of(std::size_t d, std::size_t i) const;

  void remove_token(std::size_t d, std::size_t i);
  void place_token(std::size_t d, std::size_t i, std::int32_t k);
  // (n_dk + alpha) * (n_kw + beta) / (n_k + V beta) for a removed token.
  std::vector<double> topic_weights(std::size_t d, std::size_t i) const;

 private:
  std::uint32_t topics_;
  std::uint32_t vocab_;
  double alpha_;
  double beta_;
  std::vector<std::int32_t> tokens_;       // per-user concatenated
  std::vector<std::size_t> doc_begin_;     // D+1 offsets
  std::vector<std::int32_t> assignment_;   // per token
  std::vector<std::int32_t> doc_topic_;    // D x K
  std::vector<std::int32_t> topic_word_;   // K x V
  std::vector<std::int32_t> topic_total_;  // K
  Rng rng_;
  std::vector<double> weight_buf_;
};

LdaModel train_lda(const Corpus& corpus, std::uint32_t topics, double alpha, double beta,
                   std::uint32_t iters, std::uint64_t seed);

// Word-level mixture perplexity: exp(-sum_w log sum_k theta_uk phi_kw / N).
// Heldout posts are matched to documents through their user index.
double lda_perplexity(const LdaModel& model, const Corpus& heldout);

}  // namespace msnt
