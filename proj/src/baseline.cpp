#include "msnt/baseline.hpp"

#include <cmath>

namespace msnt {

LdaSampler::LdaSampler(const Corpus& corpus, std::uint32_t topics, double alpha, double beta,
                       std::uint64_t seed)
    : topics_(topics),
      vocab_(static_cast<std::uint32_t>(corpus.vocabulary().size())),
      alpha_(alpha),
      beta_(beta),
      rng_(seed) {
  if (topics < 1) throw MsntError("lda: topic count must be >= 1");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw MsntError("lda: priors must be > 0");
  if (corpus.post_count() == 0) throw MsntError("lda: corpus has no posts");

  const std::size_t docs = corpus.user_count();
  doc_begin_.assign(docs + 1, 0);
  tokens_.reserve(corpus.token_count());
  for (std::size_t u = 0; u < docs; ++u) {
    doc_begin_[u] = tokens_.size();
    for (std::size_t s = 0; s < corpus.network_count(); ++s) {
      for (const Post& post : corpus.cell_posts(u, s)) {
        auto span = corpus.tokens(post);
        tokens_.insert(tokens_.end(), span.begin(), span.end());
      }
    }
  }
  doc_begin_[docs] = tokens_.size();

  assignment_.resize(tokens_.size());
  doc_topic_.assign(docs * topics_, 0);
  topic_word_.assign(std::size_t(topics_) * vocab_, 0);
  topic_total_.assign(topics_, 0);
  weight_buf_.resize(topics_);
  for (std::size_t d = 0; d < docs; ++d) {
    for (std::size_t i = doc_begin_[d]; i < doc_begin_[d + 1]; ++i) {
      const auto k = static_cast<std::int32_t>(rng_.uniform_int(topics_));
      assignment_[i] = k;
      ++doc_topic_[d * topics_ + k];
      ++topic_word_[std::size_t(k) * vocab_ + tokens_[i]];
      ++topic_total_[k];
    }
  }
}

std::span<const std::int32_t> LdaSampler::doc_tokens(std::size_t d) const {
  return std::span<const std::int32_t>(tokens_.data() + doc_begin_[d],
                                       doc_begin_[d + 1] - doc_begin_[d]);
}

std::int32_t LdaSampler::topic_of(std::size_t d, std::size_t i) const {
  return assignment_[doc_begin_[d] + i];
}

void LdaSampler::remove_token(std::size_t d, std::size_t i) {
  const std::size_t pos = doc_begin_[d] + i;
  const auto k = assignment_[pos];
  --doc_topic_[d * topics_ + k];
  --topic_word_[std::size_t(k) * vocab_ + tokens_[pos]];
  --topic_total_[k];
}

void LdaSampler::place_token(std::size_t d, std::size_t i, std::int32_t k) {
  const std::size_t pos = doc_begin_[d] + i;
  assignment_[pos] = k;
  ++doc_topic_[d * topics_ + k];
  ++topic_word_[std::size_t(k) * vocab_ + tokens_[pos]];
  ++topic_total_[k];
}

std::vector<double> LdaSampler::topic_weights(std::size_t d, std::size_t i) const {
  const std::size_t pos = doc_begin_[d] + i;
  const auto w = static_cast<std::uint32_t>(tokens_[pos]);
  std::vector<double> weights(topics_);
  const double v_beta = static_cast<double>(vocab_) * beta_;
  for (std::uint32_t k = 0; k < topics_; ++k) {
    weights[k] = (doc_topic_[d * topics_ + k] + alpha_) *
                 (topic_word_[std::size_t(k) * vocab_ + w] + beta_) /
                 (topic_total_[k] + v_beta);
  }
  return weights;
}

void LdaSampler::sweep() {
  const double v_beta = static_cast<double>(vocab_) * beta_;
  for (std::size_t d = 0; d + 1 < doc_begin_.size(); ++d) {
    for (std::size_t pos = doc_begin_[d]; pos < doc_begin_[d + 1]; ++pos) {
      const auto w = static_cast<std::uint32_t>(tokens_[pos]);
      const auto old_k = assignment_[pos];
      --doc_topic_[d * topics_ + old_k];
      --topic_word_[std::size_t(old_k) * vocab_ + w];
      --topic_total_[old_k];
      for (std::uint32_t k = 0; k < topics_; ++k) {
        weight_buf_[k] = (doc_topic_[d * topics_ + k] + alpha_) *
                         (topic_word_[std::size_t(k) * vocab_ + w] + beta_) /
                         (topic_total_[k] + v_beta);
      }
      const auto new_k = static_cast<std::int32_t>(rng_.categorical(weight_buf_));
      assignment_[pos] = new_k;
      ++doc_topic_[d * topics_ + new_k];
      ++topic_word_[std::size_t(new_k) * vocab_ + w];
      ++topic_total_[new_k];
    }
  }
}

LdaModel LdaSampler::model() const {
  LdaModel m;
  m.docs = static_cast<std::uint32_t>(doc_begin_.size() - 1);
  m.topics = topics_;
  m.vocab = vocab_;
  m.alpha = alpha_;
  m.beta = beta_;
  m.theta.resize(std::size_t(m.docs) * topics_);
  m.phi.resize(std::size_t(topics_) * vocab_);
  for (std::uint32_t d = 0; d < m.docs; ++d) {
    const double n_d = static_cast<double>(doc_begin_[d + 1] - doc_begin_[d]);
    const double denom = n_d + static_cast<double>(topics_) * alpha_;
    for (std::uint32_t k = 0; k < topics_; ++k) {
      m.theta[std::size_t(d) * topics_ + k] = (doc_topic_[d * topics_ + k] + alpha_) / denom;
    }
  }
  const double v_beta = static_cast<double>(vocab_) * beta_;
  for (std::uint32_t k = 0; k < topics_; ++k) {
    const double denom = topic_total_[k] + v_beta;
    for (std::uint32_t w = 0; w < vocab_; ++w) {
      m.phi[std::size_t(k) * vocab_ + w] = (topic_word_[std::size_t(k) * vocab_ + w] + beta_) / denom;
    }
  }
  return m;
}

LdaModel train_lda(const Corpus& corpus, std::uint32_t topics, double alpha, double beta,
                   std::uint32_t iters, std::uint64_t seed) {
  LdaSampler sampler(corpus, topics, alpha, beta, seed);
  for (std::uint32_t i = 0; i < iters; ++i) sampler.sweep();
  return sampler.model();
}

double lda_perplexity(const LdaModel& model, const Corpus& heldout) {
  if (heldout.user_count() > model.docs) {
    throw MsntError("lda perplexity: heldout users do not match the model");
  }
  double log_prob = 0.0;
  std::size_t token_count = 0;
  for (const Post& post : heldout.posts()) {
    const double* theta = model.theta.data() + std::size_t(post.user) * model.topics;
    for (std::int32_t w : heldout.tokens(post)) {
      double word_prob = 0.0;
      for (std::uint32_t k = 0; k < model.topics; ++k) {
        word_prob += theta[k] * model.phi[std::size_t(k) * model.vocab + w];
      }
      log_prob += std::log(word_prob);
      ++token_count;
    }
  }
  if (token_count == 0) throw MsntError("lda perplexity: heldout corpus has no tokens");
  return std::exp(-log_prob / static_cast<double>(token_count));
}

}  // namespace msnt
