#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "msnt/baseline.hpp"
#include "msnt/evaluation.hpp"
#include "msnt/generator.hpp"
#include "msnt/rng.hpp"
#include "msnt/sampler.hpp"
#include "support/naive.hpp"

using namespace msnt;

namespace {

// Straight-line LDA conditional with counts rebuilt from the sampler's
// exposed document state, excluding token (d, i).
std::vector<double> naive_lda_weights(const LdaSampler& sampler, std::uint32_t topics,
                                      std::uint32_t vocab, double alpha, double beta,
                                      std::size_t d, std::size_t i) {
  std::vector<std::int64_t> doc_topic(topics, 0);
  std::vector<std::int64_t> topic_word(std::size_t(topics) * vocab, 0);
  std::vector<std::int64_t> topic_total(topics, 0);
  for (std::size_t doc = 0; doc < sampler.doc_count(); ++doc) {
    auto tokens = sampler.doc_tokens(doc);
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
      if (doc == d && pos == i) continue;
      const auto k = sampler.topic_of(doc, pos);
      if (doc == d) ++doc_topic[k];
      ++topic_word[std::size_t(k) * vocab + tokens[pos]];
      ++topic_total[k];
    }
  }
  const auto w = sampler.doc_tokens(d)[i];
  std::vector<double> weights(topics);
  for (std::uint32_t k = 0; k < topics; ++k) {
    weights[k] = (doc_topic[k] + alpha) * (topic_word[std::size_t(k) * vocab + w] + beta) /
                 (topic_total[k] + vocab * beta);
  }
  return weights;
}

}  // namespace

TEST_CASE("K=1 LDA reduces to the smoothed unigram distribution") {
  Corpus corpus = oracle::make_corpus(2, 2, 4,
                                      {{0, 0, {0, 0, 1}}, {0, 1, {2}}, {1, 1, {0, 3}}});
  LdaModel model = train_lda(corpus, 1, 0.5, 0.1, 5, 42);
  std::vector<std::int64_t> freq(4, 0);
  for (const Post& post : corpus.posts()) {
    for (std::int32_t w : corpus.tokens(post)) ++freq[w];
  }
  const double total = static_cast<double>(corpus.token_count());
  for (std::uint32_t w = 0; w < 4; ++w) {
    CHECK(model.phi[w] == doctest::Approx((freq[w] + 0.1) / (total + 4 * 0.1)).epsilon(1e-12));
  }
  CHECK(model.theta[0] == doctest::Approx(1.0));
}

TEST_CASE("LDA conditional at zero counts is uniform") {
  Corpus corpus = oracle::make_corpus(1, 1, 3, {{0, 0, {1}}});
  LdaSampler sampler(corpus, 4, 0.3, 0.05, 7);
  sampler.remove_token(0, 0);
  auto normalized = oracle::normalized(sampler.topic_weights(0, 0));
  for (double v : normalized) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("LDA conditionals match the naive oracle on tiny states") {
  Corpus corpus = oracle::make_corpus(2, 2, 5,
                                      {{0, 0, {0, 1, 2}}, {0, 1, {2, 3}}, {1, 1, {4, 0, 1}}});
  const std::uint32_t topics = 3;
  const double alpha = 0.4, beta = 0.07;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    LdaSampler sampler(corpus, topics, alpha, beta, seed);
    for (int s = 0; s < 3; ++s) sampler.sweep();
    for (std::size_t d = 0; d < sampler.doc_count(); ++d) {
      auto tokens = sampler.doc_tokens(d);
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        sampler.remove_token(d, i);
        auto fast = oracle::normalized(sampler.topic_weights(d, i));
        auto slow = oracle::normalized(naive_lda_weights(sampler, topics, 5, alpha, beta, d, i));
        CHECK(oracle::max_relative_gap(fast, slow) < 1e-10);
        sampler.place_token(d, i, sampler.topic_of(d, i));
      }
    }
  }
}

TEST_CASE("uniform phi gives perplexity V") {
  LdaModel model;
  model.docs = 2;
  model.topics = 3;
  model.vocab = 7;
  model.alpha = 1.0;
  model.beta = 1.0;
  model.theta = {0.2, 0.5, 0.3, 0.9, 0.05, 0.05};
  model.phi.assign(3 * 7, 1.0 / 7.0);
  Corpus heldout = oracle::make_corpus(2, 1, 7, {{0, 0, {0, 3}}, {1, 0, {6}}});
  CHECK(lda_perplexity(model, heldout) == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("single-word vocabulary gives perplexity 1") {
  LdaModel model;
  model.docs = 1;
  model.topics = 2;
  model.vocab = 1;
  model.theta = {0.4, 0.6};
  model.phi = {1.0, 1.0};
  Corpus heldout = oracle::make_corpus(1, 1, 1, {{0, 0, {0, 0, 0}}});
  CHECK(lda_perplexity(model, heldout) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hand-computed two-document perplexity") {
  LdaModel model;
  model.docs = 2;
  model.topics = 2;
  model.vocab = 3;
  model.theta = {0.6, 0.4, 0.1, 0.9};
  model.phi = {0.7, 0.2, 0.1, 0.1, 0.3, 0.6};
  Corpus heldout = oracle::make_corpus(2, 1, 3, {{0, 0, {0, 1}}, {1, 0, {2}}});
  const double p_w0 = 0.6 * 0.7 + 0.4 * 0.1;  // doc 0, word 0
  const double p_w1 = 0.6 * 0.2 + 0.4 * 0.3;  // doc 0, word 1
  const double p_w2 = 0.1 * 0.1 + 0.9 * 0.6;  // doc 1, word 2
  const double expected = std::exp(-(std::log(p_w0) + std::log(p_w1) + std::log(p_w2)) / 3.0);
  CHECK(lda_perplexity(model, heldout) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("LDA training is deterministic under seed") {
  Rng rng(2);
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::vector<std::int32_t>>> posts;
  for (std::uint32_t u = 0; u < 5; ++u) {
    for (int p = 0; p < 6; ++p) {
      std::vector<std::int32_t> tokens(5);
      for (auto& t : tokens) t = static_cast<std::int32_t>(rng.uniform_int(20));
      posts.push_back({u, rng.uniform_int(2), std::move(tokens)});
    }
  }
  Corpus corpus = oracle::make_corpus(5, 2, 20, posts);
  LdaModel a = train_lda(corpus, 3, 0.5, 0.01, 30, 9);
  LdaModel b = train_lda(corpus, 3, 0.5, 0.01, 30, 9);
  CHECK(a.theta == b.theta);
  CHECK(a.phi == b.phi);
}

TEST_CASE("MSNT with disabled local and background channels tracks LDA") {
  // Single network, near-deterministic switch priors forcing x = 0: the
  // global word tables then see the same data LDA sees. Same corpus, seed
  // count and topic count; matched topics should be close.
  GenConfig config;
  config.users = 30;
  config.networks = 1;
  config.topics = 3;
  config.vocab = 60;
  config.posts_per_user_network = 40;
  config.tokens_per_post = 8;
  config.seed = 13;
  config.fixed_background_share = 0.0;
  config.fixed_global_share = 1.0;
  Hyperparameters gen_hp = Hyperparameters::defaults(config.topics);
  gen_hp.alpha = 0.2;    // concentrated users
  gen_hp.beta_p = 0.05;  // peaked topics
  GroundTruth truth = sample_ground_truth(config, gen_hp);
  GeneratedCorpus generated = generate_corpus(truth, config);

  Hyperparameters hp = Hyperparameters::defaults(config.topics);
  hp.alpha = 0.5;
  hp.tau_zs = {1e9, 1e-9};  // force global
  hp.tau_b = {1e9, 1e-9};   // forbid background
  TrainConfig tc;
  tc.max_iters = 120;
  tc.burn_in = 60;
  tc.seed = 4;
  TrainResult msnt_result = train(generated.corpus, hp, tc);

  LdaModel lda = train_lda(generated.corpus, config.topics, 0.5, 0.01, 120, 4);

  TopicMatch match = match_topics(msnt_result.estimates.phi_p, lda.phi, config.topics,
                                  config.vocab);
  CHECK(match.mean_jsd < 0.1);
}
