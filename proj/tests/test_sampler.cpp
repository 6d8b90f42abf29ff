#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "msnt/sampler.hpp"
#include "support/naive.hpp"

using namespace msnt;

namespace {

LatentAssignments random_assignments(const Corpus& corpus, std::uint32_t topics, Rng& rng) {
  LatentAssignments a;
  a.post_topic.resize(corpus.post_count());
  a.token_switch.resize(corpus.token_count());
  for (auto& z : a.post_topic) z = static_cast<std::int32_t>(rng.uniform_int(topics));
  for (auto& x : a.token_switch) x = static_cast<std::uint8_t>(rng.uniform_int(3));
  return a;
}

// The tiny oracle instance: 2 users, 2 networks, 5 words, 3 posts of <= 3
// tokens.
Corpus tiny_corpus() {
  return oracle::make_corpus(2, 2, 5,
                             {{0, 0, {0, 1, 2}}, {0, 1, {2, 3}}, {1, 1, {4, 0, 1}}});
}

Hyperparameters tiny_hp() {
  Hyperparameters hp = Hyperparameters::defaults(2);
  hp.alpha = 0.7;
  hp.beta_p = 0.05;
  hp.beta_s = 0.03;
  hp.beta_b = 0.02;
  hp.lambda = 0.4;
  hp.tau_zs = {0.6, 0.4};
  hp.tau_b = {0.3, 0.7};
  return hp;
}

}  // namespace

TEST_CASE("switch conditional at zero counts reduces to prior ratios") {
  Corpus corpus = oracle::make_corpus(1, 1, 4, {{0, 0, {2}}});
  Hyperparameters hp = Hyperparameters::defaults(2);  // tau_zs = tau_b = (0.5, 0.5)
  GibbsSampler sampler(corpus, hp, 1);
  sampler.remove_token(0, 0);
  auto normalized = oracle::normalized(sampler.switch_weights(0, 0));
  CHECK(normalized[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(normalized[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(normalized[2] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("a heavily background word pulls the switch conditional to x=2") {
  // Word 0 appears often as background elsewhere; topic-word counts stay 0.
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::vector<std::int32_t>>> posts;
  for (int i = 0; i < 10; ++i) posts.push_back({0, 0, {0, 0, 0}});
  posts.push_back({0, 0, {0}});  // the probe post
  Corpus corpus = oracle::make_corpus(1, 1, 5, posts);
  LatentAssignments a;
  a.post_topic.assign(11, 0);
  a.token_switch.assign(corpus.token_count(), kSwitchBackground);
  GibbsSampler sampler(corpus, Hyperparameters::defaults(2), std::move(a), 1);
  sampler.remove_token(10, 0);
  auto weights = sampler.switch_weights(10, 0);
  CHECK(weights[2] > 10.0 * weights[0]);
  CHECK(weights[2] > 10.0 * weights[1]);
}

TEST_CASE("topic conditional is uniform at zero counts") {
  Corpus corpus = oracle::make_corpus(1, 1, 3, {{0, 0, {1}}});
  LatentAssignments a;
  a.post_topic = {0};
  a.token_switch = {kSwitchGlobal};
  GibbsSampler sampler(corpus, Hyperparameters::defaults(2), std::move(a), 1);
  sampler.remove_post(0);
  auto weights = sampler.topic_weights(0);
  auto normalized = oracle::normalized(weights);
  CHECK(normalized[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(normalized[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("topic conditional follows the user-topic count ratio") {
  // One user, ten single-token background posts; nine others sit on topic 0.
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::vector<std::int32_t>>> posts;
  for (int i = 0; i < 10; ++i) posts.push_back({0, 0, {0}});
  Corpus corpus = oracle::make_corpus(1, 1, 1, posts);
  LatentAssignments a;
  a.post_topic.assign(10, 0);
  a.token_switch.assign(10, kSwitchBackground);
  Hyperparameters hp = Hyperparameters::defaults(2);
  hp.alpha = 0.625;  // 50/80
  GibbsSampler sampler(corpus, hp, std::move(a), 1);
  sampler.remove_post(9);
  auto weights = sampler.topic_weights(9);
  CHECK(weights[0] / weights[1] == doctest::Approx(9.625 / 0.625).epsilon(1e-10));
}

TEST_CASE("conditionals match the recount oracle on random tiny states") {
  Corpus corpus = tiny_corpus();
  const Hyperparameters hp = tiny_hp();
  Rng rng(123);
  for (int state = 0; state < 60; ++state) {
    LatentAssignments a = random_assignments(corpus, hp.topic_count, rng);
    GibbsSampler sampler(corpus, hp, a, 1);
    for (std::size_t p = 0; p < corpus.post_count(); ++p) {
      for (std::uint32_t i = 0; i < corpus.post(p).token_count; ++i) {
        sampler.remove_token(p, i);
        auto fast = oracle::normalized(sampler.switch_weights(p, i));
        auto slow = oracle::normalized(oracle::switch_weights(corpus, sampler.assignments(),
                                                              hp, p, i));
        CHECK(oracle::max_relative_gap(fast, slow) < 1e-10);
        sampler.place_token(p, i, sampler.assignments().token_switch[corpus.post(p).token_begin + i]);
      }
      sampler.remove_post(p);
      auto fast = oracle::normalized(sampler.topic_weights(p));
      auto slow =
          oracle::normalized(oracle::topic_weights(corpus, sampler.assignments(), hp, p));
      CHECK(oracle::max_relative_gap(fast, slow) < 1e-10);
      sampler.place_post(p, sampler.assignments().post_topic[p]);
    }
  }
}

TEST_CASE("remove and place restore the exact state") {
  Corpus corpus = tiny_corpus();
  const Hyperparameters hp = tiny_hp();
  Rng rng(9);
  LatentAssignments a = random_assignments(corpus, hp.topic_count, rng);
  GibbsSampler sampler(corpus, hp, a, 1);
  const CountTables before = sampler.counts();
  sampler.remove_token(1, 0);
  sampler.place_token(1, 0, a.token_switch[corpus.post(1).token_begin]);
  sampler.remove_post(2);
  sampler.place_post(2, a.post_topic[2]);
  CHECK(sampler.counts() == before);
  CHECK(sampler.assignments() == a);
}

TEST_CASE("sweep on an empty corpus is a no-op") {
  Corpus corpus = oracle::make_corpus(1, 1, 1, {});
  GibbsSampler sampler(corpus, Hyperparameters::defaults(2), LatentAssignments{}, 1);
  CHECK_NOTHROW(sampler.sweep());
}

TEST_CASE("sweeps preserve count invariants and cached tables stay exact") {
  Rng rng(77);
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::vector<std::int32_t>>> posts;
  for (std::uint32_t u = 0; u < 10; ++u) {
    for (std::uint32_t s = 0; s < 2; ++s) {
      for (int p = 0; p < 4; ++p) {
        std::vector<std::int32_t> tokens(1 + rng.uniform_int(7));
        for (auto& t : tokens) t = static_cast<std::int32_t>(rng.uniform_int(40));
        posts.push_back({u, s, std::move(tokens)});
      }
    }
  }
  Corpus corpus = oracle::make_corpus(10, 2, 40, posts);
  const Hyperparameters hp = Hyperparameters::defaults(3);
  GibbsSampler sampler(corpus, hp, 2024);
  for (int sweep = 0; sweep < 100; ++sweep) sampler.sweep();
  oracle::check_count_invariants(corpus, sampler.counts());
  CHECK(recount(corpus, hp.topic_count, sampler.assignments()) == sampler.counts());
}

TEST_CASE("chains are deterministic under seed") {
  Corpus corpus = tiny_corpus();
  const Hyperparameters hp = tiny_hp();
  GibbsSampler a(corpus, hp, 55);
  GibbsSampler b(corpus, hp, 55);
  for (int i = 0; i < 5; ++i) {
    a.sweep();
    b.sweep();
  }
  CHECK(a.assignments() == b.assignments());
}

TEST_CASE("log-space topic weights stay finite on a 10000-token post") {
  Rng rng(4);
  std::vector<std::int32_t> long_tokens(10000);
  for (auto& t : long_tokens) t = static_cast<std::int32_t>(rng.uniform_int(100));
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::vector<std::int32_t>>> posts;
  posts.push_back({0, 0, long_tokens});
  for (int p = 0; p < 10; ++p) {
    std::vector<std::int32_t> tokens(8);
    for (auto& t : tokens) t = static_cast<std::int32_t>(rng.uniform_int(100));
    posts.push_back({0, 0, std::move(tokens)});
  }
  Corpus corpus = oracle::make_corpus(1, 1, 100, posts);
  const Hyperparameters hp = Hyperparameters::defaults(5);
  Rng arng(8);
  LatentAssignments a = random_assignments(corpus, hp.topic_count, arng);
  GibbsSampler sampler(corpus, hp, a, 1);
  sampler.remove_post(0);

  std::vector<double> logs(hp.topic_count);
  sampler.topic_log_weights(0, logs);
  for (double lw : logs) CHECK(std::isfinite(lw));

  auto weights = sampler.topic_weights(0);
  double total = 0.0;
  for (double w : weights) {
    CHECK(std::isfinite(w));
    CHECK(w >= 0.0);
    total += w;
  }
  CHECK(total > 0.0);
  CHECK(*std::max_element(weights.begin(), weights.end()) == doctest::Approx(1.0));

  // Normalized weights agree with a long-double evaluation that accumulates
  // the per-token factors in sorted order.
  std::vector<long double> reference(hp.topic_count);
  {
    const Post& post = corpus.post(0);
    auto tokens = corpus.tokens(post);
    const auto& counts = sampler.counts();
    const double v = 100.0;
    for (std::uint32_t k = 0; k < hp.topic_count; ++k) {
      std::vector<long double> terms;
      const double ut = counts.user_topic(0, k);
      terms.push_back(std::log(static_cast<long double>(ut + hp.alpha)));
      terms.push_back(-std::log(static_cast<long double>(corpus.user_post_count(0) - 1 +
                                                         hp.topic_count * hp.alpha)));
      terms.push_back(std::log(static_cast<long double>(counts.user_topic_network(0, k, 0) +
                                                        hp.lambda)));
      terms.push_back(-std::log(static_cast<long double>(ut + 1.0 * hp.lambda)));
      const double swl0 = counts.switch_global_local(0, k, 0);
      const double swl1 = counts.switch_global_local(0, k, 1);
      const long double zs_denom = swl0 + swl1 + hp.tau_zs.global + hp.tau_zs.local;
      for (std::uint32_t i = 0; i < post.token_count; ++i) {
        const std::uint8_t x = sampler.assignments().token_switch[post.token_begin + i];
        if (x == kSwitchGlobal) {
          terms.push_back(std::log(static_cast<long double>(
              counts.global_topic_word(k, tokens[i]) + hp.beta_p)));
          terms.push_back(-std::log(static_cast<long double>(counts.global_word_total(k) +
                                                             v * hp.beta_p)));
          terms.push_back(std::log((swl0 + hp.tau_zs.global) / zs_denom));
        } else if (x == kSwitchLocal) {
          terms.push_back(std::log(static_cast<long double>(
              counts.local_topic_word(0, k, tokens[i]) + hp.beta_s)));
          terms.push_back(-std::log(static_cast<long double>(counts.local_word_total(0, k) +
                                                             v * hp.beta_s)));
          terms.push_back(std::log((swl1 + hp.tau_zs.local) / zs_denom));
        }
      }
      std::sort(terms.begin(), terms.end());
      reference[k] = std::accumulate(terms.begin(), terms.end(), 0.0L);
    }
  }
  const long double ref_max = *std::max_element(reference.begin(), reference.end());
  long double ref_total = 0.0L;
  for (long double lw : reference) ref_total += std::exp(lw - ref_max);
  double weight_total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (std::uint32_t k = 0; k < hp.topic_count; ++k) {
    const double expected = static_cast<double>(std::exp(reference[k] - ref_max) / ref_total);
    CHECK(weights[k] / weight_total == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("channel block split weights match the enumerated collapsed posterior") {
  Corpus corpus = tiny_corpus();
  const Hyperparameters hp = tiny_hp();
  Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    LatentAssignments a = random_assignments(corpus, hp.topic_count, rng);
    const std::uint32_t k = rng.uniform_int(hp.topic_count);
    const std::uint32_t w = rng.uniform_int(5);
    const std::uint32_t h = rng.uniform_int(2);
    const bool background_kernel = rng.uniform01() < 0.5;
    const std::uint8_t other = background_kernel ? kSwitchBackground : kSwitchLocal;

    // The block: this network's topic-k tokens of word w on either side.
    std::vector<std::size_t> flat_positions;
    for (std::size_t p = 0; p < corpus.post_count(); ++p) {
      const Post& post = corpus.post(p);
      if (post.network != h || a.post_topic[p] != static_cast<std::int32_t>(k)) continue;
      auto tokens = corpus.tokens(post);
      for (std::uint32_t i = 0; i < post.token_count; ++i) {
        if (tokens[i] != static_cast<std::int32_t>(w)) continue;
        const std::uint8_t x = a.token_switch[post.token_begin + i];
        if (x == kSwitchGlobal || x == other) flat_positions.push_back(post.token_begin + i);
      }
    }
    if (flat_positions.empty()) continue;
    ++checked;
    const auto size = static_cast<std::uint32_t>(flat_positions.size());

    // Engine weights, computed with the block removed.
    GibbsSampler sampler(corpus, hp, a, 1);
    for (std::size_t p = 0; p < corpus.post_count(); ++p) {
      const Post& post = corpus.post(p);
      for (std::uint32_t i = 0; i < post.token_count; ++i) {
        const std::size_t flat = post.token_begin + i;
        if (std::find(flat_positions.begin(), flat_positions.end(), flat) !=
            flat_positions.end()) {
          sampler.remove_token(p, i);
        }
      }
    }
    auto log_weights = background_kernel ? sampler.background_split_log_weights(k, w, h, size)
                                         : sampler.local_split_log_weights(k, w, h, size);
    REQUIRE(log_weights.size() == size + 1);

    // Oracle: enumerate "first j of the block on `other`" configurations and
    // add the binomial coefficient for the number of equivalent subsets.
    std::vector<double> expected(size + 1);
    for (std::uint32_t j = 0; j <= size; ++j) {
      LatentAssignments config = a;
      for (std::uint32_t t = 0; t < size; ++t) {
        config.token_switch[flat_positions[t]] = t < j ? other : kSwitchGlobal;
      }
      expected[j] = oracle::collapsed_log_posterior(corpus, hp, config) +
                    std::lgamma(size + 1.0) - std::lgamma(j + 1.0) -
                    std::lgamma(size - j + 1.0);
    }
    // Compare as normalized distributions over j.
    auto normalize = [](std::vector<double> logs) {
      const double max_log = *std::max_element(logs.begin(), logs.end());
      double total = 0.0;
      for (double& v : logs) total += (v = std::exp(v - max_log));
      for (double& v : logs) v /= total;
      return logs;
    };
    auto fast = normalize(log_weights);
    auto slow = normalize(expected);
    for (std::uint32_t j = 0; j <= size; ++j) {
      CHECK(fast[j] == doctest::Approx(slow[j]).epsilon(1e-8));
    }
  }
  CHECK(checked > 30);
}

TEST_CASE("cross-network swap ratio matches the collapsed posterior") {
  Corpus corpus = tiny_corpus();
  const Hyperparameters hp = tiny_hp();
  Rng rng(77);
  int checked = 0;
  for (int trial = 0; trial < 80; ++trial) {
    LatentAssignments a = random_assignments(corpus, hp.topic_count, rng);
    GibbsSampler sampler(corpus, hp, a, 1);
    const std::uint32_t k = rng.uniform_int(hp.topic_count);
    const std::uint32_t w = rng.uniform_int(5);

    LatentAssignments flipped = a;
    std::vector<std::int32_t> from_global(2, 0), from_local(2, 0);
    bool any = false;
    for (std::size_t p = 0; p < corpus.post_count(); ++p) {
      const Post& post = corpus.post(p);
      if (a.post_topic[p] != static_cast<std::int32_t>(k)) continue;
      auto tokens = corpus.tokens(post);
      for (std::uint32_t i = 0; i < post.token_count; ++i) {
        if (tokens[i] != static_cast<std::int32_t>(w)) continue;
        const std::uint8_t x = a.token_switch[post.token_begin + i];
        if (x == kSwitchGlobal) {
          flipped.token_switch[post.token_begin + i] = kSwitchLocal;
          ++from_global[post.network];
          any = true;
        } else if (x == kSwitchLocal) {
          flipped.token_switch[post.token_begin + i] = kSwitchGlobal;
          ++from_local[post.network];
          any = true;
        }
      }
    }
    if (!any) continue;
    ++checked;
    const double expected = oracle::collapsed_log_posterior(corpus, hp, flipped) -
                            oracle::collapsed_log_posterior(corpus, hp, a);
    CHECK(sampler.channel_swap_log_ratio(k, w, from_global, from_local) ==
          doctest::Approx(expected).epsilon(1e-9));
  }
  CHECK(checked > 30);
}

TEST_CASE("channel swap pass keeps counts exact and is deterministic") {
  Corpus corpus = tiny_corpus();
  const Hyperparameters hp = tiny_hp();
  GibbsSampler a(corpus, hp, 7);
  GibbsSampler b(corpus, hp, 7);
  for (int i = 0; i < 20; ++i) {
    a.sweep();
    a.channel_resample_pass();
    b.sweep();
    b.channel_resample_pass();
  }
  CHECK(a.assignments() == b.assignments());
  CHECK(recount(corpus, hp.topic_count, a.assignments()) == a.counts());
  oracle::check_count_invariants(corpus, a.counts());
}

TEST_CASE("channel swap rescues a fully localized shared word") {
  // One topic, two networks; word 0 is used identically in both networks but
  // every occurrence starts in the local tables. With the background channel
  // priced out, the pooled global explanation has the higher posterior mass
  // and the exchange move should find it quickly.
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::vector<std::int32_t>>> posts;
  for (std::uint32_t u = 0; u < 4; ++u) {
    for (std::uint32_t s = 0; s < 2; ++s) {
      for (int p = 0; p < 5; ++p) posts.push_back({u, s, {0, 0, 0, 0}});
    }
  }
  Corpus corpus = oracle::make_corpus(4, 2, 2, posts);
  Hyperparameters hp = Hyperparameters::defaults(1);
  hp.alpha = 0.5;
  hp.tau_b = {1e6, 1e-6};  // keep tokens topical
  LatentAssignments a;
  a.post_topic.assign(corpus.post_count(), 0);
  a.token_switch.assign(corpus.token_count(), kSwitchLocal);
  GibbsSampler sampler(corpus, hp, std::move(a), 3);
  int global_heavy = 0;
  const int iters = 40;
  for (int i = 0; i < iters; ++i) {
    sampler.sweep();
    sampler.channel_resample_pass();
    if (sampler.switch_fractions()[0] > 0.5) ++global_heavy;
  }
  // Single-site updates stay locked in the all-local state essentially
  // forever; the block moves must cross to the pooled mode repeatedly.
  CHECK(global_heavy > 5);
}

TEST_CASE("network relabel ratio matches the collapsed posterior") {
  Corpus corpus = tiny_corpus();
  Hyperparameters hp = tiny_hp();
  hp.topic_count = 3;  // room for 3-cycles
  Rng rng(515);
  int checked = 0;
  for (int trial = 0; trial < 80; ++trial) {
    LatentAssignments a = random_assignments(corpus, hp.topic_count, rng);
    GibbsSampler sampler(corpus, hp, a, 1);
    const std::uint32_t h = rng.uniform_int(2);
    std::vector<std::uint32_t> perm{0, 1, 2};
    for (std::size_t i = perm.size(); i > 1; --i) {
      std::swap(perm[i - 1], perm[rng.uniform_int(static_cast<std::uint32_t>(i))]);
    }

    LatentAssignments relabeled = a;
    bool any = false;
    for (std::size_t p = 0; p < corpus.post_count(); ++p) {
      if (corpus.post(p).network != h) continue;
      const auto z = static_cast<std::uint32_t>(a.post_topic[p]);
      if (perm[z] != z) {
        relabeled.post_topic[p] = static_cast<std::int32_t>(perm[z]);
        any = true;
      }
    }
    if (!any) continue;
    ++checked;
    const double expected = oracle::collapsed_log_posterior(corpus, hp, relabeled) -
                            oracle::collapsed_log_posterior(corpus, hp, a);
    const double actual = sampler.network_relabel_log_ratio(h, perm);
    CHECK(actual == doctest::Approx(expected).epsilon(1e-9));
  }
  CHECK(checked > 30);
}

TEST_CASE("network relabel aligns topic labels across networks") {
  // Two topics with disjoint vocabularies; network 1 starts with the labels
  // flipped. The relabel move should align them.
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::vector<std::int32_t>>> posts;
  for (std::uint32_t u = 0; u < 6; ++u) {
    for (std::uint32_t s = 0; s < 2; ++s) {
      for (int p = 0; p < 4; ++p) {
        posts.push_back({u, s, {0, 1, 0}});  // topic-A words
        posts.push_back({u, s, {8, 9, 8}});  // topic-B words
      }
    }
  }
  Corpus corpus = oracle::make_corpus(6, 2, 10, posts);
  Hyperparameters hp = Hyperparameters::defaults(2);
  hp.alpha = 0.5;
  hp.lambda = 1.0;
  LatentAssignments a;
  a.post_topic.resize(corpus.post_count());
  a.token_switch.assign(corpus.token_count(), kSwitchGlobal);
  for (std::size_t p = 0; p < corpus.post_count(); ++p) {
    const Post& post = corpus.post(p);
    const bool topic_a_words = corpus.tokens(post)[0] == 0;
    // Network 1 uses flipped labels.
    const bool flip = post.network == 1;
    a.post_topic[p] = (topic_a_words != flip) ? 0 : 1;
  }
  GibbsSampler sampler(corpus, hp, std::move(a), 4);
  const std::vector<std::uint32_t> swap_01{1, 0};
  const double before = sampler.network_relabel_log_ratio(1, swap_01);
  CHECK(before > 0.0);  // aligning must raise the posterior
  sampler.network_relabel_pass();
  // After alignment every post with topic-A words shares one label.
  std::int32_t label = -1;
  bool aligned = true;
  for (std::size_t p = 0; p < corpus.post_count(); ++p) {
    const Post& post = corpus.post(p);
    if (corpus.tokens(post)[0] != 0) continue;
    if (label < 0) label = sampler.assignments().post_topic[p];
    aligned = aligned && sampler.assignments().post_topic[p] == label;
  }
  CHECK(aligned);
  CHECK(recount(corpus, hp.topic_count, sampler.assignments()) == sampler.counts());
}

TEST_CASE("train with zero iterations returns the initialization estimates") {
  Corpus corpus = tiny_corpus();
  const Hyperparameters hp = tiny_hp();
  TrainConfig config;
  config.max_iters = 0;
  config.burn_in = 0;
  config.seed = 31;
  TrainResult result = train(corpus, hp, config);
  auto [a, counts] = init_state(corpus, hp, 31);
  CHECK(result.assignments == a);
  CHECK(result.estimates.theta == estimate_parameters(hp, counts).theta);
  CHECK(result.diagnostics.points.empty());
}

TEST_CASE("train is deterministic under seed and config") {
  Corpus corpus = tiny_corpus();
  const Hyperparameters hp = tiny_hp();
  TrainConfig config;
  config.max_iters = 20;
  config.burn_in = 5;
  config.log_every = 7;
  config.seed = 77;
  TrainResult r1 = train(corpus, hp, config);
  TrainResult r2 = train(corpus, hp, config);
  CHECK(r1.estimates.theta == r2.estimates.theta);
  CHECK(r1.estimates.phi_p == r2.estimates.phi_p);
  CHECK(r1.assignments == r2.assignments);
  REQUIRE(r1.diagnostics.points.size() == r2.diagnostics.points.size());
  CHECK(r1.diagnostics.points.front().iteration == 1);
  CHECK(r1.diagnostics.points.back().iteration == 20);
}

TEST_CASE("snapshot averaging produces normalized estimates") {
  Corpus corpus = tiny_corpus();
  const Hyperparameters hp = tiny_hp();
  TrainConfig config;
  config.max_iters = 30;
  config.burn_in = 10;
  config.estimate_mode = EstimateMode::kSnapshotAverage;
  config.snapshot_count = 4;
  config.snapshot_spacing = 5;
  config.seed = 5;
  TrainResult result = train(corpus, hp, config);
  for (std::uint32_t u = 0; u < result.estimates.users; ++u) {
    double sum = 0.0;
    for (std::uint32_t k = 0; k < result.estimates.topics; ++k) {
      sum += result.estimates.theta[std::size_t(u) * result.estimates.topics + k];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  TrainResult again = train(corpus, hp, config);
  CHECK(result.estimates.theta == again.estimates.theta);
}

TEST_CASE("multi-chain training keeps the best-likelihood chain") {
  Corpus corpus = tiny_corpus();
  const Hyperparameters hp = tiny_hp();
  TrainConfig config;
  config.max_iters = 15;
  config.burn_in = 5;
  config.seed = 100;
  config.chains = 3;
  TrainResult multi = train(corpus, hp, config);

  double best = -1e300;
  std::uint64_t best_seed = 0;
  for (std::uint32_t c = 0; c < 3; ++c) {
    TrainConfig single = config;
    single.chains = 1;
    single.seed = 100 + c;
    TrainResult r = train(corpus, hp, single);
    if (r.diagnostics.final_train_likelihood > best) {
      best = r.diagnostics.final_train_likelihood;
      best_seed = single.seed;
    }
  }
  CHECK(multi.diagnostics.chain_seed == best_seed);
  CHECK(multi.diagnostics.final_train_likelihood == doctest::Approx(best));
}

TEST_CASE("train config validation") {
  TrainConfig config;
  config.max_iters = 10;
  config.burn_in = 10;
  CHECK_THROWS_AS(config.validate(), MsntError);
  config.burn_in = 2;
  config.estimate_mode = EstimateMode::kSnapshotAverage;
  config.snapshot_count = 5;
  config.snapshot_spacing = 5;  // 2 + 25 > 10
  CHECK_THROWS_AS(config.validate(), MsntError);
  config.snapshot_spacing = 1;
  CHECK_NOTHROW(config.validate());
}
