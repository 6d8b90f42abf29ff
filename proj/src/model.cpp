#include "msnt/model.hpp"

#include <string>

#include "msnt/rng.hpp"

namespace msnt {

Hyperparameters Hyperparameters::defaults(std::uint32_t topic_count) {
  Hyperparameters hp;
  hp.topic_count = topic_count;
  hp.alpha = topic_count > 0 ? 50.0 / static_cast<double>(topic_count) : 0.0;
  return hp;
}

void Hyperparameters::validate() const {
  if (topic_count < 1) throw MsntError("hyperparameters: topic count must be >= 1");
  auto check = [](double v, const char* name) {
    if (!(v > 0.0)) throw MsntError(std::string("hyperparameters: ") + name + " must be > 0");
  };
  check(alpha, "alpha");
  check(beta_p, "beta_p");
  check(beta_s, "beta_s");
  check(beta_b, "beta_b");
  check(lambda, "lambda");
  check(tau_zs.global, "tau_zs.global");
  check(tau_zs.local, "tau_zs.local");
  check(tau_b.topical, "tau_b.topical");
  check(tau_b.background, "tau_b.background");
}

CountTables::CountTables(std::uint32_t users, std::uint32_t topics, std::uint32_t networks,
                         std::uint32_t vocab)
    : users_(users),
      topics_(topics),
      networks_(networks),
      vocab_(vocab),
      user_topic_(std::size_t(users) * topics, 0),
      user_topic_network_(std::size_t(users) * topics * networks, 0),
      global_topic_word_(std::size_t(topics) * vocab, 0),
      local_topic_word_(std::size_t(networks) * topics * vocab, 0),
      background_word_(vocab, 0),
      switch_global_local_(std::size_t(networks) * topics * 2, 0) {}

namespace {

void count_post(CountTables& counts, const Corpus& corpus, const Post& post,
                std::int32_t z, const std::uint8_t* switches) {
  ++counts.user_topic(post.user, z);
  ++counts.user_topic_network(post.user, z, post.network);
  auto tokens = corpus.tokens(post);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto w = static_cast<std::uint32_t>(tokens[i]);
    switch (switches[post.token_begin + i]) {
      case kSwitchGlobal:
        ++counts.global_topic_word(z, w);
        ++counts.switch_global_local(post.network, z, 0);
        ++counts.switch_background(0);
        break;
      case kSwitchLocal:
        ++counts.local_topic_word(post.network, z, w);
        ++counts.switch_global_local(post.network, z, 1);
        ++counts.switch_background(0);
        break;
      default:
        ++counts.background_word(w);
        ++counts.switch_background(1);
        break;
    }
  }
}

}  // namespace

std::pair<LatentAssignments, CountTables> init_state(const Corpus& corpus,
                                                     const Hyperparameters& hp,
                                                     std::uint64_t seed) {
  hp.validate();
  if (corpus.post_count() == 0) throw MsntError("init: corpus has no posts");
  Rng rng(seed);
  LatentAssignments assignments;
  assignments.post_topic.resize(corpus.post_count());
  assignments.token_switch.resize(corpus.token_count());
  CountTables counts(static_cast<std::uint32_t>(corpus.user_count()), hp.topic_count,
                     static_cast<std::uint32_t>(corpus.network_count()),
                     static_cast<std::uint32_t>(corpus.vocabulary().size()));
  for (std::size_t p = 0; p < corpus.post_count(); ++p) {
    const Post& post = corpus.post(p);
    const auto z = static_cast<std::int32_t>(rng.uniform_int(hp.topic_count));
    assignments.post_topic[p] = z;
    for (std::uint32_t i = 0; i < post.token_count; ++i) {
      assignments.token_switch[post.token_begin + i] =
          static_cast<std::uint8_t>(rng.uniform_int(3));
    }
    count_post(counts, corpus, post, z, assignments.token_switch.data());
  }
  return {std::move(assignments), std::move(counts)};
}

CountTables recount(const Corpus& corpus, std::uint32_t topic_count,
                    const LatentAssignments& assignments) {
  if (assignments.post_topic.size() != corpus.post_count() ||
      assignments.token_switch.size() != corpus.token_count()) {
    throw MsntError("recount: assignment shapes do not match corpus");
  }
  CountTables counts(static_cast<std::uint32_t>(corpus.user_count()), topic_count,
                     static_cast<std::uint32_t>(corpus.network_count()),
                     static_cast<std::uint32_t>(corpus.vocabulary().size()));
  for (std::size_t p = 0; p < corpus.post_count(); ++p) {
    count_post(counts, corpus, corpus.post(p), assignments.post_topic[p],
               assignments.token_switch.data());
  }
  return counts;
}

namespace {

// (count + prior) / (total + dim * prior) over one row.
void smooth_row(std::span<double> out, const std::int32_t* counts, std::size_t dim,
                double prior, double total) {
  double denom = total + static_cast<double>(dim) * prior;
  for (std::size_t i = 0; i < dim; ++i) {
    out[i] = (static_cast<double>(counts[i]) + prior) / denom;
  }
}

}  // namespace

PosteriorEstimates estimate_parameters(const Hyperparameters& hp, const CountTables& counts) {
  hp.validate();
  const std::uint32_t u_count = counts.user_count();
  const std::uint32_t k_count = counts.topic_count();
  const std::uint32_t s_count = counts.network_count();
  const std::uint32_t v_count = counts.vocab_size();

  PosteriorEstimates est;
  est.users = u_count;
  est.topics = k_count;
  est.networks = s_count;
  est.vocab = v_count;
  est.theta.resize(std::size_t(u_count) * k_count);
  est.phi_p.resize(std::size_t(k_count) * v_count);
  est.phi_s.resize(std::size_t(s_count) * k_count * v_count);
  est.phi_b.resize(v_count);
  est.rho.resize(std::size_t(u_count) * k_count * s_count);
  est.sigma_zs.resize(std::size_t(s_count) * k_count * 2);
  est.sigma_b.resize(2);

  for (std::uint32_t u = 0; u < u_count; ++u) {
    double posts = 0.0;
    for (std::uint32_t k = 0; k < k_count; ++k) posts += counts.user_topic(u, k);
    smooth_row(std::span<double>(est.theta.data() + std::size_t(u) * k_count, k_count),
               counts.user_topic_row(u), k_count, hp.alpha, posts);
    for (std::uint32_t k = 0; k < k_count; ++k) {
      smooth_row(std::span<double>(est.rho.data() + (std::size_t(u) * k_count + k) * s_count,
                                   s_count),
                 counts.user_topic_network_row(u, k), s_count, hp.lambda,
                 static_cast<double>(counts.user_topic(u, k)));
    }
  }
  for (std::uint32_t k = 0; k < k_count; ++k) {
    smooth_row(std::span<double>(est.phi_p.data() + std::size_t(k) * v_count, v_count),
               counts.global_topic_word_row(k), v_count, hp.beta_p,
               static_cast<double>(counts.global_word_total(k)));
  }
  for (std::uint32_t s = 0; s < s_count; ++s) {
    for (std::uint32_t k = 0; k < k_count; ++k) {
      smooth_row(std::span<double>(
                     est.phi_s.data() + (std::size_t(s) * k_count + k) * v_count, v_count),
                 counts.local_topic_word_row(s, k), v_count, hp.beta_s,
                 static_cast<double>(counts.local_word_total(s, k)));
      double d0 = counts.switch_global_local(s, k, 0) + hp.tau_zs.global;
      double d1 = counts.switch_global_local(s, k, 1) + hp.tau_zs.local;
      est.sigma_zs[(std::size_t(s) * k_count + k) * 2 + 0] = d0 / (d0 + d1);
      est.sigma_zs[(std::size_t(s) * k_count + k) * 2 + 1] = d1 / (d0 + d1);
    }
  }
  smooth_row(std::span<double>(est.phi_b.data(), v_count), counts.background_word_row(), v_count,
             hp.beta_b, static_cast<double>(counts.background_word_total()));
  {
    double d0 = counts.switch_background(0) + hp.tau_b.topical;
    double d1 = counts.switch_background(1) + hp.tau_b.background;
    est.sigma_b[0] = d0 / (d0 + d1);
    est.sigma_b[1] = d1 / (d0 + d1);
  }
  return est;
}

}  // namespace msnt
