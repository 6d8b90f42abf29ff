#include "msnt/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "msnt/evaluation.hpp"

namespace msnt {

void TrainConfig::validate() const {
  if (max_iters > 0 && burn_in >= max_iters) {
    throw MsntError("train config: burn_in must be < max_iters");
  }
  if (max_iters == 0 && burn_in != 0) {
    throw MsntError("train config: burn_in must be 0 when max_iters is 0");
  }
  if (snapshot_spacing < 1) throw MsntError("train config: snapshot spacing must be >= 1");
  if (estimate_mode == EstimateMode::kSnapshotAverage) {
    if (snapshot_count < 1) throw MsntError("train config: snapshot count must be >= 1");
    // Snapshots trail backwards from max_iters; the whole window must sit
    // after burn-in.
    if (std::uint64_t(snapshot_count - 1) * snapshot_spacing + burn_in >= max_iters) {
      throw MsntError("train config: snapshot window does not fit after burn-in");
    }
  }
  if (chains < 1) throw MsntError("train config: chains must be >= 1");
  if (log_every < 1) throw MsntError("train config: log_every must be >= 1");
}

GibbsSampler::GibbsSampler(const Corpus& corpus, const Hyperparameters& hp, std::uint64_t seed)
    : corpus_(&corpus), hp_(hp), rng_(seed) {
  auto [assignments, counts] = init_state(corpus, hp, seed);
  assignments_ = std::move(assignments);
  counts_ = std::move(counts);
  log_weight_buf_.resize(hp_.topic_count);
  weight_buf_.resize(hp_.topic_count);
}

GibbsSampler::GibbsSampler(const Corpus& corpus, const Hyperparameters& hp,
                           LatentAssignments assignments, std::uint64_t seed)
    : corpus_(&corpus), hp_(hp), assignments_(std::move(assignments)), rng_(seed) {
  hp_.validate();
  counts_ = recount(corpus, hp_.topic_count, assignments_);
  log_weight_buf_.resize(hp_.topic_count);
  weight_buf_.resize(hp_.topic_count);
}

void GibbsSampler::remove_token(std::size_t post_index, std::uint32_t i) {
  const Post& post = corpus_->post(post_index);
  const auto z = assignments_.post_topic[post_index];
  const auto w = static_cast<std::uint32_t>(corpus_->tokens(post)[i]);
  switch (assignments_.token_switch[post.token_begin + i]) {
    case kSwitchGlobal:
      --counts_.global_topic_word(z, w);
      --counts_.switch_global_local(post.network, z, 0);
      --counts_.switch_background(0);
      break;
    case kSwitchLocal:
      --counts_.local_topic_word(post.network, z, w);
      --counts_.switch_global_local(post.network, z, 1);
      --counts_.switch_background(0);
      break;
    default:
      --counts_.background_word(w);
      --counts_.switch_background(1);
      break;
  }
}

void GibbsSampler::place_token(std::size_t post_index, std::uint32_t i, std::uint8_t x) {
  const Post& post = corpus_->post(post_index);
  const auto z = assignments_.post_topic[post_index];
  const auto w = static_cast<std::uint32_t>(corpus_->tokens(post)[i]);
  assignments_.token_switch[post.token_begin + i] = x;
  switch (x) {
    case kSwitchGlobal:
      ++counts_.global_topic_word(z, w);
      ++counts_.switch_global_local(post.network, z, 0);
      ++counts_.switch_background(0);
      break;
    case kSwitchLocal:
      ++counts_.local_topic_word(post.network, z, w);
      ++counts_.switch_global_local(post.network, z, 1);
      ++counts_.switch_background(0);
      break;
    default:
      ++counts_.background_word(w);
      ++counts_.switch_background(1);
      break;
  }
}

void GibbsSampler::remove_post(std::size_t post_index) {
  const Post& post = corpus_->post(post_index);
  const auto z = assignments_.post_topic[post_index];
  --counts_.user_topic(post.user, z);
  --counts_.user_topic_network(post.user, z, post.network);
  auto tokens = corpus_->tokens(post);
  for (std::uint32_t i = 0; i < post.token_count; ++i) {
    const auto w = static_cast<std::uint32_t>(tokens[i]);
    switch (assignments_.token_switch[post.token_begin + i]) {
      case kSwitchGlobal:
        --counts_.global_topic_word(z, w);
        --counts_.switch_global_local(post.network, z, 0);
        break;
      case kSwitchLocal:
        --counts_.local_topic_word(post.network, z, w);
        --counts_.switch_global_local(post.network, z, 1);
        break;
      default:
        break;  // background counts do not depend on the topic
    }
  }
}

void GibbsSampler::place_post(std::size_t post_index, std::int32_t z) {
  const Post& post = corpus_->post(post_index);
  assignments_.post_topic[post_index] = z;
  ++counts_.user_topic(post.user, z);
  ++counts_.user_topic_network(post.user, z, post.network);
  auto tokens = corpus_->tokens(post);
  for (std::uint32_t i = 0; i < post.token_count; ++i) {
    const auto w = static_cast<std::uint32_t>(tokens[i]);
    switch (assignments_.token_switch[post.token_begin + i]) {
      case kSwitchGlobal:
        ++counts_.global_topic_word(z, w);
        ++counts_.switch_global_local(post.network, z, 0);
        break;
      case kSwitchLocal:
        ++counts_.local_topic_word(post.network, z, w);
        ++counts_.switch_global_local(post.network, z, 1);
        break;
      default:
        break;
    }
  }
}

std::array<double, 3> GibbsSampler::switch_weights(std::size_t post_index,
                                                   std::uint32_t i) const {
  const Post& post = corpus_->post(post_index);
  const auto z = assignments_.post_topic[post_index];
  const auto h = post.network;
  const auto w = static_cast<std::uint32_t>(corpus_->tokens(post)[i]);
  const auto v = static_cast<double>(counts_.vocab_size());

  const double bg_denom = static_cast<double>(counts_.switch_background(0)) +
                          static_cast<double>(counts_.switch_background(1)) +
                          hp_.tau_b.topical + hp_.tau_b.background;
  const double topical = (counts_.switch_background(0) + hp_.tau_b.topical) / bg_denom;
  const double background = (counts_.switch_background(1) + hp_.tau_b.background) / bg_denom;

  const double zs_denom = static_cast<double>(counts_.switch_global_local(h, z, 0)) +
                          static_cast<double>(counts_.switch_global_local(h, z, 1)) +
                          hp_.tau_zs.global + hp_.tau_zs.local;
  const double sigma_g = (counts_.switch_global_local(h, z, 0) + hp_.tau_zs.global) / zs_denom;
  const double sigma_l = (counts_.switch_global_local(h, z, 1) + hp_.tau_zs.local) / zs_denom;

  std::array<double, 3> weights;
  weights[kSwitchGlobal] =
      topical * sigma_g *
      (counts_.global_topic_word(z, w) + hp_.beta_p) /
      (static_cast<double>(counts_.global_word_total(z)) + v * hp_.beta_p);
  weights[kSwitchLocal] =
      topical * sigma_l *
      (counts_.local_topic_word(h, z, w) + hp_.beta_s) /
      (static_cast<double>(counts_.local_word_total(h, z)) + v * hp_.beta_s);
  weights[kSwitchBackground] =
      background * (counts_.background_word(w) + hp_.beta_b) /
      (static_cast<double>(counts_.background_word_total()) + v * hp_.beta_b);
  return weights;
}

void GibbsSampler::topic_log_weights(std::size_t post_index, std::span<double> out) const {
  const Post& post = corpus_->post(post_index);
  const auto u = post.user;
  const auto h = post.network;
  const auto k_count = hp_.topic_count;
  const auto s_count = static_cast<double>(counts_.network_count());
  const auto v = static_cast<double>(counts_.vocab_size());
  auto tokens = corpus_->tokens(post);
  const std::uint8_t* switches = assignments_.token_switch.data() + post.token_begin;

  std::uint32_t n_global = 0, n_local = 0;
  for (std::uint32_t i = 0; i < post.token_count; ++i) {
    if (switches[i] == kSwitchGlobal) ++n_global;
    else if (switches[i] == kSwitchLocal) ++n_local;
  }

  // Remaining posts of this user; the theta denominator is topic-invariant.
  double posts_excl = static_cast<double>(corpus_->user_post_count(u)) - 1.0;
  const double log_theta_denom =
      std::log(posts_excl + static_cast<double>(k_count) * hp_.alpha);

  const std::int32_t* ut_row = counts_.user_topic_row(u);
  for (std::uint32_t k = 0; k < k_count; ++k) {
    const double ut = static_cast<double>(ut_row[k]);
    double lw = std::log(ut + hp_.alpha) - log_theta_denom +
                std::log(counts_.user_topic_network(u, k, h) + hp_.lambda) -
                std::log(ut + s_count * hp_.lambda);
    if (n_global + n_local > 0) {
      const double swl0 = static_cast<double>(counts_.switch_global_local(h, k, 0));
      const double swl1 = static_cast<double>(counts_.switch_global_local(h, k, 1));
      const double log_zs_denom =
          std::log(swl0 + swl1 + hp_.tau_zs.global + hp_.tau_zs.local);
      if (n_global > 0) {
        const double log_word_denom =
            std::log(static_cast<double>(counts_.global_word_total(k)) + v * hp_.beta_p);
        lw += n_global * (std::log(swl0 + hp_.tau_zs.global) - log_zs_denom - log_word_denom);
        const std::int32_t* row = counts_.global_topic_word_row(k);
        for (std::uint32_t i = 0; i < post.token_count; ++i) {
          if (switches[i] == kSwitchGlobal) lw += std::log(row[tokens[i]] + hp_.beta_p);
        }
      }
      if (n_local > 0) {
        const double log_word_denom =
            std::log(static_cast<double>(counts_.local_word_total(h, k)) + v * hp_.beta_s);
        lw += n_local * (std::log(swl1 + hp_.tau_zs.local) - log_zs_denom - log_word_denom);
        const std::int32_t* row = counts_.local_topic_word_row(h, k);
        for (std::uint32_t i = 0; i < post.token_count; ++i) {
          if (switches[i] == kSwitchLocal) lw += std::log(row[tokens[i]] + hp_.beta_s);
        }
      }
    }
    out[k] = lw;
  }
}

std::vector<double> GibbsSampler::topic_weights(std::size_t post_index) const {
  std::vector<double> logs(hp_.topic_count);
  topic_log_weights(post_index, logs);
  const double max_log = *std::max_element(logs.begin(), logs.end());
  std::vector<double> weights(hp_.topic_count);
  for (std::size_t k = 0; k < logs.size(); ++k) weights[k] = std::exp(logs[k] - max_log);
  return weights;
}

std::array<double, 3> GibbsSampler::switch_fractions() const {
  std::int64_t n0 = 0, n1 = 0;
  for (std::uint32_t h = 0; h < counts_.network_count(); ++h) {
    for (std::uint32_t k = 0; k < counts_.topic_count(); ++k) {
      n0 += counts_.switch_global_local(h, k, 0);
      n1 += counts_.switch_global_local(h, k, 1);
    }
  }
  const double total = static_cast<double>(counts_.token_total());
  if (total == 0.0) return {0.0, 0.0, 0.0};
  return {static_cast<double>(n0) / total, static_cast<double>(n1) / total,
          static_cast<double>(counts_.switch_background(1)) / total};
}

void GibbsSampler::resample_post(std::size_t post_index) {
  const Post& post = corpus_->post(post_index);
  for (std::uint32_t i = 0; i < post.token_count; ++i) {
    remove_token(post_index, i);
    const auto weights = switch_weights(post_index, i);
    const auto x = static_cast<std::uint8_t>(
        rng_.categorical(std::span<const double>(weights.data(), 3)));
    place_token(post_index, i, x);
  }
  remove_post(post_index);
  topic_log_weights(post_index, log_weight_buf_);
  const double max_log = *std::max_element(log_weight_buf_.begin(), log_weight_buf_.end());
  for (std::uint32_t k = 0; k < hp_.topic_count; ++k) {
    weight_buf_[k] = std::exp(log_weight_buf_[k] - max_log);
  }
  const auto z = static_cast<std::int32_t>(rng_.categorical(weight_buf_));
  place_post(post_index, z);
}

void GibbsSampler::sweep() {
  for (std::size_t p = 0; p < corpus_->post_count(); ++p) resample_post(p);
}

void GibbsSampler::warmup_sweep() {
  for (std::size_t p = 0; p < corpus_->post_count(); ++p) {
    const Post& post = corpus_->post(p);
    for (std::uint32_t i = 0; i < post.token_count; ++i) {
      if (assignments_.token_switch[post.token_begin + i] == kSwitchLocal) continue;
      remove_token(p, i);
      auto weights = switch_weights(p, i);
      weights[kSwitchLocal] = 0.0;
      place_token(p, i,
                  static_cast<std::uint8_t>(
                      rng_.categorical(std::span<const double>(weights.data(), 3))));
    }
    remove_post(p);
    topic_log_weights(p, log_weight_buf_);
    const double max_log = *std::max_element(log_weight_buf_.begin(), log_weight_buf_.end());
    for (std::uint32_t k = 0; k < hp_.topic_count; ++k) {
      weight_buf_[k] = std::exp(log_weight_buf_[k] - max_log);
    }
    place_post(p, static_cast<std::int32_t>(rng_.categorical(weight_buf_)));
  }
}

void GibbsSampler::build_word_index() {
  word_index_.resize(counts_.vocab_size());
  for (std::size_t p = 0; p < corpus_->post_count(); ++p) {
    const Post& post = corpus_->post(p);
    auto tokens = corpus_->tokens(post);
    for (std::uint32_t i = 0; i < post.token_count; ++i) {
      word_index_[tokens[i]].emplace_back(static_cast<std::uint32_t>(p), i);
    }
  }
}

std::vector<double> GibbsSampler::local_split_log_weights(std::uint32_t topic,
                                                          std::uint32_t word,
                                                          std::uint32_t network,
                                                          std::uint32_t block_size) const {
  const double v = static_cast<double>(counts_.vocab_size());
  const double g_word = counts_.global_topic_word(topic, word) + hp_.beta_p;
  const double g_total = static_cast<double>(counts_.global_word_total(topic)) + v * hp_.beta_p;
  const double l_word = counts_.local_topic_word(network, topic, word) + hp_.beta_s;
  const double l_total =
      static_cast<double>(counts_.local_word_total(network, topic)) + v * hp_.beta_s;
  const double n_global = counts_.switch_global_local(network, topic, 0) + hp_.tau_zs.global;
  const double n_local = counts_.switch_global_local(network, topic, 1) + hp_.tau_zs.local;

  const double c = static_cast<double>(block_size);
  const double log_c_fact = std::lgamma(c + 1.0);
  std::vector<double> log_weights(block_size + 1);
  for (std::uint32_t j = 0; j <= block_size; ++j) {
    const double local = static_cast<double>(j);
    const double global = c - local;
    double lw = log_c_fact - std::lgamma(local + 1.0) - std::lgamma(global + 1.0);
    lw += std::lgamma(g_word + global) - std::lgamma(g_total + global);
    lw += std::lgamma(l_word + local) - std::lgamma(l_total + local);
    lw += std::lgamma(n_global + global) + std::lgamma(n_local + local);
    log_weights[j] = lw;
  }
  return log_weights;
}

std::vector<double> GibbsSampler::background_split_log_weights(std::uint32_t topic,
                                                               std::uint32_t word,
                                                               std::uint32_t network,
                                                               std::uint32_t block_size) const {
  const double v = static_cast<double>(counts_.vocab_size());
  const double g_word = counts_.global_topic_word(topic, word) + hp_.beta_p;
  const double g_total = static_cast<double>(counts_.global_word_total(topic)) + v * hp_.beta_p;
  const double b_word = counts_.background_word(word) + hp_.beta_b;
  const double b_total = static_cast<double>(counts_.background_word_total()) + v * hp_.beta_b;
  const double n_global = counts_.switch_global_local(network, topic, 0) + hp_.tau_zs.global;
  const double cell_total = n_global + counts_.switch_global_local(network, topic, 1) +
                            hp_.tau_zs.local;
  const double topical = counts_.switch_background(0) + hp_.tau_b.topical;
  const double background = counts_.switch_background(1) + hp_.tau_b.background;

  const double c = static_cast<double>(block_size);
  const double log_c_fact = std::lgamma(c + 1.0);
  std::vector<double> log_weights(block_size + 1);
  for (std::uint32_t j = 0; j <= block_size; ++j) {
    const double bg = static_cast<double>(j);
    const double global = c - bg;
    double lw = log_c_fact - std::lgamma(bg + 1.0) - std::lgamma(global + 1.0);
    lw += std::lgamma(g_word + global) - std::lgamma(g_total + global);
    lw += std::lgamma(b_word + bg) - std::lgamma(b_total + bg);
    lw += std::lgamma(n_global + global) - std::lgamma(cell_total + global);
    lw += std::lgamma(topical + global) + std::lgamma(background + bg);
    log_weights[j] = lw;
  }
  return log_weights;
}

double GibbsSampler::network_relabel_log_ratio(
    std::uint32_t network, std::span<const std::uint32_t> permutation) const {
  const std::uint32_t k_count = hp_.topic_count;
  const std::uint32_t v_count = counts_.vocab_size();
  const double s_count = static_cast<double>(counts_.network_count());

  std::vector<std::uint32_t> support;
  std::vector<std::uint32_t> inverse(k_count);
  for (std::uint32_t k = 0; k < k_count; ++k) {
    inverse[permutation[k]] = k;
    if (permutation[k] != k) support.push_back(k);
  }
  if (support.empty()) return 0.0;
  std::vector<std::int32_t> slot(k_count, -1);
  for (std::size_t i = 0; i < support.size(); ++i) slot[support[i]] = static_cast<std::int32_t>(i);

  // Per-support-topic word counts of the network's x=0 tokens; these move
  // between global tables under the permutation.
  std::vector<std::int32_t> moved_words(support.size() * v_count, 0);
  std::vector<std::int64_t> moved_totals(support.size(), 0);
  std::vector<std::uint32_t> touched;
  std::vector<char> seen(v_count, 0);
  for (std::uint32_t u = 0; u < counts_.user_count(); ++u) {
    for (const Post& post : corpus_->cell_posts(u, network)) {
      const std::size_t p = static_cast<std::size_t>(&post - corpus_->posts().data());
      const std::int32_t s = slot[assignments_.post_topic[p]];
      if (s < 0) continue;
      auto tokens = corpus_->tokens(post);
      for (std::uint32_t i = 0; i < post.token_count; ++i) {
        if (assignments_.token_switch[post.token_begin + i] != kSwitchGlobal) continue;
        const auto w = static_cast<std::uint32_t>(tokens[i]);
        ++moved_words[std::size_t(s) * v_count + w];
        ++moved_totals[s];
        if (!seen[w]) {
          seen[w] = 1;
          touched.push_back(w);
        }
      }
    }
  }

  double delta = 0.0;
  // Theta and rho shifts come straight from the count tables: the network's
  // topic-k posts of user u are exactly user_topic_network(u, k, network).
  for (std::uint32_t u = 0; u < counts_.user_count(); ++u) {
    bool any = false;
    for (std::uint32_t k : support) {
      if (counts_.user_topic_network(u, k, network) != 0) {
        any = true;
        break;
      }
    }
    if (!any) continue;
    for (std::uint32_t k : support) {
      const std::int32_t incoming = counts_.user_topic_network(u, inverse[k], network);
      const std::int32_t outgoing = counts_.user_topic_network(u, k, network);
      const std::int32_t diff = incoming - outgoing;
      delta += std::lgamma(incoming + hp_.lambda) - std::lgamma(outgoing + hp_.lambda);
      if (diff == 0) continue;
      const double topic_posts = counts_.user_topic(u, k) + hp_.alpha;
      delta += std::lgamma(topic_posts + diff) - std::lgamma(topic_posts);
      const double row = counts_.user_topic(u, k) + s_count * hp_.lambda;
      delta -= std::lgamma(row + diff) - std::lgamma(row);
    }
  }

  for (std::uint32_t w : touched) {
    seen[w] = 0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      const std::uint32_t k = support[i];
      const std::int32_t shift =
          moved_words[std::size_t(slot[inverse[k]]) * v_count + w] -
          moved_words[i * v_count + w];
      if (shift == 0) continue;
      const double g = counts_.global_topic_word(k, w) + hp_.beta_p;
      delta += std::lgamma(g + shift) - std::lgamma(g);
    }
  }
  for (std::size_t i = 0; i < support.size(); ++i) {
    const std::uint32_t k = support[i];
    const std::int64_t shift = moved_totals[slot[inverse[k]]] - moved_totals[i];
    if (shift == 0) continue;
    const double g_total = static_cast<double>(counts_.global_word_total(k)) +
                           static_cast<double>(v_count) * hp_.beta_p;
    delta -= std::lgamma(g_total + shift) - std::lgamma(g_total);
  }
  return delta;
}

void GibbsSampler::network_relabel_pass() {
  const std::uint32_t k_count = hp_.topic_count;
  if (k_count < 2) return;
  std::vector<std::uint32_t> perm(k_count);
  auto identity = [&]() {
    for (std::uint32_t k = 0; k < k_count; ++k) perm[k] = k;
  };
  auto propose = [&](std::uint32_t h) {
    const double delta = network_relabel_log_ratio(h, perm);
    if (delta >= 0.0 || rng_.uniform01() < std::exp(delta)) {
      for (std::uint32_t u = 0; u < counts_.user_count(); ++u) {
        for (const Post& post : corpus_->cell_posts(u, h)) {
          const std::size_t p = static_cast<std::size_t>(&post - corpus_->posts().data());
          const auto z = static_cast<std::uint32_t>(assignments_.post_topic[p]);
          if (perm[z] == z) continue;
          remove_post(p);
          place_post(p, static_cast<std::int32_t>(perm[z]));
        }
      }
    }
  };

  for (std::uint32_t h = 0; h < counts_.network_count(); ++h) {
    for (std::uint32_t a = 0; a < k_count; ++a) {
      for (std::uint32_t b = a + 1; b < k_count; ++b) {
        identity();
        perm[a] = b;
        perm[b] = a;
        propose(h);
      }
    }
    // 3-cycles; orientation drawn at random so the proposal is symmetric.
    for (std::uint32_t a = 0; a < k_count; ++a) {
      for (std::uint32_t b = a + 1; b < k_count; ++b) {
        for (std::uint32_t c = b + 1; c < k_count; ++c) {
          identity();
          if (rng_.uniform01() < 0.5) {
            perm[a] = b;
            perm[b] = c;
            perm[c] = a;
          } else {
            perm[a] = c;
            perm[c] = b;
            perm[b] = a;
          }
          propose(h);
        }
      }
    }
  }
}

double GibbsSampler::channel_swap_log_ratio(std::uint32_t topic, std::uint32_t word,
                                            std::span<const std::int32_t> from_global,
                                            std::span<const std::int32_t> from_local) const {
  const double v = static_cast<double>(counts_.vocab_size());
  std::int64_t global_out = 0, global_in = 0;
  for (std::int32_t c : from_global) global_out += c;
  for (std::int32_t c : from_local) global_in += c;
  const std::int64_t global_delta = global_in - global_out;

  const double g_word = counts_.global_topic_word(topic, word) + hp_.beta_p;
  const double g_total = static_cast<double>(counts_.global_word_total(topic)) + v * hp_.beta_p;
  double delta = std::lgamma(g_word + global_delta) - std::lgamma(g_word) -
                 std::lgamma(g_total + global_delta) + std::lgamma(g_total);

  for (std::uint32_t h = 0; h < counts_.network_count(); ++h) {
    const std::int64_t local_delta = from_global[h] - from_local[h];
    if (from_global[h] == 0 && from_local[h] == 0) continue;
    const double l_word = counts_.local_topic_word(h, topic, word) + hp_.beta_s;
    const double l_total =
        static_cast<double>(counts_.local_word_total(h, topic)) + v * hp_.beta_s;
    delta += std::lgamma(l_word + local_delta) - std::lgamma(l_word) -
             std::lgamma(l_total + local_delta) + std::lgamma(l_total);
    // The cell's topical token count is unchanged, so the switch normalizer
    // cancels and only the two switch numerators shift.
    const double n_global = counts_.switch_global_local(h, topic, 0) + hp_.tau_zs.global;
    const double n_local = counts_.switch_global_local(h, topic, 1) + hp_.tau_zs.local;
    delta += std::lgamma(n_global - local_delta) - std::lgamma(n_global) +
             std::lgamma(n_local + local_delta) - std::lgamma(n_local);
  }
  return delta;
}

void GibbsSampler::channel_resample_pass() {
  if (word_index_.empty()) build_word_index();
  const std::uint32_t s_count = counts_.network_count();
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> blocks(s_count);
  std::vector<double> weights;
  std::vector<std::int32_t> side_global(s_count), side_local(s_count);

  // Remove one (word, topic, network) block, draw its split size from the
  // exact collapsed marginal, place a uniformly shuffled subset.
  auto resample = [&](std::uint32_t k, std::uint32_t w, std::uint8_t other) {
    for (auto& block : blocks) block.clear();
    for (const auto& [p, i] : word_index_[w]) {
      if (assignments_.post_topic[p] != static_cast<std::int32_t>(k)) continue;
      const Post& post = corpus_->post(p);
      const std::uint8_t x = assignments_.token_switch[post.token_begin + i];
      if (x == kSwitchGlobal || x == other) blocks[post.network].push_back({p, i});
    }
    for (std::uint32_t h = 0; h < s_count; ++h) {
      auto& block = blocks[h];
      if (block.empty()) continue;
      for (const auto& [p, i] : block) remove_token(p, i);
      const auto size = static_cast<std::uint32_t>(block.size());
      std::vector<double> log_weights = other == kSwitchLocal
                                            ? local_split_log_weights(k, w, h, size)
                                            : background_split_log_weights(k, w, h, size);
      const double max_log = *std::max_element(log_weights.begin(), log_weights.end());
      weights.resize(log_weights.size());
      for (std::size_t j = 0; j < log_weights.size(); ++j) {
        weights[j] = std::exp(log_weights[j] - max_log);
      }
      const std::size_t split = rng_.categorical(weights);
      for (std::size_t i = block.size(); i > 1; --i) {
        std::swap(block[i - 1], block[rng_.uniform_int(static_cast<std::uint32_t>(i))]);
      }
      for (std::size_t t = 0; t < block.size(); ++t) {
        place_token(block[t].first, block[t].second, t < split ? other : kSwitchGlobal);
      }
    }
  };

  // Cross-network global/local involution (Metropolis): swap the word's two
  // topical sides in every network at once.
  auto swap_move = [&](std::uint32_t k, std::uint32_t w) {
    std::fill(side_global.begin(), side_global.end(), 0);
    std::fill(side_local.begin(), side_local.end(), 0);
    bool any = false;
    for (const auto& [p, i] : word_index_[w]) {
      if (assignments_.post_topic[p] != static_cast<std::int32_t>(k)) continue;
      const Post& post = corpus_->post(p);
      const std::uint8_t x = assignments_.token_switch[post.token_begin + i];
      if (x == kSwitchGlobal) {
        ++side_global[post.network];
        any = true;
      } else if (x == kSwitchLocal) {
        ++side_local[post.network];
        any = true;
      }
    }
    if (!any) return;
    const double delta = channel_swap_log_ratio(k, w, side_global, side_local);
    if (delta >= 0.0 || rng_.uniform01() < std::exp(delta)) {
      for (const auto& [p, i] : word_index_[w]) {
        if (assignments_.post_topic[p] != static_cast<std::int32_t>(k)) continue;
        const Post& post = corpus_->post(p);
        const std::uint8_t x = assignments_.token_switch[post.token_begin + i];
        if (x == kSwitchBackground) continue;
        remove_token(p, i);
        place_token(p, i, x == kSwitchGlobal ? kSwitchLocal : kSwitchGlobal);
      }
    }
  };

  for (std::uint32_t k = 0; k < hp_.topic_count; ++k) {
    for (std::uint32_t w = 0; w < counts_.vocab_size(); ++w) {
      // Cheap occupancy screens from the tables before walking occurrences.
      std::int64_t local_mass = 0;
      for (std::uint32_t h = 0; h < s_count; ++h) {
        local_mass += counts_.local_topic_word(h, k, w);
      }
      const bool has_global = counts_.global_topic_word(k, w) > 0;
      if (local_mass > 0 || has_global) {
        swap_move(k, w);
        resample(k, w, kSwitchLocal);
      }
      if (counts_.global_topic_word(k, w) > 0 || counts_.background_word(w) > 0) {
        resample(k, w, kSwitchBackground);
      }
    }
  }
}

namespace {

struct ChainOutcome {
  TrainResult result;
  double likelihood = 0.0;
  std::uint64_t seed = 0;
};

ChainOutcome run_chain(const Corpus& corpus, const Hyperparameters& hp,
                       const TrainConfig& config, std::uint64_t seed) {
  GibbsSampler sampler(corpus, hp, seed);
  TrainDiagnostics diag;
  diag.chain_seed = seed;

  auto log_point = [&](std::uint32_t iteration) {
    TrainDiagnostics::LogPoint point;
    point.iteration = iteration;
    point.train_perplexity = perplexity(sampler.estimates(), corpus);
    point.switch_fractions = sampler.switch_fractions();
    diag.points.push_back(point);
  };

  // The first iterations freeze the local channel so the networks agree on
  // topics before the channels are opened up.
  const std::uint32_t warm_iters = std::min<std::uint32_t>(config.max_iters / 5, 50);
  // Averaged estimates come from the trailing window of the chain.
  const std::uint32_t first_snapshot =
      config.max_iters - (config.snapshot_count - 1) * config.snapshot_spacing;

  PosteriorEstimates averaged;
  std::size_t snapshots_taken = 0;
  for (std::uint32_t iter = 1; iter <= config.max_iters; ++iter) {
    if (iter <= warm_iters) {
      sampler.warmup_sweep();
      sampler.network_relabel_pass();
    } else {
      sampler.channel_resample_pass();
      sampler.network_relabel_pass();
      sampler.sweep();
    }
    if (iter == 1 || iter % config.log_every == 0 || iter == config.max_iters) {
      log_point(iter);
    }
    if (config.estimate_mode == EstimateMode::kSnapshotAverage && iter >= first_snapshot &&
        (config.max_iters - iter) % config.snapshot_spacing == 0) {
      PosteriorEstimates snap = sampler.estimates();
      if (snapshots_taken == 0) {
        averaged = std::move(snap);
      } else {
        auto add = [](std::vector<double>& acc, const std::vector<double>& v) {
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
        };
        add(averaged.theta, snap.theta);
        add(averaged.phi_p, snap.phi_p);
        add(averaged.phi_s, snap.phi_s);
        add(averaged.phi_b, snap.phi_b);
        add(averaged.rho, snap.rho);
        add(averaged.sigma_zs, snap.sigma_zs);
        add(averaged.sigma_b, snap.sigma_b);
      }
      ++snapshots_taken;
    }
  }

  TrainResult result;
  if (config.estimate_mode == EstimateMode::kSnapshotAverage && snapshots_taken > 0) {
    auto scale = [&](std::vector<double>& v) {
      for (double& x : v) x /= static_cast<double>(snapshots_taken);
    };
    scale(averaged.theta);
    scale(averaged.phi_p);
    scale(averaged.phi_s);
    scale(averaged.phi_b);
    scale(averaged.rho);
    scale(averaged.sigma_zs);
    scale(averaged.sigma_b);
    result.estimates = std::move(averaged);
  } else {
    result.estimates = sampler.estimates();
  }
  result.assignments = sampler.assignments();
  diag.final_train_likelihood = likelihood(result.estimates, corpus);
  result.diagnostics = std::move(diag);

  ChainOutcome outcome;
  outcome.likelihood = result.diagnostics.final_train_likelihood;
  outcome.seed = seed;
  outcome.result = std::move(result);
  return outcome;
}

}  // namespace

TrainResult train(const Corpus& corpus, const Hyperparameters& hp, const TrainConfig& config) {
  hp.validate();
  config.validate();
  if (config.chains == 1) {
    return run_chain(corpus, hp, config, config.seed).result;
  }
  std::vector<ChainOutcome> outcomes(config.chains);
  std::vector<std::thread> workers;
  workers.reserve(config.chains);
  for (std::uint32_t c = 0; c < config.chains; ++c) {
    workers.emplace_back([&, c]() {
      outcomes[c] = run_chain(corpus, hp, config, config.seed + c);
    });
  }
  for (auto& t : workers) t.join();
  std::size_t best = 0;
  for (std::size_t c = 1; c < outcomes.size(); ++c) {
    if (outcomes[c].likelihood > outcomes[best].likelihood) best = c;
  }
  return std::move(outcomes[best].result);
}

}  // namespace msnt
