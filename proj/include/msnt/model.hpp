#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "msnt/corpus.hpp"

namespace msnt {

// Switch values for a token's word source.
inline constexpr std::uint8_t kSwitchGlobal = 0;
inline constexpr std::uint8_t kSwitchLocal = 1;
inline constexpr std::uint8_t kSwitchBackground = 2;

// Prior weights for the global/local choice (x = 0 vs x = 1).
struct TopicalSwitchPrior {
  double global = 0.5;
  double local = 0.5;
};

// Prior weights for the background choice: first the topical side (x in
// {0,1}), then the background side (x = 2).
struct BackgroundSwitchPrior {
  double topical = 0.5;
  double background = 0.5;
};

struct Hyperparameters {
  std::uint32_t topic_count = 0;  // K
  double alpha = 0.0;             // user-topic prior
  double beta_p = 0.01;           // global topic-word prior
  double beta_s = 0.01;           // local topic-word prior
  double beta_b = 0.01;           // background word prior
  double lambda = 0.01;           // network-choice prior
  TopicalSwitchPrior tau_zs;
  BackgroundSwitchPrior tau_b;

  // Empirical defaults: alpha = 50/K, all word/network priors 0.01, switch
  // priors (0.5, 0.5).
  static Hyperparameters defaults(std::uint32_t topic_count);
  void validate() const;  // throws MsntError on a non-positive weight or K = 0
};

// Per-post topic and per-token switch assignments, flat in corpus canonical
// order.
struct LatentAssignments {
  std::vector<std::int32_t> post_topic;
  std::vector<std::uint8_t> token_switch;

  bool operator==(const LatentAssignments&) const = default;
};

// The five coupled sufficient-statistic tables (plus the two switch tallies)
// behind every sampling formula. Dense storage; mutated only by the sampling
// thread that owns them.
class CountTables {
 public:
  CountTables() = default;
  CountTables(std::uint32_t users, std::uint32_t topics, std::uint32_t networks,
              std::uint32_t vocab);

  std::uint32_t user_count() const { return users_; }
  std::uint32_t topic_count() const { return topics_; }
  std::uint32_t network_count() const { return networks_; }
  std::uint32_t vocab_size() const { return vocab_; }

  // n_u^(k): posts of user u assigned topic k.
  std::int32_t& user_topic(std::uint32_t u, std::uint32_t k) {
    return user_topic_[u * topics_ + k];
  }
  std::int32_t user_topic(std::uint32_t u, std::uint32_t k) const {
    return user_topic_[u * topics_ + k];
  }

  // n_{u,z}^(h): posts of u with topic z on network h.
  std::int32_t& user_topic_network(std::uint32_t u, std::uint32_t z, std::uint32_t h) {
    return user_topic_network_[(u * topics_ + z) * networks_ + h];
  }
  std::int32_t user_topic_network(std::uint32_t u, std::uint32_t z, std::uint32_t h) const {
    return user_topic_network_[(u * topics_ + z) * networks_ + h];
  }

  // n_k^(w): tokens with x=0 under (topic k, word w).
  std::int32_t& global_topic_word(std::uint32_t k, std::uint32_t w) {
    return global_topic_word_[k * vocab_ + w];
  }
  std::int32_t global_topic_word(std::uint32_t k, std::uint32_t w) const {
    return global_topic_word_[k * vocab_ + w];
  }

  // n_{h,k}^(w): tokens with x=1 under (network h, topic k, word w).
  std::int32_t& local_topic_word(std::uint32_t h, std::uint32_t k, std::uint32_t w) {
    return local_topic_word_[(h * topics_ + k) * vocab_ + w];
  }
  std::int32_t local_topic_word(std::uint32_t h, std::uint32_t k, std::uint32_t w) const {
    return local_topic_word_[(h * topics_ + k) * vocab_ + w];
  }

  // n_B^(w): tokens with x=2 and word w.
  std::int32_t& background_word(std::uint32_t w) { return background_word_[w]; }
  std::int32_t background_word(std::uint32_t w) const { return background_word_[w]; }

  // n_{h,k}^(x) for x in {0,1}.
  std::int32_t& switch_global_local(std::uint32_t h, std::uint32_t k, std::uint32_t x) {
    return switch_global_local_[(h * topics_ + k) * 2 + x];
  }
  std::int32_t switch_global_local(std::uint32_t h, std::uint32_t k, std::uint32_t x) const {
    return switch_global_local_[(h * topics_ + k) * 2 + x];
  }

  // Index 0 holds n_B^(0+1) (topical tokens), index 1 holds n_B^(2).
  std::int32_t& switch_background(std::uint32_t i) { return switch_background_[i]; }
  std::int32_t switch_background(std::uint32_t i) const { return switch_background_[i]; }

  // Contiguous row views used by estimators and the sampler's hot loops.
  const std::int32_t* user_topic_row(std::uint32_t u) const {
    return user_topic_.data() + std::size_t(u) * topics_;
  }
  const std::int32_t* user_topic_network_row(std::uint32_t u, std::uint32_t z) const {
    return user_topic_network_.data() + (std::size_t(u) * topics_ + z) * networks_;
  }
  const std::int32_t* global_topic_word_row(std::uint32_t k) const {
    return global_topic_word_.data() + std::size_t(k) * vocab_;
  }
  const std::int32_t* local_topic_word_row(std::uint32_t h, std::uint32_t k) const {
    return local_topic_word_.data() + (std::size_t(h) * topics_ + k) * vocab_;
  }
  const std::int32_t* background_word_row() const { return background_word_.data(); }

  // Derived word totals; equal to the switch tallies by the table invariants.
  std::int64_t global_word_total(std::uint32_t k) const {
    std::int64_t total = 0;
    for (std::uint32_t h = 0; h < networks_; ++h) total += switch_global_local(h, k, 0);
    return total;
  }
  std::int64_t local_word_total(std::uint32_t h, std::uint32_t k) const {
    return switch_global_local(h, k, 1);
  }
  std::int64_t background_word_total() const { return switch_background_[1]; }
  std::int64_t token_total() const {
    return static_cast<std::int64_t>(switch_background_[0]) + switch_background_[1];
  }

  bool operator==(const CountTables&) const = default;

 private:
  std::uint32_t users_ = 0, topics_ = 0, networks_ = 0, vocab_ = 0;
  std::vector<std::int32_t> user_topic_;           // U x K
  std::vector<std::int32_t> user_topic_network_;   // U x K x S
  std::vector<std::int32_t> global_topic_word_;    // K x V
  std::vector<std::int32_t> local_topic_word_;     // S x K x V
  std::vector<std::int32_t> background_word_;      // V
  std::vector<std::int32_t> switch_global_local_;  // S x K x 2
  std::array<std::int32_t, 2> switch_background_{0, 0};
};

// Point estimates of every output distribution. Immutable snapshot once
// built; safe to share across threads.
struct PosteriorEstimates {
  std::uint32_t users = 0, topics = 0, networks = 0, vocab = 0;
  std::vector<double> theta;     // U x K
  std::vector<double> phi_p;     // K x V
  std::vector<double> phi_s;     // S x K x V
  std::vector<double> phi_b;     // V
  std::vector<double> rho;       // U x K x S
  std::vector<double> sigma_zs;  // S x K x 2 (global, local)
  std::vector<double> sigma_b;   // 2 (topical, background)

  std::span<const double> theta_row(std::uint32_t u) const {
    return std::span<const double>(theta.data() + std::size_t(u) * topics, topics);
  }
  std::span<const double> phi_p_row(std::uint32_t k) const {
    return std::span<const double>(phi_p.data() + std::size_t(k) * vocab, vocab);
  }
  std::span<const double> phi_s_row(std::uint32_t s, std::uint32_t k) const {
    return std::span<const double>(phi_s.data() + (std::size_t(s) * topics + k) * vocab, vocab);
  }
  std::span<const double> rho_row(std::uint32_t u, std::uint32_t k) const {
    return std::span<const double>(rho.data() + (std::size_t(u) * topics + k) * networks,
                                   networks);
  }
  double sigma_zs_at(std::uint32_t s, std::uint32_t k, std::uint32_t x) const {
    return sigma_zs[(std::size_t(s) * topics + k) * 2 + x];
  }
};

// Uniform-random initialization of topics and switches; the returned tables
// exactly reflect the assignments. Deterministic under seed.
std::pair<LatentAssignments, CountTables> init_state(const Corpus& corpus,
                                                     const Hyperparameters& hp,
                                                     std::uint64_t seed);

// Rebuild all count tables from scratch by iterating every post and token.
// This is the consistency oracle for the sampler's cached tables.
CountTables recount(const Corpus& corpus, std::uint32_t topic_count,
                    const LatentAssignments& assignments);

// Posterior-mean estimators for every distribution.
PosteriorEstimates estimate_parameters(const Hyperparameters& hp, const CountTables& counts);

}  // namespace msnt
