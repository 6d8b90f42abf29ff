#pragma once

#include <cstdint>
#include <optional>

#include "msnt/model.hpp"

namespace msnt {

enum class GenMode {
  // One fixed quota of posts per (user, network) cell; the network indicator
  // is enumerated, not drawn, so every local channel is populated. rho is
  // sampled but unused (flagged on the ground truth).
  kBalanced,
  // The full generative story: each post draws its network from rho given
  // its topic. Total posts per user stay posts_per_user_network * networks.
  kFaithful,
};

struct GenConfig {
  std::uint32_t users = 0;
  std::uint32_t networks = 0;
  std::uint32_t topics = 0;
  std::uint32_t vocab = 0;
  std::uint32_t posts_per_user_network = 0;
  std::uint32_t tokens_per_post = 0;
  bool geometric_length = false;  // draw lengths with mean tokens_per_post
  GenMode mode = GenMode::kBalanced;
  // Deterministic switch overrides for structured experiments: replace every
  // sampled sigma_zs with (share, 1-share) / sigma_b with (1-share, share).
  std::optional<double> fixed_global_share;
  std::optional<double> fixed_background_share;
  std::uint64_t seed = 12345;

  void validate() const;
};

struct GroundTruth {
  PosteriorEstimates params;
  Hyperparameters hp;
  bool rho_used = true;
};

// Draw every model distribution from its prior. Deterministic under
// config.seed.
GroundTruth sample_ground_truth(const GenConfig& config, const Hyperparameters& hp);

struct GeneratedCorpus {
  Corpus corpus;
  LatentAssignments assignments;
};

// Emit a corpus from the ground truth: per post a topic from theta (and, in
// faithful mode, a network from rho), per token a background/global/local
// switch and a word from the matching distribution. Word, user and network
// names are zero-padded so lexicographic order equals index order.
GeneratedCorpus generate_corpus(const GroundTruth& truth, const GenConfig& config);

}  // namespace msnt
