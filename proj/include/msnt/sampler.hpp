#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "msnt/model.hpp"
#include "msnt/rng.hpp"

namespace msnt {

enum class EstimateMode {
  kFinalState,       // estimates from the last sweep's counts
  kSnapshotAverage,  // element-wise mean over post-burn-in snapshots
};

struct TrainConfig {
  std::uint32_t max_iters = 500;
  std::uint32_t burn_in = 300;
  EstimateMode estimate_mode = EstimateMode::kFinalState;
  std::uint32_t snapshot_count = 10;    // snapshot-average mode only
  std::uint32_t snapshot_spacing = 10;  // sweeps between snapshots
  std::uint32_t log_every = 50;
  std::uint32_t chains = 1;
  std::uint64_t seed = 12345;

  void validate() const;
};

// Collapsed Gibbs chain over one corpus. A sampler owns its mutable state
// (assignments + cached count tables) and must be driven by a single thread;
// run several samplers for chain-level parallelism.
//
// The unit move functions (remove/place token/post) and the conditional
// weight functions are exposed so tests can check the conditionals against
// recount-based oracles at any reachable state. Identical draw sequences
// produce identical results; the chain itself is sequential by construction.
class GibbsSampler {
 public:
  GibbsSampler(const Corpus& corpus, const Hyperparameters& hp, std::uint64_t seed);
  // Resume from existing assignments (e.g. a checkpoint); counts are rebuilt.
  GibbsSampler(const Corpus& corpus, const Hyperparameters& hp, LatentAssignments assignments,
               std::uint64_t seed);

  // One full sweep in corpus canonical order (users, their networks, their
  // posts): every token's switch is resampled first, then the post's topic.
  void sweep();

  // Warm-up variant used by the first training iterations: switches are
  // resampled between global and background only (local assignments stay
  // frozen at their initialization), then the post topic. Freezing the
  // local channel keeps a third of every topic's tokens in the shared
  // global table while topics form, so the two networks crystallize the
  // same topics instead of fragmenting into per-network labels.
  void warmup_sweep();

  const Corpus& corpus() const { return *corpus_; }
  const Hyperparameters& hyperparameters() const { return hp_; }
  const LatentAssignments& assignments() const { return assignments_; }
  const CountTables& counts() const { return counts_; }
  Rng& rng() { return rng_; }

  PosteriorEstimates estimates() const { return estimate_parameters(hp_, counts_); }

  // Remove / place one token's switch contribution. Conditional weights for
  // a unit are only valid while that unit is removed.
  void remove_token(std::size_t post_index, std::uint32_t i);
  void place_token(std::size_t post_index, std::uint32_t i, std::uint8_t x);
  // Remove / place one post's topic contribution (its topic event, its
  // network-choice event, and its non-background tokens' word counts).
  void remove_post(std::size_t post_index);
  void place_post(std::size_t post_index, std::int32_t z);

  // Unnormalized switch conditionals over {global, local, background} for a
  // removed token, in plain arithmetic (three bounded ratios).
  std::array<double, 3> switch_weights(std::size_t post_index, std::uint32_t i) const;

  // Log-space topic conditional for a removed post; out must hold K entries.
  void topic_log_weights(std::size_t post_index, std::span<double> out) const;
  // exp(log weight - max log weight); never under/overflows regardless of
  // post length.
  std::vector<double> topic_weights(std::size_t post_index) const;

  // Fraction of tokens currently assigned x = 0 / 1 / 2.
  std::array<double, 3> switch_fractions() const;

  // Blocked Gibbs pass over word channels. Tokens of one (word, topic,
  // network) cell are exchangeable, so the number that sit in the local
  // (or background) channel can be resampled exactly from its closed-form
  // collapsed marginal: remove the block, draw the split size over all
  // possible splits (binomial coefficient included), place a uniformly
  // chosen subset. Single-site switch updates cannot cross the barrier
  // between the "shared word", "per-network word" and "background word"
  // explanations once one table has absorbed the counts; this pass jumps
  // straight between those modes and, being Gibbs, leaves the stationary
  // distribution untouched. train() runs one pass per sweep.
  void channel_resample_pass();

  // Log weights (up to one constant) over j = 0..block_size for "j of the
  // block's tokens are local, the rest global", with the whole block
  // removed from the counts beforehand. Exposed for oracle tests.
  std::vector<double> local_split_log_weights(std::uint32_t topic, std::uint32_t word,
                                              std::uint32_t network,
                                              std::uint32_t block_size) const;
  // Same for "j background, rest global".
  std::vector<double> background_split_log_weights(std::uint32_t topic, std::uint32_t word,
                                                   std::uint32_t network,
                                                   std::uint32_t block_size) const;

  // Log posterior-ratio of the cross-network involution for (topic, word):
  // every global token becomes local on its own network and every local
  // token becomes global, in all networks at once. The per-network blocks
  // cannot make this pooled jump for high-count words because the global
  // table only pays off once both networks commit. from_global / from_local
  // hold the word's current per-network x=0 / x=1 counts under this topic.
  double channel_swap_log_ratio(std::uint32_t topic, std::uint32_t word,
                                std::span<const std::int32_t> from_global,
                                std::span<const std::int32_t> from_local) const;

  // Metropolis relabel pass: for every network, propose re-labelling that
  // network's post topics by a permutation (all pair swaps plus all
  // 3-cycles). A network's local tables and switch cells move wholesale
  // under the permutation (their posterior terms cancel), so the ratio
  // involves just the user-topic counts, the network-choice counts and the
  // affected global word tables. Per-network Gibbs recovers topics cleanly
  // but nothing in the single-site moves can rotate one network's topic
  // labels onto the other's; this move can.
  void network_relabel_pass();
  // permutation[k] is the new label for posts currently on topic k; it must
  // be a bijection on [0, K).
  double network_relabel_log_ratio(std::uint32_t network,
                                   std::span<const std::uint32_t> permutation) const;

 private:
  void resample_post(std::size_t post_index);
  void build_word_index();

  const Corpus* corpus_;
  Hyperparameters hp_;
  LatentAssignments assignments_;
  CountTables counts_;
  Rng rng_;
  std::vector<double> log_weight_buf_;
  std::vector<double> weight_buf_;
  // word -> (post index, token position) occurrences, built on first use.
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> word_index_;
};

struct TrainDiagnostics {
  struct LogPoint {
    std::uint32_t iteration = 0;
    double train_perplexity = 0.0;
    std::array<double, 3> switch_fractions{0.0, 0.0, 0.0};
  };
  std::vector<LogPoint> points;           // iteration 1, every log_every, last
  double final_train_likelihood = 0.0;    // of the produced estimates
  std::uint64_t chain_seed = 0;           // seed of the winning chain
};

struct TrainResult {
  PosteriorEstimates estimates;
  LatentAssignments assignments;
  TrainDiagnostics diagnostics;
};

// Run config.chains independent chains with seeds seed..seed+chains-1 (in
// parallel when chains > 1) and keep the chain whose estimates have the best
// training-set likelihood; ties go to the lowest seed. Each iteration is one
// sweep followed by one channel_swap_pass.
TrainResult train(const Corpus& corpus, const Hyperparameters& hp, const TrainConfig& config);

}  // namespace msnt
