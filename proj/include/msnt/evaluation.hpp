#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msnt/model.hpp"

namespace msnt {

// Jensen-Shannon divergence with base-2 logarithms, so the result lies in
// [0, 1]. Zero entries contribute zero. Throws on length mismatch.
double jsd(std::span<const double> p, std::span<const double> q);

struct MetricOptions {
  // Multiply each topic's post term by rho(u, k, h). Off by default so
  // numbers stay comparable with the LDA baseline.
  bool include_network_choice = false;
};

// Held-out perplexity: exp(-sum_d log P(w_d|M) / sum_d N_d) where each post's
// probability is a topic mixture of per-word source mixtures. Throws when the
// heldout corpus has no in-vocabulary tokens.
double perplexity(const PosteriorEstimates& estimates, const Corpus& heldout,
                  const MetricOptions& options = {});

// Sum of per-post log probabilities (natural log); 0 for an empty corpus.
double likelihood(const PosteriorEstimates& estimates, const Corpus& heldout,
                  const MetricOptions& options = {});

struct PmiOptions {
  std::uint32_t top_words = 50;
  // When set, rank words by that network's local distribution instead of the
  // global one.
  std::optional<std::uint32_t> network;
};

// Mean pairwise PMI of each topic's top-T words, averaged over topics with
// the 1/(T(T-1)) normalizer applied to the i<j sum. Occurrence unit is the
// post: p(w) is the fraction of reference posts containing w. Top words that
// never occur in the reference are dropped and the pair normalizer shrinks
// accordingly.
double pmi_score(const PosteriorEstimates& estimates, const Corpus& reference,
                 const PmiOptions& options = {});

enum class TopicScope { kGlobal, kBackground, kLocal };

// Top-n (word id, probability) pairs of one distribution, descending by
// probability with ties broken by word id. network is used only for kLocal.
std::vector<std::pair<std::int32_t, double>> top_words(const PosteriorEstimates& estimates,
                                                       TopicScope scope, std::uint32_t topic,
                                                       std::uint32_t n,
                                                       std::uint32_t network = 0);

struct TopicReport {
  struct UserTopic {
    std::uint32_t topic = 0;
    double theta = 0.0;
    std::vector<double> rho;  // network preference under this topic
  };
  std::uint32_t top_n = 10;
  std::vector<std::vector<std::pair<std::int32_t, double>>> global;  // K ranked lists
  std::vector<std::pair<std::int32_t, double>> background;
  std::vector<std::vector<std::vector<std::pair<std::int32_t, double>>>> local;  // S x K
  std::vector<std::vector<UserTopic>> users;  // per user, top topics by theta
};

TopicReport topic_report(const PosteriorEstimates& estimates, std::uint32_t top_n_words,
                         std::uint32_t top_n_user_topics);

void write_topic_report_records(const TopicReport& report,
                                const std::vector<std::string>& words,
                                const std::vector<std::string>& networks,
                                const std::vector<std::string>& users, std::ostream& out);
void write_topic_report_text(const TopicReport& report, const std::vector<std::string>& words,
                             const std::vector<std::string>& networks, std::ostream& out);

// All local-local and local-global topic similarities plus 20-bin histograms
// (bin width 0.05 over [0,1]).
struct JsdReport {
  std::uint32_t topics = 0;
  std::uint32_t networks = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> network_pairs;  // (s, s'), s < s'
  std::vector<double> pairwise_local;     // K x network_pairs.size()
  std::vector<double> local_vs_global;    // S x K
  std::array<std::uint32_t, 20> pairwise_histogram{};
  std::array<std::uint32_t, 20> local_vs_global_histogram{};
  double mean_pairwise = 0.0;
  double mean_local_vs_global = 0.0;
};

JsdReport jsd_report(const PosteriorEstimates& estimates);
void write_jsd_report(const JsdReport& report, const std::vector<std::string>& networks,
                      std::ostream& out);

// Greedy minimum-JSD pairing between two K x V distribution sets: repeatedly
// match the globally closest unmatched (estimated, truth) pair.
struct TopicMatch {
  std::vector<std::uint32_t> estimated_for_truth;  // truth topic -> estimated topic
  std::vector<double> pair_jsd;                    // indexed by truth topic
  double mean_jsd = 0.0;
};

TopicMatch match_topics(std::span<const double> estimated, std::span<const double> truth,
                        std::uint32_t topics, std::uint32_t vocab);

}  // namespace msnt
