#include "msnt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace msnt {

double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw MsntError("jsd: distribution lengths differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) acc += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) acc += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return acc;
}

namespace {

struct LogLikelihoodTotal {
  double log_prob = 0.0;
  std::size_t tokens = 0;
};

LogLikelihoodTotal post_log_likelihoods(const PosteriorEstimates& est, const Corpus& heldout,
                                        const MetricOptions& options) {
  if (heldout.user_count() > est.users || heldout.network_count() > est.networks) {
    throw MsntError("metrics: heldout corpus does not match estimate shapes");
  }
  LogLikelihoodTotal total;
  std::vector<double> log_mix(est.topics);
  for (const Post& post : heldout.posts()) {
    auto tokens = heldout.tokens(post);
    const auto u = post.user;
    const auto h = post.network;
    for (std::uint32_t k = 0; k < est.topics; ++k) {
      double lp = std::log(est.theta[std::size_t(u) * est.topics + k]);
      if (options.include_network_choice) {
        lp += std::log(est.rho[(std::size_t(u) * est.topics + k) * est.networks + h]);
      }
      const double topical = est.sigma_b[0];
      const double background = est.sigma_b[1];
      const double sig_g = est.sigma_zs_at(h, k, 0);
      const double sig_l = est.sigma_zs_at(h, k, 1);
      const double* phi_p_row = est.phi_p.data() + std::size_t(k) * est.vocab;
      const double* phi_s_row = est.phi_s.data() + (std::size_t(h) * est.topics + k) * est.vocab;
      for (std::int32_t w : tokens) {
        const double word_prob = background * est.phi_b[w] +
                                 topical * (sig_g * phi_p_row[w] + sig_l * phi_s_row[w]);
        lp += std::log(word_prob);
      }
      log_mix[k] = lp;
    }
    const double max_lp = *std::max_element(log_mix.begin(), log_mix.end());
    double sum = 0.0;
    for (double lp : log_mix) sum += std::exp(lp - max_lp);
    total.log_prob += max_lp + std::log(sum);
    total.tokens += tokens.size();
  }
  return total;
}

}  // namespace

double perplexity(const PosteriorEstimates& estimates, const Corpus& heldout,
                  const MetricOptions& options) {
  LogLikelihoodTotal total = post_log_likelihoods(estimates, heldout, options);
  if (total.tokens == 0) throw MsntError("perplexity: heldout corpus has no tokens");
  return std::exp(-total.log_prob / static_cast<double>(total.tokens));
}

double likelihood(const PosteriorEstimates& estimates, const Corpus& heldout,
                  const MetricOptions& options) {
  return post_log_likelihoods(estimates, heldout, options).log_prob;
}

namespace {

std::vector<std::pair<std::int32_t, double>> rank_words(const double* probs, std::uint32_t vocab,
                                                        std::uint32_t n) {
  std::vector<std::pair<std::int32_t, double>> ranked(vocab);
  for (std::uint32_t w = 0; w < vocab; ++w) ranked[w] = {static_cast<std::int32_t>(w), probs[w]};
  const auto by_prob_then_id = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  const std::size_t keep = std::min<std::size_t>(n, vocab);
  std::partial_sort(ranked.begin(), ranked.begin() + keep, ranked.end(), by_prob_then_id);
  ranked.resize(keep);
  return ranked;
}

}  // namespace

std::vector<std::pair<std::int32_t, double>> top_words(const PosteriorEstimates& estimates,
                                                       TopicScope scope, std::uint32_t topic,
                                                       std::uint32_t n, std::uint32_t network) {
  switch (scope) {
    case TopicScope::kGlobal:
      if (topic >= estimates.topics) throw MsntError("top_words: topic out of range");
      return rank_words(estimates.phi_p.data() + std::size_t(topic) * estimates.vocab,
                        estimates.vocab, n);
    case TopicScope::kBackground:
      return rank_words(estimates.phi_b.data(), estimates.vocab, n);
    case TopicScope::kLocal:
      if (topic >= estimates.topics) throw MsntError("top_words: topic out of range");
      if (network >= estimates.networks) throw MsntError("top_words: network out of range");
      return rank_words(estimates.phi_s.data() +
                            (std::size_t(network) * estimates.topics + topic) * estimates.vocab,
                        estimates.vocab, n);
  }
  throw MsntError("top_words: invalid scope");
}

double pmi_score(const PosteriorEstimates& estimates, const Corpus& reference,
                 const PmiOptions& options) {
  if (options.top_words < 2) throw MsntError("pmi: need at least 2 top words");
  if (reference.post_count() == 0) throw MsntError("pmi: empty reference corpus");
  if (options.network && *options.network >= estimates.networks) {
    throw MsntError("pmi: network out of range");
  }
  const double post_count = static_cast<double>(reference.post_count());
  const double epsilon = 1e-12;

  // Document frequency of every word (posts containing it at least once).
  std::vector<std::int32_t> doc_freq(estimates.vocab, 0);
  std::vector<std::int32_t> last_seen(estimates.vocab, -1);
  {
    std::int32_t post_index = 0;
    for (const Post& post : reference.posts()) {
      for (std::int32_t w : reference.tokens(post)) {
        if (last_seen[w] != post_index) {
          last_seen[w] = post_index;
          ++doc_freq[w];
        }
      }
      ++post_index;
    }
  }

  double score_sum = 0.0;
  std::vector<std::int32_t> slot_of(estimates.vocab, -1);
  for (std::uint32_t k = 0; k < estimates.topics; ++k) {
    auto ranked = options.network
                      ? top_words(estimates, TopicScope::kLocal, k, options.top_words,
                                  *options.network)
                      : top_words(estimates, TopicScope::kGlobal, k, options.top_words);
    // Words absent from the reference cannot be scored; shrink the pair set.
    std::vector<std::int32_t> words;
    for (const auto& [w, prob] : ranked) {
      if (prob > 0.0 && doc_freq[w] > 0) words.push_back(w);
    }
    const std::size_t t = words.size();
    if (t < 2) continue;
    for (std::size_t i = 0; i < t; ++i) slot_of[words[i]] = static_cast<std::int32_t>(i);

    std::vector<std::int32_t> pair_count(t * t, 0);
    std::vector<std::int32_t> present;
    for (const Post& post : reference.posts()) {
      present.clear();
      for (std::int32_t w : reference.tokens(post)) {
        const std::int32_t slot = slot_of[w];
        if (slot >= 0 && std::find(present.begin(), present.end(), slot) == present.end()) {
          present.push_back(slot);
        }
      }
      for (std::size_t a = 0; a < present.size(); ++a) {
        for (std::size_t b = a + 1; b < present.size(); ++b) {
          const auto i = std::min(present[a], present[b]);
          const auto j = std::max(present[a], present[b]);
          ++pair_count[std::size_t(i) * t + j];
        }
      }
    }

    double topic_sum = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      const double p_i = doc_freq[words[i]] / post_count;
      for (std::size_t j = i + 1; j < t; ++j) {
        const double p_j = doc_freq[words[j]] / post_count;
        const double p_ij = pair_count[i * t + j] / post_count;
        topic_sum += std::log((p_ij + epsilon) / (p_i * p_j));
      }
    }
    score_sum += topic_sum / (static_cast<double>(t) * static_cast<double>(t - 1));
    for (std::int32_t w : words) slot_of[w] = -1;
  }
  return score_sum / static_cast<double>(estimates.topics);
}

TopicReport topic_report(const PosteriorEstimates& estimates, std::uint32_t top_n_words,
                         std::uint32_t top_n_user_topics) {
  TopicReport report;
  report.top_n = top_n_words;
  report.global.reserve(estimates.topics);
  for (std::uint32_t k = 0; k < estimates.topics; ++k) {
    report.global.push_back(top_words(estimates, TopicScope::kGlobal, k, top_n_words));
  }
  report.background = top_words(estimates, TopicScope::kBackground, 0, top_n_words);
  report.local.resize(estimates.networks);
  for (std::uint32_t s = 0; s < estimates.networks; ++s) {
    report.local[s].reserve(estimates.topics);
    for (std::uint32_t k = 0; k < estimates.topics; ++k) {
      report.local[s].push_back(top_words(estimates, TopicScope::kLocal, k, top_n_words, s));
    }
  }
  report.users.resize(estimates.users);
  for (std::uint32_t u = 0; u < estimates.users; ++u) {
    auto theta = estimates.theta_row(u);
    std::vector<std::uint32_t> order(estimates.topics);
    for (std::uint32_t k = 0; k < estimates.topics; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (theta[a] != theta[b]) return theta[a] > theta[b];
      return a < b;
    });
    const std::size_t keep = std::min<std::size_t>(top_n_user_topics, estimates.topics);
    for (std::size_t r = 0; r < keep; ++r) {
      TopicReport::UserTopic ut;
      ut.topic = order[r];
      ut.theta = theta[order[r]];
      auto rho = estimates.rho_row(u, order[r]);
      ut.rho.assign(rho.begin(), rho.end());
      report.users[u].push_back(std::move(ut));
    }
  }
  return report;
}

JsdReport jsd_report(const PosteriorEstimates& estimates) {
  JsdReport report;
  report.topics = estimates.topics;
  report.networks = estimates.networks;
  const auto bin_of = [](double v) {
    auto b = static_cast<std::size_t>(v / 0.05);
    return std::min<std::size_t>(b, 19);
  };
  for (std::uint32_t s = 0; s < estimates.networks; ++s) {
    for (std::uint32_t t = s + 1; t < estimates.networks; ++t) {
      report.network_pairs.emplace_back(s, t);
    }
  }
  double pair_sum = 0.0;
  for (std::uint32_t k = 0; k < estimates.topics; ++k) {
    for (const auto& [s, t] : report.network_pairs) {
      const double v = jsd(estimates.phi_s_row(s, k), estimates.phi_s_row(t, k));
      report.pairwise_local.push_back(v);
      ++report.pairwise_histogram[bin_of(v)];
      pair_sum += v;
    }
  }
  if (!report.pairwise_local.empty()) {
    report.mean_pairwise = pair_sum / static_cast<double>(report.pairwise_local.size());
  }
  double lg_sum = 0.0;
  report.local_vs_global.resize(std::size_t(estimates.networks) * estimates.topics);
  for (std::uint32_t s = 0; s < estimates.networks; ++s) {
    for (std::uint32_t k = 0; k < estimates.topics; ++k) {
      const double v = jsd(estimates.phi_s_row(s, k), estimates.phi_p_row(k));
      report.local_vs_global[std::size_t(s) * estimates.topics + k] = v;
      ++report.local_vs_global_histogram[bin_of(v)];
      lg_sum += v;
    }
  }
  if (!report.local_vs_global.empty()) {
    report.mean_local_vs_global =
        lg_sum / static_cast<double>(report.local_vs_global.size());
  }
  return report;
}

TopicMatch match_topics(std::span<const double> estimated, std::span<const double> truth,
                        std::uint32_t topics, std::uint32_t vocab) {
  if (estimated.size() != std::size_t(topics) * vocab ||
      truth.size() != std::size_t(topics) * vocab) {
    throw MsntError("match_topics: shape mismatch");
  }
  std::vector<double> cost(std::size_t(topics) * topics);
  for (std::uint32_t t = 0; t < topics; ++t) {
    for (std::uint32_t e = 0; e < topics; ++e) {
      cost[std::size_t(t) * topics + e] =
          jsd(truth.subspan(std::size_t(t) * vocab, vocab),
              estimated.subspan(std::size_t(e) * vocab, vocab));
    }
  }
  TopicMatch match;
  match.estimated_for_truth.assign(topics, 0);
  match.pair_jsd.assign(topics, 0.0);
  std::vector<bool> truth_used(topics, false), est_used(topics, false);
  for (std::uint32_t round = 0; round < topics; ++round) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_t = 0, best_e = 0;
    for (std::uint32_t t = 0; t < topics; ++t) {
      if (truth_used[t]) continue;
      for (std::uint32_t e = 0; e < topics; ++e) {
        if (est_used[e]) continue;
        const double c = cost[std::size_t(t) * topics + e];
        if (c < best) {
          best = c;
          best_t = t;
          best_e = e;
        }
      }
    }
    truth_used[best_t] = true;
    est_used[best_e] = true;
    match.estimated_for_truth[best_t] = best_e;
    match.pair_jsd[best_t] = best;
    match.mean_jsd += best;
  }
  match.mean_jsd /= static_cast<double>(topics);
  return match;
}

void write_topic_report_records(const TopicReport& report,
                                const std::vector<std::string>& words,
                                const std::vector<std::string>& networks,
                                const std::vector<std::string>& users, std::ostream& out) {
  for (std::size_t k = 0; k < report.global.size(); ++k) {
    std::size_t rank = 0;
    for (const auto& [w, p] : report.global[k]) {
      out << "global\t" << k << '\t' << rank++ << '\t' << words[w] << '\t' << p << '\n';
    }
  }
  {
    std::size_t rank = 0;
    for (const auto& [w, p] : report.background) {
      out << "background\t-\t" << rank++ << '\t' << words[w] << '\t' << p << '\n';
    }
  }
  for (std::size_t s = 0; s < report.local.size(); ++s) {
    for (std::size_t k = 0; k < report.local[s].size(); ++k) {
      std::size_t rank = 0;
      for (const auto& [w, p] : report.local[s][k]) {
        out << "local\t" << networks[s] << '\t' << k << '\t' << rank++ << '\t' << words[w]
            << '\t' << p << '\n';
      }
    }
  }
  for (std::size_t u = 0; u < report.users.size(); ++u) {
    for (const auto& ut : report.users[u]) {
      out << "user_topic\t" << users[u] << '\t' << ut.topic << '\t' << ut.theta;
      for (std::size_t s = 0; s < ut.rho.size(); ++s) {
        out << '\t' << networks[s] << ':' << ut.rho[s];
      }
      out << '\n';
    }
  }
}

void write_topic_report_text(const TopicReport& report, const std::vector<std::string>& words,
                             const std::vector<std::string>& networks, std::ostream& out) {
  for (std::size_t k = 0; k < report.global.size(); ++k) {
    out << "Topic " << k << '\n';
    out << "  global";
    for (std::size_t s = 0; s < networks.size(); ++s) out << " | local(" << networks[s] << ')';
    out << '\n';
    for (std::size_t r = 0; r < report.top_n; ++r) {
      out << "  ";
      out << (r < report.global[k].size() ? words[report.global[k][r].first] : "");
      for (std::size_t s = 0; s < networks.size(); ++s) {
        const auto& list = report.local[s][k];
        out << " | " << (r < list.size() ? words[list[r].first] : "");
      }
      out << '\n';
    }
  }
  out << "Background\n";
  for (const auto& [w, p] : report.background) out << "  " << words[w] << ' ' << p << '\n';
}

void write_jsd_report(const JsdReport& report, const std::vector<std::string>& networks,
                      std::ostream& out) {
  std::size_t idx = 0;
  for (std::uint32_t k = 0; k < report.topics; ++k) {
    for (const auto& [s, t] : report.network_pairs) {
      out << "pairwise_local\t" << k << '\t' << networks[s] << '\t' << networks[t] << '\t'
          << report.pairwise_local[idx++] << '\n';
    }
  }
  for (std::uint32_t s = 0; s < report.networks; ++s) {
    for (std::uint32_t k = 0; k < report.topics; ++k) {
      out << "local_vs_global\t" << networks[s] << '\t' << k << '\t'
          << report.local_vs_global[std::size_t(s) * report.topics + k] << '\n';
    }
  }
  for (std::size_t b = 0; b < report.pairwise_histogram.size(); ++b) {
    out << "pairwise_hist\t" << b * 0.05 << '\t' << (b + 1) * 0.05 << '\t'
        << report.pairwise_histogram[b] << '\n';
  }
  for (std::size_t b = 0; b < report.local_vs_global_histogram.size(); ++b) {
    out << "local_vs_global_hist\t" << b * 0.05 << '\t' << (b + 1) * 0.05 << '\t'
        << report.local_vs_global_histogram[b] << '\n';
  }
  out << "mean_pairwise\t" << report.mean_pairwise << '\n';
  out << "mean_local_vs_global\t" << report.mean_local_vs_global << '\n';
}

}  // namespace msnt
