#include "msnt/generator.hpp"

#include <cmath>
#include <string>

#include "msnt/rng.hpp"

namespace msnt {

namespace {

std::vector<std::string> padded_names(const char* prefix, std::uint32_t count) {
  std::size_t width = std::to_string(count > 0 ? count - 1 : 0).size();
  std::vector<std::string> names;
  names.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string digits = std::to_string(i);
    names.push_back(prefix + std::string(width - digits.size(), '0') + digits);
  }
  return names;
}

}  // namespace

void GenConfig::validate() const {
  if (users < 1 || networks < 1 || topics < 1 || vocab < 1 || posts_per_user_network < 1 ||
      tokens_per_post < 1) {
    throw MsntError("generator config: all counts must be >= 1");
  }
  auto check_share = [](const std::optional<double>& share, const char* name) {
    if (share && !(*share >= 0.0 && *share <= 1.0)) {
      throw MsntError(std::string("generator config: ") + name + " must be in [0, 1]");
    }
  };
  check_share(fixed_global_share, "fixed_global_share");
  check_share(fixed_background_share, "fixed_background_share");
}

GroundTruth sample_ground_truth(const GenConfig& config, const Hyperparameters& hp) {
  config.validate();
  hp.validate();
  if (hp.topic_count != config.topics) {
    throw MsntError("generator: hyperparameter topic count differs from config");
  }
  Rng rng(config.seed);
  const std::uint32_t u_count = config.users;
  const std::uint32_t k_count = config.topics;
  const std::uint32_t s_count = config.networks;
  const std::uint32_t v_count = config.vocab;

  GroundTruth truth;
  truth.hp = hp;
  truth.rho_used = config.mode == GenMode::kFaithful;
  PosteriorEstimates& p = truth.params;
  p.users = u_count;
  p.topics = k_count;
  p.networks = s_count;
  p.vocab = v_count;
  p.theta.resize(std::size_t(u_count) * k_count);
  p.phi_p.resize(std::size_t(k_count) * v_count);
  p.phi_s.resize(std::size_t(s_count) * k_count * v_count);
  p.phi_b.resize(v_count);
  p.rho.resize(std::size_t(u_count) * k_count * s_count);
  p.sigma_zs.resize(std::size_t(s_count) * k_count * 2);
  p.sigma_b.resize(2);

  rng.dirichlet(std::span<double>(p.phi_b), hp.beta_b);
  {
    // sigma_b ~ Dir(tau_b) over (topical, background).
    double a = rng.gamma(hp.tau_b.topical);
    double b = rng.gamma(hp.tau_b.background);
    if (a < 1e-300) a = 1e-300;
    if (b < 1e-300) b = 1e-300;
    p.sigma_b[0] = a / (a + b);
    p.sigma_b[1] = b / (a + b);
  }
  for (std::uint32_t k = 0; k < k_count; ++k) {
    rng.dirichlet(std::span<double>(p.phi_p.data() + std::size_t(k) * v_count, v_count),
                  hp.beta_p);
    for (std::uint32_t s = 0; s < s_count; ++s) {
      rng.dirichlet(
          std::span<double>(p.phi_s.data() + (std::size_t(s) * k_count + k) * v_count, v_count),
          hp.beta_s);
      double g = rng.gamma(hp.tau_zs.global);
      double l = rng.gamma(hp.tau_zs.local);
      if (g < 1e-300) g = 1e-300;
      if (l < 1e-300) l = 1e-300;
      p.sigma_zs[(std::size_t(s) * k_count + k) * 2 + 0] = g / (g + l);
      p.sigma_zs[(std::size_t(s) * k_count + k) * 2 + 1] = l / (g + l);
    }
  }
  for (std::uint32_t u = 0; u < u_count; ++u) {
    for (std::uint32_t k = 0; k < k_count; ++k) {
      rng.dirichlet(
          std::span<double>(p.rho.data() + (std::size_t(u) * k_count + k) * s_count, s_count),
          hp.lambda);
    }
  }
  for (std::uint32_t u = 0; u < u_count; ++u) {
    rng.dirichlet(std::span<double>(p.theta.data() + std::size_t(u) * k_count, k_count),
                  hp.alpha);
  }

  if (config.fixed_global_share) {
    for (std::uint32_t s = 0; s < s_count; ++s) {
      for (std::uint32_t k = 0; k < k_count; ++k) {
        p.sigma_zs[(std::size_t(s) * k_count + k) * 2 + 0] = *config.fixed_global_share;
        p.sigma_zs[(std::size_t(s) * k_count + k) * 2 + 1] = 1.0 - *config.fixed_global_share;
      }
    }
  }
  if (config.fixed_background_share) {
    p.sigma_b[0] = 1.0 - *config.fixed_background_share;
    p.sigma_b[1] = *config.fixed_background_share;
  }
  return truth;
}

GeneratedCorpus generate_corpus(const GroundTruth& truth, const GenConfig& config) {
  config.validate();
  const PosteriorEstimates& p = truth.params;
  if (p.users != config.users || p.topics != config.topics || p.networks != config.networks ||
      p.vocab != config.vocab) {
    throw MsntError("generator: ground truth shapes differ from config");
  }
  // Independent stream from the ground-truth draw so regenerating with the
  // same truth is reproducible on its own.
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::string> users = padded_names("u", config.users);
  std::vector<std::string> networks = padded_names("n", config.networks);
  Vocabulary vocab = Vocabulary::from_words(padded_names("w", config.vocab));

  const std::uint32_t s_count = config.networks;
  const std::uint32_t k_count = config.topics;
  std::vector<std::vector<RawPost>> cells(std::size_t(config.users) * s_count);
  std::vector<std::vector<std::int32_t>> cell_topics(cells.size());
  std::vector<std::vector<std::vector<std::uint8_t>>> cell_switches(cells.size());

  auto draw_length = [&]() -> std::uint32_t {
    if (!config.geometric_length) return config.tokens_per_post;
    // 1 + Geometric(1/mean) has mean tokens_per_post and support >= 1.
    const double prob = 1.0 / static_cast<double>(config.tokens_per_post);
    std::uint32_t length = 1;
    while (rng.uniform01() >= prob && length < 100000) ++length;
    return length;
  };

  for (std::uint32_t u = 0; u < config.users; ++u) {
    auto theta = std::span<const double>(p.theta.data() + std::size_t(u) * k_count, k_count);
    const std::uint32_t posts_for_user = config.posts_per_user_network * s_count;
    for (std::uint32_t i = 0; i < posts_for_user; ++i) {
      const auto z = static_cast<std::int32_t>(rng.categorical(theta));
      std::uint32_t s;
      if (config.mode == GenMode::kBalanced) {
        s = i / config.posts_per_user_network;
      } else {
        auto rho =
            std::span<const double>(p.rho.data() + (std::size_t(u) * k_count + z) * s_count,
                                    s_count);
        s = static_cast<std::uint32_t>(rng.categorical(rho));
      }
      const std::uint32_t length = draw_length();
      std::vector<std::int32_t> tokens(length);
      std::vector<std::uint8_t> switches(length);
      const double* phi_p_row = p.phi_p.data() + std::size_t(z) * p.vocab;
      const double* phi_s_row = p.phi_s.data() + (std::size_t(s) * k_count + z) * p.vocab;
      const double sigma_global = p.sigma_zs[(std::size_t(s) * k_count + z) * 2 + 0];
      for (std::uint32_t t = 0; t < length; ++t) {
        if (rng.uniform01() < p.sigma_b[1]) {
          switches[t] = kSwitchBackground;
          tokens[t] = static_cast<std::int32_t>(rng.categorical(p.phi_b));
        } else if (rng.uniform01() < sigma_global) {
          switches[t] = kSwitchGlobal;
          tokens[t] = static_cast<std::int32_t>(
              rng.categorical(std::span<const double>(phi_p_row, p.vocab)));
        } else {
          switches[t] = kSwitchLocal;
          tokens[t] = static_cast<std::int32_t>(
              rng.categorical(std::span<const double>(phi_s_row, p.vocab)));
        }
      }
      const std::size_t cell = std::size_t(u) * s_count + s;
      RawPost post;
      post.id = users[u] + "-" + networks[s] + "-p" + std::to_string(cells[cell].size());
      post.tokens = std::move(tokens);
      cells[cell].push_back(std::move(post));
      cell_topics[cell].push_back(z);
      cell_switches[cell].push_back(std::move(switches));
    }
  }

  GeneratedCorpus out{Corpus(std::move(users), std::move(networks), std::move(vocab),
                             std::move(cells)),
                      LatentAssignments{}};
  // Corpus canonical order is cell order, so assignments flatten in the same
  // sequence the cells were filled.
  out.assignments.post_topic.reserve(out.corpus.post_count());
  out.assignments.token_switch.reserve(out.corpus.token_count());
  for (std::size_t cell = 0; cell < cell_topics.size(); ++cell) {
    for (std::size_t i = 0; i < cell_topics[cell].size(); ++i) {
      out.assignments.post_topic.push_back(cell_topics[cell][i]);
      for (std::uint8_t x : cell_switches[cell][i]) out.assignments.token_switch.push_back(x);
    }
  }
  return out;
}

}  // namespace msnt
