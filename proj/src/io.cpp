#include "msnt/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace msnt {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MsntError("digest: cannot open " + path.string());
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

std::uint64_t vocabulary_hash(const Vocabulary& vocab) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const auto& word : vocab.words) {
    for (unsigned char c : word) {
      hash ^= c;
      hash *= 0x100000001b3ULL;
    }
    hash ^= static_cast<unsigned char>('\n');
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void bad_file(const std::filesystem::path& path, const std::string& what) {
  throw MsntError(path.string() + ": " + what);
}

// Parses "<index...> <rest of line>" name rows, allowing spaces in names.
std::string name_tail(const std::string& line, std::size_t fields_before) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < fields_before; ++i) {
    pos = line.find(' ', pos);
    if (pos == std::string::npos) return {};
    ++pos;
  }
  return line.substr(pos);
}

}  // namespace

Vocabulary ModelArtifact::vocabulary() const {
  std::vector<std::string> copy = words;
  return Vocabulary::from_words(std::move(copy));
}

void save_model(const std::filesystem::path& path, const PosteriorEstimates& est,
                const std::vector<std::string>& users,
                const std::vector<std::string>& networks,
                const std::vector<std::string>& words,
                const std::map<std::string, std::string>& extras) {
  if (users.size() != est.users || networks.size() != est.networks ||
      words.size() != est.vocab) {
    throw MsntError("save_model: name tables do not match estimate shapes");
  }
  std::ofstream out(path);
  if (!out) throw MsntError("save_model: cannot open " + path.string());
  out << "msnt-estimates 1\n";
  out << "dims U " << est.users << " K " << est.topics << " S " << est.networks << " V "
      << est.vocab << '\n';
  std::vector<std::string> word_copy = words;
  out << "vocab_hash " << hex64(vocabulary_hash(Vocabulary::from_words(std::move(word_copy))))
      << '\n';
  for (const auto& [k, v] : extras) out << "extra " << k << ' ' << v << '\n';
  for (std::size_t i = 0; i < networks.size(); ++i) {
    out << "network " << i << ' ' << networks[i] << '\n';
  }
  for (std::size_t i = 0; i < users.size(); ++i) out << "user " << i << ' ' << users[i] << '\n';
  for (std::size_t i = 0; i < words.size(); ++i) out << "word " << i << ' ' << words[i] << '\n';

  for (std::uint32_t u = 0; u < est.users; ++u) {
    for (std::uint32_t k = 0; k < est.topics; ++k) {
      out << "theta " << u << ' ' << k << ' ' << fmt(est.theta[std::size_t(u) * est.topics + k])
          << '\n';
    }
  }
  for (std::uint32_t k = 0; k < est.topics; ++k) {
    for (std::uint32_t w = 0; w < est.vocab; ++w) {
      out << "phi_p " << k << ' ' << w << ' ' << fmt(est.phi_p[std::size_t(k) * est.vocab + w])
          << '\n';
    }
  }
  for (std::uint32_t s = 0; s < est.networks; ++s) {
    for (std::uint32_t k = 0; k < est.topics; ++k) {
      const double* row = est.phi_s.data() + (std::size_t(s) * est.topics + k) * est.vocab;
      for (std::uint32_t w = 0; w < est.vocab; ++w) {
        out << "phi_s " << s << ' ' << k << ' ' << w << ' ' << fmt(row[w]) << '\n';
      }
    }
  }
  for (std::uint32_t w = 0; w < est.vocab; ++w) {
    out << "phi_b " << w << ' ' << fmt(est.phi_b[w]) << '\n';
  }
  for (std::uint32_t u = 0; u < est.users; ++u) {
    for (std::uint32_t k = 0; k < est.topics; ++k) {
      const double* row = est.rho.data() + (std::size_t(u) * est.topics + k) * est.networks;
      for (std::uint32_t s = 0; s < est.networks; ++s) {
        out << "rho " << u << ' ' << k << ' ' << s << ' ' << fmt(row[s]) << '\n';
      }
    }
  }
  for (std::uint32_t s = 0; s < est.networks; ++s) {
    for (std::uint32_t k = 0; k < est.topics; ++k) {
      for (std::uint32_t x = 0; x < 2; ++x) {
        out << "sigma_zs " << s << ' ' << k << ' ' << x << ' '
            << fmt(est.sigma_zs[(std::size_t(s) * est.topics + k) * 2 + x]) << '\n';
      }
    }
  }
  out << "sigma_b 0 " << fmt(est.sigma_b[0]) << '\n';
  out << "sigma_b 1 " << fmt(est.sigma_b[1]) << '\n';
  if (!out) throw MsntError("save_model: write failed for " + path.string());
}

void save_model(const std::filesystem::path& path, const PosteriorEstimates& estimates,
                const Corpus& corpus, const std::map<std::string, std::string>& extras) {
  save_model(path, estimates, corpus.users(), corpus.networks(), corpus.vocabulary().words,
             extras);
}

ModelArtifact load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MsntError("load_model: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "msnt-estimates 1") {
    bad_file(path, "not an msnt-estimates file");
  }
  ModelArtifact artifact;
  PosteriorEstimates& est = artifact.estimates;
  bool have_dims = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "dims") {
      std::string labels[4];
      ss >> labels[0] >> est.users >> labels[1] >> est.topics >> labels[2] >> est.networks >>
          labels[3] >> est.vocab;
      if (!ss) bad_file(path, "bad dims line");
      est.theta.assign(std::size_t(est.users) * est.topics, 0.0);
      est.phi_p.assign(std::size_t(est.topics) * est.vocab, 0.0);
      est.phi_s.assign(std::size_t(est.networks) * est.topics * est.vocab, 0.0);
      est.phi_b.assign(est.vocab, 0.0);
      est.rho.assign(std::size_t(est.users) * est.topics * est.networks, 0.0);
      est.sigma_zs.assign(std::size_t(est.networks) * est.topics * 2, 0.0);
      est.sigma_b.assign(2, 0.0);
      artifact.users.resize(est.users);
      artifact.networks.resize(est.networks);
      artifact.words.resize(est.vocab);
      have_dims = true;
    } else if (tag == "vocab_hash") {
      std::string hex;
      ss >> hex;
      artifact.vocab_hash = std::stoull(hex, nullptr, 16);
    } else if (tag == "extra") {
      std::string key;
      ss >> key;
      artifact.extras[key] = name_tail(line, 2);
    } else if (!have_dims) {
      bad_file(path, "record before dims line");
    } else if (tag == "network" || tag == "user" || tag == "word") {
      std::size_t i = 0;
      ss >> i;
      if (!ss) bad_file(path, "bad name line");
      auto& table = tag == "network" ? artifact.networks
                    : tag == "user"  ? artifact.users
                                     : artifact.words;
      if (i >= table.size()) bad_file(path, tag + " index out of range");
      table[i] = name_tail(line, 2);
    } else if (tag == "theta") {
      std::size_t u, k;
      double p;
      ss >> u >> k >> p;
      if (!ss || u >= est.users || k >= est.topics) bad_file(path, "bad theta record");
      est.theta[u * est.topics + k] = p;
    } else if (tag == "phi_p") {
      std::size_t k, w;
      double p;
      ss >> k >> w >> p;
      if (!ss || k >= est.topics || w >= est.vocab) bad_file(path, "bad phi_p record");
      est.phi_p[k * est.vocab + w] = p;
    } else if (tag == "phi_s") {
      std::size_t s, k, w;
      double p;
      ss >> s >> k >> w >> p;
      if (!ss || s >= est.networks || k >= est.topics || w >= est.vocab) {
        bad_file(path, "bad phi_s record");
      }
      est.phi_s[(s * est.topics + k) * est.vocab + w] = p;
    } else if (tag == "phi_b") {
      std::size_t w;
      double p;
      ss >> w >> p;
      if (!ss || w >= est.vocab) bad_file(path, "bad phi_b record");
      est.phi_b[w] = p;
    } else if (tag == "rho") {
      std::size_t u, k, s;
      double p;
      ss >> u >> k >> s >> p;
      if (!ss || u >= est.users || k >= est.topics || s >= est.networks) {
        bad_file(path, "bad rho record");
      }
      est.rho[(u * est.topics + k) * est.networks + s] = p;
    } else if (tag == "sigma_zs") {
      std::size_t s, k, x;
      double p;
      ss >> s >> k >> x >> p;
      if (!ss || s >= est.networks || k >= est.topics || x >= 2) {
        bad_file(path, "bad sigma_zs record");
      }
      est.sigma_zs[(s * est.topics + k) * 2 + x] = p;
    } else if (tag == "sigma_b") {
      std::size_t x;
      double p;
      ss >> x >> p;
      if (!ss || x >= 2) bad_file(path, "bad sigma_b record");
      est.sigma_b[x] = p;
    } else {
      bad_file(path, "unknown record tag " + tag);
    }
  }
  if (!have_dims) bad_file(path, "missing dims line");
  return artifact;
}

void save_checkpoint(const std::filesystem::path& path, const Hyperparameters& hp,
                     const LatentAssignments& assignments, const Corpus& corpus) {
  if (assignments.post_topic.size() != corpus.post_count() ||
      assignments.token_switch.size() != corpus.token_count()) {
    throw MsntError("save_checkpoint: assignment shapes do not match corpus");
  }
  std::ofstream out(path);
  if (!out) throw MsntError("save_checkpoint: cannot open " + path.string());
  out << "msnt-checkpoint 1\n";
  out << "dims U " << corpus.user_count() << " K " << hp.topic_count << " S "
      << corpus.network_count() << " V " << corpus.vocabulary().size() << '\n';
  out << "counts posts " << assignments.post_topic.size() << " tokens "
      << assignments.token_switch.size() << '\n';
  out << "vocab_hash " << hex64(vocabulary_hash(corpus.vocabulary())) << '\n';
  out << "hp " << fmt(hp.alpha) << ' ' << fmt(hp.beta_p) << ' ' << fmt(hp.beta_s) << ' '
      << fmt(hp.beta_b) << ' ' << fmt(hp.lambda) << ' ' << fmt(hp.tau_zs.global) << ' '
      << fmt(hp.tau_zs.local) << ' ' << fmt(hp.tau_b.topical) << ' '
      << fmt(hp.tau_b.background) << '\n';
  out << "z";
  for (std::int32_t z : assignments.post_topic) out << ' ' << z;
  out << "\nx";
  for (std::uint8_t x : assignments.token_switch) out << ' ' << static_cast<int>(x);
  out << '\n';
  if (!out) throw MsntError("save_checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MsntError("load_checkpoint: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "msnt-checkpoint 1") {
    bad_file(path, "not an msnt-checkpoint file");
  }
  Checkpoint ckpt;
  std::size_t posts = 0, tokens = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "dims") {
      std::string labels[4];
      ss >> labels[0] >> ckpt.users >> labels[1] >> ckpt.hp.topic_count >> labels[2] >>
          ckpt.networks >> labels[3] >> ckpt.vocab;
      if (!ss) bad_file(path, "bad dims line");
    } else if (tag == "counts") {
      std::string labels[2];
      ss >> labels[0] >> posts >> labels[1] >> tokens;
      if (!ss) bad_file(path, "bad counts line");
    } else if (tag == "vocab_hash") {
      std::string hex;
      ss >> hex;
      ckpt.vocab_hash = std::stoull(hex, nullptr, 16);
    } else if (tag == "hp") {
      ss >> ckpt.hp.alpha >> ckpt.hp.beta_p >> ckpt.hp.beta_s >> ckpt.hp.beta_b >>
          ckpt.hp.lambda >> ckpt.hp.tau_zs.global >> ckpt.hp.tau_zs.local >>
          ckpt.hp.tau_b.topical >> ckpt.hp.tau_b.background;
      if (!ss) bad_file(path, "bad hp line");
    } else if (tag == "z") {
      ckpt.assignments.post_topic.reserve(posts);
      std::int32_t z;
      while (ss >> z) ckpt.assignments.post_topic.push_back(z);
    } else if (tag == "x") {
      ckpt.assignments.token_switch.reserve(tokens);
      int x;
      while (ss >> x) ckpt.assignments.token_switch.push_back(static_cast<std::uint8_t>(x));
    } else {
      bad_file(path, "unknown record tag " + tag);
    }
  }
  if (ckpt.assignments.post_topic.size() != posts ||
      ckpt.assignments.token_switch.size() != tokens) {
    bad_file(path, "assignment counts do not match header");
  }
  return ckpt;
}

void Manifest::set(std::string key, std::string value) {
  entries_[std::move(key)] = std::move(value);
}

void Manifest::set(std::string key, std::uint64_t value) {
  entries_[std::move(key)] = std::to_string(value);
}

void Manifest::set(std::string key, double value) { entries_[std::move(key)] = fmt(value); }

void Manifest::set_input(const std::string& name, const std::filesystem::path& path) {
  entries_["input." + name] = path.string();
  entries_["digest." + name] = hex64(file_digest(path));
}

std::string Manifest::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

void Manifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw MsntError("manifest: cannot open " + path.string());
  out << to_string();
}

}  // namespace msnt
