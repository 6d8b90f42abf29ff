#include "msnt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "msnt/rng.hpp"
#include "json.hpp"

namespace msnt {

namespace {

struct Record {
  std::string user;
  std::string network;
  std::string post_id;
  std::vector<std::string> tokens;
};

Record parse_record(const std::string& line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw MsntError("corpus: line " + std::to_string(line_no) + ": " + e.what());
  }
  auto fail = [&](const std::string& what) -> MsntError {
    return MsntError("corpus: line " + std::to_string(line_no) + ": " + what);
  };
  if (!j.is_object()) throw fail("record is not an object");
  if (j.size() != 4 || !j.contains("user") || !j.contains("network") ||
      !j.contains("post_id") || !j.contains("tokens")) {
    throw fail("record must have exactly the keys user, network, post_id, tokens");
  }
  if (!j["user"].is_string() || !j["network"].is_string() || !j["post_id"].is_string() ||
      !j["tokens"].is_array()) {
    throw fail("bad field type");
  }
  Record r;
  r.user = j["user"].get<std::string>();
  r.network = j["network"].get<std::string>();
  r.post_id = j["post_id"].get<std::string>();
  for (const auto& t : j["tokens"]) {
    if (!t.is_string()) throw fail("tokens must be strings");
    r.tokens.push_back(t.get<std::string>());
  }
  return r;
}

std::vector<Record> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MsntError("corpus: cannot open " + path.string());
  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    records.push_back(parse_record(line, line_no));
  }
  return records;
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

Vocabulary Vocabulary::from_words(std::vector<std::string> sorted_unique_words) {
  Vocabulary vocab;
  vocab.words = std::move(sorted_unique_words);
  vocab.index.reserve(vocab.words.size());
  for (std::size_t i = 0; i < vocab.words.size(); ++i) {
    vocab.index.emplace(vocab.words[i], static_cast<std::int32_t>(i));
  }
  return vocab;
}

Corpus::Corpus(std::vector<std::string> users, std::vector<std::string> networks,
               Vocabulary vocabulary, std::vector<std::vector<RawPost>> cell_posts)
    : users_(std::move(users)), networks_(std::move(networks)), vocab_(std::move(vocabulary)) {
  const std::size_t u_count = users_.size();
  const std::size_t s_count = networks_.size();
  if (cell_posts.size() != u_count * s_count) {
    throw MsntError("corpus: cell grid does not match user/network counts");
  }
  const auto v = static_cast<std::int32_t>(vocab_.size());
  cell_begin_.assign(u_count * s_count + 1, 0);
  std::size_t total_posts = 0;
  std::size_t total_tokens = 0;
  for (const auto& cell : cell_posts) {
    total_posts += cell.size();
    for (const auto& p : cell) total_tokens += p.tokens.size();
  }
  posts_.reserve(total_posts);
  tokens_.reserve(total_tokens);
  for (std::size_t u = 0; u < u_count; ++u) {
    for (std::size_t s = 0; s < s_count; ++s) {
      std::size_t c = u * s_count + s;
      cell_begin_[c] = static_cast<std::uint32_t>(posts_.size());
      std::unordered_set<std::string> seen_ids;
      for (auto& rp : cell_posts[c]) {
        if (rp.tokens.empty()) {
          throw MsntError("corpus: post " + rp.id + " has no tokens");
        }
        if (!seen_ids.insert(rp.id).second) {
          throw MsntError("corpus: duplicate post_id " + rp.id + " for user " + users_[u] +
                          " on network " + networks_[s]);
        }
        Post p;
        p.id = std::move(rp.id);
        p.user = static_cast<std::uint32_t>(u);
        p.network = static_cast<std::uint32_t>(s);
        p.token_begin = static_cast<std::uint32_t>(tokens_.size());
        p.token_count = static_cast<std::uint32_t>(rp.tokens.size());
        for (std::int32_t w : rp.tokens) {
          if (w < 0 || w >= v) {
            throw MsntError("corpus: post " + p.id + " has token id out of range");
          }
          tokens_.push_back(w);
        }
        posts_.push_back(std::move(p));
      }
    }
  }
  cell_begin_[u_count * s_count] = static_cast<std::uint32_t>(posts_.size());
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MsntError("stopwords: cannot open " + path.string());
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.insert(line);
  }
  return words;
}

Corpus ingest_corpus(const std::filesystem::path& path, const IngestOptions& options) {
  if (options.min_word_count < 1) throw MsntError("ingest: min_word_count must be >= 1");
  std::vector<Record> records = read_records(path);

  std::unordered_set<std::string> stopwords;
  if (options.stopword_path) stopwords = load_stopwords(*options.stopword_path);

  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& r : records) {
    for (const auto& t : r.tokens) ++freq[t];
  }
  std::vector<std::string> kept;
  for (const auto& [word, count] : freq) {
    if (count >= options.min_word_count && !stopwords.contains(word)) kept.push_back(word);
  }
  std::sort(kept.begin(), kept.end());
  Vocabulary vocab = Vocabulary::from_words(std::move(kept));

  // Resolve tokens, dropping filtered words and posts emptied by filtering.
  struct Survivor {
    const Record* record;
    std::vector<std::int32_t> tokens;
  };
  std::vector<Survivor> survivors;
  std::vector<std::string> user_names;
  std::vector<std::string> network_names;
  for (const auto& r : records) {
    std::vector<std::int32_t> ids;
    ids.reserve(r.tokens.size());
    for (const auto& t : r.tokens) {
      std::int32_t id = vocab.id_of(t);
      if (id >= 0) ids.push_back(id);
    }
    if (ids.empty()) continue;
    user_names.push_back(r.user);
    network_names.push_back(r.network);
    survivors.push_back(Survivor{&r, std::move(ids)});
  }
  if (survivors.empty()) throw MsntError("ingest: corpus is empty after filtering");

  std::vector<std::string> users = sorted_unique(std::move(user_names));
  std::vector<std::string> networks = sorted_unique(std::move(network_names));
  std::unordered_map<std::string, std::size_t> user_index;
  std::unordered_map<std::string, std::size_t> network_index;
  for (std::size_t i = 0; i < users.size(); ++i) user_index[users[i]] = i;
  for (std::size_t i = 0; i < networks.size(); ++i) network_index[networks[i]] = i;

  std::vector<std::vector<RawPost>> cells(users.size() * networks.size());
  for (auto& s : survivors) {
    std::size_t u = user_index[s.record->user];
    std::size_t n = network_index[s.record->network];
    cells[u * networks.size() + n].push_back(RawPost{s.record->post_id, std::move(s.tokens)});
  }
  return Corpus(std::move(users), std::move(networks), std::move(vocab), std::move(cells));
}

Corpus align_corpus(const std::filesystem::path& path,
                    const std::vector<std::string>& users,
                    const std::vector<std::string>& networks,
                    const Vocabulary& vocabulary) {
  std::vector<Record> records = read_records(path);
  std::unordered_map<std::string, std::size_t> user_index;
  std::unordered_map<std::string, std::size_t> network_index;
  for (std::size_t i = 0; i < users.size(); ++i) user_index[users[i]] = i;
  for (std::size_t i = 0; i < networks.size(); ++i) network_index[networks[i]] = i;

  std::vector<std::vector<RawPost>> cells(users.size() * networks.size());
  bool any = false;
  for (const auto& r : records) {
    auto uit = user_index.find(r.user);
    if (uit == user_index.end()) throw MsntError("align: unknown user " + r.user);
    auto nit = network_index.find(r.network);
    if (nit == network_index.end()) throw MsntError("align: unknown network " + r.network);
    std::vector<std::int32_t> ids;
    for (const auto& t : r.tokens) {
      std::int32_t id = vocabulary.id_of(t);
      if (id >= 0) ids.push_back(id);  // out-of-vocabulary tokens are dropped
    }
    if (ids.empty()) continue;
    any = true;
    cells[uit->second * networks.size() + nit->second].push_back(
        RawPost{r.post_id, std::move(ids)});
  }
  if (!any) throw MsntError("align: no in-vocabulary posts in " + path.string());
  Vocabulary vocab_copy = vocabulary;
  return Corpus(users, networks, std::move(vocab_copy), std::move(cells));
}

void export_corpus(const Corpus& corpus, std::ostream& out) {
  for (const Post& p : corpus.posts()) {
    nlohmann::json j;
    j["user"] = corpus.users()[p.user];
    j["network"] = corpus.networks()[p.network];
    j["post_id"] = p.id;
    auto tokens = nlohmann::json::array();
    for (std::int32_t w : corpus.tokens(p)) tokens.push_back(corpus.vocabulary().words[w]);
    j["tokens"] = std::move(tokens);
    out << j.dump() << '\n';
  }
}

void export_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw MsntError("export: cannot open " + path.string());
  export_corpus(corpus, out);
}

std::pair<Corpus, Corpus> split_holdout(const Corpus& corpus, double fraction,
                                        std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw MsntError("split: fraction must be in (0, 1)");
  }
  Rng rng(seed);
  const std::size_t u_count = corpus.user_count();
  const std::size_t s_count = corpus.network_count();
  std::vector<std::vector<RawPost>> train_cells(u_count * s_count);
  std::vector<std::vector<RawPost>> held_cells(u_count * s_count);
  for (std::size_t u = 0; u < u_count; ++u) {
    for (std::size_t s = 0; s < s_count; ++s) {
      auto posts = corpus.cell_posts(u, s);
      std::size_t n = posts.size();
      if (n == 0) continue;
      // floor(fraction * n) <= n - 1 for fraction < 1, so every nonempty
      // cell keeps at least one training post.
      std::size_t held = static_cast<std::size_t>(fraction * static_cast<double>(n));
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      for (std::size_t i = n; i > 1; --i) {
        std::size_t j = rng.uniform_int(static_cast<std::uint32_t>(i));
        std::swap(order[i - 1], order[j]);
      }
      std::vector<bool> to_heldout(n, false);
      for (std::size_t i = 0; i < held; ++i) to_heldout[order[i]] = true;
      for (std::size_t i = 0; i < n; ++i) {
        const Post& p = posts[i];
        auto span = corpus.tokens(p);
        RawPost rp{p.id, std::vector<std::int32_t>(span.begin(), span.end())};
        auto& dest = to_heldout[i] ? held_cells : train_cells;
        dest[u * s_count + s].push_back(std::move(rp));
      }
    }
  }
  Vocabulary vocab_train = corpus.vocabulary();
  Vocabulary vocab_held = corpus.vocabulary();
  Corpus train(corpus.users(), corpus.networks(), std::move(vocab_train),
               std::move(train_cells));
  Corpus heldout(corpus.users(), corpus.networks(), std::move(vocab_held),
                 std::move(held_cells));
  return {std::move(train), std::move(heldout)};
}

}  // namespace msnt
