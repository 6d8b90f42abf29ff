#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace msnt {

// Single error type for the whole engine; the CLI turns it into a one-line
// machine-parsable message on stderr.
struct MsntError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense word <-> id bijection. Ids are 0..V-1 with no gaps; the word list is
// kept sorted so ids are stable regardless of record order in the input.
struct Vocabulary {
  std::vector<std::string> words;
  std::unordered_map<std::string, std::int32_t> index;

  std::size_t size() const { return words.size(); }
  // Returns -1 when the word is not in the vocabulary.
  std::int32_t id_of(const std::string& word) const {
    auto it = index.find(word);
    return it == index.end() ? -1 : it->second;
  }
  static Vocabulary from_words(std::vector<std::string> sorted_unique_words);
};

// One post, addressed into the corpus-wide flat token array.
struct Post {
  std::string id;
  std::uint32_t user = 0;
  std::uint32_t network = 0;
  std::uint32_t token_begin = 0;
  std::uint32_t token_count = 0;
};

// Construction-time post: id plus already-resolved word ids.
struct RawPost {
  std::string id;
  std::vector<std::int32_t> tokens;
};

// Immutable multi-network corpus. Posts are stored in canonical order:
// user-major, then network, then insertion order, which is also the sweep
// order of the sampler. Safe to read from many threads.
class Corpus {
 public:
  Corpus() = default;
  // cell_posts is indexed [user * network_count + network]. Throws on
  // invariant violations (token id out of range, duplicate post id within a
  // cell, empty post).
  Corpus(std::vector<std::string> users, std::vector<std::string> networks,
         Vocabulary vocabulary, std::vector<std::vector<RawPost>> cell_posts);

  std::size_t user_count() const { return users_.size(); }
  std::size_t network_count() const { return networks_.size(); }
  std::size_t post_count() const { return posts_.size(); }
  std::size_t token_count() const { return tokens_.size(); }

  const std::vector<std::string>& users() const { return users_; }
  const std::vector<std::string>& networks() const { return networks_; }
  const Vocabulary& vocabulary() const { return vocab_; }

  std::span<const Post> posts() const { return posts_; }
  const Post& post(std::size_t i) const { return posts_[i]; }

  // Posts of one (user, network) cell; contiguous in canonical order.
  std::span<const Post> cell_posts(std::size_t user, std::size_t network) const {
    std::size_t c = user * networks_.size() + network;
    return std::span<const Post>(posts_.data() + cell_begin_[c],
                                 cell_begin_[c + 1] - cell_begin_[c]);
  }

  std::span<const std::int32_t> tokens(const Post& p) const {
    return std::span<const std::int32_t>(tokens_.data() + p.token_begin, p.token_count);
  }

  // Posts per user (all networks); users are contiguous in canonical order.
  std::size_t user_post_count(std::size_t user) const {
    std::size_t s = networks_.size();
    return cell_begin_[(user + 1) * s] - cell_begin_[user * s];
  }

 private:
  std::vector<std::string> users_;
  std::vector<std::string> networks_;
  Vocabulary vocab_;
  std::vector<Post> posts_;
  std::vector<std::int32_t> tokens_;
  std::vector<std::uint32_t> cell_begin_;  // U*S+1 offsets into posts_
};

struct IngestOptions {
  std::size_t min_word_count = 5;
  std::optional<std::filesystem::path> stopword_path;
};

// Load a corpus from a line-delimited file of records with exactly the keys
// user, network, post_id, tokens. Builds the vocabulary (stopwords and words
// with corpus frequency below min_word_count removed), drops posts emptied by
// filtering and users left with no posts. Network and user lists are sorted.
Corpus ingest_corpus(const std::filesystem::path& path, const IngestOptions& options = {});

// Load a corpus against an existing model vocabulary and user/network lists:
// tokens absent from the vocabulary are dropped, posts emptied by that are
// dropped, and a user or network unknown to the model is an error.
Corpus align_corpus(const std::filesystem::path& path,
                    const std::vector<std::string>& users,
                    const std::vector<std::string>& networks,
                    const Vocabulary& vocabulary);

// Write records in the ingest schema, canonical order.
void export_corpus(const Corpus& corpus, std::ostream& out);
void export_corpus(const Corpus& corpus, const std::filesystem::path& path);

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);

// Move roughly `fraction` of each (user, network) cell's posts (rounded down,
// so every nonempty cell keeps at least one training post) into a heldout
// corpus. Both halves share the vocabulary and the full user/network lists so
// indices stay aligned with model estimates. Deterministic under seed.
std::pair<Corpus, Corpus> split_holdout(const Corpus& corpus, double fraction,
                                        std::uint64_t seed);

}  // namespace msnt
