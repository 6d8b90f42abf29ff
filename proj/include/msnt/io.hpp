#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "msnt/model.hpp"

namespace msnt {

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t file_digest(const std::filesystem::path& path);
// Hash of the word list joined with newlines; ties model artifacts to the
// exact vocabulary they were trained with.
std::uint64_t vocabulary_hash(const Vocabulary& vocab);
std::string hex64(std::uint64_t value);

// A trained model on disk: every estimated distribution as one record per
// probability, plus the name tables needed to map external corpora onto the
// model's indices. Floats are written with 17 significant digits so a
// save/load round trip is exact.
struct ModelArtifact {
  PosteriorEstimates estimates;
  std::vector<std::string> users;
  std::vector<std::string> networks;
  std::vector<std::string> words;
  std::uint64_t vocab_hash = 0;
  std::map<std::string, std::string> extras;

  Vocabulary vocabulary() const;
};

void save_model(const std::filesystem::path& path, const PosteriorEstimates& estimates,
                const std::vector<std::string>& users,
                const std::vector<std::string>& networks,
                const std::vector<std::string>& words,
                const std::map<std::string, std::string>& extras = {});
void save_model(const std::filesystem::path& path, const PosteriorEstimates& estimates,
                const Corpus& corpus, const std::map<std::string, std::string>& extras = {});
ModelArtifact load_model(const std::filesystem::path& path);

// Chain state: hyperparameters plus the latent assignments, keyed to a
// corpus by shape and vocabulary hash. Assignments round-trip bit-exactly.
struct Checkpoint {
  Hyperparameters hp;
  LatentAssignments assignments;
  std::uint32_t users = 0, networks = 0, vocab = 0;
  std::uint64_t vocab_hash = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Hyperparameters& hp,
                     const LatentAssignments& assignments, const Corpus& corpus);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Flat key=value run description; identical manifests imply byte-identical
// estimate exports.
class Manifest {
 public:
  void set(std::string key, std::string value);
  void set(std::string key, std::uint64_t value);
  void set(std::string key, double value);
  void set_input(const std::string& name, const std::filesystem::path& path);

  std::string to_string() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace msnt
