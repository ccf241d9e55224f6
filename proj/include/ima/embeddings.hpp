#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ima/nn.hpp"

namespace ima::embed {

using TokenSequence = std::vector<std::string>;

/// Lowercases, splits on whitespace and strips trailing . , ? ! from tokens.
TokenSequence tokenize(std::string_view text);

inline constexpr int kDefaultDimension = 100;
inline constexpr double kOovBound = 0.05;

/// Frozen pretrained word vectors with a deterministic out-of-vocabulary policy.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(int dimension = kDefaultDimension, std::uint64_t oov_seed = 0);

  int dimension() const { return dimension_; }
  std::uint64_t oov_seed() const { return oov_seed_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(const std::string& token) const { return vectors_.contains(token); }
  std::size_t duplicate_count() const { return duplicates_; }

  /// Replaces any existing vector for the token (counted as a duplicate).
  void insert(const std::string& token, nn::Vector vector);

  /// Stored vector, or the OOV vector: components uniform in [-0.05, 0.05]
  /// from SplitMix64 seeded by (oov_seed, fnv1a(token)).
  nn::Vector lookup(const std::string& token) const;

 private:
  int dimension_;
  std::uint64_t oov_seed_;
  std::size_t duplicates_ = 0;
  std::unordered_map<std::string, nn::Vector> vectors_;
};

/// Reads "token v1 ... v_dim" lines (single spaces, LF). Duplicate tokens:
/// last one wins. Throws IO_ERROR or DIMENSION_MISMATCH (with line number).
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               int dimension = kDefaultDimension, std::uint64_t oov_seed = 0);

/// Row i is the vector of tokens[i]: an L x dimension matrix.
nn::Matrix embed(const EmbeddingTable& table, const TokenSequence& tokens);

/// Path of the bundled fixture covering the generator vocabulary.
std::filesystem::path fixture_path();

/// Dense token ids plus a dimension x V matrix of their vectors; lets a whole
/// dataset share one copy of each word vector.
class TokenIndex {
 public:
  explicit TokenIndex(const EmbeddingTable& table);

  int id(const std::string& token);
  std::vector<int> ids(const TokenSequence& tokens);
  const nn::Matrix& vectors() const { return vectors_; }
  int dimension() const { return table_.dimension(); }

 private:
  const EmbeddingTable& table_;
  std::unordered_map<std::string, int> ids_;
  nn::Matrix vectors_;
  Eigen::Index used_ = 0;
};

}  // namespace ima::embed
