#include "ima/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <cctype>
#include <fstream>
#include <sstream>

#include "ima/error.hpp"
#include "ima/rng.hpp"

namespace ima::embed {

TokenSequence tokenize(std::string_view text) {
  TokenSequence out;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) {
    while (!word.empty() && (word.back() == '.' || word.back() == ',' || word.back() == '?' ||
                             word.back() == '!'))
      word.pop_back();
    if (word.empty()) continue;
    for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(std::move(word));
  }
  return out;
}

EmbeddingTable::EmbeddingTable(int dimension, std::uint64_t oov_seed)
    : dimension_(dimension), oov_seed_(oov_seed) {
  if (dimension <= 0) throw Error(ErrorCode::kDimensionMismatch, "dimension must be positive");
}

void EmbeddingTable::insert(const std::string& token, nn::Vector vector) {
  if (vector.size() != dimension_)
    throw Error(ErrorCode::kDimensionMismatch,
                "'" + token + "' has " + std::to_string(vector.size()) + " components, expected " +
                    std::to_string(dimension_));
  if (!vector.allFinite()) throw Error(ErrorCode::kDimensionMismatch, "'" + token + "' is not finite");
  auto [it, inserted] = vectors_.insert_or_assign(token, std::move(vector));
  if (!inserted) ++duplicates_;
}

nn::Vector EmbeddingTable::lookup(const std::string& token) const {
  if (const auto it = vectors_.find(token); it != vectors_.end()) return it->second;
  SplitMix64 rng(derive_seed(oov_seed_, {fnv1a(token)}));
  nn::Vector v(dimension_);
  for (int i = 0; i < dimension_; ++i) v[i] = rng.uniform(-kOovBound, kOovBound);
  return v;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, int dimension,
                               std::uint64_t oov_seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  EmbeddingTable table(dimension, oov_seed);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto space = line.find(' ');
    const std::string token = line.substr(0, space);
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(dimension));
    const char* p = space == std::string::npos ? line.data() + line.size() : line.data() + space;
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      double v = 0;
      const auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || (next != end && *next != ' '))
        throw Error(ErrorCode::kDimensionMismatch,
                    path.string() + " line " + std::to_string(line_number) + ": bad number");
      values.push_back(v);
      p = next;
    }
    if (values.size() != static_cast<std::size_t>(dimension))
      throw Error(ErrorCode::kDimensionMismatch,
                  path.string() + " line " + std::to_string(line_number) + ": " +
                      std::to_string(values.size()) + " values, expected " +
                      std::to_string(dimension));
    table.insert(token, Eigen::Map<nn::Vector>(values.data(), dimension));
  }
  if (in.bad()) throw Error(ErrorCode::kIoError, "read failed for " + path.string());
  return table;
}

nn::Matrix embed(const EmbeddingTable& table, const TokenSequence& tokens) {
  nn::Matrix out(static_cast<Eigen::Index>(tokens.size()), table.dimension());
  for (std::size_t i = 0; i < tokens.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = table.lookup(tokens[i]).transpose();
  return out;
}

std::filesystem::path fixture_path() {
  return std::filesystem::path(IMA_DATA_DIR) / "glove.mini.100d.txt";
}

TokenIndex::TokenIndex(const EmbeddingTable& table)
    : table_(table), vectors_(table.dimension(), 64) {}

int TokenIndex::id(const std::string& token) {
  if (const auto it = ids_.find(token); it != ids_.end()) return it->second;
  if (used_ == vectors_.cols()) vectors_.conservativeResize(Eigen::NoChange, 2 * vectors_.cols());
  vectors_.col(used_) = table_.lookup(token);
  const int id = static_cast<int>(used_++);
  ids_.emplace(token, id);
  return id;
}

std::vector<int> TokenIndex::ids(const TokenSequence& tokens) {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

}  // namespace ima::embed
