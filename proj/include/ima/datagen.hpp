#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ima/example.hpp"
#include "ima/rng.hpp"

namespace ima::datagen {

enum class Category { kAnimal, kPeople };

std::string_view to_string(Category c);
Category category_from_string(std::string_view text);

/// Entity, relation and attribute inventories of the PARARULE-Plus generator.
struct Vocabularies {
  std::vector<std::string> animal_names;
  std::vector<std::string> people_names;
  std::vector<std::string> animal_relations;
  std::vector<std::string> people_relations;
  std::vector<std::string> animal_attributes;
  std::vector<std::string> people_attributes;
};

const Vocabularies& vocabularies();

enum class Split { kTrain, kDev, kTest };
inline constexpr std::array<Split, 3> kAllSplits = {Split::kTrain, Split::kDev, Split::kTest};

std::string_view to_string(Split s);

struct GenerationSpec {
  Category category = Category::kPeople;
  bool negation_rules = false;
  std::vector<int> depths = {2, 3, 4, 5};
  // Example counts (true + false questions) per split and depth; must be even.
  std::map<Split, std::map<int, std::size_t>> counts;
  std::uint64_t seed = 0;

  std::size_t count(Split split, int depth) const;

  /// Same count in every (split, depth) cell.
  static GenerationSpec uniform(Category category, bool negation, std::vector<int> depths,
                                std::size_t train, std::size_t dev, std::size_t test,
                                std::uint64_t seed);
  /// Per-depth split sizes of the published PARARULE-Plus release.
  static GenerationSpec full_size(Category category, bool negation, std::uint64_t seed);
};

/// Validates depths (non-empty subset of 2..5) and even cell counts.
void validate(const GenerationSpec& spec);

/// Pools generate_example draws from; defaults to vocabularies() for the
/// category. Tests shrink these to exercise VOCAB_EXHAUSTED.
struct Inventory {
  std::vector<std::string> names;
  std::vector<std::string> verbs;  // entity-object relations ("likes", ...)
  std::vector<std::string> attributes;
};

Inventory inventory_for(Category category);

struct ExamplePair {
  Example true_example;
  Example false_example;
};

/// One context with a rule chain of exactly `depth` links and two questions
/// over it, one labelled true and one labelled false. Labels and depths are
/// re-derived by the forward-chaining oracle before returning.
ExamplePair generate_example(const GenerationSpec& spec, int depth, SplitMix64& rng);
ExamplePair generate_example(const GenerationSpec& spec, int depth, SplitMix64& rng,
                             const Inventory& inventory);

struct DatasetSplit {
  Split name = Split::kTrain;
  std::vector<Example> examples;

  bool operator==(const DatasetSplit&) const = default;
};

using Dataset = std::map<Split, DatasetSplit>;

Dataset generate_dataset(const GenerationSpec& spec);
DatasetSplit generate_split(const GenerationSpec& spec, Split split);

/// Line-delimited JSON records with fields id, context, question, label (0/1),
/// depth in that order, LF newlines.
void write_records(const DatasetSplit& split, const std::filesystem::path& path);
DatasetSplit read_records(const std::filesystem::path& path, Split name = Split::kTrain);

std::string encode_record(const Example& example);
Example decode_record(std::string_view line, std::size_t line_number);

/// Oracle check of one example: label always, depth when the queried atom is
/// derivable.
struct VerifyResult {
  std::size_t checked = 0;
  std::size_t label_mismatches = 0;
  std::size_t depth_checked = 0;
  std::size_t depth_mismatches = 0;
  std::size_t unparseable = 0;

  bool ok() const { return label_mismatches == 0 && depth_mismatches == 0 && unparseable == 0; }
  VerifyResult& operator+=(const VerifyResult& other);
};

VerifyResult verify_example(const Example& example);
VerifyResult verify_split(const DatasetSplit& split);

}  // namespace ima::datagen
