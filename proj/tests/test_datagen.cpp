#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "ima/datagen.hpp"
#include "ima/error.hpp"
#include "ima/logic.hpp"

using namespace ima;
using namespace ima::datagen;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("ima_test_" + name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Vocabularies, SizesAndContents) {
  const Vocabularies& v = vocabularies();
  EXPECT_EQ(v.animal_names.size(), 14u);
  EXPECT_EQ(v.people_names.size(), 9u);
  EXPECT_EQ(v.animal_relations.size(), 8u);
  EXPECT_EQ(v.people_relations.size(), 2u);
  EXPECT_EQ(v.animal_attributes.size(), 20u);
  EXPECT_EQ(v.people_attributes.size(), 20u);
  EXPECT_EQ(v.animal_names.front(), "the bald eagle");
  EXPECT_EQ(v.people_names.front(), "Anne");
  EXPECT_EQ(v.people_attributes.back(), "young");
}

TEST(Spec, Validation) {
  GenerationSpec spec = GenerationSpec::uniform(Category::kPeople, false, {2}, 2, 2, 2, 0);
  EXPECT_NO_THROW(validate(spec));
  spec.depths = {};
  EXPECT_THROW(validate(spec), Error);
  spec.depths = {1};
  EXPECT_THROW(validate(spec), Error);
  spec = GenerationSpec::uniform(Category::kPeople, false, {2}, 3, 2, 2, 0);
  EXPECT_THROW(validate(spec), Error);
}

TEST(Spec, FullSizeCounts) {
  const GenerationSpec spec = GenerationSpec::full_size(Category::kAnimal, false, 0);
  EXPECT_EQ(spec.count(Split::kTrain, 2), 89952u);
  EXPECT_EQ(spec.count(Split::kTrain, 3), 90016u);
  EXPECT_EQ(spec.count(Split::kTrain, 4), 90010u);
  EXPECT_EQ(spec.count(Split::kTrain, 5), 90022u);
}

TEST(Generate, ZeroCountsGiveEmptySplits) {
  const Dataset d = generate_dataset(GenerationSpec::uniform(Category::kPeople, false, {2, 3}, 0, 0, 0, 0));
  ASSERT_EQ(d.size(), 3u);
  for (const auto& [name, split] : d) EXPECT_TRUE(split.examples.empty());
}

class GenerateGrid : public ::testing::TestWithParam<std::tuple<Category, bool>> {};

TEST_P(GenerateGrid, OracleClosureBalanceAndShape) {
  const auto [category, negation] = GetParam();
  const GenerationSpec spec =
      GenerationSpec::uniform(category, negation, {2, 3, 4, 5}, 200, 0, 0, 7);
  const DatasetSplit split = generate_split(spec, Split::kTrain);
  ASSERT_EQ(split.examples.size(), 800u);

  const VerifyResult r = verify_split(split);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.checked, 800u);

  std::map<int, std::pair<int, int>> balance;  // depth -> (true, false)
  for (const Example& e : split.examples) {
    (e.label ? balance[e.depth].first : balance[e.depth].second)++;
    const auto kb = logic::parse_context(e.context);
    EXPECT_EQ(kb.entity_universe.size(), 4u) << e.id;
    if (negation) {
      bool rule_with_not = false;
      for (const logic::Rule& rule : kb.items) {
        if (rule.is_fact()) continue;
        rule_with_not = rule_with_not || !rule.consequent.positive;
        for (const auto& a : rule.antecedents) rule_with_not = rule_with_not || !a.positive;
      }
      EXPECT_TRUE(rule_with_not) << e.id;
    }
  }
  for (const auto& [depth, counts] : balance) {
    EXPECT_EQ(counts.first, 100) << depth;
    EXPECT_EQ(counts.second, 100) << depth;
  }
}

INSTANTIATE_TEST_SUITE_P(AllVariants, GenerateGrid,
                         ::testing::Combine(::testing::Values(Category::kPeople, Category::kAnimal),
                                            ::testing::Bool()));

TEST(Generate, TrueAffirmativeQuestionsHaveExactDepth) {
  const DatasetSplit split = generate_split(
      GenerationSpec::uniform(Category::kAnimal, true, {2, 3, 4, 5}, 100, 0, 0, 3), Split::kTrain);
  for (const Example& e : split.examples) {
    const auto v = logic::answer(logic::parse_context(e.context), logic::parse_question(e.question));
    EXPECT_EQ(v.label, e.label);
    if (e.label && logic::parse_question(e.question).positive) EXPECT_EQ(v.depth, e.depth);
  }
}

TEST(Generate, DistractorSafety) {
  const DatasetSplit split = generate_split(
      GenerationSpec::uniform(Category::kPeople, true, {2, 3, 4, 5}, 20, 0, 0, 5), Split::kTrain);
  for (std::size_t i = 0; i + 1 < split.examples.size(); i += 2) {
    const Example& t = split.examples[i];
    const Example& f = split.examples[i + 1];
    ASSERT_EQ(t.context, f.context);
    // The chain's terminal atom: asked affirmatively by the true question or
    // negated by the false one.
    const logic::Atom qt = logic::parse_question(t.question);
    const logic::Atom terminal = qt.positive ? qt : logic::parse_question(f.question).affirmative();
    for (std::size_t k = 0; k < t.context.size(); ++k) {
      std::vector<std::string> reduced = t.context;
      reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(k));
      const auto kb = logic::parse_context(reduced);
      if (!kb.entity_universe.contains(qt.subject)) continue;
      const auto derived = logic::forward_chain(kb);
      const bool same = logic::answer(kb, derived, qt).label == t.label &&
                        logic::answer(kb, derived, logic::parse_question(f.question)).label == f.label;
      const auto it = derived.find(terminal);
      const bool chain_intact = it != derived.end() && it->second == t.depth;
      // Only sentences on the proof of the terminal atom may change a label.
      if (chain_intact) EXPECT_TRUE(same) << t.id << " sentence " << k << ": " << t.context[k];
    }
  }
}

TEST(Generate, DeterministicAndByteStable) {
  const GenerationSpec spec = GenerationSpec::uniform(Category::kAnimal, true, {3}, 50, 10, 10, 99);
  const auto a = temp_file("det_a.jsonl");
  const auto b = temp_file("det_b.jsonl");
  write_records(generate_split(spec, Split::kDev), a);
  write_records(generate_split(spec, Split::kDev), b);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(a).empty());
}

TEST(Generate, SplitsDisjointById) {
  const Dataset d = generate_dataset(GenerationSpec::uniform(Category::kPeople, false, {2}, 20, 20, 20, 1));
  std::set<std::string> ids;
  std::size_t total = 0;
  for (const auto& [name, split] : d) {
    for (const Example& e : split.examples) ids.insert(e.id);
    total += split.examples.size();
  }
  EXPECT_EQ(ids.size(), total);
  EXPECT_NE(d.at(Split::kTrain).examples[0].context, d.at(Split::kTest).examples[0].context);
}

TEST(Generate, VocabExhausted) {
  const GenerationSpec spec = GenerationSpec::uniform(Category::kPeople, false, {5}, 2, 0, 0, 0);
  Inventory tiny = inventory_for(Category::kPeople);
  tiny.attributes.resize(5);
  SplitMix64 rng(0);
  try {
    generate_example(spec, 5, rng, tiny);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVocabExhausted);
  }
}

TEST(Records, RoundTrip) {
  const DatasetSplit split = generate_split(
      GenerationSpec::uniform(Category::kAnimal, true, {2, 4}, 10, 10, 10, 4), Split::kTest);
  const auto path = temp_file("roundtrip.jsonl");
  write_records(split, path);
  EXPECT_EQ(read_records(path, Split::kTest), split);
}

TEST(Records, FieldOrder) {
  const Example e{"id-1", {"Anne is big."}, "Anne is big.", true, 2};
  EXPECT_EQ(encode_record(e),
            R"({"id":"id-1","context":["Anne is big."],"question":"Anne is big.","label":1,"depth":2})");
  EXPECT_EQ(decode_record(encode_record(e), 1), e);
}

TEST(Records, MalformedCarriesLineNumber) {
  const auto path = temp_file("malformed.jsonl");
  {
    std::ofstream out(path, std::ios::binary);
    out << encode_record(Example{"a", {"Anne is big."}, "Anne is big.", true, 2}) << "\n";
    out << R"({"id":"b","context":["x"],"question":"q","label":1})" << "\n";
  }
  try {
    read_records(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedRecord);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(decode_record("not json", 1), Error);
  EXPECT_THROW(decode_record(R"({"id":"b","context":["x"],"question":"q","label":1,"depth":2,"extra":0})", 1),
               Error);
}

TEST(Records, MissingFileIsIoError) {
  try {
    read_records("/nonexistent/ima.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
}
