#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "ima/datagen.hpp"
#include "ima/embeddings.hpp"
#include "ima/error.hpp"

using namespace ima;
using namespace ima::embed;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / ("ima_test_" + name);
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string line_of(const std::string& token, int n, double v) {
  std::string s = token;
  for (int i = 0; i < n; ++i) s += " " + std::to_string(v);
  return s + "\n";
}

}  // namespace

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("Anne is rough."), (TokenSequence{"anne", "is", "rough"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("The bald eagle sees the wolf."),
            (TokenSequence{"the", "bald", "eagle", "sees", "the", "wolf"}));
  EXPECT_EQ(tokenize("  Is Bob  big? Yes!"), (TokenSequence{"is", "bob", "big", "yes"}));
}

TEST(Load, TwoLines) {
  const auto p = write_temp("two.txt", line_of("anne", 100, 0.5) + line_of("bob", 100, -0.25));
  const EmbeddingTable t = load_embeddings(p);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.dimension(), 100);
  EXPECT_DOUBLE_EQ(t.lookup("bob")[99], -0.25);
}

TEST(Load, EmptyFileIsValid) {
  const EmbeddingTable t = load_embeddings(write_temp("empty.txt", ""));
  EXPECT_EQ(t.size(), 0u);
  EXPECT_EQ(t.lookup("anything").size(), 100);
}

TEST(Load, ShortLineReportsLineNumber) {
  const auto p = write_temp("short.txt", line_of("anne", 100, 0.1) + line_of("bob", 99, 0.1));
  try {
    load_embeddings(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Load, DuplicatesLastWins) {
  const auto p = write_temp("dup.txt", line_of("anne", 3, 1.0) + line_of("anne", 3, 2.0));
  const EmbeddingTable t = load_embeddings(p, 3);
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(t.duplicate_count(), 1u);
  EXPECT_DOUBLE_EQ(t.lookup("anne")[0], 2.0);
}

TEST(Load, MissingFile) {
  try {
    load_embeddings("/nonexistent/vectors.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
}

TEST(Embed, ShapesAndOov) {
  const EmbeddingTable t(100, 7);
  EXPECT_EQ(embed::embed(t, {"a", "b", "c", "d", "e"}).rows(), 5);
  EXPECT_EQ(embed::embed(t, {"a", "b", "c", "d", "e"}).cols(), 100);
  EXPECT_EQ(embed::embed(t, {}).rows(), 0);
  const auto m = embed::embed(t, {"zyzzyva", "zyzzyva", "quux"});
  EXPECT_EQ(m.row(0), m.row(1));
  EXPECT_NE(m.row(0), m.row(2));
  EXPECT_LE(m.cwiseAbs().maxCoeff(), kOovBound);
  EXPECT_NE(EmbeddingTable(100, 8).lookup("zyzzyva"), t.lookup("zyzzyva"));
}

TEST(Fixture, CoversGeneratorVocabulary) {
  const EmbeddingTable t = load_embeddings(fixture_path());
  EXPECT_GT(t.size(), 150u);
  for (const auto cat : {datagen::Category::kPeople, datagen::Category::kAnimal}) {
    for (bool neg : {false, true}) {
      const auto split = datagen::generate_split(
          datagen::GenerationSpec::uniform(cat, neg, {2, 3, 4, 5}, 20, 0, 0, 1), datagen::Split::kTrain);
      for (const Example& e : split.examples) {
        for (const auto& s : e.context)
          for (const auto& tok : tokenize(s)) EXPECT_TRUE(t.contains(tok)) << tok;
        for (const auto& tok : tokenize(e.question)) EXPECT_TRUE(t.contains(tok)) << tok;
      }
    }
  }
}

TEST(TokenIndex, SharesVectors) {
  const EmbeddingTable t = load_embeddings(fixture_path());
  TokenIndex index(t);
  const auto ids = index.ids(tokenize("Anne is big. Anne"));
  ASSERT_EQ(ids.size(), 4u);
  EXPECT_EQ(ids[0], ids[3]);
  EXPECT_EQ(index.vectors().col(ids[2]), t.lookup("big"));
}
