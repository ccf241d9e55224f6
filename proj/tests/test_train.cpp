#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "ima/error.hpp"
#include "ima/logic.hpp"
#include "ima/train.hpp"

using namespace ima;
using namespace ima::train;

namespace {

const embed::EmbeddingTable& fixture() {
  static const embed::EmbeddingTable table = embed::load_embeddings(embed::fixture_path());
  return table;
}

datagen::DatasetSplit people(std::vector<int> depths, std::size_t per_label, std::uint64_t seed,
                             datagen::Split which = datagen::Split::kTrain) {
  auto spec = datagen::GenerationSpec::uniform(datagen::Category::kPeople, false, std::move(depths),
                                               per_label, per_label, per_label, seed);
  return datagen::generate_split(spec, which);
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.hidden = 8;
  c.iterations = 2;
  c.epochs = 2;
  c.batch_size = 8;
  return c;
}

Predictor oracle() {
  return [](const Example& e) {
    return logic::answer(logic::parse_context(e.context), logic::parse_question(e.question)).label ? 1.0 : 0.0;
  };
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ima_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, Defaults) {
  const TrainConfig c;
  EXPECT_EQ(c.learning_rate, 1e-2);
  EXPECT_EQ(c.batch_size, 32);
  EXPECT_EQ(c.epochs, 30);
  EXPECT_EQ(c.iterations, 4);
  EXPECT_EQ(c.hidden, 64);
  EXPECT_EQ(c.variant, model::Variant::kGate);
  EXPECT_TRUE(c.shuffle_rules_each_batch);
  EXPECT_NO_THROW(c.validate());
  TrainConfig bad = c;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = c;
  bad.learning_rate = -1;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Train, ZeroEpochsLeavesInitialization) {
  TrainConfig c = tiny_config();
  c.epochs = 0;
  const auto split = people({2}, 4, 1);
  TrainResult r = train::train(c, fixture(), split, split);
  model::ModelParams init = model::ModelParams::initialize(c.model_config(100), c.seed);
  auto a = r.params.refs();
  auto b = init.refs();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_EQ(std::vector<double>(a[i].data, a[i].data + a[i].size),
              std::vector<double>(b[i].data, b[i].data + b[i].size));
  EXPECT_TRUE(r.history.epochs.empty());
}

TEST(Train, Deterministic) {
  const auto split = people({2}, 12, 2);
  const auto dev = people({2}, 4, 2, datagen::Split::kDev);
  TrainResult a = train::train(tiny_config(), fixture(), split, dev);
  TrainResult b = train::train(tiny_config(), fixture(), split, dev);
  EXPECT_EQ(a.history, b.history);
  auto ra = a.params.refs();
  auto rb = b.params.refs();
  for (std::size_t i = 0; i < ra.size(); ++i)
    EXPECT_EQ(std::vector<double>(ra[i].data, ra[i].data + ra[i].size),
              std::vector<double>(rb[i].data, rb[i].data + rb[i].size));
}

TEST(Train, ContextOrdersVaryAcrossEpochs) {
  TrainConfig c = tiny_config();
  c.epochs = 3;
  c.log_permutations = true;
  const auto split = people({3}, 10, 3);
  const TrainResult r = train::train(c, fixture(), split, split);
  ASSERT_EQ(r.history.permutation_hashes.size(), split.examples.size());
  std::size_t varied = 0;
  for (const auto& [id, hashes] : r.history.permutation_hashes) {
    ASSERT_EQ(hashes.size(), 3u);
    varied += std::set<std::uint64_t>(hashes.begin(), hashes.end()).size() > 1;
  }
  EXPECT_EQ(varied, split.examples.size());

  c.shuffle_rules_each_batch = false;
  const TrainResult fixed = train::train(c, fixture(), split, split);
  for (const auto& [id, hashes] : fixed.history.permutation_hashes)
    EXPECT_EQ(std::set<std::uint64_t>(hashes.begin(), hashes.end()).size(), 1u);
}

TEST(Train, LossDecreasesOnSmallSet) {
  TrainConfig c = tiny_config();
  c.hidden = 16;
  c.epochs = 5;
  const auto split = people({2}, 16, 4);
  const TrainResult r = train::train(c, fixture(), split, split);
  ASSERT_EQ(r.history.epochs.size(), 5u);
  for (std::size_t i = 1; i < 5; ++i)
    EXPECT_LT(r.history.epochs[i].mean_loss, r.history.epochs[i - 1].mean_loss) << i;
  EXPECT_GE(r.history.best_dev_epoch, 1);
}

TEST(Evaluate, ThreeOfFour) {
  datagen::DatasetSplit split;
  split.examples = {Example{"a", {"Anne is big."}, "Anne is big.", true, 2},
                    Example{"b", {"Anne is big."}, "Anne is red.", false, 2},
                    Example{"c", {"Anne is big."}, "Anne is big.", true, 3},
                    Example{"d", {"Anne is big."}, "Anne is red.", false, 3}};
  const Predictor always_yes = [](const Example&) { return 0.9; };
  const Predictor almost = [](const Example& e) { return e.id == "d" ? 0.7 : (e.label ? 0.6 : 0.2); };
  const Metrics m = evaluate(almost, split);
  EXPECT_EQ(m.overall, (Cell{3, 4}));
  EXPECT_DOUBLE_EQ(m.overall.accuracy(), 0.75);
  EXPECT_DOUBLE_EQ(m.by_depth.at(2).accuracy(), 1.0);
  EXPECT_DOUBLE_EQ(m.by_depth.at(3).accuracy(), 0.5);
  EXPECT_DOUBLE_EQ(evaluate(always_yes, split).overall.accuracy(), 0.5);
  EXPECT_DOUBLE_EQ(evaluate(oracle(), split).overall.accuracy(), 1.0);
  EXPECT_EQ(Cell{}.accuracy(), 0.0);
}

TEST(Evaluate, OracleOnGeneratedData) {
  const auto split = people({2, 3, 4, 5}, 20, 5);
  const Metrics m = evaluate(oracle(), split);
  EXPECT_EQ(m.overall.n_correct, split.examples.size());
  EXPECT_EQ(m.by_depth.size(), 4u);
}

TEST(Ood, OracleIsOrderBlind) {
  const auto split = people({2, 3}, 20, 6);
  const OodMetrics m = ood_eval(oracle(), split, 0);
  for (const auto& [depth, d] : m.delta) EXPECT_EQ(d, 0.0) << depth;
  EXPECT_TRUE(m.delta.contains(-1));
}

TEST(Ood, PositionSensitivePredictorDrops) {
  const auto split = people({2, 3}, 30, 7);
  std::map<std::vector<std::string>, std::map<std::string, bool>> memory;
  for (const Example& e : split.examples) memory[e.context][e.question] = e.label;
  // Only recognises the exact sentence order it has seen.
  const Predictor memorised = [&](const Example& e) {
    const auto it = memory.find(e.context);
    return it == memory.end() ? 0.0 : (it->second.at(e.question) ? 1.0 : 0.0);
  };
  const OodMetrics m = ood_eval(memorised, split, 0);
  EXPECT_DOUBLE_EQ(m.original.overall.accuracy(), 1.0);
  EXPECT_LT(m.delta.at(-1), -0.3);
  EXPECT_EQ(ood_seed(0, split.examples[0]), ood_seed(0, split.examples[0]));
  EXPECT_NE(ood_seed(0, split.examples[0]), ood_seed(1, split.examples[0]));
}

TEST(Report, RoundTripAndRows) {
  Report r;
  Metrics m;
  m.add(2, true);
  m.add(2, false);
  m.add(3, true);
  r.conditions = {{"ima-ga", m}, {"baseline", Metrics{}}};
  r.history.epochs = {{1, 0.69, 0.5}, {2, 0.1 + 0.2, 0.625}};
  r.history.best_dev_epoch = 2;
  const auto dir = temp_dir("report");
  emit_report(r, dir);
  const Report back = read_report(dir);
  EXPECT_EQ(back.conditions, r.conditions);
  EXPECT_EQ(back.history.epochs, r.history.epochs);
  EXPECT_EQ(back.history.best_dev_epoch, 2);

  const std::string table = slurp(dir / kReportTable);
  EXPECT_EQ(table, report_table(r));
  std::istringstream lines(table);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 1u + 3u + 1u);  // header, two depths + all, baseline all
  EXPECT_EQ(rows[0], "condition\tdepth\tn_total\tn_correct\taccuracy");
  EXPECT_EQ(rows[1].substr(0, 8), "ima-ga\t2");
}

TEST(Report, EmptyMetricsHeaderOnly) {
  EXPECT_EQ(report_table(Report{}), "condition\tdepth\tn_total\tn_correct\taccuracy\n");
}

TEST(Report, UnwritableDirectory) {
  try {
    emit_report(Report{}, "/proc/ima-no-such-dir/x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
}
