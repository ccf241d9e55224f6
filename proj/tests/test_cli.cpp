#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ima/cli.hpp"
#include "ima/datagen.hpp"

using namespace ima;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ima_cli_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(Cli, GenerateAndVerify) {
  const auto dir = temp_dir("gen");
  const std::string file = (dir / "train.jsonl").string();
  const Outcome g = run({"generate", "--depths", "2,3,4,5", "--counts", "1000", "--seed", "3", "--out", file});
  ASSERT_EQ(g.code, 0) << g.err;
  const auto data = datagen::read_records(file);
  EXPECT_EQ(data.examples.size(), 8000u);
  std::map<int, int> per_depth;
  for (const Example& e : data.examples) per_depth[e.depth] += e.label ? 1 : -1;
  for (const auto& [depth, balance] : per_depth) EXPECT_EQ(balance, 0) << depth;

  const Outcome v = run({"verify", "--in", file});
  EXPECT_EQ(v.code, 0) << v.err;
  EXPECT_NE(v.out.find("checked 8000, label mismatches 0"), std::string::npos) << v.out;
}

TEST(Cli, DryRunEchoesDefaults) {
  const Outcome o = run({"train", "--dry-run"});
  EXPECT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.out, "train: variant gate, lr 0.01, batch 32, epochs 30, T 4, d 64, seed 0, shuffle-rules on\n");
}

TEST(Cli, FlagsOverrideConfigFile) {
  const auto dir = temp_dir("cfg");
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "# overrides\nepochs = 7\nhidden = 32\n";
  }
  const Outcome o = run({"train", "--config", (dir / "run.cfg").string(), "--hidden", "16", "--dry-run"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("epochs 7"), std::string::npos) << o.out;
  EXPECT_NE(o.out.find("d 16"), std::string::npos) << o.out;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"train", "--no-such-flag"}).code, 1);
  EXPECT_EQ(run({"train", "--variant", "lstm", "--dry-run"}).code, 1);
  EXPECT_EQ(run({"train", "--batch-size", "0", "--dry-run"}).code, 1);
  EXPECT_EQ(run({"generate", "--out", "/tmp/x.jsonl"}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
}

TEST(Cli, MissingDataFileIsDataError) {
  const Outcome o = run({"verify", "--in", "/nonexistent/data.jsonl"});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("IO_ERROR"), std::string::npos) << o.err;
}

TEST(Cli, TrainEvalOodReport) {
  const auto dir = temp_dir("train");
  const std::string train = (dir / "train.jsonl").string();
  const std::string dev = (dir / "dev.jsonl").string();
  ASSERT_EQ(run({"generate", "--depths", "2", "--counts", "8", "--split", "train", "--out", train}).code, 0);
  ASSERT_EQ(run({"generate", "--depths", "2", "--counts", "4", "--split", "dev", "--out", dev}).code, 0);
  const std::string out = (dir / "run").string();
  const Outcome t = run({"train", "--train", train, "--dev", dev, "--test", dev, "--epochs", "1", "-d", "8",
                         "-T", "2", "--out", out});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "model.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "report.tsv"));

  const std::string ckpt = (dir / "run" / "model.ckpt").string();
  const Outcome e = run({"eval", "--checkpoint", ckpt, "--in", dev, "--out", (dir / "eval").string()});
  EXPECT_EQ(e.code, 0) << e.err;
  EXPECT_NE(e.out.find("(" ), std::string::npos);
  const Outcome o = run({"ood-eval", "--checkpoint", ckpt, "--in", dev, "--out", (dir / "ood").string()});
  EXPECT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("delta"), std::string::npos);
  const Outcome r = run({"report", "--in", (dir / "eval").string(), "--in", (dir / "ood").string(), "--out",
                         (dir / "merged").string()});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, GradCheck) {
  const Outcome o = run({"grad-check", "--probes", "50"});
  EXPECT_EQ(o.code, 0) << o.err << o.out;
  const Outcome strict = run({"grad-check", "--variant", "gate", "--probes", "50", "--tolerance", "1e-14"});
  EXPECT_EQ(strict.code, 3) << strict.out;
}
