// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "ima/datagen.hpp"
#include "ima/embeddings.hpp"
#include "ima/gradcheck.hpp"
#include "ima/logic.hpp"
#include "ima/model.hpp"
#include "ima/train.hpp"
#include "oracle.hpp"

using namespace ima;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void verdict(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("criterion %d %-22s %s  %s\n", id, name.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void oracle_equivalence() {
  const auto start = Clock::now();
  SplitMix64 rng(2024);
  int agree = 0;
  for (int i = 0; i < 500; ++i) {
    const logic::KnowledgeBase kb = testing::random_kb(rng);
    agree += logic::forward_chain(kb) == testing::bfs_oracle(kb);
  }
  const double t = seconds_since(start);
  verdict(1, "oracle-equivalence", agree == 500 && t < 60, fmt("%.0f/500 KBs agree, %.2fs", agree, t));
}

void generator_closure() {
  std::size_t checked = 0, bad = 0, depth_checked = 0;
  for (auto category : {datagen::Category::kPeople, datagen::Category::kAnimal}) {
    for (bool negation : {false, true}) {
      const auto spec = datagen::GenerationSpec::uniform(category, negation, {2, 3, 4, 5}, 1000, 0, 0, 1);
      const datagen::VerifyResult r = datagen::verify_split(datagen::generate_split(spec, datagen::Split::kTrain));
      checked += r.checked;
      depth_checked += r.depth_checked;
      bad += r.label_mismatches + r.depth_mismatches + r.unparseable;
    }
  }
  verdict(2, "generator-closure", bad == 0 && checked == 16000,
          fmt("%.0f examples, %.0f depth-checked, %.0f mismatches", static_cast<double>(checked),
              static_cast<double>(depth_checked), static_cast<double>(bad)));
}

void permutation_invariance() {
  const auto spec = datagen::GenerationSpec::uniform(datagen::Category::kAnimal, true, {2, 3, 4, 5}, 50, 0, 0, 3);
  const auto split = datagen::generate_split(spec, datagen::Split::kTrain);
  SplitMix64 rng(3);
  int same = 0, total = 0;
  for (const Example& e : split.examples) {
    const logic::Atom q = logic::parse_question(e.question);
    const logic::Verdict base = logic::answer(logic::parse_context(e.context), q);
    for (int k = 0; k < 20; ++k) {
      const Example s = shuffle_sentences(e, rng.next());
      same += logic::answer(logic::parse_context(s.context), q) == base;
      ++total;
    }
  }
  verdict(3, "permutation-invariance", same == total && total == 4000,
          fmt("%.0f/%.0f verdicts unchanged", same, total));
}

void gradient_fidelity() {
  const auto start = Clock::now();
  model::GradSuiteConfig cfg;
  cfg.probes = 200;
  double worst = 0.0;
  std::string detail;
  for (const auto& r : model::grad_check_suite(cfg)) {
    worst = std::max(worst, r.report.max_relative_error);
    detail += std::string(model::to_string(r.variant)) + " " + fmt("%.2e", r.report.max_relative_error) + ", ";
  }
  const double t = seconds_since(start);
  verdict(4, "gradient-fidelity", worst < 1e-4 && t < 300, detail + fmt("%.1fs", t));
}

void normalization(const embed::EmbeddingTable& table) {
  const auto spec = datagen::GenerationSpec::uniform(datagen::Category::kPeople, true, {2, 3, 4, 5}, 26, 0, 0, 5);
  const auto split = datagen::generate_split(spec, datagen::Split::kTrain);
  double worst = 0.0;
  int forwards = 0;
  for (int i = 0; i < 100; ++i) {
    model::ModelConfig c;
    c.variant = i % 2 == 0 ? model::Variant::kSoftmax : model::Variant::kGate;
    const auto params = model::ModelParams::initialize(c, static_cast<std::uint64_t>(i));
    const auto out = model::forward(params, table, split.examples[static_cast<std::size_t>(i)]);
    for (const auto& a : out.attention_trace) worst = std::max(worst, std::abs(a.sum() - 1.0));
    forwards += out.attention_trace.size() == 4u;
  }
  verdict(5, "normalization", worst <= 1e-6 && forwards == 100,
          fmt("%.0f forwards, max |sum - 1| = %.2e", forwards, worst));
}

struct RunOutput {
  train::TrainResult result;
  train::Metrics test;
  double seconds = 0.0;
};

RunOutput desk_run(model::Variant variant, const embed::EmbeddingTable& table, const datagen::Dataset& data) {
  train::TrainConfig c;
  c.variant = variant;
  c.epochs = 10;
  const auto start = Clock::now();
  RunOutput out{train::train(c, table, data.at(datagen::Split::kTrain), data.at(datagen::Split::kDev)), {}, 0};
  out.test = train::evaluate(out.result.params, table, data.at(datagen::Split::kTest));
  out.seconds = seconds_since(start);
  return out;
}

train::Report desk_report(const RunOutput& run, const std::string& name) {
  train::Report r;
  r.conditions.emplace_back(name, run.test);
  r.history = run.result.history;
  return r;
}

void learning(const embed::EmbeddingTable& table) {
  const auto spec = datagen::GenerationSpec::uniform(datagen::Category::kPeople, false, {2}, 4000, 500, 1000, 0);
  const datagen::Dataset data = datagen::generate_dataset(spec);
  const auto& test = data.at(datagen::Split::kTest);
  const auto root = std::filesystem::temp_directory_path() / "ima_acceptance";
  std::filesystem::remove_all(root);

  const RunOutput gate = desk_run(model::Variant::kGate, table, data);
  const double acc = gate.test.overall.accuracy();

  model::ModelConfig untrained_cfg = train::TrainConfig{}.model_config(table.dimension());
  const auto untrained = model::ModelParams::initialize(untrained_cfg, 0);
  const double untrained_acc = train::evaluate(untrained, table, test).overall.accuracy();
  const double baseline_acc = train::evaluate(train::baseline_predictor(untrained, table), test).overall.accuracy();
  const bool chance_ok = std::abs(untrained_acc - 0.5) <= 0.05 && std::abs(baseline_acc - 0.5) <= 0.05;
  verdict(6, "learning-sanity", acc >= 0.85 && gate.seconds <= 1800 && chance_ok,
          fmt("gate test accuracy %.4f (need >= 0.85), %.0fs; untrained %.4f, baseline %.4f", acc, gate.seconds,
              untrained_acc, baseline_acc));

  const RunOutput sig = desk_run(model::Variant::kSigmoid, table, data);
  train::Report comparison;
  comparison.conditions = {{"gate", gate.test}, {"sigmoid", sig.test}};
  comparison.history = gate.result.history;
  train::emit_report(comparison, root / "comparison");
  const bool produced = std::filesystem::exists(root / "comparison" / train::kReportTable);
  const double gap = 100.0 * (acc - sig.test.overall.accuracy());
  std::printf("  info: gate %.4f vs sigmoid %.4f, gap %+.1f pp (%s the gate-first direction)\n", acc,
              sig.test.overall.accuracy(), gap, gap >= 0 ? "matches" : "does not match");
  verdict(7, "variant-comparison", produced, "report at " + (root / "comparison").string());

  train::emit_report(desk_report(gate, "gate"), root / "run_a");
  const RunOutput again = desk_run(model::Variant::kGate, table, data);
  train::emit_report(desk_report(again, "gate"), root / "run_b");
  const double loss_a = gate.result.history.epochs.back().mean_loss;
  const double loss_b = again.result.history.epochs.back().mean_loss;
  const bool identical = loss_a == loss_b &&
                         slurp(root / "run_a" / train::kReportJson) == slurp(root / "run_b" / train::kReportJson) &&
                         slurp(root / "run_a" / train::kReportTable) == slurp(root / "run_b" / train::kReportTable);
  verdict(8, "determinism", identical, fmt("final loss %.17g vs %.17g", loss_a, loss_b));
}

void full_size_generation() {
  const auto start = Clock::now();
  const auto spec = datagen::GenerationSpec::full_size(datagen::Category::kAnimal, false, 0);
  const datagen::Dataset data = datagen::generate_dataset(spec);
  bool exact = true;
  std::size_t total = 0, train_d2 = 0;
  for (const auto& [split, part] : data) {
    std::map<int, std::size_t> per_depth;
    for (const Example& e : part.examples) ++per_depth[e.depth];
    for (int d : spec.depths) exact = exact && per_depth[d] == spec.count(split, d);
    if (split == datagen::Split::kTrain) train_d2 = per_depth[2];
    total += part.examples.size();
  }
  const double t = seconds_since(start);
  verdict(9, "full-size-generation", exact && t < 600,
          fmt("%.0f examples, train depth 2 = %.0f, %.1fs", static_cast<double>(total),
              static_cast<double>(train_d2), t));
}

}  // namespace

int main() {
  const embed::EmbeddingTable table = embed::load_embeddings(embed::fixture_path());
  oracle_equivalence();
  generator_closure();
  permutation_invariance();
  gradient_fidelity();
  normalization(table);
  full_size_generation();
  learning(table);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
