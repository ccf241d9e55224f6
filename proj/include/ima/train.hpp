#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ima/datagen.hpp"
#include "ima/embeddings.hpp"
#include "ima/model.hpp"

namespace ima::train {

struct TrainConfig {
  double learning_rate = 1e-2;
  int batch_size = 32;
  int epochs = 30;
  int iterations = 4;  // T
  int hidden = 64;     // d
  std::uint64_t seed = 0;
  model::Variant variant = model::Variant::kGate;
  bool shuffle_rules_each_batch = true;
  bool attention_tanh = true;
  model::GateCombine gate_combine = model::GateCombine::kScan;
  std::filesystem::path train_path;
  std::filesystem::path dev_path;
  std::filesystem::path test_path;
  std::filesystem::path embeddings_path;
  bool log_permutations = false;  // keep per-example context-order hashes

  /// Throws INVALID_SPEC unless every numeric field is positive (epochs may be 0).
  void validate() const;
  model::ModelConfig model_config(int embed_dim) const;
};

struct Cell {
  std::size_t n_correct = 0;
  std::size_t n_total = 0;

  double accuracy() const;
  bool operator==(const Cell&) const = default;
};

struct Metrics {
  Cell overall;
  std::map<int, Cell> by_depth;

  void add(int depth, bool correct);
  bool operator==(const Metrics&) const = default;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double dev_accuracy = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct History {
  std::vector<EpochRecord> epochs;
  int best_dev_epoch = -1;  // recorded only; the final epoch is what gets reported
  // Example id -> hash of the context order seen in each epoch.
  std::map<std::string, std::vector<std::uint64_t>> permutation_hashes;

  bool operator==(const History&) const = default;
};

struct TrainResult {
  model::ModelParams params;
  History history;
};

/// Order-sensitive hash of a sentence sequence.
std::uint64_t permutation_hash(const std::vector<std::string>& sentences);

/// Mini-batch Adam on BCE. Examples are reshuffled every epoch and, when
/// shuffle_rules_each_batch is set, each example's context is permuted with
/// seed derive_seed(seed, {epoch, batch, fnv1a(id)}). Gradients are summed
/// over the batch in order and averaged. Throws NON_FINITE_LOSS naming the batch.
TrainResult train(const TrainConfig& config, const embed::EmbeddingTable& table,
                  const datagen::DatasetSplit& train_split, const datagen::DatasetSplit& dev_split);

using Predictor = std::function<double(const Example&)>;

Predictor model_predictor(const model::ModelParams& params, const embed::EmbeddingTable& table);
Predictor baseline_predictor(const model::ModelParams& params, const embed::EmbeddingTable& table);

/// prediction = probability >= threshold, tallied overall and per depth tag.
Metrics evaluate(const Predictor& predictor, const datagen::DatasetSplit& split,
                 double threshold = 0.5);
Metrics evaluate(const model::ModelParams& params, const embed::EmbeddingTable& table,
                 const datagen::DatasetSplit& split, double threshold = 0.5);

struct OodMetrics {
  Metrics original;
  Metrics shuffled;
  /// shuffled accuracy - original accuracy; key -1 is the overall cell.
  std::map<int, double> delta;
};

/// Seed of the example's OOD permutation.
std::uint64_t ood_seed(std::uint64_t seed, const Example& example);

OodMetrics ood_eval(const Predictor& predictor, const datagen::DatasetSplit& split,
                    std::uint64_t seed);

struct Report {
  std::vector<std::pair<std::string, Metrics>> conditions;  // emitted in this order
  History history;

  bool operator==(const Report&) const = default;
};

inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kReportTable = "report.tsv";

/// Writes dir/report.json (per-condition cells keyed by depth, epoch series)
/// and dir/report.tsv (condition, depth, n_total, n_correct, accuracy; one row
/// per depth plus an "all" row per condition). Throws IO_ERROR.
void emit_report(const Report& report, const std::filesystem::path& dir);
Report read_report(const std::filesystem::path& dir);

std::string report_table(const Report& report);

}  // namespace ima::train
