#include "ima/train.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ima/error.hpp"
#include "ima/rng.hpp"

namespace ima::train {

using model::ModelInput;
using model::ModelParams;

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || batch_size <= 0 || epochs < 0 || iterations <= 0 || hidden <= 0)
    throw Error(ErrorCode::kInvalidSpec,
                "learning rate, batch size, T and d must be positive; epochs non-negative");
}

model::ModelConfig TrainConfig::model_config(int embed_dim) const {
  model::ModelConfig c;
  c.variant = variant;
  c.hidden = hidden;
  c.attention_hidden = hidden;
  c.embed_dim = embed_dim;
  c.iterations = iterations;
  c.attention_tanh = attention_tanh;
  c.gate_combine = gate_combine;
  return c;
}

double Cell::accuracy() const {
  return n_total == 0 ? 0.0 : static_cast<double>(n_correct) / static_cast<double>(n_total);
}

void Metrics::add(int depth, bool correct) {
  Cell& cell = by_depth[depth];
  ++cell.n_total;
  ++overall.n_total;
  if (correct) {
    ++cell.n_correct;
    ++overall.n_correct;
  }
}

std::uint64_t permutation_hash(const std::vector<std::string>& sentences) {
  std::string joined;
  for (const auto& s : sentences) {
    joined += s;
    joined += '\n';
  }
  return fnv1a(joined);
}

namespace {

constexpr std::uint64_t kOrderStream = 0x6f72646572ULL;  // "order"

std::vector<ModelInput> index_split(embed::TokenIndex& index, const datagen::DatasetSplit& split) {
  std::vector<ModelInput> out;
  out.reserve(split.examples.size());
  for (const Example& e : split.examples) {
    if (e.context.empty()) throw Error(ErrorCode::kEmptyContext, e.id);
    out.push_back(model::index_example(index, e));
  }
  return out;
}

ModelInput permuted(const ModelInput& input, std::vector<std::size_t>& order, std::uint64_t seed) {
  order.resize(input.sentences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  ModelInput out;
  out.question = input.question;
  out.sentences.reserve(order.size());
  for (std::size_t i : order) out.sentences.push_back(input.sentences[i]);
  return out;
}

double dev_accuracy(const ModelParams& params, const nn::Matrix& vocab,
                    const std::vector<ModelInput>& inputs, const datagen::DatasetSplit& split) {
  if (inputs.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const double p = model::forward(params, vocab, inputs[i]).probability;
    correct += (p >= 0.5) == split.examples[i].label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(inputs.size());
}

}  // namespace

TrainResult train(const TrainConfig& config, const embed::EmbeddingTable& table,
                  const datagen::DatasetSplit& train_split, const datagen::DatasetSplit& dev_split) {
  config.validate();
  if (train_split.examples.empty()) throw Error(ErrorCode::kEmptyInput, "empty training split");

  TrainResult result;
  result.params = ModelParams::initialize(config.model_config(table.dimension()), config.seed);
  if (config.epochs == 0) return result;

  embed::TokenIndex index(table);
  const std::vector<ModelInput> train_inputs = index_split(index, train_split);
  const std::vector<ModelInput> dev_inputs = index_split(index, dev_split);
  const nn::Matrix& vocab = index.vectors();

  ModelParams& params = result.params;
  ModelParams grad = ModelParams::zeros(params.config);
  std::vector<nn::ParamRef> param_refs = params.refs();
  std::vector<nn::ParamRef> grad_refs = grad.refs();
  nn::Adam adam(nn::AdamConfig{.learning_rate = config.learning_rate});

  const std::size_t n = train_inputs.size();
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  std::vector<std::size_t> sentence_order;
  double best_dev = -1.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 order_rng(
        derive_seed(config.seed, {kOrderStream, static_cast<std::uint64_t>(epoch)}));
    order_rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    for (std::size_t start = 0, batch = 0; start < n; start += batch_size, ++batch) {
      const std::size_t end = std::min(n, start + batch_size);
      grad.set_zero();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const Example& example = train_split.examples[i];
        const bool shuffle = config.shuffle_rules_each_batch;
        const ModelInput input =
            shuffle ? permuted(train_inputs[i], sentence_order,
                               derive_seed(config.seed, {static_cast<std::uint64_t>(epoch), batch,
                                                         fnv1a(example.id)}))
                    : train_inputs[i];
        if (config.log_permutations) {
          std::vector<std::string> seen;
          if (shuffle) {
            for (std::size_t j : sentence_order) seen.push_back(example.context[j]);
          } else {
            seen = example.context;
          }
          result.history.permutation_hashes[example.id].push_back(permutation_hash(seen));
        }
        const auto out = model::forward_backward(params, vocab, input, example.label, grad);
        batch_loss += out.loss;
      }
      if (!std::isfinite(batch_loss))
        throw Error(ErrorCode::kNonFiniteLoss,
                    "epoch " + std::to_string(epoch) + " batch " + std::to_string(batch));
      const double scale = 1.0 / static_cast<double>(end - start);
      for (const nn::ParamRef& g : grad_refs)
        for (std::size_t k = 0; k < g.size; ++k) g.data[k] *= scale;
      adam.step(param_refs, grad_refs);
      loss_sum += batch_loss;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.mean_loss = loss_sum / static_cast<double>(n);
    record.dev_accuracy = dev_accuracy(params, vocab, dev_inputs, dev_split);
    if (record.dev_accuracy > best_dev) {
      best_dev = record.dev_accuracy;
      result.history.best_dev_epoch = epoch;
    }
    result.history.epochs.push_back(record);
  }
  return result;
}

Predictor model_predictor(const ModelParams& params, const embed::EmbeddingTable& table) {
  return [&params, &table](const Example& e) { return model::forward(params, table, e).probability; };
}

Predictor baseline_predictor(const ModelParams& params, const embed::EmbeddingTable& table) {
  return [&params, &table](const Example& e) { return model::baseline_forward(params, table, e); };
}

Metrics evaluate(const Predictor& predictor, const datagen::DatasetSplit& split, double threshold) {
  Metrics metrics;
  for (const Example& e : split.examples) metrics.add(e.depth, (predictor(e) >= threshold) == e.label);
  return metrics;
}

Metrics evaluate(const ModelParams& params, const embed::EmbeddingTable& table,
                 const datagen::DatasetSplit& split, double threshold) {
  embed::TokenIndex index(table);
  const std::vector<ModelInput> inputs = index_split(index, split);
  Metrics metrics;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Example& e = split.examples[i];
    const double p = model::forward(params, index.vectors(), inputs[i]).probability;
    metrics.add(e.depth, (p >= threshold) == e.label);
  }
  return metrics;
}

std::uint64_t ood_seed(std::uint64_t seed, const Example& example) {
  return derive_seed(seed, {fnv1a(example.id)});
}

OodMetrics ood_eval(const Predictor& predictor, const datagen::DatasetSplit& split,
                    std::uint64_t seed) {
  datagen::DatasetSplit shuffled{split.name, {}};
  shuffled.examples.reserve(split.examples.size());
  for (const Example& e : split.examples)
    shuffled.examples.push_back(shuffle_sentences(e, ood_seed(seed, e)));

  OodMetrics out;
  out.original = evaluate(predictor, split);
  out.shuffled = evaluate(predictor, shuffled);
  out.delta[-1] = out.shuffled.overall.accuracy() - out.original.overall.accuracy();
  for (const auto& [depth, cell] : out.original.by_depth)
    out.delta[depth] = out.shuffled.by_depth.at(depth).accuracy() - cell.accuracy();
  return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

using nlohmann::ordered_json;

ordered_json cell_json(const Cell& c) {
  return ordered_json{{"n_total", c.n_total}, {"n_correct", c.n_correct}, {"accuracy", c.accuracy()}};
}

Cell cell_from(const ordered_json& j) {
  Cell c;
  c.n_total = j.at("n_total").get<std::size_t>();
  c.n_correct = j.at("n_correct").get<std::size_t>();
  return c;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

}  // namespace

std::string report_table(const Report& report) {
  std::string out = "condition\tdepth\tn_total\tn_correct\taccuracy\n";
  auto row = [&](const std::string& condition, const std::string& depth, const Cell& c) {
    out += condition + '\t' + depth + '\t' + std::to_string(c.n_total) + '\t' +
           std::to_string(c.n_correct) + '\t' + format_double(c.accuracy()) + '\n';
  };
  for (const auto& [condition, metrics] : report.conditions) {
    for (const auto& [depth, cell] : metrics.by_depth) row(condition, std::to_string(depth), cell);
    row(condition, "all", metrics.overall);
  }
  return out;
}

void emit_report(const Report& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());

  ordered_json conditions = ordered_json::array();
  for (const auto& [name, metrics] : report.conditions) {
    ordered_json depths = ordered_json::object();
    for (const auto& [depth, cell] : metrics.by_depth) depths[std::to_string(depth)] = cell_json(cell);
    conditions.push_back(
        ordered_json{{"condition", name}, {"overall", cell_json(metrics.overall)}, {"by_depth", depths}});
  }
  ordered_json epochs = ordered_json::array();
  for (const EpochRecord& r : report.history.epochs)
    epochs.push_back(ordered_json{
        {"epoch", r.epoch}, {"mean_loss", r.mean_loss}, {"dev_accuracy", r.dev_accuracy}});
  ordered_json doc{{"conditions", conditions},
                   {"epochs", epochs},
                   {"best_dev_epoch", report.history.best_dev_epoch}};

  write_file(dir / kReportJson, doc.dump(2) + '\n');
  write_file(dir / kReportTable, report_table(report));
}

Report read_report(const std::filesystem::path& dir) {
  std::ifstream in(dir / kReportJson, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + (dir / kReportJson).string());
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("report: ") + e.what());
  }
  Report report;
  try {
    for (const auto& c : doc.at("conditions")) {
      Metrics m;
      m.overall = cell_from(c.at("overall"));
      for (const auto& [depth, cell] : c.at("by_depth").items())
        m.by_depth[std::stoi(depth)] = cell_from(cell);
      report.conditions.emplace_back(c.at("condition").get<std::string>(), std::move(m));
    }
    for (const auto& e : doc.at("epochs"))
      report.history.epochs.push_back(EpochRecord{e.at("epoch").get<int>(),
                                                  e.at("mean_loss").get<double>(),
                                                  e.at("dev_accuracy").get<double>()});
    report.history.best_dev_epoch = doc.at("best_dev_epoch").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("report: ") + e.what());
  }
  return report;
}

}  // namespace ima::train
