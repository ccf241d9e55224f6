#include "ima/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ima/checkpoint.hpp"
#include "ima/datagen.hpp"
#include "ima/error.hpp"
#include "ima/gradcheck.hpp"
#include "ima/train.hpp"

namespace ima::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// "key = value" lines; '#' starts a comment. Each pair becomes "--key=value"
// placed ahead of the real flags so that flags win.
std::vector<std::string> config_arguments(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read config " + path.string());
  std::vector<std::string> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw UsageError(path.string() + ":" + std::to_string(n) + ": expected key = value");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (key.empty() || key == "config")
      throw UsageError(path.string() + ":" + std::to_string(n) + ": bad key '" + key + "'");
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  if (args.empty() || args[0].starts_with("-")) return args;
  std::vector<std::string> injected;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      injected = config_arguments(args[i + 1]);
    } else if (args[i].starts_with("--config=")) {
      injected = config_arguments(args[i].substr(9));
    }
  }
  std::vector<std::string> out{args[0]};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

std::vector<int> parse_depths(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int d = 0;
    const std::string t = trim(item);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), d);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
      throw UsageError("bad depth '" + item + "' in --depths");
    out.push_back(d);
  }
  return out;
}

datagen::Split split_from_string(const std::string& s) {
  for (datagen::Split split : datagen::kAllSplits)
    if (datagen::to_string(split) == s) return split;
  throw UsageError("unknown split '" + s + "'");
}

fs::path require_path(const std::string& value, const char* flag, const char* env) {
  if (!value.empty()) return value;
  if (env != nullptr) {
    if (const char* v = std::getenv(env); v != nullptr && *v != '\0') return v;
  }
  throw UsageError(std::string("missing ") + flag +
                   (env != nullptr ? std::string(" (or $") + env + ")" : std::string()));
}

fs::path embeddings_path(const std::string& value) {
  if (!value.empty()) return value;
  if (const char* v = std::getenv(kEnvEmbeddings); v != nullptr && *v != '\0') return v;
  return embed::fixture_path();
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string depths = "2,3,4,5";
  std::size_t counts = 0;
  bool full_size = false;
  std::string category = "people";
  bool negation = false;
  std::string split = "train";
  std::uint64_t seed = 0;
  std::string out;
};

int do_generate(const GenerateArgs& a, std::ostream& out) {
  const datagen::Category category = datagen::category_from_string(a.category);
  const datagen::Split split = split_from_string(a.split);
  if (a.out.empty()) throw UsageError("missing --out");
  datagen::GenerationSpec spec;
  if (a.full_size) {
    spec = datagen::GenerationSpec::full_size(category, a.negation, a.seed);
  } else {
    if (a.counts == 0) throw UsageError("--counts (per label per depth) or --full-size required");
    const std::size_t n = 2 * a.counts;
    spec = datagen::GenerationSpec::uniform(category, a.negation, parse_depths(a.depths), n, n, n,
                                            a.seed);
  }
  const datagen::DatasetSplit data = datagen::generate_split(spec, split);
  datagen::write_records(data, a.out);
  out << "generate: " << data.examples.size() << " examples (" << a.split << ", " << a.category
      << (a.negation ? ", negation" : "") << ", seed " << a.seed << ")\n"
      << "output: " << a.out << "\n";
  return kSuccess;
}

int do_verify(const std::string& in, std::ostream& out) {
  const datagen::DatasetSplit data = datagen::read_records(require_path(in, "--in", nullptr));
  const datagen::VerifyResult r = datagen::verify_split(data);
  out << "verify: checked " << r.checked << ", label mismatches " << r.label_mismatches
      << ", depth mismatches " << r.depth_mismatches << " of " << r.depth_checked
      << ", unparseable " << r.unparseable << "\n";
  return r.ok() ? kSuccess : kDataError;
}

struct TrainArgs {
  train::TrainConfig config;
  std::string variant = "gate";
  std::string ga_combine = "scan";
  std::string train_path, dev_path, test_path, embeddings, out;
  bool dry_run = false;
};

std::string summary(const train::TrainConfig& c) {
  std::ostringstream s;
  s << "variant " << model::to_string(c.variant) << ", lr " << format_double(c.learning_rate)
    << ", batch " << c.batch_size << ", epochs " << c.epochs << ", T " << c.iterations << ", d "
    << c.hidden << ", seed " << c.seed << ", shuffle-rules "
    << (c.shuffle_rules_each_batch ? "on" : "off");
  return s.str();
}

int do_train(TrainArgs a, std::ostream& out) {
  train::TrainConfig& c = a.config;
  c.variant = model::variant_from_string(a.variant);
  c.gate_combine = model::gate_combine_from_string(a.ga_combine);
  c.validate();
  out << "train: " << summary(c) << "\n";
  if (a.dry_run) return kSuccess;

  c.train_path = require_path(a.train_path, "--train", kEnvTrain);
  c.dev_path = require_path(a.dev_path, "--dev", kEnvDev);
  if (!a.test_path.empty()) {
    c.test_path = a.test_path;
  } else if (const char* v = std::getenv(kEnvTest); v != nullptr && *v != '\0') {
    c.test_path = v;
  }
  c.embeddings_path = embeddings_path(a.embeddings);
  if (a.out.empty()) throw UsageError("missing --out");

  const embed::EmbeddingTable table = embed::load_embeddings(c.embeddings_path);
  const auto train_split = datagen::read_records(c.train_path, datagen::Split::kTrain);
  const auto dev_split = datagen::read_records(c.dev_path, datagen::Split::kDev);
  train::TrainResult result = train::train(c, table, train_split, dev_split);

  train::Report report;
  report.history = result.history;
  report.conditions.emplace_back("dev", train::evaluate(result.params, table, dev_split));
  if (!c.test_path.empty()) {
    const auto test_split = datagen::read_records(c.test_path, datagen::Split::kTest);
    report.conditions.emplace_back("test", train::evaluate(result.params, table, test_split));
  }
  const fs::path dir = a.out;
  train::emit_report(report, dir);
  model::save_checkpoint(dir / "model.ckpt", result.params);

  const double final_loss =
      result.history.epochs.empty() ? 0.0 : result.history.epochs.back().mean_loss;
  out << "final loss " << format_double(final_loss);
  for (const auto& [name, m] : report.conditions)
    out << ", " << name << " accuracy " << format_double(m.overall.accuracy());
  out << "\noutput: " << (dir / "model.ckpt").string() << " " << (dir / train::kReportJson).string()
      << " " << (dir / train::kReportTable).string() << "\n";
  return kSuccess;
}

struct EvalArgs {
  std::string checkpoint, in, embeddings, out;
  bool baseline = false;
  std::uint64_t seed = 0;
};

int do_eval(const EvalArgs& a, bool ood, std::ostream& out) {
  model::ModelParams params = model::load_checkpoint(require_path(a.checkpoint, "--checkpoint", nullptr));
  const embed::EmbeddingTable table =
      embed::load_embeddings(embeddings_path(a.embeddings), params.config.embed_dim);
  const auto split = datagen::read_records(require_path(a.in, "--in", kEnvTest), datagen::Split::kTest);
  const train::Predictor predictor = a.baseline ? train::baseline_predictor(params, table)
                                                : train::model_predictor(params, table);
  train::Report report;
  if (ood) {
    const train::OodMetrics m = train::ood_eval(predictor, split, a.seed);
    report.conditions.emplace_back("original", m.original);
    report.conditions.emplace_back("shuffled", m.shuffled);
    out << "ood-eval: original " << format_double(m.original.overall.accuracy()) << ", shuffled "
        << format_double(m.shuffled.overall.accuracy()) << ", delta "
        << format_double(m.delta.at(-1)) << "\n";
  } else {
    const train::Metrics m = train::evaluate(predictor, split);
    report.conditions.emplace_back(a.baseline ? "baseline" : "model", m);
    out << "eval: accuracy " << format_double(m.overall.accuracy()) << " (" << m.overall.n_correct
        << "/" << m.overall.n_total << ")\n";
  }
  if (!a.out.empty()) {
    train::emit_report(report, a.out);
    out << "output: " << (fs::path(a.out) / train::kReportJson).string() << " "
        << (fs::path(a.out) / train::kReportTable).string() << "\n";
  }
  return kSuccess;
}

int do_report(const std::vector<std::string>& inputs, const std::string& out_dir, std::ostream& out) {
  if (inputs.empty()) throw UsageError("missing --in");
  train::Report merged;
  for (const std::string& dir : inputs) {
    train::Report r = train::read_report(dir);
    const std::string prefix = inputs.size() > 1 ? fs::path(dir).filename().string() + "/" : "";
    for (auto& [name, m] : r.conditions) merged.conditions.emplace_back(prefix + name, std::move(m));
    if (inputs.size() == 1) merged.history = r.history;
  }
  out << train::report_table(merged);
  if (!out_dir.empty()) {
    train::emit_report(merged, out_dir);
    out << "output: " << (fs::path(out_dir) / train::kReportJson).string() << " "
        << (fs::path(out_dir) / train::kReportTable).string() << "\n";
  }
  return kSuccess;
}

struct GradArgs {
  std::string variant = "all";
  model::GradSuiteConfig config;
  double tolerance = 1e-4;
};

int do_grad_check(const GradArgs& a, std::ostream& out) {
  std::vector<model::GradSuiteResult> results;
  if (a.variant == "all") {
    results = model::grad_check_suite(a.config);
  } else {
    results.push_back(model::grad_check_variant(model::variant_from_string(a.variant), a.config));
  }
  bool ok = true;
  for (const auto& r : results) {
    const bool pass = r.report.max_relative_error < a.tolerance;
    ok = ok && pass;
    out << "grad-check " << model::to_string(r.variant) << ": " << r.report.probes
        << " probes, max relative error " << r.report.max_relative_error << " at "
        << r.report.worst_parameter << (pass ? " ok" : " FAILED") << "\n";
  }
  return ok ? kSuccess : kNumericFailure;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSpec: return kUsageError;
    case ErrorCode::kNonFiniteLoss: return kNumericFailure;
    default: return kDataError;
  }
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Iterative memory attention reasoning: data, training and evaluation", "ima"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1, 1);
  app.fallthrough(false);
  std::string config_path;
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value file; flags override it");
  };

  GenerateArgs gen;
  CLI::App* generate = app.add_subcommand("generate", "generate a dataset split");
  generate->add_option("--depths", gen.depths, "comma-separated depths in 2..5");
  generate->add_option("--counts", gen.counts, "examples per label per depth");
  generate->add_flag("--full-size", gen.full_size, "published per-depth split sizes");
  generate->add_option("--category", gen.category, "people | animal");
  generate->add_flag("--negation", gen.negation, "negation-rule variant");
  generate->add_option("--split", gen.split, "train | dev | test");
  generate->add_option("--seed", gen.seed);
  generate->add_option("--out", gen.out, "output .jsonl");
  add_config(generate);

  std::string verify_in;
  CLI::App* verify = app.add_subcommand("verify", "re-derive labels and depths of a dataset file");
  verify->add_option("--in", verify_in);
  verify->add_option("--seed", gen.seed, "accepted for uniformity; verify is deterministic");
  add_config(verify);

  TrainArgs tr;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--lr", tr.config.learning_rate);
  train_cmd->add_option("--batch-size", tr.config.batch_size);
  train_cmd->add_option("--epochs", tr.config.epochs);
  train_cmd->add_option("--iterations,-T", tr.config.iterations);
  train_cmd->add_option("--hidden,-d", tr.config.hidden);
  train_cmd->add_option("--seed", tr.config.seed);
  train_cmd->add_option("--variant", tr.variant, "sigmoid | softmax | gate");
  train_cmd->add_option("--ga-combine", tr.ga_combine, "scan | weighted-sum");
  train_cmd->add_flag("--shuffle-rules", tr.config.shuffle_rules_each_batch);
  train_cmd->add_flag("--attention-tanh", tr.config.attention_tanh);
  train_cmd->add_option("--train", tr.train_path);
  train_cmd->add_option("--dev", tr.dev_path);
  train_cmd->add_option("--test", tr.test_path);
  train_cmd->add_option("--embeddings", tr.embeddings);
  train_cmd->add_option("--out", tr.out, "output directory");
  train_cmd->add_flag("--dry-run", tr.dry_run, "print the resolved configuration and stop");
  add_config(train_cmd);

  EvalArgs ev;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint per depth");
  CLI::App* ood = app.add_subcommand("ood-eval", "evaluate on original and shuffled contexts");
  for (CLI::App* cmd : {eval, ood}) {
    cmd->add_option("--checkpoint", ev.checkpoint);
    cmd->add_option("--in", ev.in);
    cmd->add_option("--embeddings", ev.embeddings);
    cmd->add_option("--out", ev.out, "report directory");
    cmd->add_option("--seed", ev.seed);
    cmd->add_flag("--baseline", ev.baseline, "score with the plain recurrent baseline");
    add_config(cmd);
  }

  std::vector<std::string> report_in;
  std::string report_out;
  CLI::App* report = app.add_subcommand("report", "print (and merge) report tables");
  report->add_option("--in", report_in, "report directory; repeatable")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  report->add_option("--out", report_out, "write the merged report here");
  report->add_option("--seed", ev.seed, "accepted for uniformity");
  add_config(report);

  GradArgs ga;
  CLI::App* grad = app.add_subcommand("grad-check", "gradient checks at tiny dimensions");
  grad->add_option("--variant", ga.variant, "all | sigmoid | softmax | gate");
  grad->add_option("--probes", ga.config.probes);
  grad->add_option("--seed", ga.config.seed);
  grad->add_option("--tolerance", ga.tolerance);
  add_config(grad);

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }

  try {
    if (generate->parsed()) return do_generate(gen, out);
    if (verify->parsed()) return do_verify(verify_in, out);
    if (train_cmd->parsed()) return do_train(tr, out);
    if (eval->parsed()) return do_eval(ev, false, out);
    if (ood->parsed()) return do_eval(ev, true, out);
    if (report->parsed()) return do_report(report_in, report_out, out);
    if (grad->parsed()) return do_grad_check(ga, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace ima::cli
