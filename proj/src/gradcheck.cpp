#include "ima/gradcheck.hpp"

#include <string>

#include "ima/rng.hpp"

namespace ima::model {

GradSuiteResult grad_check_variant(Variant variant, const GradSuiteConfig& config) {
  SplitMix64 rng(derive_seed(config.seed, {static_cast<std::uint64_t>(variant)}));

  const int vocab_size = config.rules * config.length + config.length;
  Matrix vocab(config.embed_dim, vocab_size);
  for (Eigen::Index j = 0; j < vocab.cols(); ++j)
    for (Eigen::Index i = 0; i < vocab.rows(); ++i) vocab(i, j) = rng.uniform(-0.7, 0.7);

  ModelInput input;
  int next_id = 0;
  for (int r = 0; r < config.rules; ++r) {
    input.sentences.emplace_back();
    for (int k = 0; k < config.length; ++k) input.sentences.back().push_back(next_id++);
  }
  for (int k = 0; k < config.length; ++k) input.question.push_back(next_id++);

  ModelConfig mc;
  mc.variant = variant;
  mc.hidden = config.hidden;
  mc.attention_hidden = config.hidden;
  mc.embed_dim = config.embed_dim;
  mc.iterations = config.iterations;
  ModelParams params = ModelParams::initialize(mc, rng.next());
  for (const nn::ParamRef& ref : params.refs()) {
    const bool bias = ref.shape.size() == 1 && ref.name.find(".b") != std::string::npos;
    for (std::size_t k = 0; k < ref.size; ++k)
      ref.data[k] = bias ? rng.uniform(-0.5, 0.5) : 2.0 * ref.data[k];
  }
  const bool label = rng.bernoulli(0.5);

  ModelParams grad = ModelParams::zeros(mc);
  forward_backward(params, vocab, input, label, grad);
  const auto param_refs = params.refs();
  const auto grad_refs = grad.refs();
  auto loss = [&] { return nn::bce_loss(forward(params, vocab, input).probability, label); };

  GradSuiteResult out;
  out.variant = variant;
  out.report = nn::grad_check(loss, param_refs, grad_refs, config.probes, rng);
  return out;
}

std::vector<GradSuiteResult> grad_check_suite(const GradSuiteConfig& config) {
  std::vector<GradSuiteResult> out;
  for (Variant v : {Variant::kSigmoid, Variant::kSoftmax, Variant::kGate})
    out.push_back(grad_check_variant(v, config));
  return out;
}

}  // namespace ima::model
