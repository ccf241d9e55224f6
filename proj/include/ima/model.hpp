#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "ima/embeddings.hpp"
#include "ima/example.hpp"
#include "ima/nn.hpp"

namespace ima::model {

using nn::Matrix;
using nn::Vector;

enum class Variant {
  kSigmoid,  // IMA: sigmoid attention, weighted sum of unifier outputs
  kSoftmax,  // IMASM: softmax attention, weighted sum
  kGate,     // IMA-GA: softmax scores gate a GRU scan over unifier outputs
};

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view text);

/// How IMA-GA turns its gates into the next state.
enum class GateCombine { kScan, kWeightedSum };

std::string_view to_string(GateCombine c);
GateCombine gate_combine_from_string(std::string_view text);

struct ModelConfig {
  Variant variant = Variant::kGate;
  int hidden = 64;            // d
  int embed_dim = 100;
  int attention_hidden = 64;  // d_a
  int iterations = 4;         // T
  bool attention_tanh = true; // tanh between the two scorer layers
  GateCombine gate_combine = GateCombine::kScan;

  bool operator==(const ModelConfig&) const = default;
};

/// Reset and candidate weights of the gate-attention cell; its update gate is
/// the attention weight itself.
struct GateCellParams {
  Matrix W_r, W_h;  // d x d, act on the unifier output
  Matrix U_r, U_h;  // d x d, act on the running state
  Vector b_r, b_h;

  template <typename F>
  void visit(F&& f) {
    f("W_r", W_r); f("W_h", W_h); f("U_r", U_r); f("U_h", U_h); f("b_r", b_r); f("b_h", b_h);
  }
};

struct ModelParams {
  ModelConfig config;
  nn::GruParams encoder;  // embed_dim -> d, shared by question and rules
  nn::GruParams unifier;  // embed_dim -> d, initial state s^t
  Matrix att_U;           // d_a x 5d
  Vector att_b1;          // d_a
  Vector att_W;           // d_a (the 1 x d_a output row)
  Vector att_b2;          // 1, learnable only for kSigmoid
  GateCellParams gate;    // empty unless the gate scan is used
  Vector readout_w;       // d
  Vector readout_b;       // 1

  static ModelParams zeros(const ModelConfig& config);
  /// Weights uniform in +-sqrt(1/fan_in) from SplitMix64(seed); biases zero.
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);

  bool uses_gate_scan() const;
  void set_zero();
  /// Every learnable tensor in a fixed order, named "<block>.<tensor>".
  std::vector<nn::ParamRef> refs();
};

/// Token ids for the context sentences and the question.
struct ModelInput {
  std::vector<std::vector<int>> sentences;
  std::vector<int> question;
};

ModelInput index_example(embed::TokenIndex& index, const Example& example);

/// Output of the shared encoder: question and rule vectors plus the per-rule
/// word embeddings (each padded to L rows) consumed by the unifier.
struct EncodedExample {
  Vector q;
  std::vector<Vector> rules;
  std::vector<Matrix> context;          // R matrices, L x embed_dim
  std::vector<std::vector<bool>> mask;  // R x L, true = real token
};

EncodedExample encode(const embed::EmbeddingTable& table, const ModelParams& params,
                      const Example& example);

/// [s; q; r; (s - r)^2; s * r]
Vector feature_vector(const Vector& s, const Vector& q, const Vector& r);

/// Raw scores W tanh(U w_i + b1) + b2 (tanh omitted when attention_tanh is off).
Vector attention_scores(const ModelParams& params, const Vector& s, const Vector& q,
                        const std::vector<Vector>& rules);
/// Sigmoid of the scores for kSigmoid, softmax over rules otherwise.
Vector attention(const ModelParams& params, const Vector& s, const Vector& q,
                 const std::vector<Vector>& rules);

/// Left fold of the unifier GRU over the unmasked rows of one rule, from s.
Vector unifier(const ModelParams& params, const Matrix& rule_words, const std::vector<bool>& mask,
               const Vector& s);

/// h_i = g_i * h~_i + (1 - g_i) * h_{i-1} over the unifier outputs, h_0 = s.
Vector gate_scan(const GateCellParams& gate, const std::vector<Vector>& unified,
                 const Vector& gates, const Vector& s);

struct IterationState {
  Vector s;
  int t = 0;
  std::vector<Vector> attention_trace;
};

IterationState iterate(const ModelParams& params, const EncodedExample& enc, IterationState state);

struct ForwardResult {
  double probability = 0.5;
  Vector final_state;
  std::vector<Vector> attention_trace;
};

ForwardResult forward(const ModelParams& params, const embed::EmbeddingTable& table,
                      const Example& example);
ForwardResult forward(const ModelParams& params, const Matrix& vocab, const ModelInput& input);

struct LossAndGradient {
  double loss = 0.0;
  double probability = 0.5;
};

/// BCE of the forward pass against label; adds the parameter gradient to grad
/// (which must have the same shapes as params).
LossAndGradient forward_backward(const ModelParams& params, const Matrix& vocab,
                                 const ModelInput& input, bool label, ModelParams& grad);

/// One recurrent encoder over all context tokens then the question tokens,
/// followed by the readout. No iteration, no attention.
double baseline_forward(const ModelParams& params, const embed::EmbeddingTable& table,
                        const Example& example);
double baseline_forward(const ModelParams& params, const Matrix& vocab, const ModelInput& input);

}  // namespace ima::model
