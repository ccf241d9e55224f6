#include "ima/model.hpp"

#include <cmath>

#include "ima/error.hpp"

namespace ima::model {

using nn::GruParams;
using nn::GruProjection;
using nn::GruStepCache;

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kSigmoid: return "sigmoid";
    case Variant::kSoftmax: return "softmax";
    case Variant::kGate: return "gate";
  }
  return "gate";
}

Variant variant_from_string(std::string_view text) {
  if (text == "sigmoid" || text == "ima") return Variant::kSigmoid;
  if (text == "softmax" || text == "imasm") return Variant::kSoftmax;
  if (text == "gate" || text == "ima-ga") return Variant::kGate;
  throw Error(ErrorCode::kInvalidSpec, "unknown variant '" + std::string(text) + "'");
}

std::string_view to_string(GateCombine c) {
  return c == GateCombine::kScan ? "scan" : "weighted-sum";
}

GateCombine gate_combine_from_string(std::string_view text) {
  if (text == "scan") return GateCombine::kScan;
  if (text == "weighted-sum") return GateCombine::kWeightedSum;
  throw Error(ErrorCode::kInvalidSpec, "unknown ga-combine '" + std::string(text) + "'");
}

namespace {

void fill_uniform(Eigen::Ref<Matrix> m, double bound, SplitMix64& rng) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-bound, bound);
}

template <typename F>
void visit_all(ModelParams& p, F&& f) {
  p.encoder.visit([&](const char* n, auto& m) { f(std::string("encoder.") + n, m); });
  p.unifier.visit([&](const char* n, auto& m) { f(std::string("unifier.") + n, m); });
  f("attention.U", p.att_U);
  f("attention.b1", p.att_b1);
  f("attention.W", p.att_W);
  // Softmax is shift-invariant, so b2 only matters for sigmoid attention.
  if (p.config.variant == Variant::kSigmoid) f("attention.b2", p.att_b2);
  if (p.uses_gate_scan())
    p.gate.visit([&](const char* n, auto& m) { f(std::string("gate.") + n, m); });
  f("readout.w", p.readout_w);
  f("readout.b", p.readout_b);
}

Vector hidden_activation(const ModelParams& p, const Vector& a) {
  return p.config.attention_tanh ? Vector(a.array().tanh()) : a;
}

}  // namespace

ModelParams ModelParams::zeros(const ModelConfig& config) {
  if (config.hidden <= 0 || config.embed_dim <= 0 || config.attention_hidden <= 0 ||
      config.iterations < 0)
    throw Error(ErrorCode::kInvalidSpec, "model dimensions must be positive");
  const int d = config.hidden;
  const int a = config.attention_hidden;
  ModelParams p;
  p.config = config;
  p.encoder = GruParams(config.embed_dim, d);
  p.unifier = GruParams(config.embed_dim, d);
  p.att_U = Matrix::Zero(a, 5 * d);
  p.att_b1 = Vector::Zero(a);
  p.att_W = Vector::Zero(a);
  p.att_b2 = Vector::Zero(1);
  if (p.uses_gate_scan()) {
    p.gate.W_r = Matrix::Zero(d, d);
    p.gate.W_h = Matrix::Zero(d, d);
    p.gate.U_r = Matrix::Zero(d, d);
    p.gate.U_h = Matrix::Zero(d, d);
    p.gate.b_r = Vector::Zero(d);
    p.gate.b_h = Vector::Zero(d);
  }
  p.readout_w = Vector::Zero(d);
  p.readout_b = Vector::Zero(1);
  return p;
}

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = zeros(config);
  SplitMix64 rng(seed);
  const double d = config.hidden;
  p.encoder.init_uniform(rng);
  p.unifier.init_uniform(rng);
  fill_uniform(p.att_U, std::sqrt(1.0 / (5.0 * d)), rng);
  fill_uniform(p.att_W, std::sqrt(1.0 / config.attention_hidden), rng);
  if (p.uses_gate_scan()) {
    for (Matrix* m : {&p.gate.W_r, &p.gate.W_h, &p.gate.U_r, &p.gate.U_h})
      fill_uniform(*m, std::sqrt(1.0 / d), rng);
  }
  fill_uniform(p.readout_w, std::sqrt(1.0 / d), rng);
  return p;
}

bool ModelParams::uses_gate_scan() const {
  return config.variant == Variant::kGate && config.gate_combine == GateCombine::kScan;
}

void ModelParams::set_zero() {
  visit_all(*this, [](const std::string&, auto& m) { m.setZero(); });
  att_b2.setZero();
}

std::vector<nn::ParamRef> ModelParams::refs() {
  std::vector<nn::ParamRef> out;
  visit_all(*this, [&](const std::string& name, auto& m) { out.push_back(nn::param_ref(name, m)); });
  return out;
}

ModelInput index_example(embed::TokenIndex& index, const Example& example) {
  ModelInput in;
  in.sentences.reserve(example.context.size());
  for (const auto& s : example.context) in.sentences.push_back(index.ids(embed::tokenize(s)));
  in.question = index.ids(embed::tokenize(example.question));
  return in;
}

// ---------------------------------------------------------------------------
// Reference operations on single vectors.

EncodedExample encode(const embed::EmbeddingTable& table, const ModelParams& params,
                      const Example& example) {
  if (example.context.empty()) throw Error(ErrorCode::kEmptyContext, example.id);
  auto fold = [&](const Matrix& words) {
    Vector h = Vector::Zero(params.config.hidden);
    for (Eigen::Index j = 0; j < words.rows(); ++j)
      h = nn::gru_step(params.encoder, words.row(j).transpose(), h);
    return h;
  };
  EncodedExample enc;
  std::vector<Matrix> words;
  Eigen::Index longest = 0;
  for (const auto& sentence : example.context) {
    words.push_back(embed::embed(table, embed::tokenize(sentence)));
    if (words.back().rows() == 0)
      throw Error(ErrorCode::kAllMasked, "empty context sentence in " + example.id);
    longest = std::max(longest, words.back().rows());
    enc.rules.push_back(fold(words.back()));
  }
  enc.q = fold(embed::embed(table, embed::tokenize(example.question)));
  for (const Matrix& w : words) {
    Matrix padded = Matrix::Zero(longest, table.dimension());
    padded.topRows(w.rows()) = w;
    std::vector<bool> mask(static_cast<std::size_t>(longest), false);
    std::fill_n(mask.begin(), w.rows(), true);
    enc.context.push_back(std::move(padded));
    enc.mask.push_back(std::move(mask));
  }
  return enc;
}

Vector feature_vector(const Vector& s, const Vector& q, const Vector& r) {
  if (s.size() != q.size() || s.size() != r.size())
    throw Error(ErrorCode::kShapeMismatch, "feature_vector: segment sizes differ");
  const Eigen::Index d = s.size();
  Vector w(5 * d);
  w << s, q, r, (s - r).array().square().matrix(), s.cwiseProduct(r);
  return w;
}

Vector attention_scores(const ModelParams& params, const Vector& s, const Vector& q,
                        const std::vector<Vector>& rules) {
  if (rules.empty()) throw Error(ErrorCode::kEmptyInput, "attention over zero rules");
  Vector scores(static_cast<Eigen::Index>(rules.size()));
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const Vector w = feature_vector(s, q, rules[i]);
    if (w.size() != params.att_U.cols())
      throw Error(ErrorCode::kShapeMismatch, "attention: feature width differs from 5d");
    const Vector hidden = hidden_activation(params, params.att_U * w + params.att_b1);
    scores[static_cast<Eigen::Index>(i)] = params.att_W.dot(hidden) + params.att_b2[0];
  }
  return scores;
}

Vector attention(const ModelParams& params, const Vector& s, const Vector& q,
                 const std::vector<Vector>& rules) {
  const Vector scores = attention_scores(params, s, q, rules);
  if (params.config.variant == Variant::kSigmoid) return nn::sigmoid(scores);
  return nn::softmax(scores);
}

Vector unifier(const ModelParams& params, const Matrix& rule_words, const std::vector<bool>& mask,
               const Vector& s) {
  if (mask.size() != static_cast<std::size_t>(rule_words.rows()))
    throw Error(ErrorCode::kShapeMismatch, "unifier: mask length differs from rule length");
  Vector h = s;
  bool any = false;
  for (Eigen::Index j = 0; j < rule_words.rows(); ++j) {
    if (!mask[static_cast<std::size_t>(j)]) continue;
    any = true;
    h = nn::gru_step(params.unifier, rule_words.row(j).transpose(), h);
  }
  if (!any) throw Error(ErrorCode::kAllMasked, "unifier: every position is masked");
  return h;
}

Vector gate_scan(const GateCellParams& gate, const std::vector<Vector>& unified,
                 const Vector& gates, const Vector& s) {
  if (gates.size() != static_cast<Eigen::Index>(unified.size()))
    throw Error(ErrorCode::kShapeMismatch, "gate_scan: one gate per rule expected");
  Vector h = s;
  for (std::size_t i = 0; i < unified.size(); ++i) {
    const Vector& x = unified[i];
    const Vector r = nn::sigmoid(gate.W_r * x + gate.U_r * h + gate.b_r);
    const Vector candidate = (gate.W_h * x + gate.U_h * r.cwiseProduct(h) + gate.b_h).array().tanh();
    const double g = gates[static_cast<Eigen::Index>(i)];
    h = g * candidate + (1.0 - g) * h;
  }
  return h;
}

IterationState iterate(const ModelParams& params, const EncodedExample& enc, IterationState state) {
  if (state.t >= params.config.iterations)
    throw Error(ErrorCode::kIterationOverflow,
                "iteration " + std::to_string(state.t) + " of " +
                    std::to_string(params.config.iterations));
  std::vector<Vector> unified;
  unified.reserve(enc.rules.size());
  for (std::size_t i = 0; i < enc.rules.size(); ++i)
    unified.push_back(unifier(params, enc.context[i], enc.mask[i], state.s));
  const Vector weights = attention(params, state.s, enc.q, enc.rules);
  if (params.uses_gate_scan()) {
    state.s = gate_scan(params.gate, unified, weights, state.s);
  } else {
    Vector next = Vector::Zero(state.s.size());
    for (std::size_t i = 0; i < unified.size(); ++i)
      next += weights[static_cast<Eigen::Index>(i)] * unified[i];
    state.s = next;
  }
  state.attention_trace.push_back(weights);
  ++state.t;
  return state;
}

// ---------------------------------------------------------------------------
// Batched engine: the encoder runs all sentences as columns of one GRU pass,
// the unifier runs all rules as columns, and input projections of the rule
// words are computed once and reused by every iteration.

namespace {

using SeqList = std::vector<const std::vector<int>*>;

std::size_t longest(const SeqList& seqs) {
  std::size_t n = 0;
  for (const auto* s : seqs) n = std::max(n, s->size());
  return n;
}

void gather(const Matrix& vocab, const SeqList& seqs, std::size_t j, Matrix& X, Vector& mask) {
  const auto batch = static_cast<Eigen::Index>(seqs.size());
  X.setZero(vocab.rows(), batch);
  mask.setZero(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto& seq = *seqs[static_cast<std::size_t>(b)];
    if (j < seq.size()) {
      X.col(b) = vocab.col(seq[j]);
      mask[b] = 1.0;
    }
  }
}

struct EncoderTape {
  std::vector<Matrix> inputs;
  std::vector<GruStepCache> steps;
};

Matrix run_encoder(const GruParams& p, const Matrix& vocab, const SeqList& seqs,
                   EncoderTape* tape) {
  Matrix H = Matrix::Zero(p.hidden_size(), static_cast<Eigen::Index>(seqs.size()));
  const std::size_t steps = longest(seqs);
  if (tape != nullptr) {
    tape->inputs.resize(steps);
    tape->steps.resize(steps);
  }
  Matrix X;
  Vector mask;
  for (std::size_t j = 0; j < steps; ++j) {
    gather(vocab, seqs, j, X, mask);
    const GruProjection proj = nn::gru_project(p, X);
    H = nn::gru_step_projected(p, proj, H, mask, tape ? &tape->steps[j] : nullptr);
    if (tape != nullptr) tape->inputs[j] = X;
  }
  return H;
}

void encoder_backward(const GruParams& p, const EncoderTape& tape, Matrix dH, GruParams& grad) {
  GruProjection dproj;
  for (std::size_t j = tape.steps.size(); j-- > 0;) {
    dH = nn::gru_step_projected_backward(p, tape.steps[j], dH, grad, dproj);
    nn::gru_project_backward(p, tape.inputs[j], dproj, grad, nullptr);
  }
}

struct IterationTape {
  Vector s;
  std::vector<GruStepCache> unify;
  Matrix unified;   // d x R, the h_iL
  Matrix features;  // 5d x R
  Matrix hidden;    // d_a x R
  Vector weights;   // R
  std::vector<Vector> scan_prev, scan_reset, scan_candidate;
};

class Engine {
 public:
  Engine(const ModelParams& params, const Matrix& vocab, const ModelInput& input, bool record)
      : p_(params), vocab_(vocab), input_(input), record_(record) {
    if (input.sentences.empty()) throw Error(ErrorCode::kEmptyContext, "no context sentences");
    for (const auto& s : input.sentences) {
      if (s.empty()) throw Error(ErrorCode::kAllMasked, "empty context sentence");
      rule_seqs_.push_back(&s);
    }
  }

  double run() {
    SeqList all = rule_seqs_;
    all.push_back(&input_.question);
    const Matrix encoded = run_encoder(p_.encoder, vocab_, all, record_ ? &enc_tape_ : nullptr);
    const Eigen::Index R = static_cast<Eigen::Index>(rule_seqs_.size());
    rules_ = encoded.leftCols(R);
    q_ = encoded.col(R);

    const std::size_t steps = longest(rule_seqs_);
    unify_inputs_.resize(steps);
    unify_masks_.resize(steps);
    unify_proj_.resize(steps);
    for (std::size_t j = 0; j < steps; ++j) {
      gather(vocab_, rule_seqs_, j, unify_inputs_[j], unify_masks_[j]);
      unify_proj_[j] = nn::gru_project(p_.unifier, unify_inputs_[j]);
    }

    Vector s = q_;
    iterations_.resize(static_cast<std::size_t>(p_.config.iterations));
    trace_.clear();
    for (auto& tape : iterations_) {
      s = step(s, tape);
      trace_.push_back(tape.weights);
    }
    final_state_ = s;
    logit_ = p_.readout_w.dot(s) + p_.readout_b[0];
    probability_ = nn::sigmoid(logit_);
    return probability_;
  }

  void backward(double dlogit, ModelParams& grad) {
    grad.readout_w += dlogit * final_state_;
    grad.readout_b[0] += dlogit;
    Vector ds = dlogit * p_.readout_w;

    const Eigen::Index R = rules_.cols();
    dq_ = Vector::Zero(q_.size());
    drules_ = Matrix::Zero(rules_.rows(), R);
    dproj_sum_.assign(unify_proj_.size(), {});
    for (std::size_t j = 0; j < unify_proj_.size(); ++j) {
      dproj_sum_[j].z = Matrix::Zero(rules_.rows(), R);
      dproj_sum_[j].r = Matrix::Zero(rules_.rows(), R);
      dproj_sum_[j].h = Matrix::Zero(rules_.rows(), R);
    }
    for (std::size_t t = iterations_.size(); t-- > 0;) ds = step_backward(iterations_[t], ds, grad);
    dq_ += ds;  // s^0 = q

    for (std::size_t j = 0; j < unify_proj_.size(); ++j)
      nn::gru_project_backward(p_.unifier, unify_inputs_[j], dproj_sum_[j], grad.unifier, nullptr);

    Matrix dencoded(rules_.rows(), R + 1);
    dencoded.leftCols(R) = drules_;
    dencoded.col(R) = dq_;
    encoder_backward(p_.encoder, enc_tape_, std::move(dencoded), grad.encoder);
  }

  double probability() const { return probability_; }
  const Vector& final_state() const { return final_state_; }
  const std::vector<Vector>& trace() const { return trace_; }

 private:
  Vector step(const Vector& s, IterationTape& tape) {
    const Eigen::Index d = s.size();
    const Eigen::Index R = rules_.cols();
    tape.s = s;

    Matrix H = s.replicate(1, R);
    tape.unify.resize(unify_proj_.size());
    for (std::size_t j = 0; j < unify_proj_.size(); ++j)
      H = nn::gru_step_projected(p_.unifier, unify_proj_[j], H, unify_masks_[j], &tape.unify[j]);
    tape.unified = H;

    Matrix& F = tape.features;
    F.resize(5 * d, R);
    const Matrix S = s.replicate(1, R);
    F.middleRows(0, d) = S;
    F.middleRows(d, d) = q_.replicate(1, R);
    F.middleRows(2 * d, d) = rules_;
    F.middleRows(3 * d, d) = (S - rules_).array().square().matrix();
    F.middleRows(4 * d, d) = S.cwiseProduct(rules_);

    Matrix A = (p_.att_U * F).colwise() + p_.att_b1;
    tape.hidden = p_.config.attention_tanh ? Matrix(A.array().tanh()) : A;
    const Vector scores = (tape.hidden.transpose() * p_.att_W).array() + p_.att_b2[0];
    tape.weights = p_.config.variant == Variant::kSigmoid ? Vector(nn::sigmoid(scores))
                                                          : nn::softmax(scores);

    if (!p_.uses_gate_scan()) return H * tape.weights;

    const GateCellParams& g = p_.gate;
    tape.scan_prev.resize(static_cast<std::size_t>(R));
    tape.scan_reset.resize(static_cast<std::size_t>(R));
    tape.scan_candidate.resize(static_cast<std::size_t>(R));
    Vector h = s;
    for (Eigen::Index i = 0; i < R; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const auto x = H.col(i);
      tape.scan_prev[k] = h;
      tape.scan_reset[k] = nn::sigmoid(g.W_r * x + g.U_r * h + g.b_r);
      tape.scan_candidate[k] =
          (g.W_h * x + g.U_h * tape.scan_reset[k].cwiseProduct(h) + g.b_h).array().tanh();
      const double w = tape.weights[i];
      h = w * tape.scan_candidate[k] + (1.0 - w) * h;
    }
    return h;
  }

  // Returns dL/ds^t given dL/ds^{t+1}.
  Vector step_backward(const IterationTape& tape, const Vector& ds_next, ModelParams& grad) {
    const Eigen::Index d = tape.s.size();
    const Eigen::Index R = rules_.cols();
    const Matrix& H = tape.unified;
    Vector ds = Vector::Zero(d);
    Matrix dH(d, R);
    Vector dweights(R);

    if (!p_.uses_gate_scan()) {
      dweights = H.transpose() * ds_next;
      dH = ds_next * tape.weights.transpose();
    } else {
      const GateCellParams& g = p_.gate;
      GateCellParams& gg = grad.gate;
      Vector dh = ds_next;
      for (Eigen::Index i = R; i-- > 0;) {
        const auto k = static_cast<std::size_t>(i);
        const Vector& prev = tape.scan_prev[k];
        const Vector& reset = tape.scan_reset[k];
        const Vector& cand = tape.scan_candidate[k];
        const auto x = H.col(i);
        const double w = tape.weights[i];
        dweights[i] = dh.dot(cand - prev);
        Vector dprev = (1.0 - w) * dh;
        const Vector da_h = (w * dh).cwiseProduct((1.0 - cand.array().square()).matrix());
        gg.W_h.noalias() += da_h * x.transpose();
        gg.U_h.noalias() += da_h * reset.cwiseProduct(prev).transpose();
        gg.b_h += da_h;
        const Vector drh = g.U_h.transpose() * da_h;
        dprev += drh.cwiseProduct(reset);
        const Vector da_r =
            drh.cwiseProduct(prev).cwiseProduct(reset.cwiseProduct((1.0 - reset.array()).matrix()));
        gg.W_r.noalias() += da_r * x.transpose();
        gg.U_r.noalias() += da_r * prev.transpose();
        gg.b_r += da_r;
        dH.col(i) = g.W_h.transpose() * da_h + g.W_r.transpose() * da_r;
        dprev.noalias() += g.U_r.transpose() * da_r;
        dh = dprev;
      }
      ds += dh;
    }

    Vector dscores;
    if (p_.config.variant == Variant::kSigmoid) {
      dscores = dweights.cwiseProduct(tape.weights.cwiseProduct((1.0 - tape.weights.array()).matrix()));
    } else {
      dscores = tape.weights.cwiseProduct((dweights.array() - tape.weights.dot(dweights)).matrix());
    }
    grad.att_W.noalias() += tape.hidden * dscores;
    grad.att_b2[0] += dscores.sum();
    Matrix dA = p_.att_W * dscores.transpose();
    if (p_.config.attention_tanh)
      dA = dA.cwiseProduct((1.0 - tape.hidden.array().square()).matrix());
    grad.att_U.noalias() += dA * tape.features.transpose();
    grad.att_b1 += dA.rowwise().sum();
    const Matrix dF = p_.att_U.transpose() * dA;

    const Matrix S = tape.s.replicate(1, R);
    const Matrix diff = S - rules_;
    const Matrix d_sq = 2.0 * diff.cwiseProduct(dF.middleRows(3 * d, d));
    const auto d_prod = dF.middleRows(4 * d, d);
    ds += dF.middleRows(0, d).rowwise().sum();
    ds += d_sq.rowwise().sum();
    ds += rules_.cwiseProduct(d_prod).rowwise().sum();
    dq_ += dF.middleRows(d, d).rowwise().sum();
    drules_ += dF.middleRows(2 * d, d) - d_sq + S.cwiseProduct(d_prod);

    GruProjection dproj;
    for (std::size_t j = tape.unify.size(); j-- > 0;) {
      dH = nn::gru_step_projected_backward(p_.unifier, tape.unify[j], dH, grad.unifier, dproj);
      dproj_sum_[j].z += dproj.z;
      dproj_sum_[j].r += dproj.r;
      dproj_sum_[j].h += dproj.h;
    }
    ds += dH.rowwise().sum();
    return ds;
  }

  const ModelParams& p_;
  const Matrix& vocab_;
  const ModelInput& input_;
  bool record_;
  SeqList rule_seqs_;

  EncoderTape enc_tape_;
  Matrix rules_;
  Vector q_;
  std::vector<Matrix> unify_inputs_;
  std::vector<Vector> unify_masks_;
  std::vector<GruProjection> unify_proj_;
  std::vector<IterationTape> iterations_;
  std::vector<Vector> trace_;
  Vector final_state_;
  double logit_ = 0.0;
  double probability_ = 0.5;

  Vector dq_;
  Matrix drules_;
  std::vector<GruProjection> dproj_sum_;
};

}  // namespace

ForwardResult forward(const ModelParams& params, const Matrix& vocab, const ModelInput& input) {
  Engine engine(params, vocab, input, false);
  ForwardResult out;
  out.probability = engine.run();
  out.final_state = engine.final_state();
  out.attention_trace = engine.trace();
  return out;
}

ForwardResult forward(const ModelParams& params, const embed::EmbeddingTable& table,
                      const Example& example) {
  if (example.context.empty()) throw Error(ErrorCode::kEmptyContext, example.id);
  embed::TokenIndex index(table);
  const ModelInput input = index_example(index, example);
  return forward(params, index.vectors(), input);
}

LossAndGradient forward_backward(const ModelParams& params, const Matrix& vocab,
                                 const ModelInput& input, bool label, ModelParams& grad) {
  Engine engine(params, vocab, input, true);
  LossAndGradient out;
  out.probability = engine.run();
  out.loss = nn::bce_loss(out.probability, label);
  engine.backward(nn::bce_logit_gradient(out.probability, label), grad);
  return out;
}

double baseline_forward(const ModelParams& params, const Matrix& vocab, const ModelInput& input) {
  std::vector<int> tokens;
  for (const auto& s : input.sentences) tokens.insert(tokens.end(), s.begin(), s.end());
  tokens.insert(tokens.end(), input.question.begin(), input.question.end());
  const Matrix h = run_encoder(params.encoder, vocab, SeqList{&tokens}, nullptr);
  return nn::sigmoid(params.readout_w.dot(h.col(0)) + params.readout_b[0]);
}

double baseline_forward(const ModelParams& params, const embed::EmbeddingTable& table,
                        const Example& example) {
  embed::TokenIndex index(table);
  const ModelInput input = index_example(index, example);
  return baseline_forward(params, index.vectors(), input);
}

}  // namespace ima::model
