#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ima/rng.hpp"

namespace ima::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Owning shape + row-major data; the interchange type for checkpoints.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  std::size_t size() const;
  static Tensor from_matrix(const Matrix& m);
  static Tensor from_vector(const Vector& v);
  void to_matrix(Matrix& out) const;
  void to_vector(Vector& out) const;

  bool operator==(const Tensor&) const = default;
};

/// Mutable view of one learnable parameter. Element order is storage order,
/// which is all Adam and grad_check need.
struct ParamRef {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
  std::vector<std::size_t> shape;  // {rows} for vectors, {rows, cols} for matrices
};

template <typename Derived>
ParamRef param_ref(std::string name, Eigen::PlainObjectBase<Derived>& m) {
  std::vector<std::size_t> shape = {static_cast<std::size_t>(m.rows())};
  if constexpr (Derived::ColsAtCompileTime != 1) shape.push_back(static_cast<std::size_t>(m.cols()));
  return ParamRef{std::move(name), m.data(), static_cast<std::size_t>(m.size()), std::move(shape)};
}

double sigmoid(double x);
Matrix sigmoid(const Matrix& x);

/// Gated recurrent unit weights: W_* act on the input, U_* on the hidden state.
struct GruParams {
  Matrix W_z, W_r, W_h;  // hidden x input
  Matrix U_z, U_r, U_h;  // hidden x hidden
  Vector b_z, b_r, b_h;  // hidden

  GruParams() = default;
  GruParams(int input, int hidden);

  int input_size() const { return static_cast<int>(W_z.cols()); }
  int hidden_size() const { return static_cast<int>(W_z.rows()); }

  /// Weights uniform in +-sqrt(1/fan_in); biases zero.
  void init_uniform(SplitMix64& rng);
  void set_zero();

  template <typename F>
  void visit(F&& f) {
    f("W_z", W_z); f("W_r", W_r); f("W_h", W_h);
    f("U_z", U_z); f("U_r", U_r); f("U_h", U_h);
    f("b_z", b_z); f("b_r", b_r); f("b_h", b_h);
  }
};

/// One GRU step on a single vector:
/// z = sig(W_z x + U_z h + b_z), r = sig(W_r x + U_r h + b_r),
/// h~ = tanh(W_h x + U_h (r * h) + b_h), h' = (1 - z) * h + z * h~.
Vector gru_step(const GruParams& p, const Vector& x, const Vector& h);

// Column-batched machinery. Each column of H is an independent sequence; the
// input-side affine terms (W x + b) are computed separately so they can be
// reused across repeated passes over the same inputs.

struct GruProjection {
  Matrix z, r, h;  // hidden x batch
};

GruProjection gru_project(const GruParams& p, const Matrix& X);

struct GruStepCache {
  Matrix h_prev, z, r, h_tilde;
  Vector mask;  // 1 = active column, 0 = carry the state through
};

/// mask may be empty (all columns active).
Matrix gru_step_projected(const GruParams& p, const GruProjection& proj, const Matrix& H,
                          const Vector& mask, GruStepCache* cache);

/// Backward through one step. Accumulates U_* gradients into grad, writes the
/// gradients of the projected inputs into dproj and returns dL/dH_prev.
Matrix gru_step_projected_backward(const GruParams& p, const GruStepCache& cache,
                                   const Matrix& dH, GruParams& grad, GruProjection& dproj);

/// Accumulates W_* and b_* gradients for a projection of X; adds dL/dX to dX
/// when non-null.
void gru_project_backward(const GruParams& p, const Matrix& X, const GruProjection& dproj,
                          GruParams& grad, Matrix* dX);

/// Max-subtracted softmax. Throws EMPTY_INPUT on an empty vector.
Vector softmax(const Vector& scores);

inline constexpr double kProbabilityClamp = 1e-7;

/// Binary cross-entropy with the prediction clamped to [1e-7, 1 - 1e-7].
double bce_loss(double prediction, bool label);

/// d bce / d logit for prediction = sigmoid(logit); zero inside the clamp.
double bce_logit_gradient(double prediction, bool label);

struct AdamConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Bias-corrected Adam update; params[i] pairs with grads[i].
  void step(std::span<const ParamRef> params, std::span<const ParamRef> grads);

  const AdamConfig& config() const { return config_; }
  std::int64_t step_count() const { return step_count_; }
  const std::vector<std::vector<double>>& first_moment() const { return m_; }
  const std::vector<std::vector<double>>& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  std::int64_t step_count_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t probes = 0;
  std::string worst_parameter;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares analytic gradients against central differences (step 1e-5) on
/// probe_count scalars drawn uniformly from params. The relative error of a
/// probe is |a - f| / max(|a|, |f|, 1e-8). loss must read the current
/// parameter values; they are restored after each probe.
GradCheckReport grad_check(const std::function<double()>& loss, std::span<const ParamRef> params,
                           std::span<const ParamRef> analytic, std::size_t probe_count,
                           SplitMix64& rng, double step = 1e-5);

}  // namespace ima::nn
