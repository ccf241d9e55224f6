#include "ima/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ima/error.hpp"

namespace ima::nn {

std::size_t Tensor::size() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor Tensor::from_matrix(const Matrix& m) {
  Tensor t;
  t.shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) t.data.push_back(m(i, j));
  return t;
}

Tensor Tensor::from_vector(const Vector& v) {
  Tensor t;
  t.shape = {static_cast<std::size_t>(v.size())};
  t.data.assign(v.data(), v.data() + v.size());
  return t;
}

void Tensor::to_matrix(Matrix& out) const {
  if (shape.size() != 2 || data.size() != size())
    throw Error(ErrorCode::kShapeMismatch, "expected a rank-2 tensor");
  out.resize(static_cast<Eigen::Index>(shape[0]), static_cast<Eigen::Index>(shape[1]));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = data[k++];
}

void Tensor::to_vector(Vector& out) const {
  if (shape.size() != 1 || data.size() != size())
    throw Error(ErrorCode::kShapeMismatch, "expected a rank-1 tensor");
  out = Eigen::Map<const Vector>(data.data(), static_cast<Eigen::Index>(data.size()));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

GruParams::GruParams(int input, int hidden)
    : W_z(Matrix::Zero(hidden, input)),
      W_r(Matrix::Zero(hidden, input)),
      W_h(Matrix::Zero(hidden, input)),
      U_z(Matrix::Zero(hidden, hidden)),
      U_r(Matrix::Zero(hidden, hidden)),
      U_h(Matrix::Zero(hidden, hidden)),
      b_z(Vector::Zero(hidden)),
      b_r(Vector::Zero(hidden)),
      b_h(Vector::Zero(hidden)) {}

namespace {

void fill_uniform(Matrix& m, double bound, SplitMix64& rng) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-bound, bound);
}

Matrix scale_columns(const Matrix& m, const Vector& mask) {
  if (mask.size() == 0) return m;
  return m * mask.asDiagonal();
}

}  // namespace

void GruParams::init_uniform(SplitMix64& rng) {
  const double wb = std::sqrt(1.0 / input_size());
  const double ub = std::sqrt(1.0 / hidden_size());
  for (Matrix* w : {&W_z, &W_r, &W_h}) fill_uniform(*w, wb, rng);
  for (Matrix* u : {&U_z, &U_r, &U_h}) fill_uniform(*u, ub, rng);
  b_z.setZero();
  b_r.setZero();
  b_h.setZero();
}

void GruParams::set_zero() {
  visit([](const char*, auto& m) { m.setZero(); });
}

Vector gru_step(const GruParams& p, const Vector& x, const Vector& h) {
  if (x.size() != p.input_size() || h.size() != p.hidden_size())
    throw Error(ErrorCode::kShapeMismatch,
                "gru_step: input " + std::to_string(x.size()) + "/" +
                    std::to_string(p.input_size()) + ", hidden " + std::to_string(h.size()) +
                    "/" + std::to_string(p.hidden_size()));
  const GruProjection proj = gru_project(p, x);
  return gru_step_projected(p, proj, h, Vector(), nullptr);
}

GruProjection gru_project(const GruParams& p, const Matrix& X) {
  GruProjection out;
  out.z = (p.W_z * X).colwise() + p.b_z;
  out.r = (p.W_r * X).colwise() + p.b_r;
  out.h = (p.W_h * X).colwise() + p.b_h;
  return out;
}

Matrix gru_step_projected(const GruParams& p, const GruProjection& proj, const Matrix& H,
                          const Vector& mask, GruStepCache* cache) {
  const Matrix z = sigmoid(proj.z + p.U_z * H);
  const Matrix r = sigmoid(proj.r + p.U_r * H);
  const Matrix h_tilde = (proj.h + p.U_h * r.cwiseProduct(H)).array().tanh().matrix();
  Matrix out = H + scale_columns(z.cwiseProduct(h_tilde - H), mask);
  if (cache != nullptr) {
    cache->h_prev = H;
    cache->z = z;
    cache->r = r;
    cache->h_tilde = h_tilde;
    cache->mask = mask;
  }
  return out;
}

Matrix gru_step_projected_backward(const GruParams& p, const GruStepCache& c, const Matrix& dH,
                                   GruParams& grad, GruProjection& dproj) {
  const Matrix& H = c.h_prev;
  Matrix d_active = scale_columns(dH, c.mask);
  Matrix dH_prev = dH - d_active;  // inactive columns pass straight through

  const Matrix dz = d_active.cwiseProduct(c.h_tilde - H);
  const Matrix dh_tilde = d_active.cwiseProduct(c.z);
  dH_prev += d_active.cwiseProduct((1.0 - c.z.array()).matrix());

  dproj.h = dh_tilde.cwiseProduct((1.0 - c.h_tilde.array().square()).matrix());
  const Matrix rh = c.r.cwiseProduct(H);
  grad.U_h.noalias() += dproj.h * rh.transpose();
  const Matrix drh = p.U_h.transpose() * dproj.h;
  const Matrix dr = drh.cwiseProduct(H);
  dH_prev += drh.cwiseProduct(c.r);

  dproj.z = dz.cwiseProduct(c.z.cwiseProduct((1.0 - c.z.array()).matrix()));
  dproj.r = dr.cwiseProduct(c.r.cwiseProduct((1.0 - c.r.array()).matrix()));
  grad.U_z.noalias() += dproj.z * H.transpose();
  grad.U_r.noalias() += dproj.r * H.transpose();
  dH_prev.noalias() += p.U_z.transpose() * dproj.z;
  dH_prev.noalias() += p.U_r.transpose() * dproj.r;
  return dH_prev;
}

void gru_project_backward(const GruParams& p, const Matrix& X, const GruProjection& dproj,
                          GruParams& grad, Matrix* dX) {
  grad.W_z.noalias() += dproj.z * X.transpose();
  grad.W_r.noalias() += dproj.r * X.transpose();
  grad.W_h.noalias() += dproj.h * X.transpose();
  grad.b_z += dproj.z.rowwise().sum();
  grad.b_r += dproj.r.rowwise().sum();
  grad.b_h += dproj.h.rowwise().sum();
  if (dX != nullptr) {
    dX->noalias() += p.W_z.transpose() * dproj.z;
    dX->noalias() += p.W_r.transpose() * dproj.r;
    dX->noalias() += p.W_h.transpose() * dproj.h;
  }
}

Vector softmax(const Vector& scores) {
  if (scores.size() == 0) throw Error(ErrorCode::kEmptyInput, "softmax of an empty vector");
  const Vector e = (scores.array() - scores.maxCoeff()).exp().matrix();
  return e / e.sum();
}

double bce_loss(double prediction, bool label) {
  const double p = std::clamp(prediction, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return label ? -std::log(p) : -std::log(1.0 - p);
}

double bce_logit_gradient(double prediction, bool label) {
  if (prediction < kProbabilityClamp || prediction > 1.0 - kProbabilityClamp) return 0.0;
  return prediction - (label ? 1.0 : 0.0);
}

void Adam::step(std::span<const ParamRef> params, std::span<const ParamRef> grads) {
  if (params.size() != grads.size())
    throw Error(ErrorCode::kShapeMismatch, "adam: parameter/gradient count differs");
  if (m_.empty()) {
    for (const ParamRef& p : params) {
      m_.emplace_back(p.size, 0.0);
      v_.emplace_back(p.size, 0.0);
    }
  }
  if (m_.size() != params.size())
    throw Error(ErrorCode::kShapeMismatch, "adam: parameter set changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size != grads[i].size || params[i].size != m_[i].size())
      throw Error(ErrorCode::kShapeMismatch, "adam: shape mismatch for " + params[i].name);
  }

  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* w = params[i].data;
    const double* g = grads[i].data;
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < m.size(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      w[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

GradCheckReport grad_check(const std::function<double()>& loss, std::span<const ParamRef> params,
                           std::span<const ParamRef> analytic, std::size_t probe_count,
                           SplitMix64& rng, double step) {
  if (params.size() != analytic.size())
    throw Error(ErrorCode::kShapeMismatch, "grad_check: parameter/gradient count differs");
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size != analytic[i].size)
      throw Error(ErrorCode::kShapeMismatch, "grad_check: shape mismatch for " + params[i].name);
    for (std::size_t k = 0; k < params[i].size; ++k) slots.emplace_back(i, k);
  }
  // Distinct probes while they last.
  rng.shuffle(std::span(slots));
  const std::size_t n = std::min(probe_count, slots.size());

  GradCheckReport report;
  for (std::size_t s = 0; s < n; ++s) {
    const auto [i, k] = slots[s];
    double& w = params[i].data[k];
    const double saved = w;
    w = saved + step;
    const double up = loss();
    w = saved - step;
    const double down = loss();
    w = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw Error(ErrorCode::kNonFiniteLoss, "grad_check: loss not finite at " + params[i].name);
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic[i].data[k];
    const double err =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    ++report.probes;
    if (err > report.max_relative_error || report.worst_parameter.empty()) {
      report.max_relative_error = std::max(report.max_relative_error, err);
      report.worst_parameter = params[i].name + "[" + std::to_string(k) + "]";
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

}  // namespace ima::nn
