#pragma once

#include <cstdint>
#include <vector>

#include "ima/model.hpp"

namespace ima::model {

struct GradSuiteConfig {
  int hidden = 8;      // d
  int rules = 3;       // R
  int length = 5;      // L, tokens per rule and in the question
  int embed_dim = 16;
  int iterations = 4;  // T
  std::size_t probes = 200;
  std::uint64_t seed = 0;
};

struct GradSuiteResult {
  Variant variant = Variant::kGate;
  nn::GradCheckReport report;
};

/// Gradient check of bce_loss o forward on a synthetic example. The check point
/// is generic: weights at twice the init range, biases uniform in +-0.5, so no
/// probed gradient sits below the finite-difference noise floor by accident.
GradSuiteResult grad_check_variant(Variant variant, const GradSuiteConfig& config);

std::vector<GradSuiteResult> grad_check_suite(const GradSuiteConfig& config);

}  // namespace ima::model
