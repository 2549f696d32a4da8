#pragma once

#include "bflow/tensor.hpp"

namespace bflow {

// Class weights of the weighted binary cross-entropy. The boundary class
// carries lambda1, the background class lambda2.
struct LossWeights {
  float lambda1 = 1.0f;
  float lambda2 = 0.1f;

  LossWeights() = default;
  LossWeights(float l1, float l2) : lambda1(l1), lambda2(l2) {
    BFLOW_CHECK(l1 > 0.0f && l2 > 0.0f, "loss weights must be positive, got ", l1, ", ", l2);
  }
};

// Probabilities are clamped to [kProbEps, 1-kProbEps] before the log.
constexpr float kProbEps = 1e-7f;

struct LossResult {
  double value = 0.0;
  Tensor grad;  // d loss / d pred, zero where the clamp is active
};

// L = -(1/N) sum[ l1 * y * log(p) + l2 * (1-y) * log(1-p) ].
// `norm` overrides N when the loss is averaged over a larger batch than
// this call covers (0 means use pred.size()).
LossResult weighted_bce_loss(const Tensor& pred, const Tensor& target, const LossWeights& w,
                             size_t norm = 0);

}  // namespace bflow
