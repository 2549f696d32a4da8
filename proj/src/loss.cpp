#include "bflow/loss.hpp"

#include <cmath>

namespace bflow {

LossResult weighted_bce_loss(const Tensor& pred, const Tensor& target, const LossWeights& w,
                             size_t norm) {
  BFLOW_CHECK(pred.same_shape(target), "weighted_bce_loss: shape mismatch ", pred.shape_str(),
              " vs ", target.shape_str());
  BFLOW_CHECK(pred.size() > 0, "weighted_bce_loss: empty tensors");
  const double n = static_cast<double>(norm == 0 ? pred.size() : norm);

  LossResult r;
  r.grad = Tensor(pred.n, pred.c, pred.h, pred.w);
  double acc = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const float y = target.data[i];
    const float p_raw = pred.data[i];
    const float p = std::min(1.0f - kProbEps, std::max(kProbEps, p_raw));
    acc -= w.lambda1 * y * std::log(static_cast<double>(p)) +
           w.lambda2 * (1.0f - y) * std::log(1.0 - static_cast<double>(p));
    // derivative of the clamped expression: zero where the clamp is active
    if (p_raw > kProbEps && p_raw < 1.0f - kProbEps) {
      r.grad.data[i] =
          static_cast<float>((-w.lambda1 * y / p + w.lambda2 * (1.0f - y) / (1.0f - p)) / n);
    } else {
      r.grad.data[i] = 0.0f;
    }
  }
  r.value = acc / n;
  return r;
}

}  // namespace bflow
