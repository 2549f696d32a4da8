#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "bflow/tensor.hpp"

namespace bflow {

// Named parameters plus Adam state. Single-writer: one training loop owns
// the store; concurrent readers must snapshot.
struct ParamStore {
  std::map<std::string, Tensor> params;
  std::map<std::string, Tensor> m;  // first moments, same shapes as params
  std::map<std::string, Tensor> v;  // second moments
  uint64_t step = 0;

  Tensor& add(const std::string& name, Tensor t);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const { return params.count(name) > 0; }
};

struct AdamConfig {
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// One Adam update over every parameter that has a gradient entry.
// Rejects non-finite gradients before touching any state.
void adam_step(ParamStore& store, const std::map<std::string, Tensor>& grads, float lr,
               const AdamConfig& cfg = {});

}  // namespace bflow
