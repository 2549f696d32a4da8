#include "bflow/adam.hpp"

#include <cmath>

namespace bflow {

Tensor& ParamStore::add(const std::string& name, Tensor t) {
  BFLOW_CHECK(!has(name), "param store: duplicate parameter '", name, "'");
  m[name] = Tensor(t.n, t.c, t.h, t.w, 0.0f);
  v[name] = Tensor(t.n, t.c, t.h, t.w, 0.0f);
  return params[name] = std::move(t);
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params.find(name);
  BFLOW_CHECK(it != params.end(), "param store: unknown parameter '", name, "'");
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params.find(name);
  BFLOW_CHECK(it != params.end(), "param store: unknown parameter '", name, "'");
  return it->second;
}

void adam_step(ParamStore& store, const std::map<std::string, Tensor>& grads, float lr,
               const AdamConfig& cfg) {
  for (const auto& [name, g] : grads) {
    const Tensor& p = store.get(name);
    BFLOW_CHECK(g.same_shape(p), "adam_step: gradient shape ", g.shape_str(),
                " does not match parameter '", name, "' ", p.shape_str());
    BFLOW_CHECK(g.all_finite(), "adam_step: non-finite gradient for '", name,
                "', step rejected");
  }
  store.step += 1;
  const double t = static_cast<double>(store.step);
  const double bc1 = 1.0 - std::pow(static_cast<double>(cfg.beta1), t);
  const double bc2 = 1.0 - std::pow(static_cast<double>(cfg.beta2), t);
  for (const auto& [name, g] : grads) {
    Tensor& p = store.get(name);
    Tensor& m = store.m.at(name);
    Tensor& v = store.v.at(name);
    for (size_t i = 0; i < p.size(); ++i) {
      m.data[i] = cfg.beta1 * m.data[i] + (1.0f - cfg.beta1) * g.data[i];
      v.data[i] = cfg.beta2 * v.data[i] + (1.0f - cfg.beta2) * g.data[i] * g.data[i];
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

}  // namespace bflow
