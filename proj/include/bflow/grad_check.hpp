#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bflow/adam.hpp"

namespace bflow {

struct GradCheckReport {
  std::map<std::string, double> max_rel_err;  // per parameter block
  double worst = 0.0;
  std::string worst_name;
};

// Central finite differences against analytic gradients. `loss_fn` must be
// a deterministic function of the store (dropout disabled). For blocks
// larger than `samples_per_block`, a seeded random subset is probed.
GradCheckReport grad_check(const std::function<double(const ParamStore&)>& loss_fn,
                           ParamStore& store, const std::map<std::string, Tensor>& analytic,
                           double h = 1e-3, int samples_per_block = 24, uint64_t seed = 17);

}  // namespace bflow
