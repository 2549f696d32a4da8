#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bflow/common.hpp"

namespace bflow {

// Dense NCHW float32 tensor. The carrier for all network math.
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<float> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, float fill = 0.0f)
      : n(n_), c(c_), h(h_), w(w_), data(static_cast<size_t>(n_) * c_ * h_ * w_, fill) {
    BFLOW_CHECK(n_ >= 0 && c_ >= 0 && h_ >= 0 && w_ >= 0, "tensor: negative dimension");
  }

  size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
  std::string shape_str() const;

  float& at(int in, int ic, int iy, int ix) {
    return data[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
  }
  float at(int in, int ic, int iy, int ix) const {
    return data[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
  }

  float* plane(int in, int ic) { return data.data() + (static_cast<size_t>(in) * c + ic) * h * w; }
  const float* plane(int in, int ic) const {
    return data.data() + (static_cast<size_t>(in) * c + ic) * h * w;
  }

  bool all_finite() const;
  void fill(float v) { std::fill(data.begin(), data.end(), v); }
};

// Pooled-output shape plus, per output cell, the flat spatial index
// (y * W + x within the pre-pool plane) of the window argmax.
struct PoolIndices {
  int n = 0, c = 0, h = 0, w = 0;  // pooled output shape
  int in_h = 0, in_w = 0;          // pre-pool spatial size
  std::vector<int32_t> idx;        // one entry per pooled cell, NCHW order

  size_t size() const { return idx.size(); }
  bool same_shape(const PoolIndices& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w && in_h == o.in_h && in_w == o.in_w;
  }
};

double dot(const Tensor& a, const Tensor& b);
double sum(const Tensor& a);
float max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace bflow
