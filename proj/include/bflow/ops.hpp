#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bflow/rng.hpp"
#include "bflow/tensor.hpp"

namespace bflow {

// Layer primitives. Convolutions are exact cross-correlations; sums are
// accumulated in double and stored back as float32.

// weights [co, ci, kh, kw]
Tensor conv2d(const Tensor& input, const Tensor& weights, const std::vector<float>& bias,
              int stride, int pad);

struct ConvGrads {
  Tensor input;
  Tensor weights;
  std::vector<float> bias;
};

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                          int stride, int pad);

// Adjoint of conv2d: for weights W viewed both ways,
// <conv2d(x, W), y> == <x, deconv2d(y, W)>. weights [c_in, c_out, kh, kw].
Tensor deconv2d(const Tensor& input, const Tensor& weights, const std::vector<float>& bias,
                int stride, int pad);
ConvGrads deconv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                            int stride, int pad);

// 2x2/stride-2 max pooling. Requires even H and W. Window ties are broken
// toward the smallest flat index so Siamese equality tests are bit-exact.
std::pair<Tensor, PoolIndices> maxpool2x2(const Tensor& input);

// Places each value at its recorded argmax position, zeros elsewhere.
Tensor unpool2x2(const Tensor& input, const PoolIndices& indices);

// Gradient routing through the recorded indices.
Tensor maxpool2x2_backward(const Tensor& grad_out, const PoolIndices& indices);
Tensor unpool2x2_backward(const Tensor& grad_out, const PoolIndices& indices);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

struct DropoutMask {
  float keep_scale = 1.0f;  // 1 / (1 - rate)
  std::vector<uint8_t> keep;
};

// Inverted dropout: kept activations are scaled by 1/(1-rate) at train time.
Tensor dropout_train(const Tensor& x, float rate, Rng& rng, DropoutMask& mask_out);
Tensor dropout_backward(const Tensor& grad_out, const DropoutMask& mask);

// Per-pixel softmax over exactly two channels.
Tensor softmax2(const Tensor& logits);
Tensor softmax2_backward(const Tensor& probs, const Tensor& grad_probs);

Tensor concat_channels(const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> split_channels_half(const Tensor& x);

// Double-precision single-image conv/deconv on raw [c, h, w] buffers.
// Used by the excitation propagation, which runs entirely in double.
void conv2d_field(const double* x, int ci, int h, int w, const double* wt, int co, int kh, int kw,
                  int stride, int pad, double* out, int oh, int ow);
void deconv2d_field(const double* x, int cin, int h, int w, const double* wt, int cout, int kh,
                    int kw, int stride, int pad, double* out, int oh, int ow);

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}
inline int deconv_out_dim(int in, int k, int stride, int pad) {
  return (in - 1) * stride + k - 2 * pad;
}

}  // namespace bflow
