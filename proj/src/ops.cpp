#include "bflow/ops.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace bflow {

using MatD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatD = Eigen::Map<MatD>;
using ConstMapMatD = Eigen::Map<const MatD>;

namespace {

// cols is K x P with K = ci*kh*kw and P = oh*ow.
void im2col(const double* x, int ci, int h, int w, int kh, int kw, int stride, int pad, int oh,
            int ow, double* cols) {
  const int P = oh * ow;
  for (int c = 0; c < ci; ++c) {
    const double* plane = x + static_cast<size_t>(c) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        double* row = cols + (static_cast<size_t>(c) * kh * kw + ky * kw + kx) * P;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          double* dst = row + static_cast<size_t>(oy) * ow;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + ow, 0.0);
            continue;
          }
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            dst[ox] = (ix >= 0 && ix < w) ? plane[static_cast<size_t>(iy) * w + ix] : 0.0;
          }
        }
      }
    }
  }
}

// Scatter-add of cols back onto the [ci, h, w] grid (adjoint of im2col).
void col2im(const double* cols, int ci, int h, int w, int kh, int kw, int stride, int pad, int oh,
            int ow, double* x) {
  const int P = oh * ow;
  std::fill(x, x + static_cast<size_t>(ci) * h * w, 0.0);
  for (int c = 0; c < ci; ++c) {
    double* plane = x + static_cast<size_t>(c) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const double* row = cols + (static_cast<size_t>(c) * kh * kw + ky * kw + kx) * P;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          const double* src = row + static_cast<size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) plane[static_cast<size_t>(iy) * w + ix] += src[ox];
          }
        }
      }
    }
  }
}

std::vector<double> to_f64(const float* p, size_t n) {
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = p[i];
  return out;
}

void check_conv_args(const Tensor& input, const Tensor& weights, size_t bias_size, int stride,
                     int pad, bool deconv) {
  BFLOW_CHECK(stride >= 1, "conv2d: stride must be >= 1, got ", stride);
  BFLOW_CHECK(pad >= 0, "conv2d: pad must be >= 0, got ", pad);
  const char* op = deconv ? "deconv2d" : "conv2d";
  // conv weights [co, ci, kh, kw]; deconv weights [cin, cout, kh, kw]
  const int wanted = deconv ? weights.n : weights.c;
  BFLOW_CHECK(input.c == wanted, op, ": channel mismatch, input ", input.shape_str(),
              " vs weights ", weights.shape_str());
  const int out_ch = deconv ? weights.c : weights.n;
  BFLOW_CHECK(bias_size == 0 || bias_size == static_cast<size_t>(out_ch), op,
              ": bias size ", bias_size, " does not match ", out_ch, " output channels");
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weights, const std::vector<float>& bias,
              int stride, int pad) {
  check_conv_args(input, weights, bias.size(), stride, pad, false);
  const int co = weights.n, ci = weights.c, kh = weights.h, kw = weights.w;
  const int oh = conv_out_dim(input.h, kh, stride, pad);
  const int ow = conv_out_dim(input.w, kw, stride, pad);
  BFLOW_CHECK(oh >= 1 && ow >= 1, "conv2d: kernel ", weights.shape_str(),
              " does not fit input ", input.shape_str());

  const int K = ci * kh * kw, P = oh * ow;
  std::vector<double> wt = to_f64(weights.data.data(), weights.size());
  std::vector<double> xin(static_cast<size_t>(ci) * input.h * input.w);
  std::vector<double> cols(static_cast<size_t>(K) * P);
  std::vector<double> out(static_cast<size_t>(co) * P);

  Tensor y(input.n, co, oh, ow);
  ConstMapMatD W(wt.data(), co, K);
  for (int n = 0; n < input.n; ++n) {
    for (size_t i = 0; i < xin.size(); ++i) xin[i] = input.data[n * xin.size() + i];
    im2col(xin.data(), ci, input.h, input.w, kh, kw, stride, pad, oh, ow, cols.data());
    MapMatD(out.data(), co, P).noalias() = W * ConstMapMatD(cols.data(), K, P);
    float* dst = y.plane(n, 0);
    for (int c = 0; c < co; ++c) {
      const double b = bias.empty() ? 0.0 : bias[c];
      for (int p = 0; p < P; ++p)
        dst[static_cast<size_t>(c) * P + p] = static_cast<float>(out[static_cast<size_t>(c) * P + p] + b);
    }
  }
  return y;
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                          int stride, int pad) {
  check_conv_args(input, weights, 0, stride, pad, false);
  const int co = weights.n, ci = weights.c, kh = weights.h, kw = weights.w;
  const int oh = conv_out_dim(input.h, kh, stride, pad);
  const int ow = conv_out_dim(input.w, kw, stride, pad);
  BFLOW_CHECK(grad_out.n == input.n && grad_out.c == co && grad_out.h == oh && grad_out.w == ow,
              "conv2d_backward: grad shape ", grad_out.shape_str(), " does not match output (",
              input.n, ",", co, ",", oh, ",", ow, ")");

  const int K = ci * kh * kw, P = oh * ow;
  std::vector<double> wt = to_f64(weights.data.data(), weights.size());
  std::vector<double> xin(static_cast<size_t>(ci) * input.h * input.w);
  std::vector<double> g(static_cast<size_t>(co) * P);
  std::vector<double> cols(static_cast<size_t>(K) * P);
  std::vector<double> gcols(static_cast<size_t>(K) * P);
  std::vector<double> gx(xin.size());
  MatD gW = MatD::Zero(co, K);
  std::vector<double> gb(co, 0.0);

  ConvGrads out;
  out.input = Tensor(input.n, input.c, input.h, input.w);
  out.weights = Tensor(weights.n, weights.c, weights.h, weights.w);
  out.bias.assign(co, 0.0f);

  ConstMapMatD W(wt.data(), co, K);
  for (int n = 0; n < input.n; ++n) {
    for (size_t i = 0; i < g.size(); ++i) g[i] = grad_out.data[n * g.size() + i];
    for (size_t i = 0; i < xin.size(); ++i) xin[i] = input.data[n * xin.size() + i];
    ConstMapMatD G(g.data(), co, P);
    // d/dinput: scatter W^T * G back through the im2col geometry
    MapMatD(gcols.data(), K, P).noalias() = W.transpose() * G;
    col2im(gcols.data(), ci, input.h, input.w, kh, kw, stride, pad, oh, ow, gx.data());
    for (size_t i = 0; i < gx.size(); ++i)
      out.input.data[n * gx.size() + i] = static_cast<float>(gx[i]);
    // d/dW and d/dbias
    im2col(xin.data(), ci, input.h, input.w, kh, kw, stride, pad, oh, ow, cols.data());
    gW.noalias() += G * ConstMapMatD(cols.data(), K, P).transpose();
    for (int c = 0; c < co; ++c)
      for (int p = 0; p < P; ++p) gb[c] += g[static_cast<size_t>(c) * P + p];
  }
  for (size_t i = 0; i < out.weights.size(); ++i)
    out.weights.data[i] = static_cast<float>(gW.data()[i]);
  for (int c = 0; c < co; ++c) out.bias[c] = static_cast<float>(gb[c]);
  return out;
}

Tensor deconv2d(const Tensor& input, const Tensor& weights, const std::vector<float>& bias,
                int stride, int pad) {
  check_conv_args(input, weights, bias.size(), stride, pad, true);
  const int cin = weights.n, cout = weights.c, kh = weights.h, kw = weights.w;
  const int oh = deconv_out_dim(input.h, kh, stride, pad);
  const int ow = deconv_out_dim(input.w, kw, stride, pad);
  BFLOW_CHECK(oh >= 1 && ow >= 1, "deconv2d: output collapses for input ", input.shape_str(),
              " kernel ", weights.shape_str());

  const int K = cout * kh * kw, P = input.h * input.w;
  std::vector<double> wt = to_f64(weights.data.data(), weights.size());
  std::vector<double> xin(static_cast<size_t>(cin) * P);
  std::vector<double> cols(static_cast<size_t>(K) * P);
  std::vector<double> yplane(static_cast<size_t>(cout) * oh * ow);

  Tensor y(input.n, cout, oh, ow);
  ConstMapMatD W(wt.data(), cin, K);
  for (int n = 0; n < input.n; ++n) {
    for (size_t i = 0; i < xin.size(); ++i) xin[i] = input.data[n * xin.size() + i];
    MapMatD(cols.data(), K, P).noalias() =
        W.transpose() * ConstMapMatD(xin.data(), cin, P);
    col2im(cols.data(), cout, oh, ow, kh, kw, stride, pad, input.h, input.w, yplane.data());
    float* dst = y.plane(n, 0);
    for (int c = 0; c < cout; ++c) {
      const double b = bias.empty() ? 0.0 : bias[c];
      const size_t off = static_cast<size_t>(c) * oh * ow;
      for (int p = 0; p < oh * ow; ++p) dst[off + p] = static_cast<float>(yplane[off + p] + b);
    }
  }
  return y;
}

ConvGrads deconv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                            int stride, int pad) {
  check_conv_args(input, weights, 0, stride, pad, true);
  const int cin = weights.n, cout = weights.c, kh = weights.h, kw = weights.w;
  const int oh = deconv_out_dim(input.h, kh, stride, pad);
  const int ow = deconv_out_dim(input.w, kw, stride, pad);
  BFLOW_CHECK(grad_out.n == input.n && grad_out.c == cout && grad_out.h == oh && grad_out.w == ow,
              "deconv2d_backward: grad shape ", grad_out.shape_str(),
              " does not match output (", input.n, ",", cout, ",", oh, ",", ow, ")");

  const int K = cout * kh * kw, P = input.h * input.w;
  std::vector<double> wt = to_f64(weights.data.data(), weights.size());
  std::vector<double> g(static_cast<size_t>(cout) * oh * ow);
  std::vector<double> gcols(static_cast<size_t>(K) * P);
  std::vector<double> xin(static_cast<size_t>(cin) * P);
  MatD gW = MatD::Zero(cin, K);
  std::vector<double> gb(cout, 0.0);

  ConvGrads out;
  out.input = Tensor(input.n, input.c, input.h, input.w);
  out.weights = Tensor(weights.n, weights.c, weights.h, weights.w);
  out.bias.assign(cout, 0.0f);

  ConstMapMatD W(wt.data(), cin, K);
  for (int n = 0; n < input.n; ++n) {
    for (size_t i = 0; i < g.size(); ++i) g[i] = grad_out.data[n * g.size() + i];
    im2col(g.data(), cout, oh, ow, kh, kw, stride, pad, input.h, input.w, gcols.data());
    ConstMapMatD Gc(gcols.data(), K, P);
    // d/dinput is a plain convolution of grad_out with the same weights
    std::vector<double> gx(static_cast<size_t>(cin) * P);
    MapMatD(gx.data(), cin, P).noalias() = W * Gc;
    for (size_t i = 0; i < gx.size(); ++i)
      out.input.data[n * gx.size() + i] = static_cast<float>(gx[i]);
    for (size_t i = 0; i < xin.size(); ++i) xin[i] = input.data[n * xin.size() + i];
    gW.noalias() += ConstMapMatD(xin.data(), cin, P) * Gc.transpose();
    for (int c = 0; c < cout; ++c) {
      const size_t off = static_cast<size_t>(c) * oh * ow;
      for (int p = 0; p < oh * ow; ++p) gb[c] += g[off + p];
    }
  }
  for (size_t i = 0; i < out.weights.size(); ++i)
    out.weights.data[i] = static_cast<float>(gW.data()[i]);
  for (int c = 0; c < cout; ++c) out.bias[c] = static_cast<float>(gb[c]);
  return out;
}

std::pair<Tensor, PoolIndices> maxpool2x2(const Tensor& input) {
  BFLOW_CHECK(input.h % 2 == 0 && input.w % 2 == 0,
              "maxpool2x2: spatial dims must be even, got ", input.shape_str());
  const int oh = input.h / 2, ow = input.w / 2;
  Tensor y(input.n, input.c, oh, ow);
  PoolIndices pi;
  pi.n = input.n;
  pi.c = input.c;
  pi.h = oh;
  pi.w = ow;
  pi.in_h = input.h;
  pi.in_w = input.w;
  pi.idx.resize(y.size());
  size_t o = 0;
  for (int n = 0; n < input.n; ++n)
    for (int c = 0; c < input.c; ++c) {
      const float* src = input.plane(n, c);
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox, ++o) {
          int best = (2 * oy) * input.w + 2 * ox;
          float bv = src[best];
          const int cand[3] = {best + 1, best + input.w, best + input.w + 1};
          for (int k = 0; k < 3; ++k)
            if (src[cand[k]] > bv) {  // strict: smallest flat index wins ties
              bv = src[cand[k]];
              best = cand[k];
            }
          y.data[o] = bv;
          pi.idx[o] = best;
        }
    }
  return {std::move(y), std::move(pi)};
}

namespace {
void check_indices(const Tensor& pooled, const PoolIndices& pi) {
  BFLOW_CHECK(pooled.n == pi.n && pooled.c == pi.c && pooled.h == pi.h && pooled.w == pi.w,
              "unpool2x2: input shape ", pooled.shape_str(), " does not match recorded (", pi.n,
              ",", pi.c, ",", pi.h, ",", pi.w, ")");
}
}  // namespace

Tensor unpool2x2(const Tensor& input, const PoolIndices& pi) {
  check_indices(input, pi);
  Tensor y(pi.n, pi.c, pi.in_h, pi.in_w, 0.0f);
  size_t o = 0;
  for (int n = 0; n < pi.n; ++n)
    for (int c = 0; c < pi.c; ++c) {
      float* dst = y.plane(n, c);
      for (int oy = 0; oy < pi.h; ++oy)
        for (int ox = 0; ox < pi.w; ++ox, ++o) {
          const int32_t id = pi.idx[o];
          const int wy = id / pi.in_w - 2 * oy, wx = id % pi.in_w - 2 * ox;
          BFLOW_CHECK(wy >= 0 && wy <= 1 && wx >= 0 && wx <= 1,
                      "unpool2x2: corrupt index ", id, " outside window at (", oy, ",", ox, ")");
          dst[id] = input.data[o];
        }
    }
  return y;
}

Tensor maxpool2x2_backward(const Tensor& grad_out, const PoolIndices& pi) {
  return unpool2x2(grad_out, pi);
}

Tensor unpool2x2_backward(const Tensor& grad_out, const PoolIndices& pi) {
  BFLOW_CHECK(grad_out.n == pi.n && grad_out.c == pi.c && grad_out.h == pi.in_h &&
                  grad_out.w == pi.in_w,
              "unpool2x2_backward: grad shape ", grad_out.shape_str(), " vs unpooled (", pi.n, ",",
              pi.c, ",", pi.in_h, ",", pi.in_w, ")");
  Tensor y(pi.n, pi.c, pi.h, pi.w);
  size_t o = 0;
  for (int n = 0; n < pi.n; ++n)
    for (int c = 0; c < pi.c; ++c) {
      const float* src = grad_out.plane(n, c);
      for (int i = 0; i < pi.h * pi.w; ++i, ++o) y.data[o] = src[pi.idx[o]];
    }
  return y;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (float& v : y.data) v = v > 0.0f ? v : 0.0f;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  BFLOW_CHECK(x.same_shape(grad_out), "relu_backward: shape mismatch ", x.shape_str(), " vs ",
              grad_out.shape_str());
  Tensor g = grad_out;
  for (size_t i = 0; i < g.size(); ++i)
    if (x.data[i] <= 0.0f) g.data[i] = 0.0f;
  return g;
}

Tensor dropout_train(const Tensor& x, float rate, Rng& rng, DropoutMask& mask_out) {
  BFLOW_CHECK(rate >= 0.0f && rate < 1.0f, "dropout: rate must be in [0,1), got ", rate);
  mask_out.keep_scale = 1.0f / (1.0f - rate);
  mask_out.keep.resize(x.size());
  Tensor y = x;
  for (size_t i = 0; i < x.size(); ++i) {
    const bool keep = !rng.bernoulli(rate);
    mask_out.keep[i] = keep ? 1 : 0;
    y.data[i] = keep ? x.data[i] * mask_out.keep_scale : 0.0f;
  }
  return y;
}

Tensor dropout_backward(const Tensor& grad_out, const DropoutMask& mask) {
  BFLOW_CHECK(grad_out.size() == mask.keep.size(), "dropout_backward: size mismatch");
  Tensor g = grad_out;
  for (size_t i = 0; i < g.size(); ++i)
    g.data[i] = mask.keep[i] ? g.data[i] * mask.keep_scale : 0.0f;
  return g;
}

Tensor softmax2(const Tensor& logits) {
  BFLOW_CHECK(logits.c == 2, "softmax2: expected 2 channels, got ", logits.shape_str());
  Tensor p(logits.n, 2, logits.h, logits.w);
  const int hw = logits.h * logits.w;
  for (int n = 0; n < logits.n; ++n) {
    const float* z0 = logits.plane(n, 0);
    const float* z1 = logits.plane(n, 1);
    float* p0 = p.plane(n, 0);
    float* p1 = p.plane(n, 1);
    for (int i = 0; i < hw; ++i) {
      const float m = std::max(z0[i], z1[i]);
      const double e0 = std::exp(static_cast<double>(z0[i] - m));
      const double e1 = std::exp(static_cast<double>(z1[i] - m));
      const double s = e0 + e1;
      p0[i] = static_cast<float>(e0 / s);
      p1[i] = static_cast<float>(e1 / s);
    }
  }
  return p;
}

Tensor softmax2_backward(const Tensor& probs, const Tensor& grad_probs) {
  BFLOW_CHECK(probs.same_shape(grad_probs), "softmax2_backward: shape mismatch ",
              probs.shape_str(), " vs ", grad_probs.shape_str());
  Tensor g(probs.n, 2, probs.h, probs.w);
  const int hw = probs.h * probs.w;
  for (int n = 0; n < probs.n; ++n) {
    const float* p0 = probs.plane(n, 0);
    const float* p1 = probs.plane(n, 1);
    const float* g0 = grad_probs.plane(n, 0);
    const float* g1 = grad_probs.plane(n, 1);
    float* o0 = g.plane(n, 0);
    float* o1 = g.plane(n, 1);
    for (int i = 0; i < hw; ++i) {
      // dL/dz_k = p_k * (g_k - sum_j g_j p_j)
      const double dot = static_cast<double>(g0[i]) * p0[i] + static_cast<double>(g1[i]) * p1[i];
      o0[i] = static_cast<float>(p0[i] * (g0[i] - dot));
      o1[i] = static_cast<float>(p1[i] * (g1[i] - dot));
    }
  }
  return g;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  BFLOW_CHECK(a.same_shape(b), "concat: shape mismatch ", a.shape_str(), " vs ", b.shape_str());
  Tensor y(a.n, a.c + b.c, a.h, a.w);
  const size_t plane = static_cast<size_t>(a.h) * a.w;
  for (int n = 0; n < a.n; ++n) {
    std::copy(a.plane(n, 0), a.plane(n, 0) + a.c * plane, y.plane(n, 0));
    std::copy(b.plane(n, 0), b.plane(n, 0) + b.c * plane, y.plane(n, a.c));
  }
  return y;
}

std::pair<Tensor, Tensor> split_channels_half(const Tensor& x) {
  BFLOW_CHECK(x.c % 2 == 0, "split: channel count must be even, got ", x.shape_str());
  const int hc = x.c / 2;
  Tensor a(x.n, hc, x.h, x.w), b(x.n, hc, x.h, x.w);
  const size_t plane = static_cast<size_t>(x.h) * x.w;
  for (int n = 0; n < x.n; ++n) {
    std::copy(x.plane(n, 0), x.plane(n, 0) + hc * plane, a.plane(n, 0));
    std::copy(x.plane(n, hc), x.plane(n, hc) + hc * plane, b.plane(n, 0));
  }
  return {std::move(a), std::move(b)};
}

void conv2d_field(const double* x, int ci, int h, int w, const double* wt, int co, int kh, int kw,
                  int stride, int pad, double* out, int oh, int ow) {
  const int K = ci * kh * kw, P = oh * ow;
  std::vector<double> cols(static_cast<size_t>(K) * P);
  im2col(x, ci, h, w, kh, kw, stride, pad, oh, ow, cols.data());
  MapMatD(out, co, P).noalias() =
      ConstMapMatD(wt, co, K) * ConstMapMatD(cols.data(), K, P);
}

void deconv2d_field(const double* x, int cin, int h, int w, const double* wt, int cout, int kh,
                    int kw, int stride, int pad, double* out, int oh, int ow) {
  const int K = cout * kh * kw, P = h * w;
  std::vector<double> cols(static_cast<size_t>(K) * P);
  MapMatD(cols.data(), K, P).noalias() =
      ConstMapMatD(wt, cin, K).transpose() * ConstMapMatD(x, cin, P);
  col2im(cols.data(), cout, oh, ow, kh, kw, stride, pad, h, w, out);
}

}  // namespace bflow
