#include "bflow/excitation.hpp"

#include <algorithm>
#include <cmath>

#include "bflow/ops.hpp"

namespace bflow {

double RelevanceMap::total() const {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

bool RelevanceMap::nonnegative() const {
  for (double x : v)
    if (x < 0.0) return false;
  return true;
}

namespace {

RelevanceMap from_tensor(const Tensor& t) {
  BFLOW_CHECK(t.n == 1, "excitation: expected batch-1 tensors, got ", t.shape_str());
  RelevanceMap f(t.c, t.h, t.w);
  for (size_t i = 0; i < t.data.size(); ++i) f.v[i] = t.data[i];
  return f;
}

std::vector<double> clip_pos(const Tensor& w) {
  std::vector<double> out(w.size());
  for (size_t i = 0; i < w.size(); ++i) out[i] = w.data[i] > 0.0f ? w.data[i] : 0.0;
  return out;
}

}  // namespace

LinOpPos LinOpPos::from_conv(const Tensor& weights, int stride, int pad) {
  LinOpPos op;
  op.is_deconv = false;
  op.out_ch = weights.n;
  op.in_ch = weights.c;
  op.kh = weights.h;
  op.kw = weights.w;
  op.stride = stride;
  op.pad = pad;
  op.wpos = clip_pos(weights);
  return op;
}

LinOpPos LinOpPos::from_deconv(const Tensor& weights, int stride, int pad) {
  LinOpPos op;
  op.is_deconv = true;
  op.in_ch = weights.n;
  op.out_ch = weights.c;
  op.kh = weights.h;
  op.kw = weights.w;
  op.stride = stride;
  op.pad = pad;
  op.wpos = clip_pos(weights);
  return op;
}

RelevanceMap LinOpPos::apply(const RelevanceMap& x) const {
  BFLOW_CHECK(x.c == in_ch, "excitation: field has ", x.c, " channels, layer expects ", in_ch);
  if (is_deconv) {
    RelevanceMap y(out_ch, deconv_out_dim(x.h, kh, stride, pad), deconv_out_dim(x.w, kw, stride, pad));
    deconv2d_field(x.v.data(), in_ch, x.h, x.w, wpos.data(), out_ch, kh, kw, stride, pad,
                   y.v.data(), y.h, y.w);
    return y;
  }
  RelevanceMap y(out_ch, conv_out_dim(x.h, kh, stride, pad), conv_out_dim(x.w, kw, stride, pad));
  conv2d_field(x.v.data(), in_ch, x.h, x.w, wpos.data(), out_ch, kh, kw, stride, pad, y.v.data(),
               y.h, y.w);
  return y;
}

RelevanceMap LinOpPos::apply_adjoint(const RelevanceMap& y, int out_h, int out_w) const {
  BFLOW_CHECK(y.c == out_ch, "excitation: field has ", y.c, " channels, layer produces ", out_ch);
  RelevanceMap x(in_ch, out_h, out_w);
  if (is_deconv) {
    // adjoint of a deconv is a conv with the same weight buffer
    conv2d_field(y.v.data(), out_ch, y.h, y.w, wpos.data(), in_ch, kh, kw, stride, pad, x.v.data(),
                 x.h, x.w);
  } else {
    deconv2d_field(y.v.data(), out_ch, y.h, y.w, wpos.data(), in_ch, kh, kw, stride, pad,
                   x.v.data(), x.h, x.w);
  }
  return x;
}

RelevanceMap propagate_linear(const RelevanceMap& p_from, const LinOpPos& op,
                              const RelevanceMap& to_acts, bool from_is_output,
                              double* dropped) {
  // Z_n = sum over the other side of w+ * a; q = p / Z; result = a .* (W+ q)
  RelevanceMap z = from_is_output ? op.apply(to_acts)
                                  : op.apply_adjoint(to_acts, p_from.h, p_from.w);
  BFLOW_CHECK(z.c == p_from.c && z.h == p_from.h && z.w == p_from.w,
              "propagate: activation grid does not match relevance grid");
  RelevanceMap q(p_from.c, p_from.h, p_from.w);
  double lost = 0.0;
  for (size_t i = 0; i < q.v.size(); ++i) {
    if (z.v[i] > 0.0) {
      q.v[i] = p_from.v[i] / z.v[i];
    } else {
      lost += p_from.v[i];
      q.v[i] = 0.0;
    }
  }
  if (dropped) *dropped += lost;
  RelevanceMap out = from_is_output ? op.apply_adjoint(q, to_acts.h, to_acts.w) : op.apply(q);
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= to_acts.v[i];
  return out;
}

RelevanceMap route_unpool_down(const RelevanceMap& p_unpooled, const PoolIndices& idx) {
  BFLOW_CHECK(idx.n == 1, "excitation: batch-1 pooling indices expected");
  BFLOW_CHECK(p_unpooled.c == idx.c && p_unpooled.h == idx.in_h && p_unpooled.w == idx.in_w,
              "route_unpool_down: field shape mismatch");
  RelevanceMap out(idx.c, idx.h, idx.w);
  size_t o = 0;
  for (int c = 0; c < idx.c; ++c) {
    const double* src = p_unpooled.v.data() + static_cast<size_t>(c) * idx.in_h * idx.in_w;
    for (int i = 0; i < idx.h * idx.w; ++i, ++o) out.v[o] = src[idx.idx[o]];
  }
  return out;
}

RelevanceMap route_unpool_up(const RelevanceMap& p_pooled, const PoolIndices& idx) {
  BFLOW_CHECK(idx.n == 1, "excitation: batch-1 pooling indices expected");
  BFLOW_CHECK(p_pooled.c == idx.c && p_pooled.h == idx.h && p_pooled.w == idx.w,
              "route_unpool_up: field shape mismatch");
  RelevanceMap out(idx.c, idx.in_h, idx.in_w);
  size_t o = 0;
  for (int c = 0; c < idx.c; ++c) {
    double* dst = out.v.data() + static_cast<size_t>(c) * idx.in_h * idx.in_w;
    for (int i = 0; i < idx.h * idx.w; ++i, ++o) dst[idx.idx[o]] = p_pooled.v[o];
  }
  return out;
}

RelevanceMap swap_relevance_halves(const RelevanceMap& p) {
  auto [a, b] = split_relevance_half(p);
  RelevanceMap out(p.c, p.h, p.w);
  const size_t half = b.v.size();
  std::copy(b.v.begin(), b.v.end(), out.v.begin());
  std::copy(a.v.begin(), a.v.end(), out.v.begin() + half);
  return out;
}

std::pair<RelevanceMap, RelevanceMap> split_relevance_half(const RelevanceMap& p) {
  BFLOW_CHECK(p.c % 2 == 0, "split_relevance_half: odd channel count ", p.c);
  const int hc = p.c / 2;
  RelevanceMap a(hc, p.h, p.w), b(hc, p.h, p.w);
  const size_t plane = static_cast<size_t>(p.h) * p.w;
  std::copy(p.v.begin(), p.v.begin() + hc * plane, a.v.begin());
  std::copy(p.v.begin() + hc * plane, p.v.end(), b.v.begin());
  return {std::move(a), std::move(b)};
}

Excitation::Excitation(const Fcsn& net) : net_(net) {
  const FcsnConfig& cfg = net.config();
  stages_ = cfg.pool_stages();
  const int dpad = (cfg.decoder_kernel - 1) / 2;
  for (int i = 0; i <= stages_; ++i) {
    dec_ops_.push_back(LinOpPos::from_deconv(net.store().get("dec" + std::to_string(i) + ".w"), 1,
                                             i == 0 ? 0 : dpad));
  }
  head_op_ = LinOpPos::from_deconv(net.store().get("head.w"), 1, (cfg.head_kernel - 1) / 2);
}

Excitation::Plan Excitation::make_plan(const BranchCache& cache) const {
  cache.validate_against(net_.config());
  Plan plan;
  plan.indices = &cache.indices;
  plan.jfr = from_tensor(cache.jfr);
  for (const Tensor& t : cache.dec_acts) plan.dec_acts.push_back(from_tensor(t));
  for (const Tensor& t : cache.unpool_acts) plan.unpool_acts.push_back(from_tensor(t));
  plan.probs = from_tensor(cache.probs);

  // Backward-leg denominators: Z = op(applied to the layer's input acts).
  plan.z_back.resize(stages_ + 2);
  plan.z_back[0] = dec_ops_[0].apply(plan.jfr);
  for (int i = 1; i <= stages_; ++i) plan.z_back[i] = dec_ops_[i].apply(plan.unpool_acts[i - 1]);
  plan.z_back[stages_ + 1] = head_op_.apply(plan.dec_acts[stages_]);

  // Forward-leg denominators: Z = op^T(applied to the layer's output acts).
  plan.z_fwd.resize(stages_ + 2);
  plan.z_fwd[0] = dec_ops_[0].apply_adjoint(plan.dec_acts[0], plan.jfr.h, plan.jfr.w);
  for (int i = 1; i <= stages_; ++i)
    plan.z_fwd[i] =
        dec_ops_[i].apply_adjoint(plan.dec_acts[i], plan.unpool_acts[i - 1].h,
                                  plan.unpool_acts[i - 1].w);
  plan.z_fwd[stages_ + 1] =
      head_op_.apply_adjoint(plan.probs, plan.dec_acts[stages_].h, plan.dec_acts[stages_].w);
  return plan;
}

namespace {

// Same Eq.-1 step but with a precomputed denominator field.
RelevanceMap step_with_z(const RelevanceMap& p_from, const LinOpPos& op,
                         const RelevanceMap& to_acts, const RelevanceMap& z, bool from_is_output,
                         double* dropped) {
  RelevanceMap q(p_from.c, p_from.h, p_from.w);
  double lost = 0.0;
  for (size_t i = 0; i < q.v.size(); ++i) {
    if (z.v[i] > 0.0) {
      q.v[i] = p_from.v[i] / z.v[i];
    } else {
      lost += p_from.v[i];
    }
  }
  if (dropped) *dropped += lost;
  RelevanceMap out = from_is_output ? op.apply_adjoint(q, to_acts.h, to_acts.w) : op.apply(q);
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= to_acts.v[i];
  return out;
}

}  // namespace

RelevanceMap Excitation::backward_to_jfr(const ExcitationSeed& seed, const Plan& plan,
                                         double* dropped) const {
  const RelevanceMap& probs = plan.probs;
  RelevanceMap p(2, probs.h, probs.w);
  if (!seed.pixels.empty()) {
    const double mass = 1.0 / static_cast<double>(seed.pixels.size());
    for (const auto& [x, y] : seed.pixels) {
      BFLOW_CHECK(x >= 0 && x < probs.w && y >= 0 && y < probs.h,
                  "excitation: seed pixel (", x, ",", y, ") out of bounds");
      p.at(1, y, x) += mass;  // boundary-class pre-activation
    }
  }
  p = step_with_z(p, head_op_, plan.dec_acts[stages_], plan.z_back[stages_ + 1], true, dropped);
  for (int i = stages_; i >= 1; --i) {
    p = step_with_z(p, dec_ops_[i], plan.unpool_acts[i - 1], plan.z_back[i], true, dropped);
    p = route_unpool_down(p, (*plan.indices)[stages_ - i]);
  }
  return step_with_z(p, dec_ops_[0], plan.jfr, plan.z_back[0], true, dropped);
}

AttentionMap Excitation::forward_from_jfr(const RelevanceMap& jfr_rel, const Plan& plan,
                                          double* dropped) const {
  BFLOW_CHECK(jfr_rel.c == plan.jfr.c && jfr_rel.h == plan.jfr.h && jfr_rel.w == plan.jfr.w,
              "forward_from_jfr: relevance shape does not match the JFR");
  RelevanceMap p = step_with_z(jfr_rel, dec_ops_[0], plan.dec_acts[0], plan.z_fwd[0], false, dropped);
  for (int i = 1; i <= stages_; ++i) {
    p = route_unpool_up(p, (*plan.indices)[stages_ - i]);
    p = step_with_z(p, dec_ops_[i], plan.dec_acts[i], plan.z_fwd[i], false, dropped);
  }
  p = step_with_z(p, head_op_, plan.probs, plan.z_fwd[stages_ + 1], false, dropped);
  AttentionMap att(p.w, p.h);
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) att.at(x, y) = p.at(1, y, x);
  return att;
}

RelevanceMap Excitation::backward_to_jfr(const ExcitationSeed& seed,
                                         const BranchCache& cache) const {
  return backward_to_jfr(seed, make_plan(cache));
}

AttentionMap Excitation::forward_from_jfr(const RelevanceMap& jfr_rel,
                                          const BranchCache& target) const {
  return forward_from_jfr(jfr_rel, make_plan(target));
}

AttentionMap Excitation::attention(const ExcitationSeed& seed, const Plan& seed_plan,
                                   const Plan& target_plan) const {
  const RelevanceMap seed_view = backward_to_jfr(seed, seed_plan);
  return forward_from_jfr(swap_relevance_halves(seed_view), target_plan);
}

void Excitation::dump_pgm(const std::string& path, const RelevanceMap& rel, int channel) {
  BFLOW_CHECK(channel >= 0 && channel < rel.c, "dump_pgm: channel ", channel, " out of range");
  double mx = 0.0;
  for (int y = 0; y < rel.h; ++y)
    for (int x = 0; x < rel.w; ++x) mx = std::max(mx, rel.at(channel, y, x));
  Planef plane(rel.w, rel.h);
  const double scale = mx > 0.0 ? 1.0 / mx : 0.0;
  for (int y = 0; y < rel.h; ++y)
    for (int x = 0; x < rel.w; ++x)
      plane.at(x, y) = static_cast<float>(rel.at(channel, y, x) * scale);
  write_pgm(path, plane, 65535);
}

std::vector<double> attention_score_pair(const std::vector<std::pair<int, int>>& et_pixels,
                                         const std::vector<std::pair<int, int>>& et1_pixels,
                                         const AttentionMap& att_t_to_t1,
                                         const AttentionMap& att_t1_to_t) {
  std::vector<double> s(et_pixels.size() * et1_pixels.size());
  for (size_t i = 0; i < et_pixels.size(); ++i) {
    const double s_j_to_i = att_t1_to_t.at(et_pixels[i].first, et_pixels[i].second);
    for (size_t j = 0; j < et1_pixels.size(); ++j) {
      const double s_i_to_j = att_t_to_t1.at(et1_pixels[j].first, et1_pixels[j].second);
      s[i * et1_pixels.size() + j] = 0.5 * (s_i_to_j + s_j_to_i);
    }
  }
  return s;
}

}  // namespace bflow
