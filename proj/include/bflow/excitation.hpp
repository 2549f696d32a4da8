#pragma once

#include <utility>
#include <vector>

#include "bflow/fcsn.hpp"
#include "bflow/image.hpp"

namespace bflow {

// Per-neuron winning-probability mass over one layer's activation grid.
// The propagation runs entirely in double so that small networks agree
// with exhaustive path enumeration to near machine precision.
struct RelevanceMap {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;

  RelevanceMap() = default;
  RelevanceMap(int c_, int h_, int w_, double fill = 0.0)
      : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, fill) {}

  double& at(int ic, int iy, int ix) { return v[(static_cast<size_t>(ic) * h + iy) * w + ix]; }
  double at(int ic, int iy, int ix) const { return v[(static_cast<size_t>(ic) * h + iy) * w + ix]; }
  double total() const;
  bool nonnegative() const;
};

using AttentionMap = Planed;

// A positively-clipped linear layer (w+ = max(0, w)) with its geometry.
struct LinOpPos {
  bool is_deconv = false;
  int in_ch = 0, out_ch = 0;
  int kh = 0, kw = 0, stride = 1, pad = 0;
  std::vector<double> wpos;  // conv layout [out,in,kh,kw]; deconv layout [in,out,kh,kw]

  static LinOpPos from_conv(const Tensor& weights, int stride, int pad);
  static LinOpPos from_deconv(const Tensor& weights, int stride, int pad);

  RelevanceMap apply(const RelevanceMap& x) const;
  RelevanceMap apply_adjoint(const RelevanceMap& y, int out_h, int out_w) const;
};

// One Eq.-1 step. `to_acts` holds the activations of the layer the mass
// moves onto. With from_is_output=true the mass moves from the layer's
// outputs to its inputs (the backward leg); otherwise roles are reversed
// (the forward leg). Mass hitting a zero denominator is dropped and
// accounted in *dropped when given.
RelevanceMap propagate_linear(const RelevanceMap& p_from, const LinOpPos& op,
                              const RelevanceMap& to_acts, bool from_is_output,
                              double* dropped = nullptr);

// Deterministic index routing through an unpool stage.
RelevanceMap route_unpool_down(const RelevanceMap& p_unpooled, const PoolIndices& idx);
RelevanceMap route_unpool_up(const RelevanceMap& p_pooled, const PoolIndices& idx);

// Channel split of JFR mass into the two encoder halves.
std::pair<RelevanceMap, RelevanceMap> split_relevance_half(const RelevanceMap& p);

// Each branch decodes a self-first fusion, so relevance expressed in the
// seed branch's JFR view [f_seed, f_other] must swap halves before it can
// enter the other branch's decoder, whose input is [f_other, f_seed].
RelevanceMap swap_relevance_halves(const RelevanceMap& p);

// Seed of an excitation run: the pixels of one edgelet on the thinned
// predicted boundary of the seed frame; mass 1 spread uniformly.
struct ExcitationSeed {
  int frame = 0;  // 0 = frame t, 1 = frame t+1
  std::vector<std::pair<int, int>> pixels;  // (x, y)
};

class Excitation {
 public:
  explicit Excitation(const Fcsn& net);

  // Precomputed per-branch denominators; build once per forward_pair branch
  // and reuse across every edgelet of that frame.
  struct Plan {
    std::vector<RelevanceMap> dec_acts;     // stages+1 post-ReLU deconv outputs
    std::vector<RelevanceMap> unpool_acts;  // stages unpool outputs
    RelevanceMap jfr;
    RelevanceMap probs;
    const std::vector<PoolIndices>* indices = nullptr;
    std::vector<RelevanceMap> z_back;  // per deconv layer + head (last)
    std::vector<RelevanceMap> z_fwd;
  };
  Plan make_plan(const BranchCache& cache) const;

  RelevanceMap backward_to_jfr(const ExcitationSeed& seed, const Plan& plan,
                               double* dropped = nullptr) const;
  AttentionMap forward_from_jfr(const RelevanceMap& jfr_rel, const Plan& target_plan,
                                double* dropped = nullptr) const;

  // Convenience overloads matching the module surface; they validate the
  // cache against the config and build a throwaway plan.
  RelevanceMap backward_to_jfr(const ExcitationSeed& seed, const BranchCache& cache) const;
  AttentionMap forward_from_jfr(const RelevanceMap& jfr_rel, const BranchCache& target) const;

  AttentionMap attention(const ExcitationSeed& seed, const Plan& seed_plan,
                         const Plan& target_plan) const;

  // Optional debug dump of a relevance map as a 16-bit PGM (values scaled
  // by the map maximum).
  static void dump_pgm(const std::string& path, const RelevanceMap& rel, int channel);

 private:
  const Fcsn& net_;
  std::vector<LinOpPos> dec_ops_;  // dec0..decN
  LinOpPos head_op_;
  int stages_ = 0;
};

// s_ij matrix (row-major, |et| x |et1|) from the two directional attention
// maps: s_ij = (s_i->j + s_j->i) / 2, read at the paired pixel centers.
std::vector<double> attention_score_pair(const std::vector<std::pair<int, int>>& et_pixels,
                                         const std::vector<std::pair<int, int>>& et1_pixels,
                                         const AttentionMap& att_t_to_t1,
                                         const AttentionMap& att_t1_to_t);

}  // namespace bflow
