#pragma once

// Independent reference implementations the unit and acceptance tests check
// the library against. These deliberately avoid the library's compute paths
// (no im2col, no GEMM, no shared propagation code).

#include <algorithm>
#include <cmath>
#include <vector>

#include "bflow/bf_oracle.hpp"
#include "bflow/rng.hpp"
#include "bflow/tensor.hpp"

namespace oracle {

// Direct six-nested-loop cross-correlation, double accumulation.
inline bflow::Tensor conv2d_naive(const bflow::Tensor& in, const bflow::Tensor& w,
                                  const std::vector<float>& bias, int stride, int pad) {
  const int oh = (in.h + 2 * pad - w.h) / stride + 1;
  const int ow = (in.w + 2 * pad - w.w) / stride + 1;
  bflow::Tensor out(in.n, w.n, oh, ow);
  for (int n = 0; n < in.n; ++n)
    for (int co = 0; co < w.n; ++co)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = bias.empty() ? 0.0 : bias[co];
          for (int ci = 0; ci < in.c; ++ci)
            for (int ky = 0; ky < w.h; ++ky)
              for (int kx = 0; kx < w.w; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
                acc += static_cast<double>(in.at(n, ci, iy, ix)) * w.at(co, ci, ky, kx);
              }
          out.at(n, co, oy, ox) = static_cast<float>(acc);
        }
  return out;
}

// Exhaustive path enumeration for a dense 2-layer net: x (n0) -> h (n1) ->
// y (n2); relevance of y propagated to x by walking every path y_k -> h_j
// -> x_i explicitly (all arithmetic double).
inline std::vector<double> excitation_paths_2layer(
    const std::vector<double>& w1,  // [n1][n0]
    const std::vector<double>& w2,  // [n2][n1]
    const std::vector<double>& a0, const std::vector<double>& a1,
    const std::vector<double>& p2) {
  const size_t n0 = a0.size(), n1 = a1.size(), n2 = p2.size();
  auto pos = [](double v) { return v > 0.0 ? v : 0.0; };
  std::vector<double> z2(n2, 0.0), z1(n1, 0.0);
  for (size_t k = 0; k < n2; ++k)
    for (size_t j = 0; j < n1; ++j) z2[k] += pos(w2[k * n1 + j]) * a1[j];
  for (size_t j = 0; j < n1; ++j)
    for (size_t i = 0; i < n0; ++i) z1[j] += pos(w1[j * n0 + i]) * a0[i];
  std::vector<double> p0(n0, 0.0);
  for (size_t i = 0; i < n0; ++i)
    for (size_t j = 0; j < n1; ++j)
      for (size_t k = 0; k < n2; ++k) {
        if (z2[k] <= 0.0 || z1[j] <= 0.0) continue;  // dropped mass
        p0[i] += (pos(w1[j * n0 + i]) * a0[i] / z1[j]) *
                 (pos(w2[k * n1 + j]) * a1[j] / z2[k]) * p2[k];
      }
  return p0;
}

// Single dense Eq.-1 step (for one-layer comparisons).
inline std::vector<double> excitation_dense_step(const std::vector<double>& w,  // [n_out][n_in]
                                                 const std::vector<double>& a_in,
                                                 const std::vector<double>& p_out) {
  const size_t ni = a_in.size(), no = p_out.size();
  auto pos = [](double v) { return v > 0.0 ? v : 0.0; };
  std::vector<double> z(no, 0.0);
  for (size_t k = 0; k < no; ++k)
    for (size_t i = 0; i < ni; ++i) z[k] += pos(w[k * ni + i]) * a_in[i];
  std::vector<double> p(ni, 0.0);
  for (size_t i = 0; i < ni; ++i)
    for (size_t k = 0; k < no; ++k)
      if (z[k] > 0.0) p[i] += pos(w[k * ni + i]) * a_in[i] / z[k] * p_out[k];
  return p;
}

// Full O(|B1| * |B2|) boundary-flow reference with exact tie detection.
// Mirrors the three-case definition with its own scan loops.
inline bflow::BfGroundTruth bf_brute_force(const bflow::BoundarySet& b1,
                                           const bflow::BoundarySet& b2,
                                           const bflow::DenseFlow& flow,
                                           bool all_pixel_sources = false) {
  using namespace bflow;
  BfGroundTruth gt;
  for (const auto& [x, y] : b1) {
    BfEntry e;
    e.x = x;
    e.y = y;
    if (b2.empty()) {
      e.reason = BfUndefReason::kEmptyB2;
      gt.entries.push_back(e);
      continue;
    }
    if (flow.valid[flow.idx(x, y)]) {
      const double tx = x + flow.dx[flow.idx(x, y)];
      const double ty = y + flow.dy[flow.idx(x, y)];
      double best = 1e300;
      int bx = 0, by = 0, count = 0;
      for (const auto& [cx, cy] : b2) {
        const double d = (cx - tx) * (cx - tx) + (cy - ty) * (cy - ty);
        if (d < best) {
          best = d;
          bx = cx;
          by = cy;
          count = 1;
        } else if (d == best) {
          ++count;
        }
      }
      if (count == 1) {
        e.defined = true;
        e.dx = static_cast<float>(bx - x);
        e.dy = static_cast<float>(by - y);
      } else {
        e.reason = BfUndefReason::kTieCaseI;
      }
    } else {
      double best = 1e300;
      int bx = 0, by = 0, count = 0;
      if (all_pixel_sources) {
        for (int vy = 0; vy < flow.h; ++vy)
          for (int vx = 0; vx < flow.w; ++vx) {
            if (!flow.valid[flow.idx(vx, vy)]) continue;
            const double d =
                static_cast<double>(vx - x) * (vx - x) + static_cast<double>(vy - y) * (vy - y);
            if (d < best) {
              best = d;
              bx = vx;
              by = vy;
              count = 1;
            } else if (d == best) {
              ++count;
            }
          }
      } else {
        for (const auto& [vx, vy] : b1) {
          if (!flow.valid[flow.idx(vx, vy)]) continue;
          const double d =
              static_cast<double>(vx - x) * (vx - x) + static_cast<double>(vy - y) * (vy - y);
          if (d < best) {
            best = d;
            bx = vx;
            by = vy;
            count = 1;
          } else if (d == best) {
            ++count;
          }
        }
      }
      if (count == 0) {
        e.reason = BfUndefReason::kNoValidFlow;
      } else if (count == 1) {
        e.defined = true;
        e.dx = flow.dx[flow.idx(bx, by)];
        e.dy = flow.dy[flow.idx(bx, by)];
      } else {
        e.reason = BfUndefReason::kTieCaseII;
      }
    }
    gt.entries.push_back(e);
  }
  return gt;
}

// Maximum bipartite matching size by augmenting paths (for the PR
// correspondence comparison).
class MaxBipartite {
 public:
  MaxBipartite(int n_left, int n_right) : adj_(n_left), match_right_(n_right, -1) {}
  void add_edge(int l, int r) { adj_[l].push_back(r); }
  int solve() {
    int matched = 0;
    for (size_t l = 0; l < adj_.size(); ++l) {
      std::vector<char> seen(match_right_.size(), 0);
      if (try_kuhn(static_cast<int>(l), seen)) ++matched;
    }
    return matched;
  }

 private:
  bool try_kuhn(int l, std::vector<char>& seen) {
    for (int r : adj_[l]) {
      if (seen[r]) continue;
      seen[r] = 1;
      if (match_right_[r] < 0 || try_kuhn(match_right_[r], seen)) {
        match_right_[r] = l;
        return true;
      }
    }
    return false;
  }
  std::vector<std::vector<int>> adj_;
  std::vector<int> match_right_;
};

inline void fill_random(bflow::Tensor& t, bflow::Rng& rng, double lo = -1.0, double hi = 1.0) {
  for (float& v : t.data) v = static_cast<float>(rng.uniform_real(lo, hi));
}

}  // namespace oracle
