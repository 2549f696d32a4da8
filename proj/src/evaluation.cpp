#include "bflow/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

namespace bflow {

double epe(const BoundaryFlowField& pred, const BfGroundTruth& gt, double match_radius,
           double penalty) {
  BFLOW_CHECK(!gt.entries.empty(), "epe: empty ground truth");
  // grid index over predicted entries for the radius lookup
  std::map<std::pair<int, int>, std::vector<const FlowEntry*>> grid;
  const int cell = std::max(1, static_cast<int>(std::ceil(match_radius)));
  for (const FlowEntry& e : pred.entries)
    grid[{e.x / cell, e.y / cell}].push_back(&e);

  double total = 0.0;
  size_t scored = 0;
  for (const BfEntry& g : gt.entries) {
    if (!g.defined) continue;
    ++scored;
    const FlowEntry* best = nullptr;
    double best_d = 0.0;
    const int cx = g.x / cell, cy = g.y / cell;
    for (int oy = -1; oy <= 1; ++oy)
      for (int ox = -1; ox <= 1; ++ox) {
        auto it = grid.find({cx + ox, cy + oy});
        if (it == grid.end()) continue;
        for (const FlowEntry* e : it->second) {
          const double d = std::hypot(e->x - g.x, e->y - g.y);
          if (d > match_radius) continue;
          if (!best || d < best_d ||
              (d == best_d && std::pair(e->y, e->x) < std::pair(best->y, best->x))) {
            best = e;
            best_d = d;
          }
        }
      }
    if (best)
      total += std::hypot(best->dx - g.dx, best->dy - g.dy);
    else
      total += penalty;
  }
  BFLOW_CHECK(scored > 0, "epe: ground truth has no defined entries");
  return total / static_cast<double>(scored);
}

double f_measure(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

namespace {

// One-to-one nearest-pair matching within tol: a distance-greedy pass,
// then augmenting paths to recover the pairs greedy alone strands (the
// result is a maximum-cardinality matching, so recall is monotone in the
// detection set). Returns the match count.
int64_t greedy_correspondences(const std::vector<std::pair<int, int>>& pred,
                               const std::vector<std::pair<int, int>>& gt, double tol) {
  struct Cand {
    double d;
    int pi, gi;
  };
  std::vector<Cand> cands;
  std::vector<std::vector<int>> adj(pred.size());
  // grid over gt pixels
  const int cell = std::max(1, static_cast<int>(std::ceil(tol)));
  std::map<std::pair<int, int>, std::vector<int>> grid;
  for (size_t i = 0; i < gt.size(); ++i)
    grid[{gt[i].first / cell, gt[i].second / cell}].push_back(static_cast<int>(i));
  for (size_t p = 0; p < pred.size(); ++p) {
    const int cx = pred[p].first / cell, cy = pred[p].second / cell;
    for (int oy = -1; oy <= 1; ++oy)
      for (int ox = -1; ox <= 1; ++ox) {
        auto it = grid.find({cx + ox, cy + oy});
        if (it == grid.end()) continue;
        for (int gi : it->second) {
          const double d = std::hypot(pred[p].first - gt[gi].first, pred[p].second - gt[gi].second);
          if (d <= tol) {
            cands.push_back({d, static_cast<int>(p), gi});
            adj[p].push_back(gi);
          }
        }
      }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.pi != b.pi) return a.pi < b.pi;
    return a.gi < b.gi;
  });
  std::vector<int> match_p(pred.size(), -1), match_g(gt.size(), -1);
  int64_t matched = 0;
  for (const Cand& c : cands) {
    if (match_p[c.pi] >= 0 || match_g[c.gi] >= 0) continue;
    match_p[c.pi] = c.gi;
    match_g[c.gi] = c.pi;
    ++matched;
  }
  // augment from the stranded detections
  std::function<bool(int, std::vector<char>&)> try_augment =
      [&](int p, std::vector<char>& seen) -> bool {
    for (int gi : adj[p]) {
      if (seen[gi]) continue;
      seen[gi] = 1;
      if (match_g[gi] < 0 || try_augment(match_g[gi], seen)) {
        match_g[gi] = p;
        match_p[p] = gi;
        return true;
      }
    }
    return false;
  };
  for (size_t p = 0; p < pred.size(); ++p) {
    if (match_p[p] >= 0 || adj[p].empty()) continue;
    std::vector<char> seen(gt.size(), 0);
    if (try_augment(static_cast<int>(p), seen)) ++matched;
  }
  return matched;
}

}  // namespace

std::vector<PrCounts> boundary_pr(const Planef& thinned_pred, const Planef& gt_mask,
                                  int n_thresholds, double tol) {
  BFLOW_CHECK(thinned_pred.same_shape(gt_mask), "boundary_pr: size mismatch");
  BFLOW_CHECK(n_thresholds >= 1, "boundary_pr: need at least one threshold");
  if (tol <= 0.0) tol = 0.0075 * std::hypot(thinned_pred.w, thinned_pred.h);

  std::vector<std::pair<int, int>> gt;
  for (int y = 0; y < gt_mask.h; ++y)
    for (int x = 0; x < gt_mask.w; ++x)
      if (gt_mask.at(x, y) >= 0.5f) gt.emplace_back(x, y);

  std::vector<PrCounts> out;
  for (int k = 1; k <= n_thresholds; ++k) {
    const double thr = static_cast<double>(k) / (n_thresholds + 1);
    std::vector<std::pair<int, int>> pred;
    for (int y = 0; y < thinned_pred.h; ++y)
      for (int x = 0; x < thinned_pred.w; ++x)
        if (thinned_pred.at(x, y) >= thr) pred.emplace_back(x, y);
    PrCounts c;
    c.threshold = thr;
    c.total_pred = static_cast<int64_t>(pred.size());
    c.total_gt = static_cast<int64_t>(gt.size());
    const int64_t matched = greedy_correspondences(pred, gt, tol);
    c.matched_pred = matched;
    c.matched_gt = matched;
    out.push_back(c);
  }
  return out;
}

BenchmarkSummary summarize(const std::vector<std::vector<PrCounts>>& per_image) {
  BFLOW_CHECK(!per_image.empty(), "summarize: no images");
  const size_t n_thr = per_image.front().size();
  for (const auto& img : per_image)
    BFLOW_CHECK(img.size() == n_thr, "summarize: inconsistent threshold counts");

  BenchmarkSummary s;
  // ODS: best F over dataset-wide counts at a single threshold
  std::vector<PrCounts> agg(n_thr);
  for (size_t k = 0; k < n_thr; ++k) {
    agg[k].threshold = per_image.front()[k].threshold;
    for (const auto& img : per_image) {
      if (img[k].total_gt == 0) continue;  // empty-gt images are excluded
      agg[k].matched_pred += img[k].matched_pred;
      agg[k].total_pred += img[k].total_pred;
      agg[k].matched_gt += img[k].matched_gt;
      agg[k].total_gt += img[k].total_gt;
    }
  }
  BFLOW_CHECK(agg.front().total_gt > 0, "summarize: every image has empty ground truth");
  for (const PrCounts& c : agg) s.ods = std::max(s.ods, f_measure(c.precision(), c.recall()));

  // OIS: mean per-image best F
  double ois_sum = 0.0;
  int ois_n = 0;
  for (const auto& img : per_image) {
    if (img.front().total_gt == 0) continue;
    double best = 0.0;
    for (const PrCounts& c : img) best = std::max(best, f_measure(c.precision(), c.recall()));
    ois_sum += best;
    ++ois_n;
  }
  s.ois = ois_sum / ois_n;

  // AP: area under the precision envelope of the dataset PR points
  std::vector<std::pair<double, double>> pr;  // (recall, precision)
  for (const PrCounts& c : agg) pr.emplace_back(c.recall(), c.precision());
  std::sort(pr.begin(), pr.end());
  std::vector<double> sufmax(pr.size());
  double run = 0.0;
  for (size_t i = pr.size(); i-- > 0;) {
    run = std::max(run, pr[i].second);
    sufmax[i] = run;
  }
  double ap = 0.0, prev_r = 0.0;
  for (size_t i = 0; i < pr.size(); ++i) {
    if (pr[i].first > prev_r) {
      ap += (pr[i].first - prev_r) * sufmax[i];
      prev_r = pr[i].first;
    }
  }
  s.ap = ap;
  return s;
}

namespace {

// 7x7 raw color patch, border-replicated.
void patch_descriptor(const RgbImage& img, int x, int y, float* out) {
  int k = 0;
  for (int dy = -3; dy <= 3; ++dy)
    for (int dx = -3; dx <= 3; ++dx) {
      const int sx = std::clamp(x + dx, 0, img.w - 1);
      const int sy = std::clamp(y + dy, 0, img.h - 1);
      const uint8_t* p = img.at(sx, sy);
      out[k++] = p[0];
      out[k++] = p[1];
      out[k++] = p[2];
    }
}

}  // namespace

BoundaryFlowField baseline_greedy_nn(const BoundarySet& b1, const BoundarySet& b2,
                                     const RgbImage& img_t, const RgbImage& img_t1,
                                     double radius) {
  constexpr int kDesc = 7 * 7 * 3;
  std::vector<float> desc2(b2.size() * kDesc);
  for (size_t j = 0; j < b2.size(); ++j)
    patch_descriptor(img_t1, b2[j].first, b2[j].second, desc2.data() + j * kDesc);

  BoundaryFlowField out;
  std::vector<float> d1(kDesc);
  const double r2 = radius * radius;
  for (const auto& [x, y] : b1) {
    patch_descriptor(img_t, x, y, d1.data());
    int best = -1;
    double best_d = 0.0;
    for (size_t j = 0; j < b2.size(); ++j) {
      const double ddx = b2[j].first - x, ddy = b2[j].second - y;
      if (ddx * ddx + ddy * ddy > r2) continue;
      double d = 0.0;
      const float* dj = desc2.data() + j * kDesc;
      for (int k = 0; k < kDesc; ++k) {
        const double diff = d1[k] - dj[k];
        d += diff * diff;
      }
      if (best < 0 || d < best_d) {  // ties keep the first (scan order)
        best = static_cast<int>(j);
        best_d = d;
      }
    }
    if (best >= 0)
      out.entries.push_back({x, y, static_cast<double>(b2[best].first - x),
                             static_cast<double>(b2[best].second - y), -1});
  }
  return out;
}

std::pair<double, double> ransac_translation(const BoundaryFlowField& putative, int iterations,
                                             double inlier_radius, uint64_t seed) {
  BFLOW_CHECK(!putative.entries.empty(), "ransac_translation: no putative matches");
  Rng rng(seed);
  int best_count = -1;
  double best_tx = 0.0, best_ty = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const FlowEntry& pick = putative.entries[rng.uniform_u64(putative.entries.size())];
    int count = 0;
    for (const FlowEntry& e : putative.entries)
      if (std::hypot(e.dx - pick.dx, e.dy - pick.dy) <= inlier_radius) ++count;
    if (count > best_count) {
      best_count = count;
      best_tx = pick.dx;
      best_ty = pick.dy;
    }
  }
  // refit on the consensus set
  double sx = 0.0, sy = 0.0;
  int n = 0;
  for (const FlowEntry& e : putative.entries)
    if (std::hypot(e.dx - best_tx, e.dy - best_ty) <= inlier_radius) {
      sx += e.dx;
      sy += e.dy;
      ++n;
    }
  return {sx / n, sy / n};
}

BoundaryFlowField baseline_ransac_translation(const BoundarySet& b1, const BoundarySet& b2,
                                              const RgbImage& img_t, const RgbImage& img_t1,
                                              double radius, int iterations, double inlier_radius,
                                              uint64_t seed) {
  const BoundaryFlowField putative = baseline_greedy_nn(b1, b2, img_t, img_t1, radius);
  if (putative.entries.empty()) return putative;  // no inliers possible: greedy fallback

  const auto [tx, ty] = ransac_translation(putative, iterations, inlier_radius, seed);
  BoundaryFlowField out;
  for (const auto& [x, y] : b1) out.entries.push_back({x, y, tx, ty, -1});
  return out;
}

}  // namespace bflow
