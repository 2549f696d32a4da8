#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bflow/bf_oracle.hpp"
#include "bflow/image.hpp"
#include "bflow/matching.hpp"

namespace bflow {

// Mean endpoint error against the ground-truth boundary flow. Every defined
// gt pixel is scored: by the vector error of the nearest predicted entry
// within `match_radius`, or by `penalty` when no entry is that close
// (so dropping hard pixels cannot improve the score).
double epe(const BoundaryFlowField& pred, const BfGroundTruth& gt, double match_radius = 2.0,
           double penalty = 100.0);

struct PrPoint {
  double threshold = 0, precision = 0, recall = 0;
};

struct PrCounts {
  double threshold = 0;
  int64_t matched_pred = 0, total_pred = 0;
  int64_t matched_gt = 0, total_gt = 0;

  double precision() const {
    return total_pred > 0 ? static_cast<double>(matched_pred) / total_pred : 1.0;
  }
  double recall() const {
    return total_gt > 0 ? static_cast<double>(matched_gt) / total_gt : 0.0;
  }
};

double f_measure(double precision, double recall);

// PR counts of one image at `n_thresholds` thresholds k/(n+1). Pred must
// already be thinned. Correspondences are greedy one-to-one nearest pairs
// within `tol` pixels; tol <= 0 selects the default 0.0075 * image diagonal.
std::vector<PrCounts> boundary_pr(const Planef& thinned_pred, const Planef& gt_mask,
                                  int n_thresholds = 33, double tol = -1.0);

struct BenchmarkSummary {
  double ods = 0, ois = 0, ap = 0;
};

// Dataset aggregation: ODS over summed counts, OIS as the mean per-image
// best F, AP as the area under the interpolated dataset PR envelope.
// Images with empty ground truth are skipped (logged by the caller).
BenchmarkSummary summarize(const std::vector<std::vector<PrCounts>>& per_image);

// Baselines for the flow-ordering comparison. Descriptors are raw 7x7
// color patches; every frame-t pixel is matched independently.
BoundaryFlowField baseline_greedy_nn(const BoundarySet& b1, const BoundarySet& b2,
                                     const RgbImage& img_t, const RgbImage& img_t1,
                                     double radius = 100.0);

// RANSAC over a global translation (500 iterations, 3 px inlier radius,
// fixed seed); every frame-t pixel receives the best model's translation.
BoundaryFlowField baseline_ransac_translation(const BoundarySet& b1, const BoundarySet& b2,
                                              const RgbImage& img_t, const RgbImage& img_t1,
                                              double radius = 100.0, int iterations = 500,
                                              double inlier_radius = 3.0, uint64_t seed = 99);

// Consensus translation over putative matches (the model-fitting step of
// the baseline, usable on synthetic putatives).
std::pair<double, double> ransac_translation(const BoundaryFlowField& putative, int iterations,
                                             double inlier_radius, uint64_t seed);

}  // namespace bflow
