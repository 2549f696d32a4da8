#pragma once

#include <string>
#include <vector>

#include "bflow/image.hpp"
#include "bflow/segmentation.hpp"

namespace bflow {

struct MatchParams {
  double radius = 100.0;      // candidate search radius around the edgelet centroid
  int top_k = 10;             // most similar edgelets kept per frame-t edgelet
  double max_angle_deg = 45;  // acute angle between normals, modulo sign

  void validate() const {
    BFLOW_CHECK(radius > 0.0, "match params: radius must be positive");
    BFLOW_CHECK(top_k >= 1, "match params: top_k must be >= 1");
    BFLOW_CHECK(max_angle_deg > 0.0 && max_angle_deg <= 90.0,
                "match params: max angle must be in (0, 90] degrees");
  }
};

struct ScoredPair {
  int idx_t = 0, idx_t1 = 0;
  double score = 0.0;
};

struct EdgeletMatch {
  int idx_t = 0, idx_t1 = 0;
  double score = 0.0;
};

struct FlowEntry {
  int x = 0, y = 0;      // source pixel in frame t (after any side correction)
  double dx = 0, dy = 0;
  int edgelet_id = -1;   // frame-t edgelet that produced the entry
};

// Sparse boundary-pixel displacement field; entry order is deterministic
// (match order, then chain order), keys unique.
struct BoundaryFlowField {
  std::vector<FlowEntry> entries;
};

// Frame-(t+1) edgelet indices whose centroid is within params.radius of
// e_t's centroid.
std::vector<int> candidates(const Edgelet& e_t, const std::vector<Edgelet>& edgelets_t1,
                            const MatchParams& params);

// Mean of the s_ij matrix (row-major rows_t x cols_t1).
double edgelet_similarity(const std::vector<double>& s_ij, size_t n_t, size_t n_t1);

// Acute angle between two unit normals, sign-invariant, in degrees.
double normal_angle_deg(double ax, double ay, double bx, double by);

// Sort by score (ties by lower candidate index), keep the top k, then drop
// pairs whose normals differ by more than the angle threshold.
std::vector<ScoredPair> filter_top_k_and_angle(const Edgelet& e_t,
                                               const std::vector<Edgelet>& edgelets_t1,
                                               std::vector<ScoredPair> scored,
                                               const MatchParams& params);

// Greedy approximate bipartite matching over all filtered pairs: repeatedly
// take the best-scoring pair with both sides unmatched (ties by lower
// frame-t index, then lower frame-t1 index).
std::vector<EdgeletMatch> greedy_match(std::vector<ScoredPair> pairs);

struct PixelAssignment {
  std::vector<int> target;  // per e_t chain position: e_t1 chain position
  bool flipped = false;     // e_t1 chain direction was reversed first
  double total = 0.0;
};

// Order-preserving alignment of the two chains maximizing the summed s_ij
// (monotone DP); the e_t1 chain is flipped first iff flipping raises the
// total. Every e_t pixel is assigned exactly one e_t1 pixel.
PixelAssignment pixel_assignment(size_t n_t, size_t n_t1, const std::vector<double>& s_ij);

// Pairs regions across the match by color, relocates source pixels that sit
// on the wrong side (one step across the edgelet along the normal, at most
// 2 px), and emits displacements into the field.
void place_match(const Edgelet& e_t, const Edgelet& e_t1, const PixelAssignment& assign,
                 const SuperpixelMap& sp_t, const std::vector<std::array<double, 3>>& colors_t,
                 const std::vector<std::array<double, 3>>& colors_t1, int edgelet_id,
                 BoundaryFlowField& field, std::vector<std::string>* log = nullptr);

BoundaryFlowField side_correct_and_place(const std::vector<EdgeletMatch>& matches,
                                         const std::vector<Edgelet>& edgelets_t,
                                         const std::vector<Edgelet>& edgelets_t1,
                                         const std::vector<PixelAssignment>& assignments,
                                         const SuperpixelMap& sp_t, const SuperpixelMap& sp_t1,
                                         const RgbImage& img_t, const RgbImage& img_t1,
                                         std::vector<std::string>* log = nullptr);

// One match per line: "x1 y1 x2 y2" (source then target, integer pixels).
void export_matches(const BoundaryFlowField& field, const std::string& path);
BoundaryFlowField import_matches(const std::string& path);

}  // namespace bflow
