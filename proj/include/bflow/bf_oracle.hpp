#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bflow/image.hpp"
#include "bflow/rng.hpp"

namespace bflow {

// Per-pixel flow with an explicit validity mask (flow is undefined where a
// pixel is occluded in the other frame).
struct DenseFlow {
  int w = 0, h = 0;
  std::vector<float> dx, dy;
  std::vector<uint8_t> valid;

  DenseFlow() = default;
  DenseFlow(int w_, int h_)
      : w(w_), h(h_), dx(static_cast<size_t>(w_) * h_, 0.0f),
        dy(static_cast<size_t>(w_) * h_, 0.0f), valid(static_cast<size_t>(w_) * h_, 0) {}

  size_t idx(int x, int y) const { return static_cast<size_t>(y) * w + x; }
};

using BoundarySet = std::vector<std::pair<int, int>>;  // (x, y), scan order

enum class BfUndefReason : uint8_t {
  kTieCaseI = 0,     // nearest frame-t+1 boundary pixel not unique
  kTieCaseII = 1,    // nearest valid-flow boundary pixel not unique
  kNoValidFlow = 2,  // no boundary pixel with valid flow exists
  kEmptyB2 = 3,
};

struct BfEntry {
  int x = 0, y = 0;
  bool defined = false;
  float dx = 0, dy = 0;
  BfUndefReason reason = BfUndefReason::kTieCaseI;
};

// One entry per frame-t boundary pixel, in B1 order.
struct BfGroundTruth {
  std::vector<BfEntry> entries;

  size_t defined_count() const;
};

struct BfOracleOptions {
  // Case (ii) searches the nearest pixel with valid flow. The default
  // domain is the frame-t boundary itself; the flag widens it to every
  // pixel with valid flow.
  bool nearest_valid_over_all_pixels = false;
};

BfGroundTruth bf_oracle(const BoundarySet& b1, const BoundarySet& b2, const DenseFlow& flow,
                        const BfOracleOptions& opts = {});

// ---- synthetic scenes ------------------------------------------------------

struct ShapeMotion {
  double tx = 0, ty = 0;
  double rot = 0;  // radians, about the shape center
};

struct Shape {
  enum Kind { kDisk, kPolygon };
  Kind kind = kDisk;
  double cx = 0, cy = 0;
  double radius = 0;                               // disk
  std::vector<std::pair<double, double>> verts;    // polygon, absolute coords
  std::array<uint8_t, 3> color = {255, 255, 255};
  ShapeMotion motion;
};

// Layered scene; shapes later in the list are in front.
struct Scene {
  int w = 0, h = 0;
  std::array<uint8_t, 3> background = {30, 30, 30};
  std::vector<Shape> shapes;

  void validate() const;  // rejects degenerate (zero-area) shapes
};

struct RenderOut {
  RgbImage image;
  BoundarySet boundary;
  Planef boundary_mask;
  DenseFlow flow;  // defined for frame 0 only (frame-0 pixels into frame 1)
};

// frame is 0 (t) or 1 (t+1). The boundary set contains the pixels whose
// owner is in front of some 4-neighbor's owner.
RenderOut render_scene(const Scene& scene, int frame);

struct DatasetParams {
  int n = 1;
  uint64_t seed = 1;
  int w = 64, h = 64;
  int min_shapes = 1, max_shapes = 3;
  double min_translation = 2.0, max_translation = 10.0;
  double max_rotation_deg = 15.0;
  bool ensure_two_movers = false;  // at least two shapes with distinct motions
};

struct DatasetEntry {
  Scene scene;
  RenderOut frame_a, frame_b;
  BfGroundTruth gt;
};

// Deterministic for a fixed seed. Scene kinds cycle through a fixed
// 60/20/20 split of translation-only, rotation, and occlusion scenes.
std::vector<DatasetEntry> generate_dataset(const DatasetParams& params);
DatasetEntry generate_entry(const DatasetParams& params, int index);

// bf ground truth text file: header "bfgt 1", then per B1 pixel either
// "x y dx dy" or "x y undef <reason>".
void write_bf_gt(const std::string& path, const BfGroundTruth& gt);
BfGroundTruth read_bf_gt(const std::string& path);

BoundarySet mask_to_boundary_set(const Planef& mask, float threshold = 0.5f);

}  // namespace bflow
