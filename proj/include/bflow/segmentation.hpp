#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "bflow/image.hpp"

namespace bflow {

// Connected label image from the boundary-respecting oversegmentation.
struct SuperpixelMap {
  int w = 0, h = 0;
  int k = 0;  // region count, labels 0..k-1
  std::vector<int32_t> label;

  int32_t at(int x, int y) const { return label[static_cast<size_t>(y) * w + x]; }
  int32_t& at(int x, int y) { return label[static_cast<size_t>(y) * w + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < w && y >= 0 && y < h; }
};

// Maximal border chain shared by one pair of adjacent regions. Chain pixels
// carry the smaller label of the pair; the unit normal points from that
// side into the larger-label side.
struct Edgelet {
  int frame = 0;
  int region_a = 0, region_b = 0;  // region_a < region_b
  std::vector<std::pair<int, int>> chain;  // ordered (x, y), 8-connected
  double nx = 0.0, ny = 0.0;
  double cx = 0.0, cy = 0.0;  // centroid

  int length() const { return static_cast<int>(chain.size()); }
};

struct SegParams {
  int seed_spacing = 16;
  float theta_b = 0.5f;
  int min_edgelet_len = 3;
};

// Orientation-aware non-maximum suppression. Keeps a pixel iff its value is
// >= both bilinear samples one pixel away along the local edge normal
// (plateaus are kept). Kept values are unchanged; everything else is 0.
Planef nms_thin(const Planef& b);

// Multi-seed flood fill over the complement of {thin >= theta_b} from a
// regular seed grid; pockets merge into the neighbor with the closest mean
// color, then boundary pixels join the adjacent region with the closest
// mean color. If every pixel is boundary, each pixel gets its grid-cell
// label and *degenerate is set.
SuperpixelMap oversegment(const Planef& thin, const RgbImage& image, int seed_spacing,
                          float theta_b, bool* degenerate = nullptr);

std::vector<Edgelet> extract_edgelets(const SuperpixelMap& sp, int frame_id = 0, int min_len = 3);

// Mean of (nearest larger-label pixel - chain pixel) over the chain,
// normalized. Falls back to the perpendicular of the endpoint direction
// when the mean vanishes.
std::pair<double, double> compute_normal(const Edgelet& e, const SuperpixelMap& sp);

std::vector<std::array<double, 3>> region_mean_colors(const SuperpixelMap& sp,
                                                      const RgbImage& img);

// Label image as a PGM (labels scaled to the sample range).
void write_superpixel_pgm(const std::string& path, const SuperpixelMap& sp);

// One edgelet per line: frame label_a label_b nx ny n_pixels x1 y1 x2 y2 ...
void write_edgelets(const std::string& path, const std::vector<Edgelet>& edgelets);
std::vector<Edgelet> read_edgelets(const std::string& path);

}  // namespace bflow
