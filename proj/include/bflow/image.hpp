#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bflow/common.hpp"

namespace bflow {

// 8-bit RGB image, row-major top-to-bottom.
struct RgbImage {
  int w = 0, h = 0;
  std::vector<uint8_t> px;  // 3 bytes per pixel

  RgbImage() = default;
  RgbImage(int w_, int h_, std::array<uint8_t, 3> fill = {0, 0, 0}) : w(w_), h(h_) {
    px.resize(static_cast<size_t>(w_) * h_ * 3);
    for (size_t i = 0; i < px.size(); i += 3) {
      px[i] = fill[0];
      px[i + 1] = fill[1];
      px[i + 2] = fill[2];
    }
  }

  uint8_t* at(int x, int y) { return px.data() + (static_cast<size_t>(y) * w + x) * 3; }
  const uint8_t* at(int x, int y) const { return px.data() + (static_cast<size_t>(y) * w + x) * 3; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < w && y >= 0 && y < h; }
};

// Single-channel float plane (boundary maps, masks).
template <typename T>
struct Plane {
  int w = 0, h = 0;
  std::vector<T> v;

  Plane() = default;
  Plane(int w_, int h_, T fill = T(0)) : w(w_), h(h_), v(static_cast<size_t>(w_) * h_, fill) {}

  T& at(int x, int y) { return v[static_cast<size_t>(y) * w + x]; }
  T at(int x, int y) const { return v[static_cast<size_t>(y) * w + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < w && y >= 0 && y < h; }
  bool same_shape(const Plane& o) const { return w == o.w && h == o.h; }
};

using Planef = Plane<float>;
using Planed = Plane<double>;

// Binary PPM (P6, maxval 255).
void write_ppm(const std::string& path, const RgbImage& img);
RgbImage read_ppm(const std::string& path);

// Binary PGM (P5). Planes in [0,1] are scaled to the given maxval;
// 16-bit samples are big-endian per the PNM spec.
void write_pgm(const std::string& path, const Planef& plane, int maxval = 65535);
Planef read_pgm(const std::string& path);

// Bilinear sample with border clamp.
float bilinear(const Planef& p, float x, float y);

}  // namespace bflow
