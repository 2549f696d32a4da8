#include "bflow/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace bflow {

namespace {

Planef smooth3(const Planef& p) {
  // separable [1 2 1]/4 triangle filter with replicated borders
  Planef tmp(p.w, p.h), out(p.w, p.h);
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) {
      const float l = p.at(std::max(0, x - 1), y);
      const float r = p.at(std::min(p.w - 1, x + 1), y);
      tmp.at(x, y) = 0.25f * l + 0.5f * p.at(x, y) + 0.25f * r;
    }
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) {
      const float u = tmp.at(x, std::max(0, y - 1));
      const float d = tmp.at(x, std::min(p.h - 1, y + 1));
      out.at(x, y) = 0.25f * u + 0.5f * tmp.at(x, y) + 0.25f * d;
    }
  return out;
}

Planef grad_x(const Planef& p) {
  Planef g(p.w, p.h);
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x)
      g.at(x, y) = 0.5f * (p.at(std::min(p.w - 1, x + 1), y) - p.at(std::max(0, x - 1), y));
  return g;
}

Planef grad_y(const Planef& p) {
  Planef g(p.w, p.h);
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x)
      g.at(x, y) = 0.5f * (p.at(x, std::min(p.h - 1, y + 1)) - p.at(x, std::max(0, y - 1)));
  return g;
}

}  // namespace

Planef nms_thin(const Planef& b) {
  for (float v : b.v)
    BFLOW_CHECK(v >= 0.0f && v <= 1.0f, "nms_thin: values must be in [0,1], got ", v);
  const Planef e1 = smooth3(b);
  const Planef ox = grad_x(e1), oy = grad_y(e1);
  const Planef oxx = grad_x(ox), oxy = grad_y(ox), oyy = grad_y(oy);

  Planef out(b.w, b.h, 0.0f);
  for (int y = 0; y < b.h; ++y)
    for (int x = 0; x < b.w; ++x) {
      // edge-normal orientation from the local Hessian of the smoothed map
      const float s = -oxy.at(x, y);
      const float sgn = s > 0.0f ? 1.0f : (s < 0.0f ? -1.0f : 0.0f);
      const float theta = std::atan(oyy.at(x, y) * sgn / (oxx.at(x, y) + 1e-5f));
      const float cs = std::cos(theta), sn = std::sin(theta);
      const float v = b.at(x, y);
      if (v >= bilinear(b, x + cs, y + sn) && v >= bilinear(b, x - cs, y - sn)) out.at(x, y) = v;
    }
  return out;
}

namespace {

constexpr int kDx4[4] = {1, 0, -1, 0};
constexpr int kDy4[4] = {0, 1, 0, -1};

struct RegionColor {
  double sum[3] = {0, 0, 0};
  int64_t count = 0;
  void add(const uint8_t* px) {
    sum[0] += px[0];
    sum[1] += px[1];
    sum[2] += px[2];
    ++count;
  }
  double dist2(const double* rgb) const {
    double d = 0;
    for (int i = 0; i < 3; ++i) {
      const double m = sum[i] / std::max<int64_t>(1, count);
      d += (m - rgb[i]) * (m - rgb[i]);
    }
    return d;
  }
};

}  // namespace

SuperpixelMap oversegment(const Planef& thin, const RgbImage& image, int seed_spacing,
                          float theta_b, bool* degenerate) {
  BFLOW_CHECK(theta_b > 0.0f && theta_b < 1.0f, "oversegment: theta_b must be in (0,1), got ",
              theta_b);
  BFLOW_CHECK(seed_spacing >= 2, "oversegment: seed spacing must be >= 2");
  BFLOW_CHECK(thin.w == image.w && thin.h == image.h, "oversegment: map/image size mismatch");
  const int w = thin.w, h = thin.h;
  if (degenerate) *degenerate = false;

  SuperpixelMap sp;
  sp.w = w;
  sp.h = h;
  sp.label.assign(static_cast<size_t>(w) * h, -1);

  std::vector<uint8_t> is_boundary(static_cast<size_t>(w) * h);
  size_t boundary_count = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool bd = thin.at(x, y) >= theta_b;
      is_boundary[static_cast<size_t>(y) * w + x] = bd;
      boundary_count += bd;
    }

  if (boundary_count == static_cast<size_t>(w) * h) {
    // degenerate: every pixel its own grid cell label
    std::cerr << "oversegment: every pixel is boundary; falling back to grid cells\n";
    if (degenerate) *degenerate = true;
    const int cells_x = (w + seed_spacing - 1) / seed_spacing;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        sp.at(x, y) = (y / seed_spacing) * cells_x + (x / seed_spacing);
    sp.k = ((h + seed_spacing - 1) / seed_spacing) * cells_x;
    return sp;
  }

  // competitive multi-seed BFS over free pixels (scanline FIFO)
  int next_label = 0;
  std::deque<std::pair<int, int>> queue;
  for (int sy = seed_spacing / 2; sy < h; sy += seed_spacing)
    for (int sx = seed_spacing / 2; sx < w; sx += seed_spacing) {
      if (is_boundary[static_cast<size_t>(sy) * w + sx]) continue;
      sp.at(sx, sy) = next_label++;
      queue.emplace_back(sx, sy);
    }
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    const int32_t lab = sp.at(x, y);
    for (int d = 0; d < 4; ++d) {
      const int nx = x + kDx4[d], ny = y + kDy4[d];
      if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
      if (sp.at(nx, ny) >= 0 || is_boundary[static_cast<size_t>(ny) * w + nx]) continue;
      sp.at(nx, ny) = lab;
      queue.emplace_back(nx, ny);
    }
  }

  std::vector<RegionColor> colors(next_label);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (sp.at(x, y) >= 0) colors[sp.at(x, y)].add(image.at(x, y));

  // pockets: free components no seed reached
  for (int y0 = 0; y0 < h; ++y0)
    for (int x0 = 0; x0 < w; ++x0) {
      if (sp.at(x0, y0) >= 0 || is_boundary[static_cast<size_t>(y0) * w + x0]) continue;
      std::vector<std::pair<int, int>> pocket;
      std::deque<std::pair<int, int>> q{{x0, y0}};
      sp.at(x0, y0) = -2;  // visiting marker
      while (!q.empty()) {
        const auto [x, y] = q.front();
        q.pop_front();
        pocket.emplace_back(x, y);
        for (int d = 0; d < 4; ++d) {
          const int nx = x + kDx4[d], ny = y + kDy4[d];
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          if (sp.at(nx, ny) != -1 || is_boundary[static_cast<size_t>(ny) * w + nx]) continue;
          sp.at(nx, ny) = -2;
          q.emplace_back(nx, ny);
        }
      }
      double mean[3] = {0, 0, 0};
      for (const auto& [x, y] : pocket)
        for (int i = 0; i < 3; ++i) mean[i] += image.at(x, y)[i];
      for (double& m : mean) m /= static_cast<double>(pocket.size());
      std::set<int32_t> nbr_labels;
      for (const auto& [x, y] : pocket)
        for (int d = 0; d < 4; ++d) {
          const int nx = x + kDx4[d], ny = y + kDy4[d];
          if (sp.in_bounds(nx, ny) && sp.at(nx, ny) >= 0) nbr_labels.insert(sp.at(nx, ny));
        }
      int32_t target;
      if (nbr_labels.empty()) {
        target = next_label++;
        colors.emplace_back();
      } else {
        target = *nbr_labels.begin();
        double best = colors[target].dist2(mean);
        for (int32_t lab : nbr_labels) {
          const double d2 = colors[lab].dist2(mean);
          if (d2 < best) {  // ties keep the smaller label (set order)
            best = d2;
            target = lab;
          }
        }
      }
      for (const auto& [x, y] : pocket) {
        sp.at(x, y) = target;
        colors[target].add(image.at(x, y));
      }
    }

  // boundary pixels join the adjacent region with the closest mean color
  bool changed = true;
  size_t unassigned = boundary_count;
  while (changed && unassigned > 0) {
    changed = false;
    std::vector<std::pair<size_t, int32_t>> updates;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const size_t i = static_cast<size_t>(y) * w + x;
        if (sp.label[i] >= 0) continue;
        double rgb[3] = {static_cast<double>(image.at(x, y)[0]),
                         static_cast<double>(image.at(x, y)[1]),
                         static_cast<double>(image.at(x, y)[2])};
        int32_t best_lab = -1;
        double best_d = 0;
        for (int d = 0; d < 4; ++d) {
          const int nx = x + kDx4[d], ny = y + kDy4[d];
          if (!sp.in_bounds(nx, ny)) continue;
          const int32_t lab = sp.at(nx, ny);
          if (lab < 0) continue;
          const double d2 = colors[lab].dist2(rgb);
          if (best_lab < 0 || d2 < best_d || (d2 == best_d && lab < best_lab)) {
            best_lab = lab;
            best_d = d2;
          }
        }
        if (best_lab >= 0) updates.emplace_back(i, best_lab);
      }
    for (const auto& [i, lab] : updates) {
      if (sp.label[i] < 0) {
        sp.label[i] = lab;
        --unassigned;
        changed = true;
      }
    }
  }
  if (unassigned > 0) {
    // enclosed boundary blobs with no reachable region: grid-cell fallback
    std::cerr << "oversegment: " << unassigned << " boundary pixels unreachable; assigning "
              << "grid-cell labels\n";
    std::map<int, int32_t> cell_label;
    const int cells_x = (w + seed_spacing - 1) / seed_spacing;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (sp.at(x, y) >= 0) continue;
        const int cell = (y / seed_spacing) * cells_x + (x / seed_spacing);
        auto it = cell_label.find(cell);
        if (it == cell_label.end()) it = cell_label.emplace(cell, next_label++).first;
        sp.at(x, y) = it->second;
      }
  }
  sp.k = next_label;
  return sp;
}

namespace {

constexpr int kDx8[8] = {1, 0, -1, 0, 1, -1, 1, -1};
constexpr int kDy8[8] = {0, 1, 0, -1, 1, 1, -1, -1};

// Orders one 8-connected component into chains; appends to `chains`.
void order_component(std::vector<std::pair<int, int>> comp,
                     std::vector<std::vector<std::pair<int, int>>>& chains) {
  while (!comp.empty()) {
    std::set<std::pair<int, int>> rest(comp.begin(), comp.end());
    auto degree = [&](const std::pair<int, int>& p) {
      int d = 0;
      for (int k = 0; k < 8; ++k)
        if (rest.count({p.first + kDx8[k], p.second + kDy8[k]})) ++d;
      return d;
    };
    // prefer a chain endpoint; fall back to the smallest (y, x)
    std::pair<int, int> start = comp.front();
    bool found_end = false;
    for (const auto& p : comp) {
      if (degree(p) == 1) {
        if (!found_end || std::pair(p.second, p.first) < std::pair(start.second, start.first)) {
          start = p;
          found_end = true;
        }
      }
    }
    if (!found_end) {
      for (const auto& p : comp)
        if (std::pair(p.second, p.first) < std::pair(start.second, start.first)) start = p;
    }
    std::vector<std::pair<int, int>> chain{start};
    rest.erase(start);
    while (true) {
      const auto [x, y] = chain.back();
      bool moved = false;
      for (int k = 0; k < 8; ++k) {
        const std::pair<int, int> nb{x + kDx8[k], y + kDy8[k]};
        if (rest.count(nb)) {
          chain.push_back(nb);
          rest.erase(nb);
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    chains.push_back(std::move(chain));
    comp.assign(rest.begin(), rest.end());
  }
}

}  // namespace

std::vector<Edgelet> extract_edgelets(const SuperpixelMap& sp, int frame_id, int min_len) {
  // border pixels carry the smaller label of the pair
  std::map<std::pair<int32_t, int32_t>, std::vector<std::pair<int, int>>> borders;
  for (int y = 0; y < sp.h; ++y)
    for (int x = 0; x < sp.w; ++x) {
      const int32_t u = sp.at(x, y);
      for (int d = 0; d < 4; ++d) {
        const int nx = x + kDx4[d], ny = y + kDy4[d];
        if (!sp.in_bounds(nx, ny)) continue;
        const int32_t v = sp.at(nx, ny);
        if (v > u) {
          auto& vec = borders[{u, v}];
          if (vec.empty() || vec.back() != std::pair(x, y)) vec.emplace_back(x, y);
        }
      }
    }

  std::vector<Edgelet> out;
  for (auto& [pair, pixels] : borders) {
    // split into 8-connected components
    std::set<std::pair<int, int>> todo(pixels.begin(), pixels.end());
    while (!todo.empty()) {
      std::vector<std::pair<int, int>> comp;
      std::deque<std::pair<int, int>> q{*todo.begin()};
      todo.erase(todo.begin());
      while (!q.empty()) {
        const auto p = q.front();
        q.pop_front();
        comp.push_back(p);
        for (int k = 0; k < 8; ++k) {
          const std::pair<int, int> nb{p.first + kDx8[k], p.second + kDy8[k]};
          auto it = todo.find(nb);
          if (it != todo.end()) {
            todo.erase(it);
            q.push_back(nb);
          }
        }
      }
      std::sort(comp.begin(), comp.end(),
                [](const auto& a, const auto& b) { return std::pair(a.second, a.first) <
                                                          std::pair(b.second, b.first); });
      std::vector<std::vector<std::pair<int, int>>> chains;
      order_component(std::move(comp), chains);
      for (auto& chain : chains) {
        if (static_cast<int>(chain.size()) < min_len) continue;
        Edgelet e;
        e.frame = frame_id;
        e.region_a = pair.first;
        e.region_b = pair.second;
        e.chain = std::move(chain);
        for (const auto& [x, y] : e.chain) {
          e.cx += x;
          e.cy += y;
        }
        e.cx /= e.length();
        e.cy /= e.length();
        auto [nx, ny] = compute_normal(e, sp);
        e.nx = nx;
        e.ny = ny;
        out.push_back(std::move(e));
      }
    }
  }
  return out;
}

std::pair<double, double> compute_normal(const Edgelet& e, const SuperpixelMap& sp) {
  BFLOW_CHECK(e.length() >= 1, "compute_normal: empty edgelet");
  double sx = 0.0, sy = 0.0;
  int contributing = 0;
  for (const auto& [x, y] : e.chain) {
    double px = 0.0, py = 0.0;
    int cnt = 0;
    for (int d = 0; d < 4; ++d) {
      const int nx = x + kDx4[d], ny = y + kDy4[d];
      if (sp.in_bounds(nx, ny) && sp.at(nx, ny) == e.region_b) {
        px += kDx4[d];
        py += kDy4[d];
        ++cnt;
      }
    }
    if (cnt > 0) {
      sx += px / cnt;
      sy += py / cnt;
      ++contributing;
    }
  }
  if (contributing > 0) {
    sx /= contributing;
    sy /= contributing;
  }
  double norm = std::hypot(sx, sy);
  if (norm < 1e-9) {
    // pathological symmetric chain: use the perpendicular of the
    // endpoint-to-endpoint direction
    const double dx = e.chain.back().first - e.chain.front().first;
    const double dy = e.chain.back().second - e.chain.front().second;
    sx = -dy;
    sy = dx;
    norm = std::hypot(sx, sy);
    if (norm < 1e-9) return {1.0, 0.0};
  }
  return {sx / norm, sy / norm};
}

std::vector<std::array<double, 3>> region_mean_colors(const SuperpixelMap& sp,
                                                      const RgbImage& img) {
  BFLOW_CHECK(sp.w == img.w && sp.h == img.h, "region_mean_colors: size mismatch");
  std::vector<std::array<double, 3>> mean(sp.k, {0, 0, 0});
  std::vector<int64_t> count(sp.k, 0);
  for (int y = 0; y < sp.h; ++y)
    for (int x = 0; x < sp.w; ++x) {
      const int32_t lab = sp.at(x, y);
      BFLOW_CHECK(lab >= 0 && lab < sp.k, "region_mean_colors: invalid label ", lab);
      for (int i = 0; i < 3; ++i) mean[lab][i] += img.at(x, y)[i];
      ++count[lab];
    }
  for (int l = 0; l < sp.k; ++l)
    if (count[l] > 0)
      for (int i = 0; i < 3; ++i) mean[l][i] /= static_cast<double>(count[l]);
  return mean;
}

void write_superpixel_pgm(const std::string& path, const SuperpixelMap& sp) {
  Planef plane(sp.w, sp.h);
  const float scale = sp.k > 1 ? 1.0f / (sp.k - 1) : 1.0f;
  for (size_t i = 0; i < sp.label.size(); ++i) plane.v[i] = sp.label[i] * scale;
  write_pgm(path, plane, 65535);
}

void write_edgelets(const std::string& path, const std::vector<Edgelet>& edgelets) {
  std::ofstream out(path);
  BFLOW_CHECK(out.good(), "write_edgelets: cannot open ", path);
  out.precision(9);
  for (const Edgelet& e : edgelets) {
    out << e.frame << " " << e.region_a << " " << e.region_b << " " << e.nx << " " << e.ny << " "
        << e.length();
    for (const auto& [x, y] : e.chain) out << " " << x << " " << y;
    out << "\n";
  }
  BFLOW_CHECK(out.good(), "write_edgelets: write failed for ", path);
}

std::vector<Edgelet> read_edgelets(const std::string& path) {
  std::ifstream in(path);
  BFLOW_CHECK(in.good(), "read_edgelets: cannot open ", path);
  std::vector<Edgelet> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    Edgelet e;
    int n = 0;
    ss >> e.frame >> e.region_a >> e.region_b >> e.nx >> e.ny >> n;
    BFLOW_CHECK(!ss.fail() && n >= 0, "read_edgelets: bad line '", line, "'");
    for (int i = 0; i < n; ++i) {
      int x, y;
      ss >> x >> y;
      BFLOW_CHECK(!ss.fail(), "read_edgelets: truncated chain in '", line, "'");
      e.chain.emplace_back(x, y);
      e.cx += x;
      e.cy += y;
    }
    if (n > 0) {
      e.cx /= n;
      e.cy /= n;
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace bflow
