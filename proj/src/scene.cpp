#include <algorithm>
#include <cmath>

#include "bflow/bf_oracle.hpp"

namespace bflow {

namespace {

std::pair<double, double> move_point(double px, double py, const Shape& s, int frame) {
  if (frame == 0) return {px, py};
  const double c = std::cos(s.motion.rot), sn = std::sin(s.motion.rot);
  const double rx = px - s.cx, ry = py - s.cy;
  return {s.cx + c * rx - sn * ry + s.motion.tx, s.cy + sn * rx + c * ry + s.motion.ty};
}

bool shape_contains(const Shape& s, int frame, double x, double y) {
  if (s.kind == Shape::kDisk) {
    double cx = s.cx, cy = s.cy;
    if (frame == 1) {
      cx += s.motion.tx;
      cy += s.motion.ty;
    }
    return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= s.radius * s.radius;
  }
  // even-odd rule on the moved polygon
  bool inside = false;
  const size_t n = s.verts.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    auto [xi, yi] = move_point(s.verts[i].first, s.verts[i].second, s, frame);
    auto [xj, yj] = move_point(s.verts[j].first, s.verts[j].second, s, frame);
    if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) inside = !inside;
  }
  return inside;
}

// Topmost shape index containing the point, or -1 for background.
int owner_at(const Scene& scene, int frame, double x, double y) {
  for (int i = static_cast<int>(scene.shapes.size()) - 1; i >= 0; --i)
    if (shape_contains(scene.shapes[i], frame, x, y)) return i;
  return -1;
}

double polygon_area(const std::vector<std::pair<double, double>>& v) {
  double a = 0.0;
  for (size_t i = 0, j = v.size() - 1; i < v.size(); j = i++)
    a += (v[j].first + v[i].first) * (v[j].second - v[i].second);
  return std::fabs(a) * 0.5;
}

}  // namespace

void Scene::validate() const {
  BFLOW_CHECK(w > 0 && h > 0, "scene: empty canvas");
  for (size_t i = 0; i < shapes.size(); ++i) {
    const Shape& s = shapes[i];
    if (s.kind == Shape::kDisk) {
      BFLOW_CHECK(s.radius >= 1.0, "scene: degenerate disk (radius ", s.radius, ") at index ", i);
    } else {
      BFLOW_CHECK(s.verts.size() >= 3 && polygon_area(s.verts) >= 1.0,
                  "scene: degenerate polygon at index ", i);
    }
  }
}

RenderOut render_scene(const Scene& scene, int frame) {
  scene.validate();
  BFLOW_CHECK(frame == 0 || frame == 1, "render_scene: frame must be 0 or 1");
  const int w = scene.w, h = scene.h;

  std::vector<int> owner(static_cast<size_t>(w) * h);
  RenderOut out;
  out.image = RgbImage(w, h, scene.background);
  out.boundary_mask = Planef(w, h, 0.0f);
  out.flow = DenseFlow(w, h);

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int o = owner_at(scene, frame, x, y);
      owner[static_cast<size_t>(y) * w + x] = o;
      if (o >= 0) {
        const auto& c = scene.shapes[o].color;
        uint8_t* px = out.image.at(x, y);
        px[0] = c[0];
        px[1] = c[1];
        px[2] = c[2];
      }
    }

  // Occlusion boundary: pixels whose owner is in front of a 4-neighbor's.
  constexpr int dx4[4] = {1, 0, -1, 0};
  constexpr int dy4[4] = {0, 1, 0, -1};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int o = owner[static_cast<size_t>(y) * w + x];
      bool front = false;
      for (int d = 0; d < 4 && !front; ++d) {
        const int nx = x + dx4[d], ny = y + dy4[d];
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        front = o > owner[static_cast<size_t>(ny) * w + nx];
      }
      if (front) {
        out.boundary.emplace_back(x, y);
        out.boundary_mask.at(x, y) = 1.0f;
      }
    }

  // Analytic motion of the owner; valid iff the pixel is visible in the
  // other frame. Flow is only meaningful for frame 0.
  if (frame == 0) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const size_t i = static_cast<size_t>(y) * w + x;
        const int o = owner[i];
        double mx = x, my = y;
        if (o >= 0) {
          auto [px, py] = move_point(x, y, scene.shapes[o], 1);
          mx = px;
          my = py;
        }
        out.flow.dx[i] = static_cast<float>(mx - x);
        out.flow.dy[i] = static_cast<float>(my - y);
        out.flow.valid[i] = owner_at(scene, 1, mx, my) == o;
      }
  }
  return out;
}

namespace {

std::array<uint8_t, 3> random_bright_color(Rng& rng, const std::vector<std::array<uint8_t, 3>>& avoid) {
  for (int attempt = 0; attempt < 32; ++attempt) {
    std::array<uint8_t, 3> c = {static_cast<uint8_t>(rng.uniform_int(90, 255)),
                                static_cast<uint8_t>(rng.uniform_int(90, 255)),
                                static_cast<uint8_t>(rng.uniform_int(90, 255))};
    bool ok = *std::max_element(c.begin(), c.end()) >= 150;
    for (const auto& a : avoid) {
      const int d = std::abs(c[0] - a[0]) + std::abs(c[1] - a[1]) + std::abs(c[2] - a[2]);
      if (d < 120) ok = false;
    }
    if (ok) return c;
  }
  return {230, 90, 160};  // last resort, still bright
}

Shape random_shape(Rng& rng, const DatasetParams& p,
                   const std::vector<std::array<uint8_t, 3>>& avoid) {
  Shape s;
  const double r = rng.uniform_real(6.0, std::min(p.w, p.h) * 0.22);
  const double margin = r + p.max_translation + 2.0;
  s.cx = rng.uniform_real(margin, p.w - margin);
  s.cy = rng.uniform_real(margin, p.h - margin);
  s.color = random_bright_color(rng, avoid);
  if (rng.uniform_real() < 0.4) {
    s.kind = Shape::kDisk;
    s.radius = r;
  } else {
    s.kind = Shape::kPolygon;
    const int k = rng.uniform_int(3, 5);
    std::vector<double> angles;
    for (int i = 0; i < k; ++i)
      angles.push_back(2.0 * M_PI * i / k + rng.uniform_real(-0.35, 0.35));
    for (double a : angles) {
      const double rr = r * rng.uniform_real(0.75, 1.0);
      s.verts.emplace_back(s.cx + rr * std::cos(a), s.cy + rr * std::sin(a));
    }
  }
  return s;
}

ShapeMotion random_translation(Rng& rng, const DatasetParams& p) {
  ShapeMotion m;
  while (std::fabs(m.tx) + std::fabs(m.ty) < p.min_translation) {
    m.tx = rng.uniform_int(static_cast<int>(-p.max_translation),
                           static_cast<int>(p.max_translation));
    m.ty = rng.uniform_int(static_cast<int>(-p.max_translation),
                           static_cast<int>(p.max_translation));
  }
  return m;
}

}  // namespace

DatasetEntry generate_entry(const DatasetParams& params, int index) {
  Rng rng(mix_seed(params.seed, static_cast<uint64_t>(index)));
  // fixed 60/20/20 split by index
  const int r = index % 5;
  const int kind = r <= 2 ? 0 : (r == 3 ? 1 : 2);  // 0 translation, 1 rotation, 2 occlusion

  Scene scene;
  scene.w = params.w;
  scene.h = params.h;
  scene.background = {static_cast<uint8_t>(rng.uniform_int(10, 70)),
                      static_cast<uint8_t>(rng.uniform_int(10, 70)),
                      static_cast<uint8_t>(rng.uniform_int(10, 70))};

  int n_shapes = rng.uniform_int(params.min_shapes, params.max_shapes);
  if (kind == 2 || params.ensure_two_movers) n_shapes = std::max(n_shapes, 2);

  std::vector<std::array<uint8_t, 3>> used = {scene.background};
  for (int i = 0; i < n_shapes; ++i) {
    Shape s = random_shape(rng, params, used);
    used.push_back(s.color);
    switch (kind) {
      case 0:
        s.motion = random_translation(rng, params);
        break;
      case 1:
        s.motion.rot = rng.uniform_real(5.0, params.max_rotation_deg) * M_PI / 180.0 *
                       (rng.bernoulli(0.5) ? 1.0 : -1.0);
        s.motion.tx = rng.uniform_int(0, 3);
        s.motion.ty = rng.uniform_int(0, 3);
        break;
      case 2:
        // movers slide behind/past a static front occluder (the last shape)
        if (i + 1 < n_shapes) s.motion = random_translation(rng, params);
        break;
    }
    scene.shapes.push_back(std::move(s));
  }
  if (kind == 2 && scene.shapes.size() >= 2) {
    // drag the occluder onto the first mover's path so occlusion happens
    Shape& front = scene.shapes.back();
    const Shape& mover = scene.shapes.front();
    const double ox = mover.cx + mover.motion.tx * 0.5 + rng.uniform_real(-4.0, 4.0);
    const double oy = mover.cy + mover.motion.ty * 0.5 + rng.uniform_real(-4.0, 4.0);
    const double sx = ox - front.cx, sy = oy - front.cy;
    front.cx += sx;
    front.cy += sy;
    for (auto& v : front.verts) {
      v.first += sx;
      v.second += sy;
    }
  }
  if (params.ensure_two_movers) {
    // force two clearly different motions
    Shape& a = scene.shapes[0];
    Shape& b = scene.shapes[1];
    if (std::fabs(a.motion.tx - b.motion.tx) + std::fabs(a.motion.ty - b.motion.ty) < 6.0) {
      b.motion.tx = -a.motion.tx;
      b.motion.ty = -a.motion.ty;
      if (std::fabs(b.motion.tx) + std::fabs(b.motion.ty) < params.min_translation)
        b.motion.tx = a.motion.tx >= 0 ? -std::max(3.0, params.min_translation)
                                       : std::max(3.0, params.min_translation);
    }
  }

  DatasetEntry entry;
  entry.scene = std::move(scene);
  entry.frame_a = render_scene(entry.scene, 0);
  entry.frame_b = render_scene(entry.scene, 1);
  entry.gt = bf_oracle(entry.frame_a.boundary, entry.frame_b.boundary, entry.frame_a.flow);
  return entry;
}

std::vector<DatasetEntry> generate_dataset(const DatasetParams& params) {
  BFLOW_CHECK(params.n >= 1, "generate_dataset: n must be >= 1");
  std::vector<DatasetEntry> out;
  out.reserve(params.n);
  for (int i = 0; i < params.n; ++i) out.push_back(generate_entry(params, i));
  return out;
}

}  // namespace bflow
