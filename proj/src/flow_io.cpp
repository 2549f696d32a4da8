#include "bflow/flow_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace bflow {

namespace {

void write_f32(std::ostream& out, float v) {
  static_assert(sizeof(float) == 4);
  out.write(reinterpret_cast<const char*>(&v), 4);
}

void write_i32(std::ostream& out, int32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

float read_f32(std::istream& in) {
  float v;
  in.read(reinterpret_cast<char*>(&v), 4);
  BFLOW_CHECK(in.good(), "flo: truncated file");
  return v;
}

int32_t read_i32(std::istream& in) {
  int32_t v;
  in.read(reinterpret_cast<char*>(&v), 4);
  BFLOW_CHECK(in.good(), "flo: truncated file");
  return v;
}

}  // namespace

void write_flo(const std::string& path, const DenseFlow& flow) {
  std::ofstream out(path, std::ios::binary);
  BFLOW_CHECK(out.good(), "write_flo: cannot open ", path);
  write_f32(out, kFloMagic);
  write_i32(out, flow.w);
  write_i32(out, flow.h);
  for (int y = 0; y < flow.h; ++y)
    for (int x = 0; x < flow.w; ++x) {
      const size_t i = flow.idx(x, y);
      if (flow.valid[i]) {
        write_f32(out, flow.dx[i]);
        write_f32(out, flow.dy[i]);
      } else {
        write_f32(out, kFloInvalid);
        write_f32(out, kFloInvalid);
      }
    }
  BFLOW_CHECK(out.good(), "write_flo: write failed for ", path);
}

DenseFlow read_flo(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  BFLOW_CHECK(in.good(), "read_flo: cannot open ", path);
  const float magic = read_f32(in);
  BFLOW_CHECK(magic == kFloMagic, "read_flo: bad magic ", magic, " in ", path);
  const int w = read_i32(in), h = read_i32(in);
  BFLOW_CHECK(w > 0 && h > 0 && w < 1 << 20 && h < 1 << 20, "read_flo: implausible size ", w, "x",
              h);
  DenseFlow flow(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = flow.idx(x, y);
      flow.dx[i] = read_f32(in);
      flow.dy[i] = read_f32(in);
      flow.valid[i] = std::fabs(flow.dx[i]) < 1e9f && std::fabs(flow.dy[i]) < 1e9f;
    }
  return flow;
}

void write_flow_field(const std::string& path, const BoundaryFlowField& field) {
  std::ofstream out(path);
  BFLOW_CHECK(out.good(), "write_flow_field: cannot open ", path);
  out.precision(9);
  for (const FlowEntry& e : field.entries)
    out << e.x << " " << e.y << " " << e.dx << " " << e.dy << "\n";
  BFLOW_CHECK(out.good(), "write_flow_field: write failed for ", path);
}

BoundaryFlowField read_flow_field(const std::string& path) {
  std::ifstream in(path);
  BFLOW_CHECK(in.good(), "read_flow_field: cannot open ", path);
  BoundaryFlowField field;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    FlowEntry e;
    ss >> e.x >> e.y >> e.dx >> e.dy;
    BFLOW_CHECK(!ss.fail(), "read_flow_field: bad line '", line, "' in ", path);
    field.entries.push_back(e);
  }
  return field;
}

void write_boundary_pixels(const std::string& path, const BoundarySet& set) {
  std::ofstream out(path);
  BFLOW_CHECK(out.good(), "write_boundary_pixels: cannot open ", path);
  for (const auto& [x, y] : set) out << x << " " << y << "\n";
  BFLOW_CHECK(out.good(), "write_boundary_pixels: write failed for ", path);
}

BoundarySet read_boundary_pixels(const std::string& path) {
  std::ifstream in(path);
  BFLOW_CHECK(in.good(), "read_boundary_pixels: cannot open ", path);
  BoundarySet set;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    int x, y;
    ss >> x >> y;
    BFLOW_CHECK(!ss.fail(), "read_boundary_pixels: bad line '", line, "'");
    set.emplace_back(x, y);
  }
  return set;
}

namespace {

// 55-entry Middlebury color wheel.
struct Wheel {
  std::vector<std::array<int, 3>> cols;
  Wheel() {
    const int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
    auto seg = [&](int n, int c0, int c1, bool up) {
      for (int i = 0; i < n; ++i) {
        std::array<int, 3> c = {0, 0, 0};
        c[c0] = 255;
        c[c1] = up ? 255 * i / n : 255 - 255 * i / n;
        cols.push_back(c);
      }
    };
    seg(RY, 0, 1, true);   // red -> yellow
    seg(YG, 1, 0, false);  // yellow -> green
    seg(GC, 1, 2, true);   // green -> cyan
    seg(CB, 2, 1, false);  // cyan -> blue
    seg(BM, 2, 0, true);   // blue -> magenta
    seg(MR, 0, 2, false);  // magenta -> red
  }
};

}  // namespace

std::array<uint8_t, 3> flow_wheel_color(double dx, double dy, double max_mag) {
  static const Wheel wheel;
  const double rad = std::hypot(dx, dy) / std::max(1e-9, max_mag);
  const double a = std::atan2(-dy, -dx) / M_PI;  // (-1, 1]
  const double fk = (a + 1.0) / 2.0 * (wheel.cols.size() - 1);
  const int k0 = static_cast<int>(fk) % wheel.cols.size();
  const int k1 = (k0 + 1) % static_cast<int>(wheel.cols.size());
  const double f = fk - static_cast<int>(fk);
  std::array<uint8_t, 3> out;
  for (int i = 0; i < 3; ++i) {
    double col = (1.0 - f) * wheel.cols[k0][i] / 255.0 + f * wheel.cols[k1][i] / 255.0;
    if (rad <= 1.0)
      col = 1.0 - rad * (1.0 - col);  // saturate toward white at low magnitude
    else
      col *= 0.75;
    out[i] = static_cast<uint8_t>(std::lround(255.0 * col));
  }
  return out;
}

}  // namespace bflow
