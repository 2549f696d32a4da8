#include "bflow/bf_oracle.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace bflow {

size_t BfGroundTruth::defined_count() const {
  size_t n = 0;
  for (const BfEntry& e : entries) n += e.defined;
  return n;
}

BfGroundTruth bf_oracle(const BoundarySet& b1, const BoundarySet& b2, const DenseFlow& flow,
                        const BfOracleOptions& opts) {
  for (const auto& [x, y] : b1)
    BFLOW_CHECK(x >= 0 && x < flow.w && y >= 0 && y < flow.h,
                "bf_oracle: B1 pixel (", x, ",", y, ") outside the ", flow.w, "x", flow.h,
                " flow field");

  // Candidate set for the case-(ii) nearest-valid search.
  BoundarySet valid_sources;
  if (opts.nearest_valid_over_all_pixels) {
    for (int y = 0; y < flow.h; ++y)
      for (int x = 0; x < flow.w; ++x)
        if (flow.valid[flow.idx(x, y)]) valid_sources.emplace_back(x, y);
  } else {
    for (const auto& p : b1)
      if (flow.valid[flow.idx(p.first, p.second)]) valid_sources.push_back(p);
  }

  BfGroundTruth gt;
  gt.entries.reserve(b1.size());
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
      // case (i): nearest frame-t+1 boundary pixel to x + OF(x)
      const double tx = x + static_cast<double>(flow.dx[flow.idx(x, y)]);
      const double ty = y + static_cast<double>(flow.dy[flow.idx(x, y)]);
      double best = -1.0;
      int best_x = 0, best_y = 0, ties = 0;
      for (const auto& [bx, by] : b2) {
        const double d = (bx - tx) * (bx - tx) + (by - ty) * (by - ty);
        if (best < 0.0 || d < best) {
          best = d;
          best_x = bx;
          best_y = by;
          ties = 1;
        } else if (d == best) {
          ++ties;
        }
      }
      if (ties > 1) {
        e.reason = BfUndefReason::kTieCaseI;
      } else {
        e.defined = true;
        e.dx = static_cast<float>(best_x - x);
        e.dy = static_cast<float>(best_y - y);
      }
    } else {
      // case (ii): flow of the nearest pixel that has valid flow
      if (valid_sources.empty()) {
        e.reason = BfUndefReason::kNoValidFlow;
        gt.entries.push_back(e);
        continue;
      }
      double best = -1.0;
      int best_x = 0, best_y = 0, ties = 0;
      for (const auto& [vx, vy] : valid_sources) {
        const double d = static_cast<double>(vx - x) * (vx - x) +
                         static_cast<double>(vy - y) * (vy - y);
        if (best < 0.0 || d < best) {
          best = d;
          best_x = vx;
          best_y = vy;
          ties = 1;
        } else if (d == best) {
          ++ties;
        }
      }
      if (ties > 1) {
        e.reason = BfUndefReason::kTieCaseII;
      } else {
        e.defined = true;
        e.dx = flow.dx[flow.idx(best_x, best_y)];
        e.dy = flow.dy[flow.idx(best_x, best_y)];
      }
    }
    gt.entries.push_back(e);
  }
  return gt;
}

void write_bf_gt(const std::string& path, const BfGroundTruth& gt) {
  std::ofstream out(path);
  BFLOW_CHECK(out.good(), "write_bf_gt: cannot open ", path);
  out << "bfgt 1\n";
  out.precision(9);
  for (const BfEntry& e : gt.entries) {
    if (e.defined)
      out << e.x << " " << e.y << " " << e.dx << " " << e.dy << "\n";
    else
      out << e.x << " " << e.y << " undef " << static_cast<int>(e.reason) << "\n";
  }
  BFLOW_CHECK(out.good(), "write_bf_gt: write failed for ", path);
}

BfGroundTruth read_bf_gt(const std::string& path) {
  std::ifstream in(path);
  BFLOW_CHECK(in.good(), "read_bf_gt: cannot open ", path);
  std::string header;
  std::getline(in, header);
  BFLOW_CHECK(header == "bfgt 1", "read_bf_gt: bad header '", header, "' in ", path);
  BfGroundTruth gt;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    BfEntry e;
    std::string third;
    ss >> e.x >> e.y >> third;
    BFLOW_CHECK(!ss.fail(), "read_bf_gt: bad line '", line, "'");
    if (third == "undef") {
      int reason;
      ss >> reason;
      BFLOW_CHECK(!ss.fail(), "read_bf_gt: bad undef line '", line, "'");
      e.reason = static_cast<BfUndefReason>(reason);
    } else {
      e.defined = true;
      e.dx = std::stof(third);
      ss >> e.dy;
      BFLOW_CHECK(!ss.fail(), "read_bf_gt: bad line '", line, "'");
    }
    gt.entries.push_back(e);
  }
  return gt;
}

BoundarySet mask_to_boundary_set(const Planef& mask, float threshold) {
  BoundarySet out;
  for (int y = 0; y < mask.h; ++y)
    for (int x = 0; x < mask.w; ++x)
      if (mask.at(x, y) >= threshold) out.emplace_back(x, y);
  return out;
}

}  // namespace bflow
