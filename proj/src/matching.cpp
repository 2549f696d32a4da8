#include "bflow/matching.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace bflow {

std::vector<int> candidates(const Edgelet& e_t, const std::vector<Edgelet>& edgelets_t1,
                            const MatchParams& params) {
  params.validate();
  std::vector<int> out;
  for (size_t j = 0; j < edgelets_t1.size(); ++j) {
    const double d = std::hypot(edgelets_t1[j].cx - e_t.cx, edgelets_t1[j].cy - e_t.cy);
    if (d <= params.radius) out.push_back(static_cast<int>(j));
  }
  return out;
}

double edgelet_similarity(const std::vector<double>& s_ij, size_t n_t, size_t n_t1) {
  BFLOW_CHECK(n_t > 0 && n_t1 > 0, "edgelet_similarity: empty edgelet");
  BFLOW_CHECK(s_ij.size() == n_t * n_t1, "edgelet_similarity: matrix size mismatch");
  double total = 0.0;
  for (double v : s_ij) total += v;
  return total / static_cast<double>(n_t * n_t1);
}

double normal_angle_deg(double ax, double ay, double bx, double by) {
  const double dot = std::fabs(ax * bx + ay * by);
  return std::acos(std::min(1.0, dot)) * 180.0 / M_PI;
}

std::vector<ScoredPair> filter_top_k_and_angle(const Edgelet& e_t,
                                               const std::vector<Edgelet>& edgelets_t1,
                                               std::vector<ScoredPair> scored,
                                               const MatchParams& params) {
  params.validate();
  std::sort(scored.begin(), scored.end(), [](const ScoredPair& a, const ScoredPair& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.idx_t1 < b.idx_t1;
  });
  if (scored.size() > static_cast<size_t>(params.top_k)) scored.resize(params.top_k);
  std::vector<ScoredPair> out;
  for (const ScoredPair& p : scored) {
    const Edgelet& e1 = edgelets_t1[p.idx_t1];
    if (normal_angle_deg(e_t.nx, e_t.ny, e1.nx, e1.ny) <= params.max_angle_deg) out.push_back(p);
  }
  return out;
}

std::vector<EdgeletMatch> greedy_match(std::vector<ScoredPair> pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const ScoredPair& a, const ScoredPair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.idx_t != b.idx_t) return a.idx_t < b.idx_t;
    return a.idx_t1 < b.idx_t1;
  });
  std::set<int> used_t, used_t1;
  std::vector<EdgeletMatch> out;
  for (const ScoredPair& p : pairs) {
    if (used_t.count(p.idx_t) || used_t1.count(p.idx_t1)) continue;
    used_t.insert(p.idx_t);
    used_t1.insert(p.idx_t1);
    out.push_back({p.idx_t, p.idx_t1, p.score});
  }
  return out;
}

namespace {

// M[i][j] = s[i][j] + max_{j' <= j} M[i-1][j']; ties prefer the smaller j.
double monotone_dp(size_t n, size_t m, const std::vector<double>& s, std::vector<int>& target) {
  std::vector<double> prev(m), cur(m);
  std::vector<std::vector<int>> from(n, std::vector<int>(m, -1));
  for (size_t j = 0; j < m; ++j) prev[j] = s[j];
  for (size_t i = 1; i < n; ++i) {
    double best = prev[0];
    int best_j = 0;
    for (size_t j = 0; j < m; ++j) {
      if (prev[j] > best) {
        best = prev[j];
        best_j = static_cast<int>(j);
      }
      cur[j] = s[i * m + j] + best;
      from[i][j] = best_j;
    }
    std::swap(prev, cur);
  }
  size_t end_j = 0;
  for (size_t j = 1; j < m; ++j)
    if (prev[j] > prev[end_j]) end_j = j;
  target.assign(n, 0);
  size_t j = end_j;
  for (size_t i = n; i-- > 0;) {
    target[i] = static_cast<int>(j);
    if (i > 0) j = static_cast<size_t>(from[i][j]);
  }
  return prev[end_j];
}

}  // namespace

PixelAssignment pixel_assignment(size_t n_t, size_t n_t1, const std::vector<double>& s_ij) {
  BFLOW_CHECK(n_t > 0 && n_t1 > 0, "pixel_assignment: empty chain");
  BFLOW_CHECK(s_ij.size() == n_t * n_t1, "pixel_assignment: matrix size mismatch");
  PixelAssignment fwd, rev;
  const double t_fwd = monotone_dp(n_t, n_t1, s_ij, fwd.target);
  std::vector<double> flipped(s_ij.size());
  for (size_t i = 0; i < n_t; ++i)
    for (size_t j = 0; j < n_t1; ++j) flipped[i * n_t1 + j] = s_ij[i * n_t1 + (n_t1 - 1 - j)];
  const double t_rev = monotone_dp(n_t, n_t1, flipped, rev.target);
  if (t_rev > t_fwd) {
    for (int& j : rev.target) j = static_cast<int>(n_t1) - 1 - j;
    rev.flipped = true;
    rev.total = t_rev;
    return rev;
  }
  fwd.total = t_fwd;
  return fwd;
}

namespace {

double color_dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double n = 255.0 * std::sqrt(3.0);
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2])) / n;
}

}  // namespace

void place_match(const Edgelet& e_t, const Edgelet& e_t1, const PixelAssignment& assign,
                 const SuperpixelMap& sp_t, const std::vector<std::array<double, 3>>& colors_t,
                 const std::vector<std::array<double, 3>>& colors_t1, int edgelet_id,
                 BoundaryFlowField& field, std::vector<std::string>* log) {
  BFLOW_CHECK(assign.target.size() == e_t.chain.size(), "place_match: assignment size mismatch");
  // Pair the regions across the match by mean color. Chain pixels sit on
  // the region_a side in both frames; a cross pairing means the source
  // pixel must move to the other side of its edgelet.
  const double same = color_dist(colors_t[e_t.region_a], colors_t1[e_t1.region_a]) +
                      color_dist(colors_t[e_t.region_b], colors_t1[e_t1.region_b]);
  const double cross = color_dist(colors_t[e_t.region_a], colors_t1[e_t1.region_b]) +
                       color_dist(colors_t[e_t.region_b], colors_t1[e_t1.region_a]);
  bool relocate = cross < same;
  if (cross == same && log)
    log->push_back("place_match: ambiguous side pairing for edgelet " +
                   std::to_string(edgelet_id) + ", keeping original side");

  std::set<std::pair<int, int>> taken;
  for (const FlowEntry& e : field.entries) taken.insert({e.x, e.y});

  for (size_t i = 0; i < e_t.chain.size(); ++i) {
    auto [sx, sy] = e_t.chain[i];
    const auto [tx, ty] = e_t1.chain[assign.target[i]];
    if (relocate) {
      bool moved = false;
      for (int step = 1; step <= 2 && !moved; ++step) {
        const int nx = sx + static_cast<int>(std::lround(step * e_t.nx));
        const int ny = sy + static_cast<int>(std::lround(step * e_t.ny));
        if (sp_t.in_bounds(nx, ny) && sp_t.at(nx, ny) == e_t.region_b) {
          sx = nx;
          sy = ny;
          moved = true;
        }
      }
      if (!moved && log)
        log->push_back("place_match: no cell of region " + std::to_string(e_t.region_b) +
                       " within 2 px of (" + std::to_string(sx) + "," + std::to_string(sy) + ")");
    }
    if (taken.count({sx, sy})) continue;  // first writer keeps the pixel
    taken.insert({sx, sy});
    field.entries.push_back(
        {sx, sy, static_cast<double>(tx - sx), static_cast<double>(ty - sy), edgelet_id});
  }
}

BoundaryFlowField side_correct_and_place(const std::vector<EdgeletMatch>& matches,
                                         const std::vector<Edgelet>& edgelets_t,
                                         const std::vector<Edgelet>& edgelets_t1,
                                         const std::vector<PixelAssignment>& assignments,
                                         const SuperpixelMap& sp_t, const SuperpixelMap& sp_t1,
                                         const RgbImage& img_t, const RgbImage& img_t1,
                                         std::vector<std::string>* log) {
  BFLOW_CHECK(matches.size() == assignments.size(),
              "side_correct_and_place: one assignment per match required");
  const auto colors_t = region_mean_colors(sp_t, img_t);
  const auto colors_t1 = region_mean_colors(sp_t1, img_t1);
  BoundaryFlowField field;
  for (size_t m = 0; m < matches.size(); ++m) {
    place_match(edgelets_t[matches[m].idx_t], edgelets_t1[matches[m].idx_t1], assignments[m],
                sp_t, colors_t, colors_t1, matches[m].idx_t, field, log);
  }
  return field;
}

void export_matches(const BoundaryFlowField& field, const std::string& path) {
  std::ofstream out(path);
  BFLOW_CHECK(out.good(), "export_matches: cannot open ", path);
  for (const FlowEntry& e : field.entries) {
    out << e.x << " " << e.y << " " << e.x + static_cast<int>(std::lround(e.dx)) << " "
        << e.y + static_cast<int>(std::lround(e.dy)) << "\n";
  }
  BFLOW_CHECK(out.good(), "export_matches: write failed for ", path);
}

BoundaryFlowField import_matches(const std::string& path) {
  std::ifstream in(path);
  BFLOW_CHECK(in.good(), "import_matches: cannot open ", path);
  BoundaryFlowField field;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    int x1, y1, x2, y2;
    ss >> x1 >> y1 >> x2 >> y2;
    BFLOW_CHECK(!ss.fail(), "import_matches: bad line '", line, "' in ", path);
    field.entries.push_back({x1, y1, static_cast<double>(x2 - x1), static_cast<double>(y2 - y1),
                             -1});
  }
  return field;
}

}  // namespace bflow
