#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bflow/evaluation.hpp"
#include "bflow/segmentation.hpp"
#include "oracles.hpp"

using namespace bflow;

namespace {

BfGroundTruth gt_from(const std::vector<std::array<float, 4>>& rows) {
  BfGroundTruth gt;
  for (const auto& r : rows)
    gt.entries.push_back({static_cast<int>(r[0]), static_cast<int>(r[1]), true, r[2], r[3],
                          BfUndefReason::kTieCaseI});
  return gt;
}

BoundaryFlowField field_from(const std::vector<std::array<float, 4>>& rows) {
  BoundaryFlowField f;
  for (const auto& r : rows)
    f.entries.push_back({static_cast<int>(r[0]), static_cast<int>(r[1]), r[2], r[3], -1});
  return f;
}

}  // namespace

TEST_CASE("epe basics") {
  SUBCASE("pred equals gt -> zero") {
    const auto rows = std::vector<std::array<float, 4>>{{2, 3, 1, 0}, {5, 5, -2, 4}};
    CHECK(epe(field_from(rows), gt_from(rows)) == doctest::Approx(0.0));
  }

  SUBCASE("single pixel, 3-4-5 triangle") {
    const BfGroundTruth gt = gt_from({{4, 4, 0, 0}});
    const BoundaryFlowField pred = field_from({{4, 4, 3, 4}});
    CHECK(epe(pred, gt) == doctest::Approx(5.0));
  }

  SUBCASE("uncovered gt pixels cost the search-radius penalty") {
    const BfGroundTruth gt = gt_from({{4, 4, 1, 0}, {40, 40, 1, 0}});
    const BoundaryFlowField pred = field_from({{4, 4, 1, 0}});
    CHECK(epe(pred, gt) == doctest::Approx(50.0));  // (0 + 100) / 2
  }

  SUBCASE("matching radius is 2 px") {
    const BfGroundTruth gt = gt_from({{10, 10, 1, 1}});
    CHECK(epe(field_from({{12, 10, 1, 1}}), gt) == doctest::Approx(0.0));
    CHECK(epe(field_from({{13, 10, 1, 1}}), gt) == doctest::Approx(100.0));
  }

  SUBCASE("symmetric in the displacements when the pixel sets coincide") {
    Rng rng(3);
    std::vector<std::array<float, 4>> a, b;
    for (int i = 0; i < 30; ++i) {
      const float x = static_cast<float>(rng.uniform_int(0, 63));
      const float y = static_cast<float>(rng.uniform_int(0, 63));
      a.push_back({x, y, static_cast<float>(rng.uniform_real(-5, 5)),
                   static_cast<float>(rng.uniform_real(-5, 5))});
      b.push_back({x, y, static_cast<float>(rng.uniform_real(-5, 5)),
                   static_cast<float>(rng.uniform_real(-5, 5))});
    }
    const double ab = epe(field_from(a), gt_from(b));
    const double ba = epe(field_from(b), gt_from(a));
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
  }

  SUBCASE("empty gt rejected") {
    CHECK_THROWS_AS(epe(field_from({{1, 1, 0, 0}}), BfGroundTruth{}), Error);
  }
}

TEST_CASE("boundary_pr: perfect prediction scores 1.0 everywhere") {
  Planef gt(32, 32, 0.0f);
  for (int i = 6; i < 26; ++i) {
    gt.at(i, 8) = 1.0f;
    gt.at(6, i) = 1.0f;
  }
  const std::vector<PrCounts> counts = boundary_pr(gt, gt, 33);
  std::vector<std::vector<PrCounts>> per_image = {counts};
  const BenchmarkSummary s = summarize(per_image);
  CHECK(s.ods == doctest::Approx(1.0));
  CHECK(s.ois == doctest::Approx(1.0));
  CHECK(s.ap == doctest::Approx(1.0));
}

TEST_CASE("boundary_pr: empty prediction gives recall 0, precision 1 by convention") {
  Planef pred(16, 16, 0.0f);
  Planef gt(16, 16, 0.0f);
  gt.at(5, 5) = 1.0f;
  const std::vector<PrCounts> counts = boundary_pr(pred, gt, 9);
  for (const PrCounts& c : counts) {
    CHECK(c.precision() == 1.0);
    CHECK(c.recall() == 0.0);
  }
}

TEST_CASE("boundary_pr: recall non-decreasing, precision non-increasing for "
          "confidence-ordered detections") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Planef gt(24, 24, 0.0f);
    for (int i = 0; i < 40; ++i)
      gt.at(rng.uniform_int(0, 23), rng.uniform_int(0, 23)) = 1.0f;
    // true pixels get high confidences, false ones low: the detector-like case
    Planef pred(24, 24, 0.0f);
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x) {
        if (gt.at(x, y) >= 0.5f && rng.bernoulli(0.8))
          pred.at(x, y) = static_cast<float>(rng.uniform_real(0.6, 1.0));
        else if (rng.bernoulli(0.05))
          pred.at(x, y) = static_cast<float>(rng.uniform_real(0.05, 0.4));
      }
    const std::vector<PrCounts> counts = boundary_pr(pred, gt, 17);
    for (size_t k = 1; k < counts.size(); ++k) {
      CHECK(counts[k - 1].recall() >= counts[k].recall() - 1e-12);
      CHECK(counts[k - 1].precision() <= counts[k].precision() + 1e-12);
    }
  }
}

TEST_CASE("summarize: OIS dominates ODS") {
  Rng rng(11);
  std::vector<std::vector<PrCounts>> per_image;
  for (int img = 0; img < 6; ++img) {
    Planef gt(24, 24, 0.0f);
    Planef pred(24, 24, 0.0f);
    for (int i = 0; i < 30; ++i) {
      gt.at(rng.uniform_int(0, 23), rng.uniform_int(0, 23)) = 1.0f;
      pred.at(rng.uniform_int(0, 23), rng.uniform_int(0, 23)) =
          static_cast<float>(rng.uniform_real(0.1, 1.0));
    }
    per_image.push_back(boundary_pr(pred, gt, 15, 2.0));
  }
  const BenchmarkSummary s = summarize(per_image);
  CHECK(s.ois >= s.ods - 1e-12);
  CHECK(s.ods >= 0.0);
  CHECK(s.ods <= 1.0);
  CHECK(s.ap >= 0.0);
  CHECK(s.ap <= 1.0);
}

namespace {

double optimal_f(const std::vector<std::pair<int, int>>& pred,
                 const std::vector<std::pair<int, int>>& gt, double tol) {
  oracle::MaxBipartite mb(static_cast<int>(pred.size()), static_cast<int>(gt.size()));
  for (size_t p = 0; p < pred.size(); ++p)
    for (size_t g = 0; g < gt.size(); ++g)
      if (std::hypot(pred[p].first - gt[g].first, pred[p].second - gt[g].second) <= tol)
        mb.add_edge(static_cast<int>(p), static_cast<int>(g));
  const int opt = mb.solve();
  return f_measure(static_cast<double>(opt) / pred.size(), static_cast<double>(opt) / gt.size());
}

}  // namespace

TEST_CASE("greedy PR correspondences stay within 0.01 F of the optimal assignment "
          "on boundary-like 16x16 instances") {
  Rng rng(13);
  for (int trial = 0; trial < 60; ++trial) {
    const double tol = 1.5;
    Planef pred_map(16, 16, 0.0f), gt_map(16, 16, 0.0f);
    // ground truth: an 8-connected random walk (a thin boundary curve)
    int x = rng.uniform_int(2, 13), y = rng.uniform_int(2, 13);
    for (int step = 0; step < 24; ++step) {
      gt_map.at(x, y) = 1.0f;
      // prediction: the curve with localization jitter, occasional misses
      if (rng.bernoulli(0.9)) {
        const int jx = std::clamp(x + rng.uniform_int(-1, 1), 0, 15);
        const int jy = std::clamp(y + rng.uniform_int(-1, 1), 0, 15);
        pred_map.at(jx, jy) = 1.0f;
      }
      x = std::clamp(x + rng.uniform_int(-1, 1), 0, 15);
      y = std::clamp(y + rng.uniform_int(-1, 1), 0, 15);
    }
    for (int i = 0; i < 2; ++i)  // a couple of spurious detections
      pred_map.at(rng.uniform_int(0, 15), rng.uniform_int(0, 15)) = 1.0f;

    std::vector<std::pair<int, int>> pred, gt;
    for (int yy = 0; yy < 16; ++yy)
      for (int xx = 0; xx < 16; ++xx) {
        if (pred_map.at(xx, yy) > 0) pred.emplace_back(xx, yy);
        if (gt_map.at(xx, yy) > 0) gt.emplace_back(xx, yy);
      }
    if (pred.empty() || gt.empty()) continue;

    const std::vector<PrCounts> counts = boundary_pr(pred_map, gt_map, 1, tol);
    const double f_greedy = f_measure(counts[0].precision(), counts[0].recall());
    const double f_opt = optimal_f(pred, gt, tol);
    CHECK(f_opt - f_greedy <= 0.01);
    CHECK(f_greedy <= f_opt + 1e-12);  // greedy can never beat the optimum
  }
}

TEST_CASE("greedy PR correspondences never beat the optimal assignment") {
  Rng rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    const double tol = 2.0;
    Planef pred_map(16, 16, 0.0f), gt_map(16, 16, 0.0f);
    for (int i = 0; i < 25; ++i) {
      pred_map.at(rng.uniform_int(0, 15), rng.uniform_int(0, 15)) = 1.0f;
      gt_map.at(rng.uniform_int(0, 15), rng.uniform_int(0, 15)) = 1.0f;
    }
    std::vector<std::pair<int, int>> pred, gt;
    for (int yy = 0; yy < 16; ++yy)
      for (int xx = 0; xx < 16; ++xx) {
        if (pred_map.at(xx, yy) > 0) pred.emplace_back(xx, yy);
        if (gt_map.at(xx, yy) > 0) gt.emplace_back(xx, yy);
      }
    if (pred.empty() || gt.empty()) continue;
    const std::vector<PrCounts> counts = boundary_pr(pred_map, gt_map, 1, tol);
    const double f_greedy = f_measure(counts[0].precision(), counts[0].recall());
    CHECK(f_greedy <= optimal_f(pred, gt, tol) + 1e-12);
  }
}

namespace {

RgbImage textured(Rng& rng, int w, int h) {
  RgbImage img(w, h);
  for (auto& b : img.px) b = static_cast<uint8_t>(rng.uniform_int(0, 255));
  return img;
}

}  // namespace

TEST_CASE("greedy NN baseline: identical textured frames match in place") {
  Rng rng(17);
  const RgbImage img = textured(rng, 48, 48);
  BoundarySet b;
  for (int i = 0; i < 120; ++i) b.emplace_back(rng.uniform_int(0, 47), rng.uniform_int(0, 47));
  const BoundaryFlowField f = baseline_greedy_nn(b, b, img, img, 100.0);
  REQUIRE(f.entries.size() == b.size());
  int zero = 0;
  for (const FlowEntry& e : f.entries) zero += (e.dx == 0.0 && e.dy == 0.0);
  CHECK(static_cast<double>(zero) / f.entries.size() >= 0.99);

  SUBCASE("empty B2 gives an empty field") {
    CHECK(baseline_greedy_nn(b, {}, img, img, 100.0).entries.empty());
  }
}

TEST_CASE("greedy NN baseline: aperture failure on a textureless translating square") {
  Scene scene;
  scene.w = scene.h = 64;
  scene.background = {25, 25, 35};
  Shape sq;
  sq.kind = Shape::kPolygon;
  sq.cx = 24;
  sq.cy = 32;
  sq.verts = {{12, 20}, {36, 20}, {36, 44}, {12, 44}};
  sq.color = {210, 90, 70};
  sq.motion.tx = 10;
  scene.shapes.push_back(sq);
  const RenderOut a = render_scene(scene, 0);
  const RenderOut b = render_scene(scene, 1);

  const BoundaryFlowField f =
      baseline_greedy_nn(a.boundary, b.boundary, a.image, b.image, 100.0);
  std::vector<double> errs;
  for (const FlowEntry& e : f.entries) errs.push_back(std::hypot(e.dx - 10.0, e.dy - 0.0));
  REQUIRE(!errs.empty());
  std::sort(errs.begin(), errs.end());
  const double median = errs[errs.size() / 2];
  CHECK(median > 5.0);  // more than half the shift: the aperture problem
}

TEST_CASE("ransac translation recovers an exact global motion among outliers") {
  Rng rng(19);
  BoundaryFlowField putative;
  for (int i = 0; i < 80; ++i)
    putative.entries.push_back({rng.uniform_int(0, 63), rng.uniform_int(0, 63), 5.0, -3.0, -1});
  for (int i = 0; i < 20; ++i)  // 20% outliers, far outside the inlier radius
    putative.entries.push_back({rng.uniform_int(0, 63), rng.uniform_int(0, 63),
                                rng.uniform_real(12.0, 40.0), rng.uniform_real(12.0, 40.0), -1});
  const auto [tx, ty] = ransac_translation(putative, 500, 3.0, 99);
  CHECK(tx == doctest::Approx(5.0));
  CHECK(ty == doctest::Approx(-3.0));
}

TEST_CASE("ransac baseline: identical frames give zero translation") {
  Rng rng(23);
  const RgbImage img = textured(rng, 48, 48);
  BoundarySet b;
  for (int i = 0; i < 60; ++i) b.emplace_back(rng.uniform_int(0, 47), rng.uniform_int(0, 47));
  const BoundaryFlowField f = baseline_ransac_translation(b, b, img, img);
  REQUIRE(!f.entries.empty());
  for (const FlowEntry& e : f.entries) {
    CHECK(e.dx == doctest::Approx(0.0));
    CHECK(e.dy == doctest::Approx(0.0));
  }
}

TEST_CASE("ransac baseline cannot fit two independently moving objects") {
  Scene scene;
  scene.w = scene.h = 64;
  scene.background = {20, 30, 25};
  Shape a;
  a.kind = Shape::kPolygon;
  a.cx = 16;
  a.cy = 20;
  a.verts = {{8, 12}, {24, 12}, {24, 28}, {8, 28}};
  a.color = {220, 100, 70};
  a.motion.tx = 8;
  scene.shapes.push_back(a);
  Shape b;
  b.kind = Shape::kDisk;
  b.cx = 44;
  b.cy = 44;
  b.radius = 9;
  b.color = {90, 120, 230};
  b.motion.tx = -7;
  b.motion.ty = 2;
  scene.shapes.push_back(b);

  const RenderOut fa = render_scene(scene, 0);
  const RenderOut fb = render_scene(scene, 1);
  const BfGroundTruth gt = bf_oracle(fa.boundary, fb.boundary, fa.flow);
  const BoundaryFlowField f =
      baseline_ransac_translation(fa.boundary, fb.boundary, fa.image, fb.image);
  // a single global translation leaves at least one object mispredicted
  CHECK(epe(f, gt) > 2.0);
}
