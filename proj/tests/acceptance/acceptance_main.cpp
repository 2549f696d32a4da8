// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit code is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "bflow/evaluation.hpp"
#include "bflow/excitation.hpp"
#include "bflow/grad_check.hpp"
#include "bflow/pipeline.hpp"
#include "../oracles.hpp"

using namespace bflow;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::chrono::steady_clock::time_point g_t0;

void report(int criterion, const std::string& what, bool pass, const std::string& detail) {
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - g_t0).count();
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << criterion << ": " << what
            << " (" << detail << ") [t=" << static_cast<int>(secs) << "s]\n"
            << std::flush;
  if (!pass) ++g_failures;
}

void info(const std::string& what, bool pass, const std::string& detail) {
  std::cout << (pass ? "[extra-pass] " : "[extra-FAIL] ") << what << " (" << detail << ")\n"
            << std::flush;
  if (!pass) ++g_failures;
}

RgbImage random_image(Rng& rng, int w, int h) {
  RgbImage img(w, h);
  for (auto& b : img.px) b = static_cast<uint8_t>(rng.uniform_int(0, 255));
  return img;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool trees_identical(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> rel;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a));
  for (const auto& r : rel) {
    if (!fs::exists(b / r) || slurp(a / r) != slurp(b / r)) return false;
  }
  size_t nb = 0;
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) ++nb;
  return nb == rel.size();
}

// ---- criterion 1: kernel oracles -------------------------------------------

void criterion_1() {
  Rng rng(1001);
  float worst_conv = 0.0f;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(1, 2), ci = rng.uniform_int(1, 5), co = rng.uniform_int(1, 5);
    const int k = 1 + 2 * rng.uniform_int(0, 2);
    const int stride = rng.uniform_int(1, 2), pad = rng.uniform_int(0, 2);
    const int h = std::max(k + rng.uniform_int(0, 6), k - 2 * pad + 1);
    const int w = std::max(k + rng.uniform_int(0, 6), k - 2 * pad + 1);
    Tensor x(n, ci, h, w), wt(co, ci, k, k);
    oracle::fill_random(x, rng);
    oracle::fill_random(wt, rng);
    std::vector<float> bias(co);
    for (float& b : bias) b = static_cast<float>(rng.uniform_real(-0.5, 0.5));
    worst_conv = std::max(worst_conv, max_abs_diff(conv2d(x, wt, bias, stride, pad),
                                                   oracle::conv2d_naive(x, wt, bias, stride, pad)));
  }

  double worst_adj = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int ci = rng.uniform_int(1, 4), co = rng.uniform_int(1, 4);
    const int k = 1 + 2 * rng.uniform_int(0, 2);
    const int stride = rng.uniform_int(1, 2), pad = rng.uniform_int(0, (k - 1) / 2);
    const int h = k - 2 * pad + stride * rng.uniform_int(1, 6);
    const int w = k - 2 * pad + stride * rng.uniform_int(1, 6);
    Tensor x(1, ci, h, w), wt(co, ci, k, k);
    oracle::fill_random(x, rng);
    oracle::fill_random(wt, rng);
    const Tensor cx = conv2d(x, wt, {}, stride, pad);
    Tensor y(cx.n, cx.c, cx.h, cx.w);
    oracle::fill_random(y, rng);
    const double lhs = dot(cx, y);
    const double rhs = dot(x, deconv2d(y, wt, {}, stride, pad));
    worst_adj = std::max(worst_adj,
                         std::fabs(lhs - rhs) / std::max({std::fabs(lhs), std::fabs(rhs), 1e-9}));
  }
  std::ostringstream d;
  d << "naive-loop max abs diff " << worst_conv << ", adjoint rel err " << worst_adj;
  report(1, "conv2d/deconv2d kernel oracles on 200 random shapes",
         worst_conv < 1e-6f && worst_adj < 1e-5, d.str());
}

// ---- criterion 2: gradient checks -------------------------------------------

void criterion_2() {
  Rng rng(1002);
  // single layer: conv + sigmoid + weighted BCE
  double single_worst = 0.0;
  {
    Tensor x(1, 2, 6, 6);
    oracle::fill_random(x, rng, 0.0, 1.0);
    Tensor target(1, 3, 4, 4);
    for (float& v : target.data) v = rng.bernoulli(0.3) ? 1.0f : 0.0f;
    ParamStore store;
    Tensor w(3, 2, 3, 3);
    oracle::fill_random(w, rng, -0.5, 0.5);
    store.add("w", w);
    auto forward = [&](const ParamStore& s) {
      Tensor z = conv2d(x, s.get("w"), {}, 1, 0);
      Tensor pred(z.n, z.c, z.h, z.w);
      for (size_t i = 0; i < z.size(); ++i) pred.data[i] = 1.0f / (1.0f + std::exp(-z.data[i]));
      return weighted_bce_loss(pred, target, LossWeights(1.0f, 0.1f)).value;
    };
    Tensor z = conv2d(x, store.get("w"), {}, 1, 0);
    Tensor pred(z.n, z.c, z.h, z.w);
    for (size_t i = 0; i < z.size(); ++i) pred.data[i] = 1.0f / (1.0f + std::exp(-z.data[i]));
    const LossResult lr = weighted_bce_loss(pred, target, LossWeights(1.0f, 0.1f));
    Tensor gz(z.n, z.c, z.h, z.w);
    for (size_t i = 0; i < z.size(); ++i)
      gz.data[i] = lr.grad.data[i] * pred.data[i] * (1.0f - pred.data[i]);
    std::map<std::string, Tensor> analytic;
    analytic["w"] = conv2d_backward(x, store.get("w"), gz, 1, 0).weights;
    single_worst = grad_check(forward, store, analytic, 1e-3, 54, 7).worst;
  }

  // end-to-end at 8x8: the full architecture with a 3-block pyramid
  double e2e_worst = 0.0;
  {
    FcsnConfig cfg;
    cfg.encoder_channels = {4, 8, 12};
    cfg.fc6_channels = 16;
    cfg.decoder_channels = {12, 8, 4, 4};
    cfg.patch_h = cfg.patch_w = 8;
    cfg.seed = 11;
    Fcsn net(cfg);
    TrainSample s;
    s.frame_a = random_image(rng, 8, 8);
    s.frame_b = random_image(rng, 8, 8);
    s.gt_a = Planef(8, 8, 0.0f);
    for (int i = 0; i < 10; ++i) s.gt_a.at(rng.uniform_int(0, 7), rng.uniform_int(0, 7)) = 1.0f;
    const std::map<std::string, Tensor> analytic = net.eval_grads(s);
    auto loss_fn = [&](const ParamStore&) { return net.eval_loss(s); };
    e2e_worst = grad_check(loss_fn, net.store(), analytic, 1e-3, 12, 13).worst;
  }

  // the exact desk-scale widths at the smallest size their pyramid allows
  double desk_worst = 0.0;
  {
    FcsnConfig cfg;  // desk defaults, 16x16 input
    cfg.patch_h = cfg.patch_w = 16;
    cfg.seed = 12;
    Fcsn net(cfg);
    TrainSample s;
    s.frame_a = random_image(rng, 16, 16);
    s.frame_b = random_image(rng, 16, 16);
    s.gt_a = Planef(16, 16, 0.0f);
    for (int i = 0; i < 24; ++i)
      s.gt_a.at(rng.uniform_int(0, 15), rng.uniform_int(0, 15)) = 1.0f;
    const std::map<std::string, Tensor> analytic = net.eval_grads(s);
    auto loss_fn = [&](const ParamStore&) { return net.eval_loss(s); };
    desk_worst = grad_check(loss_fn, net.store(), analytic, 1e-3, 6, 17).worst;
  }

  std::ostringstream d;
  d << "single-layer " << single_worst << " (<1e-3), end-to-end 8x8 " << e2e_worst
    << " (<1e-2), desk widths at 16x16 " << desk_worst << " (<1e-2)";
  report(2, "loss and FCSN backward vs central finite differences",
         single_worst < 1e-3 && e2e_worst < 1e-2 && desk_worst < 1e-2, d.str());
}

// ---- criterion 3: Siamese invariants ----------------------------------------

void criterion_3() {
  Fcsn net{FcsnConfig{}};
  Rng rng(1003);
  bool ok = true;
  for (int trial = 0; trial < 50 && ok; ++trial) {
    const RgbImage a = random_image(rng, 32, 32);
    const RgbImage b = random_image(rng, 32, 32);
    const PairResult same = net.forward_pair(a, a);
    ok = ok && same.pred_a.v == same.pred_b.v;
    const PairResult ab = net.forward_pair(a, b);
    const PairResult ba = net.forward_pair(b, a);
    ok = ok && ab.pred_a.v == ba.pred_b.v && ab.pred_b.v == ba.pred_a.v;
    for (float v : ab.pred_a.v) ok = ok && v >= 0.0f && v <= 1.0f;
  }
  report(3, "Siamese identity and swap symmetry, bit-exact on 50 random pairs", ok,
         ok ? "all pairs identical" : "mismatch found");
}

// ---- criterion 4: excitation correctness -------------------------------------

void criterion_4() {
  Rng rng(1004);
  double worst_path = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n0 = rng.uniform_int(2, 8), n1 = rng.uniform_int(2, 7);
    const int n2 = rng.uniform_int(1, std::max(1, 20 - n0 - n1));
    std::vector<double> w1(n1 * n0), w2(n2 * n1), a0(n0), a1(n1), p2(n2);
    for (double& v : w1) v = static_cast<float>(rng.uniform_real(-1.0, 1.0));
    for (double& v : w2) v = static_cast<float>(rng.uniform_real(-1.0, 1.0));
    for (double& v : a0) v = static_cast<float>(rng.uniform_real(0.0, 2.0));
    for (double& v : a1) v = static_cast<float>(rng.uniform_real(0.0, 2.0));
    for (double& v : p2) v = static_cast<float>(rng.uniform_real(0.0, 0.2));

    auto dense_op = [](const std::vector<double>& w, int no, int ni) {
      Tensor t(no, ni, 1, 1);
      for (int i = 0; i < no * ni; ++i) t.data[i] = static_cast<float>(w[i]);
      return LinOpPos::from_conv(t, 1, 0);
    };
    RelevanceMap p2f(n2, 1, 1), a1f(n1, 1, 1), a0f(n0, 1, 1);
    p2f.v = p2;
    a1f.v = a1;
    a0f.v = a0;
    const RelevanceMap p1 = propagate_linear(p2f, dense_op(w2, n2, n1), a1f, true);
    const RelevanceMap p0 = propagate_linear(p1, dense_op(w1, n1, n0), a0f, true);
    const std::vector<double> want = oracle::excitation_paths_2layer(w1, w2, a0, a1, p2);
    for (int i = 0; i < n0; ++i) worst_path = std::max(worst_path, std::fabs(p0.v[i] - want[i]));
  }

  double worst_mass = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int ci = rng.uniform_int(1, 3), co = rng.uniform_int(1, 3);
    const int h = rng.uniform_int(2, 5), w = rng.uniform_int(2, 5);
    const int k = 1 + 2 * rng.uniform_int(0, 1);
    Tensor wt(co, ci, k, k);
    for (float& v : wt.data) v = static_cast<float>(rng.uniform_real(0.05, 1.0));
    RelevanceMap acts(ci, h, w), p(co, h, w);
    for (double& v : acts.v) v = rng.uniform_real(0.05, 2.0);
    for (double& v : p.v) v = rng.uniform_real(0.0, 1.0);
    const RelevanceMap down = propagate_linear(p, LinOpPos::from_conv(wt, 1, (k - 1) / 2), acts, true);
    worst_mass = std::max(worst_mass, std::fabs(down.total() - p.total()));
  }
  std::ostringstream d;
  d << "path-enumeration max abs diff " << worst_path << " (<1e-10), mass drift " << worst_mass
    << " (<1e-5)";
  report(4, "excitation propagation vs brute-force enumeration and mass conservation",
         worst_path < 1e-10 && worst_mass < 1e-5, d.str());
}

// ---- criterion 5: boundary-flow definition oracle ----------------------------

void criterion_5() {
  Rng rng(1005);
  bool exact = true;
  size_t ties_seen = 0, landing_checked = 0, landing_ok = 0;
  for (int trial = 0; trial < 200 && exact; ++trial) {
    const int w = 16, h = 16;
    DenseFlow flow(w, h);
    for (size_t i = 0; i < flow.dx.size(); ++i) {
      flow.dx[i] = static_cast<float>(rng.uniform_int(-3, 3));
      flow.dy[i] = static_cast<float>(rng.uniform_int(-3, 3));
      flow.valid[i] = rng.bernoulli(0.85);
    }
    BoundarySet b1, b2;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (rng.bernoulli(0.12)) b1.emplace_back(x, y);
        if (rng.bernoulli(0.12)) b2.emplace_back(x, y);
      }
    std::set<std::pair<int, int>> b2set(b2.begin(), b2.end());
    for (bool all_pixels : {false, true}) {
      BfOracleOptions opts;
      opts.nearest_valid_over_all_pixels = all_pixels;
      const BfGroundTruth got = bf_oracle(b1, b2, flow, opts);
      const BfGroundTruth want = oracle::bf_brute_force(b1, b2, flow, all_pixels);
      for (size_t i = 0; i < got.entries.size(); ++i) {
        const BfEntry& g = got.entries[i];
        const BfEntry& o = want.entries[i];
        if (g.defined != o.defined || (g.defined && (g.dx != o.dx || g.dy != o.dy)) ||
            (!g.defined && g.reason != o.reason)) {
          exact = false;
          break;
        }
        if (!g.defined) ++ties_seen;
        if (g.defined && !all_pixels && flow.valid[flow.idx(g.x, g.y)]) {
          ++landing_checked;
          landing_ok += b2set.count({g.x + static_cast<int>(g.dx),
                                     g.y + static_cast<int>(g.dy)}) == 1;
        }
      }
    }
  }
  std::ostringstream d;
  d << "bit-exact on 200 scenes (both case-ii domains), " << ties_seen
    << " undefined entries cross-checked, case-i landing " << landing_ok << "/" << landing_checked;
  report(5, "boundary-flow definition vs independent brute-force scan",
         exact && landing_checked > 0 && landing_ok == landing_checked, d.str());
}

// ---- criterion 9: matching invariants ---------------------------------------

void criterion_9() {
  Rng rng(1009);
  bool ok = true;
  std::ostringstream why;

  // greedy matching: injectivity and non-increasing selected scores
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    std::vector<ScoredPair> pairs;
    const int nt = rng.uniform_int(1, 14), nt1 = rng.uniform_int(1, 14);
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < nt1; ++j)
        if (rng.bernoulli(0.4)) pairs.push_back({i, j, rng.uniform_real(0.0, 1.0)});
    const std::vector<EdgeletMatch> m = greedy_match(pairs);
    std::set<int> ut, ut1;
    for (size_t i = 0; i < m.size(); ++i) {
      if (!ut.insert(m[i].idx_t).second || !ut1.insert(m[i].idx_t1).second) {
        ok = false;
        why << "greedy injectivity violated; ";
      }
      if (i > 0 && m[i - 1].score < m[i].score) {
        ok = false;
        why << "greedy scores increased; ";
      }
    }
  }

  // angle rule (45 deg) and top-10 truncation
  MatchParams params;  // paper values: radius 100, top-k 10, angle 45
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    Edgelet e;
    const double a = rng.uniform_real(0.0, 2 * M_PI);
    e.nx = std::cos(a);
    e.ny = std::sin(a);
    std::vector<Edgelet> cands;
    std::vector<ScoredPair> scored;
    const int n = rng.uniform_int(1, 25);
    for (int i = 0; i < n; ++i) {
      Edgelet c;
      const double b = rng.uniform_real(0.0, 2 * M_PI);
      c.nx = std::cos(b);
      c.ny = std::sin(b);
      cands.push_back(c);
      scored.push_back({0, i, rng.uniform_real(0.0, 1.0)});
    }
    const std::vector<ScoredPair> kept = filter_top_k_and_angle(e, cands, scored, params);
    if (kept.size() > 10) {
      ok = false;
      why << "top-10 truncation violated; ";
    }
    for (const ScoredPair& p : kept)
      if (normal_angle_deg(e.nx, e.ny, cands[p.idx_t1].nx, cands[p.idx_t1].ny) > 45.0 + 1e-9) {
        ok = false;
        why << "angle rule violated; ";
      }
  }

  // candidate radius (100 px) vs brute force
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    Edgelet e;
    e.cx = rng.uniform_real(0, 256);
    e.cy = rng.uniform_real(0, 256);
    std::vector<Edgelet> others;
    for (int i = 0; i < 30; ++i) {
      Edgelet o;
      o.cx = rng.uniform_real(0, 256);
      o.cy = rng.uniform_real(0, 256);
      others.push_back(o);
    }
    std::vector<int> want;
    for (size_t i = 0; i < others.size(); ++i)
      if (std::hypot(others[i].cx - e.cx, others[i].cy - e.cy) <= 100.0)
        want.push_back(static_cast<int>(i));
    if (candidates(e, others, params) != want) {
      ok = false;
      why << "radius rule violated; ";
    }
  }

  // monotone pixel assignment
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    const size_t nt = rng.uniform_int(1, 10), nt1 = rng.uniform_int(1, 10);
    std::vector<double> s(nt * nt1);
    for (double& v : s) v = rng.uniform_real(0.0, 1.0);
    const PixelAssignment pa = pixel_assignment(nt, nt1, s);
    for (size_t i = 0; i + 1 < nt; ++i) {
      const bool mono = pa.flipped ? pa.target[i] >= pa.target[i + 1]
                                   : pa.target[i] <= pa.target[i + 1];
      if (!mono) {
        ok = false;
        why << "assignment not monotone; ";
      }
    }
  }
  report(9, "matching invariants on 1000 random instances each", ok,
         ok ? "greedy, angle<=45, top-10, radius 100, monotone DP" : why.str());
}

// ---- criteria 6/7/8: trained desk model --------------------------------------

struct TrainedSetup {
  std::optional<Fcsn> net;
  std::vector<DatasetEntry> heldout;      // standard difficulty
  std::vector<DatasetEntry> two_movers;   // >= 2 independently moving objects
};

TrainedSetup train_desk_model() {
  TrainedSetup setup;
  DatasetParams train_params;
  train_params.n = 500;
  train_params.seed = 42;
  std::cout << "[info] generating 500 training pairs...\n" << std::flush;
  const std::vector<DatasetEntry> train_data = generate_dataset(train_params);

  std::vector<TrainSample> samples;
  for (const DatasetEntry& e : train_data)
    samples.push_back({e.frame_a.image, e.frame_b.image, e.frame_a.boundary_mask});

  FcsnConfig cfg;  // desk defaults carry the published training values:
  cfg.lambda1 = 1.0f;
  cfg.lambda2 = 0.1f;
  cfg.lr = 1e-4f;
  cfg.iterations = 2000;
  cfg.seed = 7;
  setup.net.emplace(cfg);
  TrainOptions opts;
  opts.iterations = cfg.iterations;
  double first_window = 0.0, last_window = 0.0;
  opts.on_iter = [&](int iter, double loss) {
    if (iter < 50) first_window += loss / 50.0;
    if (iter >= opts.iterations - 50) last_window += loss / 50.0;
    if (iter % 200 == 0) std::cout << "[info] iter " << iter << " loss " << loss << "\n"
                                   << std::flush;
  };
  std::cout << "[info] training 2000 iterations (lambda1=1, lambda2=0.1, lr=1e-4)...\n"
            << std::flush;
  setup.net->train(samples, opts);
  info("smoothed training loss halves (cmd_train contract)",
       last_window < 0.5 * first_window,
       "first-50 mean " + std::to_string(first_window) + ", last-50 mean " +
           std::to_string(last_window));

  DatasetParams held;
  held.n = 50;
  held.seed = 777;
  setup.heldout = generate_dataset(held);

  DatasetParams movers;
  movers.n = 50;
  movers.seed = 4243;
  movers.min_shapes = 2;
  movers.max_shapes = 3;
  movers.ensure_two_movers = true;
  setup.two_movers = generate_dataset(movers);
  return setup;
}

void criterion_6(const TrainedSetup& setup) {
  std::vector<std::vector<PrCounts>> per_image;
  for (const DatasetEntry& e : setup.heldout) {
    const PairResult pair = setup.net->forward_pair(e.frame_a.image, e.frame_b.image);
    per_image.push_back(boundary_pr(nms_thin(pair.pred_a), e.frame_a.boundary_mask));
  }
  const BenchmarkSummary s = summarize(per_image);
  std::ostringstream d;
  d << "held-out ODS " << s.ods << " (>=0.7), OIS " << s.ois << ", AP " << s.ap
    << "; the published VSB100 scores (ODS 0.597/OIS 0.632/AP 0.566) are from a different, "
       "harder dataset and are not compared";
  report(6, "desk training reaches ODS >= 0.7 on held-out synthetic pairs", s.ods >= 0.7,
         d.str());
}

void criterion_7(const TrainedSetup& setup) {
  PipelineParams params;  // defaults: radius 100, top-10, 45 deg, spacing 16
  double sum_ours = 0.0, sum_greedy = 0.0, sum_ransac = 0.0;
  int n = 0;
  for (const DatasetEntry& e : setup.two_movers) {
    if (e.gt.defined_count() == 0) continue;
    const FlowPipelineResult r =
        run_flow_pipeline(*setup.net, e.frame_a.image, e.frame_b.image, params);
    const BoundarySet b1 = mask_to_boundary_set(r.thin_a, 1e-6f);
    const BoundarySet b2 = mask_to_boundary_set(r.thin_b, 1e-6f);
    sum_ours += epe(r.field, e.gt);
    sum_greedy += epe(baseline_greedy_nn(b1, b2, e.frame_a.image, e.frame_b.image), e.gt);
    sum_ransac += epe(baseline_ransac_translation(b1, b2, e.frame_a.image, e.frame_b.image), e.gt);
    ++n;
  }
  const double ours = sum_ours / n, greedy = sum_greedy / n, ransac = sum_ransac / n;
  std::ostringstream d;
  d << "EPE ours " << ours << " < greedy-NN " << greedy << " and < RANSAC " << ransac << " on "
    << n << " pairs (ordering mirrors the published 9.856 < 25.476 / 20.874; magnitudes not "
       "compared)";
  report(7, "edgelet matching beats both baselines on two-object scenes",
         ours < greedy && ours < ransac, d.str());
}

void criterion_8(const TrainedSetup& setup) {
  PipelineParams params;
  // identical frames: displacements collapse to zero
  size_t small = 0, total = 0;
  for (int i = 0; i < 10; ++i) {
    const RgbImage& img = setup.heldout[i].frame_a.image;
    const FlowPipelineResult r = run_flow_pipeline(*setup.net, img, img, params);
    for (const FlowEntry& e : r.field.entries) {
      ++total;
      small += std::hypot(e.dx, e.dy) <= 1.0;
    }
  }
  const double frac = total ? static_cast<double>(small) / total : 0.0;

  // translating square, shift (8, 0)
  Scene scene;
  scene.w = scene.h = 64;
  scene.background = {28, 30, 38};
  Shape sq;
  sq.kind = Shape::kPolygon;
  sq.cx = 24;
  sq.cy = 32;
  sq.verts = {{13, 21}, {35, 21}, {35, 43}, {13, 43}};
  sq.color = {215, 120, 60};
  sq.motion.tx = 8;
  scene.shapes.push_back(sq);
  const RenderOut fa = render_scene(scene, 0);
  const RenderOut fb = render_scene(scene, 1);
  const FlowPipelineResult r = run_flow_pipeline(*setup.net, fa.image, fb.image, params);
  std::vector<double> errs;
  for (const FlowEntry& e : r.field.entries) errs.push_back(std::hypot(e.dx - 8.0, e.dy));
  double median = 1e9;
  if (!errs.empty()) {
    std::sort(errs.begin(), errs.end());
    median = errs[errs.size() / 2];
  }
  std::ostringstream d;
  d << 100.0 * frac << "% of identical-frame displacements <=1 px (>=95%), translating-square "
    << "median error " << median << " px (<=2)";
  report(8, "flow sanity on identical frames and a translating square",
         frac >= 0.95 && median <= 2.0, d.str());
}

void extra_selfmatch_locality(const TrainedSetup& setup) {
  // identical frames: attention argmax within 2 px of the seed for >= 90%
  // of edgelets (excitation module contract on the trained model)
  PipelineParams params;
  const Excitation exc(*setup.net);
  int close = 0, total = 0;
  for (int i = 0; i < 5; ++i) {
    const RgbImage& img = setup.heldout[i].frame_a.image;
    const PairResult pair = setup.net->forward_pair(img, img);
    const Planef thin = nms_thin(pair.pred_a);
    const SuperpixelMap sp = oversegment(thin, img, params.seg.seed_spacing, params.seg.theta_b);
    const std::vector<Edgelet> eds = extract_edgelets(sp, 0, params.seg.min_edgelet_len);
    const Excitation::Plan plan_a = exc.make_plan(pair.cache_a);
    const Excitation::Plan plan_b = exc.make_plan(pair.cache_b);
    for (const Edgelet& e : eds) {
      const AttentionMap att = exc.attention({0, e.chain}, plan_a, plan_b);
      int ax = 0, ay = 0;
      double best = -1.0;
      for (int y = 0; y < att.h; ++y)
        for (int x = 0; x < att.w; ++x)
          if (att.at(x, y) > best) {
            best = att.at(x, y);
            ax = x;
            ay = y;
          }
      double dmin = 1e9;
      for (const auto& [px, py] : e.chain) dmin = std::min(dmin, std::hypot(px - ax, py - ay));
      ++total;
      close += dmin <= 2.0;
    }
  }
  const double frac = total ? static_cast<double>(close) / total : 0.0;
  info("self-match attention locality (argmax within 2 px for >= 90% of edgelets)",
       frac >= 0.9, std::to_string(100.0 * frac) + "% of " + std::to_string(total));
}

// ---- criterion 10: I/O bit-exactness and determinism --------------------------

void criterion_10(const TrainedSetup& setup) {
  const fs::path root = fs::temp_directory_path() / "bflow_acceptance_io";
  fs::remove_all(root);
  fs::create_directories(root);
  bool ok = true;
  std::ostringstream why;

  // checkpoint round trip on the trained model
  const std::string ckpt = (root / "trained.fcsn").string();
  save_checkpoint(ckpt, *setup.net);
  const Fcsn loaded = load_checkpoint(ckpt);
  const RgbImage& img_a = setup.heldout[0].frame_a.image;
  const RgbImage& img_b = setup.heldout[0].frame_b.image;
  if (setup.net->forward_pair(img_a, img_b).pred_a.v != loaded.forward_pair(img_a, img_b).pred_a.v) {
    ok = false;
    why << "checkpoint round trip changed predictions; ";
  }
  const std::string ckpt2 = (root / "trained2.fcsn").string();
  save_checkpoint(ckpt2, loaded);
  if (slurp(ckpt) != slurp(ckpt2)) {
    ok = false;
    why << "checkpoint bytes not stable; ";
  }

  // .flo round trip incl. the magic float
  {
    const DenseFlow& f = setup.heldout[0].frame_a.flow;
    write_flo((root / "a.flo").string(), f);
    const std::string raw = slurp(root / "a.flo");
    if (raw.substr(0, 4) != "PIEH") {
      ok = false;
      why << "flo magic wrong; ";
    }
    write_flo((root / "b.flo").string(), read_flo((root / "a.flo").string()));
    if (slurp(root / "a.flo") != slurp(root / "b.flo")) {
      ok = false;
      why << "flo round trip not byte-identical; ";
    }
  }

  // match file round trip through the real pipeline
  {
    PipelineParams params;
    const FlowPipelineResult r = run_flow_pipeline(*setup.net, img_a, img_b, params);
    export_matches(r.field, (root / "m.txt").string());
    const BoundaryFlowField back = import_matches((root / "m.txt").string());
    bool same = back.entries.size() == r.field.entries.size();
    for (size_t i = 0; same && i < back.entries.size(); ++i) {
      same = back.entries[i].x == r.field.entries[i].x &&
             back.entries[i].y == r.field.entries[i].y &&
             back.entries[i].dx == std::lround(r.field.entries[i].dx) &&
             back.entries[i].dy == std::lround(r.field.entries[i].dy);
    }
    if (!same) {
      ok = false;
      why << "match file round trip lost entries; ";
    }
  }

  // end-to-end CLI determinism at --jobs 1 (dataset, detect, flow)
  const char* cli = std::getenv("BFLOW_CLI");
  if (cli) {
    auto run = [&](const std::string& args) {
      const std::string cmd = std::string(cli) + " " + args + " 2>/dev/null";
      return WEXITSTATUS(std::system(cmd.c_str()));
    };
    const std::string d1 = (root / "ds1").string(), d2 = (root / "ds2").string();
    if (run("synth --out " + d1 + " --n 3 --seed 5 --jobs 1") != 0 ||
        run("synth --out " + d2 + " --n 3 --seed 5 --jobs 1") != 0 ||
        !trees_identical(d1, d2)) {
      ok = false;
      why << "synth not byte-deterministic; ";
    }
    const std::string p1 = (root / "pred1").string(), p2 = (root / "pred2").string();
    if (run("detect --checkpoint " + ckpt + " --dataset " + d1 + " --out " + p1 +
            " --nms --jobs 1") != 0 ||
        run("detect --checkpoint " + ckpt + " --dataset " + d1 + " --out " + p2 +
            " --nms --jobs 1") != 0 ||
        !trees_identical(p1, p2)) {
      ok = false;
      why << "detect not byte-deterministic; ";
    }
    const std::string f1 = (root / "flow1").string(), f2 = (root / "flow2").string();
    if (run("flow --checkpoint " + ckpt + " --dataset " + d1 + " --out " + f1 + " --jobs 1") !=
            0 ||
        run("flow --checkpoint " + ckpt + " --dataset " + d1 + " --out " + f2 + " --jobs 1") !=
            0 ||
        !trees_identical(f1, f2)) {
      ok = false;
      why << "flow not byte-deterministic; ";
    }
  } else {
    why << "(BFLOW_CLI unset: CLI determinism checked via library paths only) ";
  }

  // dataset regeneration is byte-identical (library path)
  {
    DatasetParams p;
    p.n = 3;
    p.seed = 99;
    const std::vector<DatasetEntry> a = generate_dataset(p);
    const std::vector<DatasetEntry> b = generate_dataset(p);
    for (int i = 0; i < 3; ++i)
      if (a[i].frame_a.image.px != b[i].frame_a.image.px ||
          a[i].frame_a.flow.dx != b[i].frame_a.flow.dx) {
        ok = false;
        why << "dataset regeneration differs; ";
      }
  }

  report(10, "checkpoint/.flo/match/dataset round trips and seeded determinism", ok,
         ok ? "all byte-identical" : why.str());
  fs::remove_all(root);
}

}  // namespace

int main() {
  g_t0 = std::chrono::steady_clock::now();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_9();

  TrainedSetup setup = train_desk_model();
  criterion_6(setup);
  criterion_7(setup);
  criterion_8(setup);
  extra_selfmatch_locality(setup);
  criterion_10(setup);

  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED\n"
                                : std::to_string(g_failures) + " CHECKS FAILED\n");
  return g_failures;
}
