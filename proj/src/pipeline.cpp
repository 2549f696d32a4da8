#include "bflow/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace bflow {

namespace {

std::string entry_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", i);
  return buf;
}

// Deterministic parallel map over [0, n): each job writes only its own
// outputs, so the result set is identical for any job count.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace

void guard_out_file(const std::string& path, bool force) {
  if (fs::exists(path) && !force)
    fail("output ", path, " already exists (use --force to overwrite)");
}

void prepare_out_dir(const std::string& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    BFLOW_CHECK(force, "output directory ", dir,
                " already exists and is not empty (use --force to overwrite)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

FlowPipelineResult run_flow_pipeline(const Fcsn& net, const RgbImage& frame_a,
                                     const RgbImage& frame_b, const PipelineParams& params) {
  params.match.validate();
  FlowPipelineResult r;
  const PairResult pair = net.forward_pair(frame_a, frame_b);
  r.prob_a = pair.pred_a;
  r.prob_b = pair.pred_b;
  r.thin_a = nms_thin(r.prob_a);
  r.thin_b = nms_thin(r.prob_b);

  bool degenerate = false;
  r.sp_a = oversegment(r.thin_a, frame_a, params.seg.seed_spacing, params.seg.theta_b, &degenerate);
  if (degenerate) r.warnings.push_back("frame t oversegmentation degenerate (all boundary)");
  r.sp_b = oversegment(r.thin_b, frame_b, params.seg.seed_spacing, params.seg.theta_b, &degenerate);
  if (degenerate) r.warnings.push_back("frame t+1 oversegmentation degenerate (all boundary)");

  r.edg_a = extract_edgelets(r.sp_a, 0, params.seg.min_edgelet_len);
  r.edg_b = extract_edgelets(r.sp_b, 1, params.seg.min_edgelet_len);
  if (r.edg_a.empty() || r.edg_b.empty()) {
    r.warnings.push_back("zero edgelets detected; emitting empty flow");
    return r;
  }

  // Per-edgelet excitation runs; each edgelet needs one attention map per
  // direction, reused across every candidate pair it appears in.
  const Excitation exc(net);
  const Excitation::Plan plan_a = exc.make_plan(pair.cache_a);
  const Excitation::Plan plan_b = exc.make_plan(pair.cache_b);

  std::vector<AttentionMap> att_a_to_b(r.edg_a.size());  // seeded in t, read in t+1
  std::vector<AttentionMap> att_b_to_a(r.edg_b.size());
  for (size_t i = 0; i < r.edg_a.size(); ++i) {
    ExcitationSeed seed{0, r.edg_a[i].chain};
    att_a_to_b[i] = exc.attention(seed, plan_a, plan_b);
  }
  for (size_t j = 0; j < r.edg_b.size(); ++j) {
    ExcitationSeed seed{1, r.edg_b[j].chain};
    att_b_to_a[j] = exc.attention(seed, plan_b, plan_a);
  }

  // Candidate generation, similarity, top-k + angle filtering.
  std::vector<ScoredPair> all_pairs;
  std::vector<std::vector<double>> s_matrices;  // parallel to all_pairs
  for (size_t i = 0; i < r.edg_a.size(); ++i) {
    std::vector<ScoredPair> scored;
    std::vector<std::vector<double>> mats;
    for (int j : candidates(r.edg_a[i], r.edg_b, params.match)) {
      std::vector<double> s = attention_score_pair(r.edg_a[i].chain, r.edg_b[j].chain,
                                                   att_a_to_b[i], att_b_to_a[j]);
      const double sim =
          edgelet_similarity(s, r.edg_a[i].chain.size(), r.edg_b[j].chain.size());
      scored.push_back({static_cast<int>(i), j, sim});
      mats.push_back(std::move(s));
    }
    std::vector<ScoredPair> kept =
        filter_top_k_and_angle(r.edg_a[i], r.edg_b, scored, params.match);
    for (const ScoredPair& p : kept) {
      for (size_t m = 0; m < scored.size(); ++m) {
        if (scored[m].idx_t1 == p.idx_t1) {
          all_pairs.push_back(p);
          s_matrices.push_back(std::move(mats[m]));
          break;
        }
      }
    }
  }

  std::vector<EdgeletMatch> matches = greedy_match(all_pairs);
  r.matches = matches;

  // Ordered pixel assignment per match, then side correction and placement.
  for (const EdgeletMatch& m : matches) {
    const std::vector<double>* s = nullptr;
    for (size_t p = 0; p < all_pairs.size(); ++p)
      if (all_pairs[p].idx_t == m.idx_t && all_pairs[p].idx_t1 == m.idx_t1) {
        s = &s_matrices[p];
        break;
      }
    r.assignments.push_back(pixel_assignment(r.edg_a[m.idx_t].chain.size(),
                                             r.edg_b[m.idx_t1].chain.size(), *s));
  }
  r.field = side_correct_and_place(matches, r.edg_a, r.edg_b, r.assignments, r.sp_a, r.sp_b,
                                   frame_a, frame_b, &r.warnings);
  return r;
}

// ---- synth ------------------------------------------------------------------

void cmd_synth(const SynthOptions& opts) {
  BFLOW_CHECK(opts.params.n >= 1, "synth: n must be >= 1");
  prepare_out_dir(opts.out_dir, opts.force);
  std::ofstream manifest(fs::path(opts.out_dir) / "manifest.txt");
  BFLOW_CHECK(manifest.good(), "synth: cannot write manifest in ", opts.out_dir);
  for (int i = 0; i < opts.params.n; ++i) manifest << entry_name(i) << "\n";
  manifest.close();

  parallel_for(opts.params.n, opts.jobs, [&](int i) {
    const DatasetEntry e = generate_entry(opts.params, i);
    const fs::path dir = fs::path(opts.out_dir) / entry_name(i);
    fs::create_directories(dir);
    write_ppm((dir / "frame_a.ppm").string(), e.frame_a.image);
    write_ppm((dir / "frame_b.ppm").string(), e.frame_b.image);
    write_pgm((dir / "boundary_a.pgm").string(), e.frame_a.boundary_mask, 255);
    write_pgm((dir / "boundary_b.pgm").string(), e.frame_b.boundary_mask, 255);
    write_flo((dir / "flow.flo").string(), e.frame_a.flow);
    write_bf_gt((dir / "bf_gt.txt").string(), e.gt);
  });
}

std::vector<std::string> read_manifest(const std::string& dir) {
  const fs::path path = fs::path(dir) / "manifest.txt";
  std::ifstream in(path);
  BFLOW_CHECK(in.good(), "cannot open manifest ", path.string());
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) entries.push_back(line);
  }
  BFLOW_CHECK(!entries.empty(), "manifest ", path.string(), " lists no entries");
  return entries;
}

LoadedEntry load_entry(const std::string& entry_dir) {
  const fs::path dir(entry_dir);
  LoadedEntry e;
  e.frame_a = read_ppm((dir / "frame_a.ppm").string());
  e.frame_b = read_ppm((dir / "frame_b.ppm").string());
  e.boundary_a = read_pgm((dir / "boundary_a.pgm").string());
  e.boundary_b = read_pgm((dir / "boundary_b.pgm").string());
  e.flow = read_flo((dir / "flow.flo").string());
  e.gt = read_bf_gt((dir / "bf_gt.txt").string());
  return e;
}

std::vector<TrainSample> load_train_samples(const std::string& dataset_dir) {
  std::vector<TrainSample> samples;
  for (const std::string& name : read_manifest(dataset_dir)) {
    const fs::path dir = fs::path(dataset_dir) / name;
    TrainSample s;
    s.frame_a = read_ppm((dir / "frame_a.ppm").string());
    s.frame_b = read_ppm((dir / "frame_b.ppm").string());
    Planef mask = read_pgm((dir / "boundary_a.pgm").string());
    for (float& v : mask.v) v = v >= 0.5f ? 1.0f : 0.0f;
    s.gt_a = std::move(mask);
    samples.push_back(std::move(s));
  }
  return samples;
}

// ---- train ------------------------------------------------------------------

void cmd_train(const TrainCmdOptions& opts) {
  guard_out_file(opts.out_checkpoint, opts.force);
  if (!opts.log_path.empty()) guard_out_file(opts.log_path, opts.force);

  std::vector<TrainSample> dataset = load_train_samples(opts.dataset_dir);

  FcsnConfig cfg;
  if (!opts.config_path.empty()) cfg = FcsnConfig::load(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.iterations) cfg.iterations = *opts.iterations;

  std::optional<Fcsn> net;
  if (!opts.resume_path.empty()) {
    net.emplace(load_checkpoint(opts.resume_path));
  } else {
    net.emplace(cfg);
  }

  std::ofstream log;
  if (!opts.log_path.empty()) {
    log.open(opts.log_path);
    BFLOW_CHECK(log.good(), "train: cannot open log ", opts.log_path);
    log << "# lambda1 = " << net->config().lambda1 << "\n";
    log << "# lambda2 = " << net->config().lambda2 << "\n";
    log << "# lr = " << net->config().lr << "\n";
    log << "# batch = " << net->config().batch << "\n";
    log << "# start_step = " << net->store().step << "\n";
  }

  TrainOptions topts;
  topts.iterations = opts.iterations ? *opts.iterations : net->config().iterations;
  topts.on_iter = [&](int iter, double loss) {
    if (log.is_open()) log << iter << " " << loss << "\n";
    if (iter % 100 == 0) std::cerr << "iter " << iter << " loss " << loss << "\n";
  };
  try {
    net->train(dataset, topts);
  } catch (const Error& e) {
    // keep the last-good parameters next to the intended output
    const std::string partial = opts.out_checkpoint + ".partial";
    save_checkpoint(partial, *net);
    fail("train aborted (", e.what(), "); last-good checkpoint saved to ", partial);
  }
  save_checkpoint(opts.out_checkpoint, *net);
}

// ---- detect -------------------------------------------------------------------

namespace {

void detect_one(const Fcsn& net, const RgbImage& a, const RgbImage& b, const fs::path& dir,
                bool nms) {
  const PairResult pair = net.forward_pair(a, b);
  write_pgm((dir / "pred_a.pgm").string(), pair.pred_a, 65535);
  write_pgm((dir / "pred_b.pgm").string(), pair.pred_b, 65535);
  if (nms) {
    write_pgm((dir / "pred_a_nms.pgm").string(), nms_thin(pair.pred_a), 65535);
    write_pgm((dir / "pred_b_nms.pgm").string(), nms_thin(pair.pred_b), 65535);
  }
}

}  // namespace

void cmd_detect(const DetectOptions& opts) {
  const Fcsn net = load_checkpoint(opts.checkpoint);
  prepare_out_dir(opts.out_dir, opts.force);
  if (!opts.dataset_dir.empty()) {
    const std::vector<std::string> entries = read_manifest(opts.dataset_dir);
    std::ofstream manifest(fs::path(opts.out_dir) / "manifest.txt");
    for (const std::string& name : entries) manifest << name << "\n";
    manifest.close();
    parallel_for(static_cast<int>(entries.size()), opts.jobs, [&](int i) {
      const fs::path src = fs::path(opts.dataset_dir) / entries[i];
      const fs::path dst = fs::path(opts.out_dir) / entries[i];
      fs::create_directories(dst);
      detect_one(net, read_ppm((src / "frame_a.ppm").string()),
                 read_ppm((src / "frame_b.ppm").string()), dst, opts.nms);
    });
  } else {
    BFLOW_CHECK(!opts.pair_a.empty() && !opts.pair_b.empty(),
                "detect: need --dataset or two input images");
    detect_one(net, read_ppm(opts.pair_a), read_ppm(opts.pair_b), opts.out_dir, opts.nms);
  }
}

// ---- flow ---------------------------------------------------------------------

namespace {

void flow_one(const Fcsn& net, const RgbImage& a, const RgbImage& b, const PipelineParams& params,
              const fs::path& dir) {
  const FlowPipelineResult r = run_flow_pipeline(net, a, b, params);
  for (const std::string& warning : r.warnings) std::cerr << "flow: " << warning << "\n";
  write_flow_field((dir / "flow.txt").string(), r.field);
  export_matches(r.field, (dir / "matches.txt").string());
  write_boundary_pixels((dir / "b1.txt").string(), mask_to_boundary_set(r.thin_a, 1e-6f));
  write_boundary_pixels((dir / "b2.txt").string(), mask_to_boundary_set(r.thin_b, 1e-6f));
  write_pgm((dir / "thin_a.pgm").string(), r.thin_a, 65535);
  write_pgm((dir / "thin_b.pgm").string(), r.thin_b, 65535);
  write_ppm((dir / "overlay_a.ppm").string(), overlay_flow(a, r.field));
  write_ppm((dir / "overlay_pair.ppm").string(), overlay_matches(a, b, r.field));
}

}  // namespace

void cmd_flow(const FlowCmdOptions& opts) {
  const Fcsn net = load_checkpoint(opts.checkpoint);
  prepare_out_dir(opts.out_dir, opts.force);
  if (!opts.dataset_dir.empty()) {
    const std::vector<std::string> entries = read_manifest(opts.dataset_dir);
    std::ofstream manifest(fs::path(opts.out_dir) / "manifest.txt");
    for (const std::string& name : entries) manifest << name << "\n";
    manifest.close();
    parallel_for(static_cast<int>(entries.size()), opts.jobs, [&](int i) {
      const fs::path src = fs::path(opts.dataset_dir) / entries[i];
      const fs::path dst = fs::path(opts.out_dir) / entries[i];
      fs::create_directories(dst);
      flow_one(net, read_ppm((src / "frame_a.ppm").string()),
               read_ppm((src / "frame_b.ppm").string()), opts.params, dst);
    });
  } else {
    BFLOW_CHECK(!opts.pair_a.empty() && !opts.pair_b.empty(),
                "flow: need --dataset or two input images");
    flow_one(net, read_ppm(opts.pair_a), read_ppm(opts.pair_b), opts.params, opts.out_dir);
  }
}

// ---- evaluation ---------------------------------------------------------------

BenchmarkSummary cmd_eval_boundary(const EvalBoundaryOptions& opts) {
  guard_out_file(opts.out_report, opts.force);
  if (!opts.out_csv.empty()) guard_out_file(opts.out_csv, opts.force);
  BFLOW_CHECK(fs::exists(fs::path(opts.pred_dir) / "manifest.txt"),
              "eval-boundary: prediction dir ", opts.pred_dir, " has no manifest");
  const std::vector<std::string> entries = read_manifest(opts.gt_dir);

  std::vector<std::string> missing;
  std::vector<std::vector<PrCounts>> per_image;
  std::vector<std::string> used_names;
  for (const std::string& name : entries) {
    const fs::path pred_path = fs::path(opts.pred_dir) / name / "pred_a.pgm";
    if (!fs::exists(pred_path)) {
      missing.push_back(name);
      continue;
    }
    const Planef pred = read_pgm(pred_path.string());
    Planef gt = read_pgm((fs::path(opts.gt_dir) / name / "boundary_a.pgm").string());
    for (float& v : gt.v) v = v >= 0.5f ? 1.0f : 0.0f;
    int64_t gt_count = 0;
    for (float v : gt.v) gt_count += v >= 0.5f;
    if (gt_count == 0) {
      std::cerr << "eval-boundary: entry " << name << " has empty ground truth, excluded\n";
      continue;
    }
    per_image.push_back(boundary_pr(nms_thin(pred), gt, opts.thresholds, opts.tol));
    used_names.push_back(name);
  }
  if (!missing.empty()) {
    std::ostringstream os;
    for (const std::string& m : missing) os << " " << m;
    fail("eval-boundary: missing predictions for", os.str());
  }
  BFLOW_CHECK(!per_image.empty(), "eval-boundary: no evaluable entries");

  const BenchmarkSummary s = summarize(per_image);

  // per-run monotonicity check on the aggregate curve: recall must be
  // non-decreasing and precision non-increasing as the threshold drops
  int monotonicity_violations = 0;
  {
    std::vector<PrCounts> agg(per_image.front().size());
    for (size_t k = 0; k < agg.size(); ++k)
      for (const auto& img : per_image) {
        agg[k].matched_pred += img[k].matched_pred;
        agg[k].total_pred += img[k].total_pred;
        agg[k].matched_gt += img[k].matched_gt;
        agg[k].total_gt += img[k].total_gt;
      }
    for (size_t k = 1; k < agg.size(); ++k) {
      // index k-1 is the lower threshold
      if (agg[k - 1].recall() < agg[k].recall() - 1e-12) ++monotonicity_violations;
      if (agg[k - 1].precision() > agg[k].precision() + 1e-12) ++monotonicity_violations;
    }
    if (monotonicity_violations > 0)
      std::cerr << "eval-boundary: " << monotonicity_violations
                << " PR monotonicity violations on the aggregate curve\n";
  }

  std::ofstream report(opts.out_report);
  BFLOW_CHECK(report.good(), "eval-boundary: cannot open ", opts.out_report);
  report.precision(6);
  report << "images = " << per_image.size() << "\n";
  report << "thresholds = " << opts.thresholds << "\n";
  report << "ods = " << s.ods << "\n";
  report << "ois = " << s.ois << "\n";
  report << "ap = " << s.ap << "\n";
  report << "pr_monotonicity_violations = " << monotonicity_violations << "\n";

  if (!opts.out_csv.empty()) {
    std::ofstream csv(opts.out_csv);
    BFLOW_CHECK(csv.good(), "eval-boundary: cannot open ", opts.out_csv);
    csv.precision(6);
    csv << "entry,threshold,precision,recall,f\n";
    for (size_t i = 0; i < per_image.size(); ++i)
      for (const PrCounts& c : per_image[i])
        csv << used_names[i] << "," << c.threshold << "," << c.precision() << "," << c.recall()
            << "," << f_measure(c.precision(), c.recall()) << "\n";
    std::vector<PrCounts> agg(per_image.front().size());
    for (size_t k = 0; k < agg.size(); ++k) {
      agg[k].threshold = per_image.front()[k].threshold;
      for (const auto& img : per_image) {
        agg[k].matched_pred += img[k].matched_pred;
        agg[k].total_pred += img[k].total_pred;
        agg[k].matched_gt += img[k].matched_gt;
        agg[k].total_gt += img[k].total_gt;
      }
    }
    for (const PrCounts& c : agg)
      csv << "aggregate," << c.threshold << "," << c.precision() << "," << c.recall() << ","
          << f_measure(c.precision(), c.recall()) << "\n";
  }
  return s;
}

EvalFlowResult cmd_eval_flow(const EvalFlowOptions& opts) {
  guard_out_file(opts.out_report, opts.force);
  BFLOW_CHECK(fs::exists(fs::path(opts.pred_dir) / "manifest.txt"), "eval-flow: prediction dir ",
              opts.pred_dir, " has no manifest");
  const std::vector<std::string> entries = read_manifest(opts.gt_dir);

  std::vector<std::string> missing;
  double sum_ours = 0.0, sum_greedy = 0.0, sum_ransac = 0.0;
  int n = 0;
  for (const std::string& name : entries) {
    const fs::path pdir = fs::path(opts.pred_dir) / name;
    if (!fs::exists(pdir / "flow.txt")) {
      missing.push_back(name);
      continue;
    }
    const BfGroundTruth gt = read_bf_gt((fs::path(opts.gt_dir) / name / "bf_gt.txt").string());
    if (gt.defined_count() == 0) {
      std::cerr << "eval-flow: entry " << name << " has no defined gt, excluded\n";
      continue;
    }
    const BoundaryFlowField ours = read_flow_field((pdir / "flow.txt").string());
    sum_ours += epe(ours, gt);
    if (opts.baselines) {
      const BoundarySet b1 = read_boundary_pixels((pdir / "b1.txt").string());
      const BoundarySet b2 = read_boundary_pixels((pdir / "b2.txt").string());
      const RgbImage img_a = read_ppm((fs::path(opts.gt_dir) / name / "frame_a.ppm").string());
      const RgbImage img_b = read_ppm((fs::path(opts.gt_dir) / name / "frame_b.ppm").string());
      sum_greedy += epe(baseline_greedy_nn(b1, b2, img_a, img_b, opts.radius), gt);
      sum_ransac += epe(baseline_ransac_translation(b1, b2, img_a, img_b, opts.radius), gt);
    }
    ++n;
  }
  if (!missing.empty()) {
    std::ostringstream os;
    for (const std::string& m : missing) os << " " << m;
    fail("eval-flow: missing predictions for", os.str());
  }
  BFLOW_CHECK(n > 0, "eval-flow: no evaluable entries");

  EvalFlowResult r;
  r.entries = n;
  r.epe_ours = sum_ours / n;
  if (opts.baselines) {
    r.epe_greedy_nn = sum_greedy / n;
    r.epe_ransac = sum_ransac / n;
  }
  std::ofstream report(opts.out_report);
  BFLOW_CHECK(report.good(), "eval-flow: cannot open ", opts.out_report);
  report.precision(6);
  report << "entries = " << n << "\n";
  report << "epe.ours = " << r.epe_ours << "\n";
  if (opts.baselines) {
    report << "epe.greedy_nn = " << *r.epe_greedy_nn << "\n";
    report << "epe.ransac_translation = " << *r.epe_ransac << "\n";
  }
  return r;
}

// ---- overlays -------------------------------------------------------------------

RgbImage overlay_flow(const RgbImage& img, const BoundaryFlowField& field) {
  RgbImage out = img;
  double max_mag = 1e-9;
  for (const FlowEntry& e : field.entries) max_mag = std::max(max_mag, std::hypot(e.dx, e.dy));
  for (const FlowEntry& e : field.entries) {
    if (!out.in_bounds(e.x, e.y)) continue;
    const auto c = flow_wheel_color(e.dx, e.dy, max_mag);
    uint8_t* p = out.at(e.x, e.y);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }
  return out;
}

namespace {

void draw_line(RgbImage& img, int x0, int y0, int x1, int y1, const std::array<uint8_t, 3>& c) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (img.in_bounds(x0, y0)) {
      uint8_t* p = img.at(x0, y0);
      p[0] = c[0];
      p[1] = c[1];
      p[2] = c[2];
    }
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

RgbImage overlay_matches(const RgbImage& a, const RgbImage& b, const BoundaryFlowField& field,
                         int stride) {
  BFLOW_CHECK(a.w == b.w && a.h == b.h, "overlay_matches: image sizes differ");
  RgbImage canvas(2 * a.w, a.h);
  for (int y = 0; y < a.h; ++y) {
    std::copy(a.at(0, y), a.at(0, y) + 3 * a.w, canvas.at(0, y));
    std::copy(b.at(0, y), b.at(0, y) + 3 * b.w, canvas.at(a.w, y));
  }
  double max_mag = 1e-9;
  for (const FlowEntry& e : field.entries) max_mag = std::max(max_mag, std::hypot(e.dx, e.dy));
  int k = 0;
  for (const FlowEntry& e : field.entries) {
    if (k++ % std::max(1, stride) != 0) continue;
    const auto c = flow_wheel_color(e.dx, e.dy, max_mag);
    draw_line(canvas, e.x, e.y, static_cast<int>(std::lround(e.x + e.dx)) + a.w,
              static_cast<int>(std::lround(e.y + e.dy)), c);
  }
  return canvas;
}

}  // namespace bflow
