#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bflow/bf_oracle.hpp"
#include "bflow/evaluation.hpp"
#include "bflow/excitation.hpp"
#include "bflow/fcsn.hpp"
#include "bflow/flow_io.hpp"
#include "bflow/matching.hpp"
#include "bflow/segmentation.hpp"

namespace bflow {

struct PipelineParams {
  MatchParams match;
  SegParams seg;
};

struct FlowPipelineResult {
  Planef prob_a, prob_b;
  Planef thin_a, thin_b;
  SuperpixelMap sp_a, sp_b;
  std::vector<Edgelet> edg_a, edg_b;
  std::vector<EdgeletMatch> matches;
  std::vector<PixelAssignment> assignments;
  BoundaryFlowField field;
  std::vector<std::string> warnings;
};

// detect -> NMS -> oversegment -> edgelets -> excitation scores -> matching
// -> ordered pixel assignment -> side correction and flow placement.
FlowPipelineResult run_flow_pipeline(const Fcsn& net, const RgbImage& frame_a,
                                     const RgbImage& frame_b, const PipelineParams& params);

// ---- dataset on disk --------------------------------------------------------

struct SynthOptions {
  DatasetParams params;
  std::string out_dir;
  bool force = false;
  int jobs = 1;
};
void cmd_synth(const SynthOptions& opts);

std::vector<std::string> read_manifest(const std::string& dir);

struct LoadedEntry {
  RgbImage frame_a, frame_b;
  Planef boundary_a, boundary_b;
  DenseFlow flow;
  BfGroundTruth gt;
};
LoadedEntry load_entry(const std::string& entry_dir);
std::vector<TrainSample> load_train_samples(const std::string& dataset_dir);

struct TrainCmdOptions {
  std::string dataset_dir;
  std::string out_checkpoint;
  std::string config_path;   // optional
  std::string resume_path;   // optional
  std::string log_path;      // optional
  std::optional<int> iterations;
  std::optional<uint64_t> seed;
  bool force = false;
  int jobs = 1;
};
void cmd_train(const TrainCmdOptions& opts);

struct DetectOptions {
  std::string checkpoint;
  std::string out_dir;
  std::string pair_a, pair_b;  // single-pair mode
  std::string dataset_dir;     // dataset mode
  bool nms = false;
  bool force = false;
  int jobs = 1;
};
void cmd_detect(const DetectOptions& opts);

struct FlowCmdOptions {
  std::string checkpoint;
  std::string out_dir;
  std::string pair_a, pair_b;
  std::string dataset_dir;
  PipelineParams params;
  bool force = false;
  int jobs = 1;
};
void cmd_flow(const FlowCmdOptions& opts);

struct EvalBoundaryOptions {
  std::string pred_dir, gt_dir;
  std::string out_report;
  std::string out_csv;  // optional
  int thresholds = 33;
  double tol = -1.0;  // <= 0: 0.0075 * image diagonal
  bool force = false;
};
BenchmarkSummary cmd_eval_boundary(const EvalBoundaryOptions& opts);

struct EvalFlowOptions {
  std::string pred_dir, gt_dir;
  std::string out_report;
  bool baselines = false;
  double radius = 100.0;
  bool force = false;
};
struct EvalFlowResult {
  double epe_ours = 0.0;
  std::optional<double> epe_greedy_nn, epe_ransac;
  int entries = 0;
};
EvalFlowResult cmd_eval_flow(const EvalFlowOptions& opts);

// Boundary pixels tinted by flow direction on the first frame.
RgbImage overlay_flow(const RgbImage& img, const BoundaryFlowField& field);
// Side-by-side canvas with match segments.
RgbImage overlay_matches(const RgbImage& a, const RgbImage& b, const BoundaryFlowField& field,
                         int stride = 4);

void guard_out_file(const std::string& path, bool force);
void prepare_out_dir(const std::string& dir, bool force);

}  // namespace bflow
