#include <CLI11.hpp>
#include <iostream>

#include "bflow/pipeline.hpp"

using namespace bflow;

int main(int argc, char** argv) {
  CLI::App app{"boundary detection and boundary-flow estimation pipeline"};
  app.require_subcommand(1);

  // synth ---------------------------------------------------------------
  SynthOptions synth;
  int synth_w = 64, synth_h = 64;
  auto* s_synth = app.add_subcommand("synth", "generate a synthetic dataset");
  s_synth->add_option("--out", synth.out_dir, "output directory")->required();
  s_synth->add_option("--n", synth.params.n, "number of image pairs")->required();
  s_synth->add_option("--seed", synth.params.seed, "dataset seed");
  s_synth->add_option("--width", synth_w, "image width");
  s_synth->add_option("--height", synth_h, "image height");
  s_synth->add_option("--min-shapes", synth.params.min_shapes);
  s_synth->add_option("--max-shapes", synth.params.max_shapes);
  s_synth->add_option("--max-translation", synth.params.max_translation);
  s_synth->add_flag("--two-movers", synth.params.ensure_two_movers,
                    "force two shapes with distinct motions");
  s_synth->add_option("--jobs", synth.jobs, "worker threads");
  s_synth->add_flag("--force", synth.force, "overwrite existing outputs");

  // train ---------------------------------------------------------------
  TrainCmdOptions train;
  int train_iters = -1;
  uint64_t train_seed = 0;
  bool train_seed_set = false, train_iters_set = false;
  auto* s_train = app.add_subcommand("train", "train the network on a synthetic dataset");
  s_train->add_option("--dataset", train.dataset_dir, "dataset directory")->required();
  s_train->add_option("--out", train.out_checkpoint, "output checkpoint path")->required();
  s_train->add_option("--config", train.config_path, "key=value config file");
  s_train->add_option("--resume", train.resume_path, "checkpoint to continue from");
  s_train->add_option("--log", train.log_path, "per-iteration loss log");
  s_train->add_option("--iterations", train_iters)->each([&](const std::string&) {
    train_iters_set = true;
  });
  s_train->add_option("--seed", train_seed)->each([&](const std::string&) {
    train_seed_set = true;
  });
  s_train->add_option("--jobs", train.jobs, "worker threads");
  s_train->add_flag("--force", train.force);

  // detect ----------------------------------------------------------------
  DetectOptions detect;
  std::vector<std::string> detect_pair;
  auto* s_detect = app.add_subcommand("detect", "predict boundary maps for image pairs");
  s_detect->add_option("--checkpoint", detect.checkpoint)->required();
  s_detect->add_option("--out", detect.out_dir)->required();
  s_detect->add_option("--pair", detect_pair, "two PPM images (frame t, frame t+1)")
      ->expected(2);
  s_detect->add_option("--dataset", detect.dataset_dir, "run on every manifest entry");
  s_detect->add_flag("--nms", detect.nms, "also write thinned maps");
  s_detect->add_option("--jobs", detect.jobs);
  s_detect->add_flag("--force", detect.force);

  // flow ------------------------------------------------------------------
  FlowCmdOptions flow;
  std::vector<std::string> flow_pair;
  auto* s_flow = app.add_subcommand("flow", "estimate boundary flow for image pairs");
  s_flow->add_option("--checkpoint", flow.checkpoint)->required();
  s_flow->add_option("--out", flow.out_dir)->required();
  s_flow->add_option("--pair", flow_pair, "two PPM images")->expected(2);
  s_flow->add_option("--dataset", flow.dataset_dir);
  s_flow->add_option("--radius", flow.params.match.radius, "candidate search radius (px)");
  s_flow->add_option("--topk", flow.params.match.top_k, "top-k similar edgelets kept");
  s_flow->add_option("--max-angle", flow.params.match.max_angle_deg,
                     "max normal angle (degrees)");
  s_flow->add_option("--seed-spacing", flow.params.seg.seed_spacing);
  s_flow->add_option("--theta-b", flow.params.seg.theta_b, "boundary threshold for superpixels");
  s_flow->add_option("--jobs", flow.jobs);
  s_flow->add_flag("--force", flow.force);

  // eval-boundary -----------------------------------------------------------
  EvalBoundaryOptions evalb;
  auto* s_evalb = app.add_subcommand("eval-boundary", "PR / ODS / OIS / AP of boundary maps");
  s_evalb->add_option("--pred", evalb.pred_dir)->required();
  s_evalb->add_option("--gt", evalb.gt_dir)->required();
  s_evalb->add_option("--out", evalb.out_report)->required();
  s_evalb->add_option("--csv", evalb.out_csv);
  s_evalb->add_option("--thresholds", evalb.thresholds);
  s_evalb->add_option("--tol", evalb.tol, "match tolerance in px (default 0.0075 * diagonal)");
  s_evalb->add_flag("--force", evalb.force);

  // eval-flow -----------------------------------------------------------------
  EvalFlowOptions evalf;
  auto* s_evalf = app.add_subcommand("eval-flow", "endpoint error of boundary flow");
  s_evalf->add_option("--pred", evalf.pred_dir)->required();
  s_evalf->add_option("--gt", evalf.gt_dir)->required();
  s_evalf->add_option("--out", evalf.out_report)->required();
  s_evalf->add_flag("--baselines", evalf.baselines, "also score greedy-NN and RANSAC baselines");
  s_evalf->add_option("--radius", evalf.radius);
  s_evalf->add_flag("--force", evalf.force);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*s_synth) {
      synth.params.w = synth_w;
      synth.params.h = synth_h;
      cmd_synth(synth);
    } else if (*s_train) {
      if (train_iters_set) train.iterations = train_iters;
      if (train_seed_set) train.seed = train_seed;
      cmd_train(train);
    } else if (*s_detect) {
      if (detect_pair.size() == 2) {
        detect.pair_a = detect_pair[0];
        detect.pair_b = detect_pair[1];
      }
      cmd_detect(detect);
    } else if (*s_flow) {
      if (flow_pair.size() == 2) {
        flow.pair_a = flow_pair[0];
        flow.pair_b = flow_pair[1];
      }
      cmd_flow(flow);
    } else if (*s_evalb) {
      const BenchmarkSummary s = cmd_eval_boundary(evalb);
      std::cout << "ods = " << s.ods << "\nois = " << s.ois << "\nap = " << s.ap << "\n";
    } else if (*s_evalf) {
      const EvalFlowResult r = cmd_eval_flow(evalf);
      std::cout << "epe.ours = " << r.epe_ours << "\n";
      if (r.epe_greedy_nn) std::cout << "epe.greedy_nn = " << *r.epe_greedy_nn << "\n";
      if (r.epe_ransac) std::cout << "epe.ransac_translation = " << *r.epe_ransac << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
