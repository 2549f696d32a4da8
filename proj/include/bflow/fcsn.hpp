#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bflow/adam.hpp"
#include "bflow/image.hpp"
#include "bflow/loss.hpp"
#include "bflow/ops.hpp"
#include "bflow/rng.hpp"

namespace bflow {

// Architecture and training settings. The encoder is a stack of
// conv/ReLU/pool blocks followed by a 3x3 "fc6" conv; the decoder starts
// with a 1x1 deconv and alternates unpooling with 5x5 deconvs, every
// deconv followed by ReLU and dropout, and ends in a 5x5 two-class
// softmax head.
struct FcsnConfig {
  std::vector<int> encoder_channels = {16, 32, 64, 128};
  int fc6_channels = 256;
  // One width per unpool stage (must mirror the encoder widths in reverse)
  // plus a final full-resolution deconv width.
  std::vector<int> decoder_channels = {128, 64, 32, 16, 8};
  int encoder_kernel = 3;
  int decoder_kernel = 5;
  int head_kernel = 5;
  float dropout_rate = 0.5f;
  int patch_h = 32, patch_w = 32;
  float lambda1 = 1.0f;
  float lambda2 = 0.1f;
  float lr = 1e-4f;
  int batch = 4;
  int iterations = 2000;
  uint64_t seed = 1;
  bool train_encoder = true;

  int pool_stages() const { return static_cast<int>(encoder_channels.size()); }
  int pool_factor() const { return 1 << pool_stages(); }
  int jfr_channels() const { return 2 * fc6_channels; }

  void validate() const;
  std::string to_kv() const;
  static FcsnConfig from_kv(const std::string& text);
  static FcsnConfig load(const std::string& path);

  // Paper-scale analog: VGG-style widths, 4096-channel fc6, Table-1 decoder.
  static FcsnConfig paper_scale();
};

// Activations of one branch captured by an eval-mode forward pass.
// Immutable after the pass; shared read-only with the excitation module.
struct BranchCache {
  std::vector<Tensor> enc_acts;      // post-ReLU conv output per block, fc6 last
  std::vector<PoolIndices> indices;  // one per encoder block
  Tensor jfr;
  std::vector<Tensor> dec_acts;     // post-ReLU deconv outputs (stages + 1)
  std::vector<Tensor> unpool_acts;  // unpool outputs (stages)
  Tensor head_logits;               // 2 x H x W
  Tensor probs;                     // 2 x H x W softmax

  void validate_against(const FcsnConfig& cfg) const;
};

struct PairResult {
  Planef pred_a, pred_b;  // boundary-class probability per frame
  BranchCache cache_a, cache_b;
  Tensor jfr;
};

struct TrainSample {
  RgbImage frame_a, frame_b;
  Planef gt_a;  // binary boundary mask for the first frame
};

struct TrainOptions {
  int iterations = 2000;
  int log_every = 50;
  int jobs = 1;
  std::function<void(int iter, double loss)> on_iter;
};

struct TrainStats {
  double first_loss = 0.0;
  double last_loss = 0.0;
  int iterations_run = 0;
};

Tensor image_to_tensor(const RgbImage& img);
Planef mask_to_plane(const Planef& p);  // identity helper for clarity
Tensor plane_to_tensor(const Planef& p);
Planef tensor_channel_to_plane(const Tensor& t, int n, int c);

class Fcsn {
 public:
  explicit Fcsn(FcsnConfig cfg, bool init_weights = true);

  const FcsnConfig& config() const { return cfg_; }
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

  struct EncodeOut {
    Tensor features;
    std::vector<PoolIndices> indices;
    std::vector<Tensor> acts;
  };
  EncodeOut encode(const Tensor& image) const;

  static Tensor fuse(const Tensor& feat_a, const Tensor& feat_b);

  // Eval-mode decode (dropout disabled, deterministic).
  Tensor decode(const Tensor& jfr, const std::vector<PoolIndices>& indices,
                BranchCache* cache = nullptr) const;

  // One stochastic train-mode decode (dropout active); diagnostics only.
  Tensor decode_train_sample(const Tensor& jfr, const std::vector<PoolIndices>& indices,
                             Rng& rng) const;

  PairResult forward_pair(const Tensor& img_a, const Tensor& img_b) const;
  PairResult forward_pair(const RgbImage& a, const RgbImage& b) const;

  // One SGD iteration over a batch of patch pairs. Loss is computed on the
  // first-frame branch only; gradients flow through the shared weights.
  // Returns the batch loss. Optionally exposes the gradients (for tests).
  double train_step(const std::vector<TrainSample>& batch,
                    std::map<std::string, Tensor>* grads_out = nullptr,
                    bool apply_update = true);

  // Full training loop: samples cfg.batch random patches per iteration.
  TrainStats train(const std::vector<TrainSample>& dataset, const TrainOptions& opts);

  // Deterministic eval-mode scalar loss of a single pair; used by the
  // finite-difference gradient checks.
  double eval_loss(const TrainSample& sample) const;
  std::map<std::string, Tensor> eval_grads(const TrainSample& sample) const;

  Rng& train_rng() { return train_rng_; }

 private:
  friend class Excitation;
  friend void save_checkpoint(const std::string&, const Fcsn&);

  struct DecTrainCache;
  Tensor decode_train(const Tensor& jfr, const std::vector<PoolIndices>& indices, Rng& rng,
                      DecTrainCache& cache) const;
  double pair_loss_and_grads(const TrainSample& sample, size_t norm, bool train_mode, Rng& rng,
                             std::map<std::string, Tensor>& grads) const;
  void init_weights();

  FcsnConfig cfg_;
  ParamStore store_;
  Rng train_rng_;
};

// Checkpoint file: magic "FCSN", version u32, step u64, config blob, then
// named float32 tensor records (params plus Adam moments).
void save_checkpoint(const std::string& path, const Fcsn& net);
Fcsn load_checkpoint(const std::string& path);

}  // namespace bflow
