#include "bflow/fcsn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bflow {

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    os << v[i];
  }
  return os.str();
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

std::string fmt_float(float v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

void accumulate(std::map<std::string, Tensor>& grads, const std::string& name, const Tensor& g) {
  auto it = grads.find(name);
  if (it == grads.end()) {
    grads[name] = g;
    return;
  }
  BFLOW_CHECK(it->second.same_shape(g), "gradient accumulation shape mismatch for ", name);
  for (size_t i = 0; i < g.size(); ++i) it->second.data[i] += g.data[i];
}

void accumulate_bias(std::map<std::string, Tensor>& grads, const std::string& name,
                     const std::vector<float>& gb) {
  Tensor t(1, static_cast<int>(gb.size()), 1, 1);
  std::copy(gb.begin(), gb.end(), t.data.begin());
  accumulate(grads, name, t);
}

std::vector<float> bias_vec(const Tensor& t) {
  return std::vector<float>(t.data.begin(), t.data.end());
}

}  // namespace

void FcsnConfig::validate() const {
  BFLOW_CHECK(!encoder_channels.empty(), "config: encoder needs at least one block");
  for (int c : encoder_channels) BFLOW_CHECK(c > 0, "config: encoder channel must be positive");
  BFLOW_CHECK(fc6_channels > 0, "config: fc6_channels must be positive");
  const int n = pool_stages();
  BFLOW_CHECK(static_cast<int>(decoder_channels.size()) == n + 1,
              "config: decoder needs ", n + 1, " widths (one per unpool stage plus the "
              "full-resolution deconv), got ", decoder_channels.size());
  for (int i = 0; i < n; ++i)
    BFLOW_CHECK(decoder_channels[i] == encoder_channels[n - 1 - i],
                "config: decoder width ", i, " is ", decoder_channels[i],
                " but must match encoder block ", n - 1 - i, " (",
                encoder_channels[n - 1 - i], ") for unpooling");
  BFLOW_CHECK(decoder_channels[n] > 0, "config: final decoder width must be positive");
  BFLOW_CHECK(encoder_kernel >= 1 && encoder_kernel % 2 == 1, "config: encoder kernel must be odd");
  BFLOW_CHECK(decoder_kernel >= 1 && decoder_kernel % 2 == 1, "config: decoder kernel must be odd");
  BFLOW_CHECK(head_kernel >= 1 && head_kernel % 2 == 1, "config: head kernel must be odd");
  BFLOW_CHECK(dropout_rate >= 0.0f && dropout_rate < 1.0f, "config: dropout must be in [0,1)");
  BFLOW_CHECK(lambda1 > 0.0f && lambda2 > 0.0f, "config: loss weights must be positive");
  BFLOW_CHECK(lr > 0.0f, "config: lr must be positive");
  BFLOW_CHECK(batch >= 1, "config: batch must be >= 1");
  BFLOW_CHECK(patch_h % pool_factor() == 0 && patch_w % pool_factor() == 0,
              "config: patch size ", patch_h, "x", patch_w, " must be divisible by ",
              pool_factor());
  // Shape walk: decoder output must equal the input size.
  int s = patch_h / pool_factor();
  s = deconv_out_dim(s, 1, 1, 0);
  for (int i = 0; i < n; ++i) {
    s *= 2;
    s = deconv_out_dim(s, decoder_kernel, 1, (decoder_kernel - 1) / 2);
  }
  s = deconv_out_dim(s, decoder_kernel, 1, (decoder_kernel - 1) / 2);
  s = deconv_out_dim(s, head_kernel, 1, (head_kernel - 1) / 2);
  BFLOW_CHECK(s == patch_h, "config: decoder output size ", s, " != input size ", patch_h);
}

std::string FcsnConfig::to_kv() const {
  std::ostringstream os;
  os << "encoder_channels = " << join_ints(encoder_channels) << "\n";
  os << "fc6_channels = " << fc6_channels << "\n";
  os << "decoder_channels = " << join_ints(decoder_channels) << "\n";
  os << "encoder_kernel = " << encoder_kernel << "\n";
  os << "decoder_kernel = " << decoder_kernel << "\n";
  os << "head_kernel = " << head_kernel << "\n";
  os << "dropout = " << fmt_float(dropout_rate) << "\n";
  os << "patch_h = " << patch_h << "\n";
  os << "patch_w = " << patch_w << "\n";
  os << "lambda1 = " << fmt_float(lambda1) << "\n";
  os << "lambda2 = " << fmt_float(lambda2) << "\n";
  os << "lr = " << fmt_float(lr) << "\n";
  os << "batch = " << batch << "\n";
  os << "iterations = " << iterations << "\n";
  os << "seed = " << seed << "\n";
  os << "train_encoder = " << (train_encoder ? 1 : 0) << "\n";
  return os.str();
}

FcsnConfig FcsnConfig::from_kv(const std::string& text) {
  FcsnConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    BFLOW_CHECK(eq != std::string::npos, "config line ", lineno, ": expected 'key = value'");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "encoder_channels") cfg.encoder_channels = parse_ints(val);
    else if (key == "fc6_channels") cfg.fc6_channels = std::stoi(val);
    else if (key == "decoder_channels") cfg.decoder_channels = parse_ints(val);
    else if (key == "encoder_kernel") cfg.encoder_kernel = std::stoi(val);
    else if (key == "decoder_kernel") cfg.decoder_kernel = std::stoi(val);
    else if (key == "head_kernel") cfg.head_kernel = std::stoi(val);
    else if (key == "dropout") cfg.dropout_rate = std::stof(val);
    else if (key == "patch_h") cfg.patch_h = std::stoi(val);
    else if (key == "patch_w") cfg.patch_w = std::stoi(val);
    else if (key == "lambda1") cfg.lambda1 = std::stof(val);
    else if (key == "lambda2") cfg.lambda2 = std::stof(val);
    else if (key == "lr") cfg.lr = std::stof(val);
    else if (key == "batch") cfg.batch = std::stoi(val);
    else if (key == "iterations") cfg.iterations = std::stoi(val);
    else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "train_encoder") cfg.train_encoder = std::stoi(val) != 0;
    else fail("config line ", lineno, ": unknown key '", key, "'");
  }
  cfg.validate();
  return cfg;
}

FcsnConfig FcsnConfig::load(const std::string& path) {
  std::ifstream in(path);
  BFLOW_CHECK(in.good(), "config: cannot open ", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_kv(ss.str());
}

FcsnConfig FcsnConfig::paper_scale() {
  FcsnConfig cfg;
  cfg.encoder_channels = {64, 128, 256, 512, 512};
  cfg.fc6_channels = 4096;
  cfg.decoder_channels = {512, 512, 256, 128, 64, 32};
  cfg.patch_h = cfg.patch_w = 224;
  cfg.batch = 8;
  return cfg;
}

void BranchCache::validate_against(const FcsnConfig& cfg) const {
  const int n = cfg.pool_stages();
  BFLOW_CHECK(static_cast<int>(indices.size()) == n, "cache: expected ", n, " pooling index sets, got ",
              indices.size());
  BFLOW_CHECK(static_cast<int>(dec_acts.size()) == n + 1 &&
                  static_cast<int>(unpool_acts.size()) == n,
              "cache: decoder activation count inconsistent with config");
  BFLOW_CHECK(jfr.c == cfg.jfr_channels(), "cache: JFR has ", jfr.c, " channels, config wants ",
              cfg.jfr_channels());
  for (int i = 0; i <= n; ++i)
    BFLOW_CHECK(dec_acts[i].c == cfg.decoder_channels[i], "cache: decoder activation ", i,
                " has ", dec_acts[i].c, " channels, config wants ", cfg.decoder_channels[i]);
  BFLOW_CHECK(head_logits.c == 2 && probs.c == 2, "cache: head tensors must have 2 channels");
}

Tensor image_to_tensor(const RgbImage& img) {
  Tensor t(1, 3, img.h, img.w);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      const uint8_t* p = img.at(x, y);
      t.at(0, 0, y, x) = p[0] / 255.0f;
      t.at(0, 1, y, x) = p[1] / 255.0f;
      t.at(0, 2, y, x) = p[2] / 255.0f;
    }
  return t;
}

Tensor plane_to_tensor(const Planef& p) {
  Tensor t(1, 1, p.h, p.w);
  std::copy(p.v.begin(), p.v.end(), t.data.begin());
  return t;
}

Planef tensor_channel_to_plane(const Tensor& t, int n, int c) {
  Planef p(t.w, t.h);
  std::copy(t.plane(n, c), t.plane(n, c) + static_cast<size_t>(t.h) * t.w, p.v.begin());
  return p;
}

Fcsn::Fcsn(FcsnConfig cfg, bool init)
    : cfg_(std::move(cfg)), train_rng_(mix_seed(cfg_.seed, 0x7261696eULL)) {
  cfg_.validate();
  const int n = cfg_.pool_stages();
  int in_ch = 3;
  for (int b = 0; b < n; ++b) {
    store_.add("enc" + std::to_string(b) + ".w",
               Tensor(cfg_.encoder_channels[b], in_ch, cfg_.encoder_kernel, cfg_.encoder_kernel));
    store_.add("enc" + std::to_string(b) + ".b", Tensor(1, cfg_.encoder_channels[b], 1, 1));
    in_ch = cfg_.encoder_channels[b];
  }
  store_.add("fc6.w", Tensor(cfg_.fc6_channels, in_ch, cfg_.encoder_kernel, cfg_.encoder_kernel));
  store_.add("fc6.b", Tensor(1, cfg_.fc6_channels, 1, 1));

  in_ch = cfg_.jfr_channels();
  for (int i = 0; i <= n; ++i) {
    const int k = (i == 0) ? 1 : cfg_.decoder_kernel;
    store_.add("dec" + std::to_string(i) + ".w", Tensor(in_ch, cfg_.decoder_channels[i], k, k));
    store_.add("dec" + std::to_string(i) + ".b", Tensor(1, cfg_.decoder_channels[i], 1, 1));
    in_ch = cfg_.decoder_channels[i];
  }
  store_.add("head.w", Tensor(in_ch, 2, cfg_.head_kernel, cfg_.head_kernel));
  store_.add("head.b", Tensor(1, 2, 1, 1));

  if (init) init_weights();
}

void Fcsn::init_weights() {
  Rng rng(cfg_.seed);
  // He fan-in init; iteration order is fixed by the name list, not the map.
  const int n = cfg_.pool_stages();
  std::vector<std::string> order;
  for (int b = 0; b < n; ++b) order.push_back("enc" + std::to_string(b) + ".w");
  order.push_back("fc6.w");
  for (int i = 0; i <= n; ++i) order.push_back("dec" + std::to_string(i) + ".w");
  order.push_back("head.w");
  for (const std::string& name : order) {
    Tensor& t = store_.get(name);
    const bool is_enc = name.rfind("enc", 0) == 0 || name.rfind("fc6", 0) == 0;
    const int fan_in = (is_enc ? t.c : t.n) * t.h * t.w;
    const double std = std::sqrt(2.0 / fan_in);
    for (float& v : t.data) v = static_cast<float>(rng.normal(0.0, std));
  }
}

Fcsn::EncodeOut Fcsn::encode(const Tensor& image) const {
  const int f = cfg_.pool_factor();
  BFLOW_CHECK(image.h % f == 0 && image.w % f == 0, "encode: image size ", image.h, "x", image.w,
              " must be divisible by the pooling factor ", f);
  BFLOW_CHECK(image.c == 3, "encode: expected 3-channel input, got ", image.shape_str());
  EncodeOut out;
  Tensor x = image;
  const int pad = (cfg_.encoder_kernel - 1) / 2;
  for (int b = 0; b < cfg_.pool_stages(); ++b) {
    const std::string p = "enc" + std::to_string(b);
    x = relu(conv2d(x, store_.get(p + ".w"), bias_vec(store_.get(p + ".b")), 1, pad));
    out.acts.push_back(x);
    auto [pooled, idx] = maxpool2x2(x);
    x = std::move(pooled);
    out.indices.push_back(std::move(idx));
  }
  x = relu(conv2d(x, store_.get("fc6.w"), bias_vec(store_.get("fc6.b")), 1, pad));
  out.acts.push_back(x);
  out.features = std::move(x);
  return out;
}

Tensor Fcsn::fuse(const Tensor& feat_a, const Tensor& feat_b) {
  BFLOW_CHECK(feat_a.same_shape(feat_b), "fuse: shape mismatch ", feat_a.shape_str(), " vs ",
              feat_b.shape_str());
  return concat_channels(feat_a, feat_b);
}

Tensor Fcsn::decode(const Tensor& jfr, const std::vector<PoolIndices>& indices,
                    BranchCache* cache) const {
  const int n = cfg_.pool_stages();
  BFLOW_CHECK(static_cast<int>(indices.size()) == n, "decode: expected ", n,
              " pooling index sets, got ", indices.size());
  BFLOW_CHECK(jfr.c == cfg_.jfr_channels(), "decode: JFR has ", jfr.c,
              " channels, config wants ", cfg_.jfr_channels());
  const int dpad = (cfg_.decoder_kernel - 1) / 2;
  if (cache) cache->jfr = jfr;

  Tensor x = relu(deconv2d(jfr, store_.get("dec0.w"), bias_vec(store_.get("dec0.b")), 1, 0));
  if (cache) cache->dec_acts.push_back(x);
  for (int s = 0; s < n; ++s) {
    x = unpool2x2(x, indices[n - 1 - s]);
    if (cache) cache->unpool_acts.push_back(x);
    const std::string p = "dec" + std::to_string(s + 1);
    x = relu(deconv2d(x, store_.get(p + ".w"), bias_vec(store_.get(p + ".b")), 1, dpad));
    if (cache) cache->dec_acts.push_back(x);
  }
  Tensor logits = deconv2d(x, store_.get("head.w"), bias_vec(store_.get("head.b")), 1,
                           (cfg_.head_kernel - 1) / 2);
  Tensor probs = softmax2(logits);
  if (cache) {
    cache->head_logits = logits;
    cache->probs = probs;
  }
  return probs;
}

PairResult Fcsn::forward_pair(const Tensor& img_a, const Tensor& img_b) const {
  BFLOW_CHECK(img_a.h == img_b.h && img_a.w == img_b.w, "forward_pair: image sizes differ: ",
              img_a.shape_str(), " vs ", img_b.shape_str());
  PairResult r;
  EncodeOut ea = encode(img_a);
  EncodeOut eb = encode(img_b);
  // Each branch decodes the self-first fusion; with shared weights this
  // makes the two branches exactly symmetric under input swap.
  r.jfr = fuse(ea.features, eb.features);
  const Tensor jfr_b = fuse(eb.features, ea.features);
  r.cache_a.enc_acts = std::move(ea.acts);
  r.cache_a.indices = std::move(ea.indices);
  r.cache_b.enc_acts = std::move(eb.acts);
  r.cache_b.indices = std::move(eb.indices);
  Tensor pa = decode(r.jfr, r.cache_a.indices, &r.cache_a);
  Tensor pb = decode(jfr_b, r.cache_b.indices, &r.cache_b);
  r.pred_a = tensor_channel_to_plane(pa, 0, 1);
  r.pred_b = tensor_channel_to_plane(pb, 0, 1);
  return r;
}

PairResult Fcsn::forward_pair(const RgbImage& a, const RgbImage& b) const {
  return forward_pair(image_to_tensor(a), image_to_tensor(b));
}

// ---- training --------------------------------------------------------------

struct Fcsn::DecTrainCache {
  std::vector<Tensor> dec_in;   // input of each deconv
  std::vector<Tensor> dec_z;    // pre-ReLU deconv outputs
  std::vector<DropoutMask> masks;
  Tensor head_in;
  Tensor probs;
};

Tensor Fcsn::decode_train(const Tensor& jfr, const std::vector<PoolIndices>& indices, Rng& rng,
                          DecTrainCache& cache) const {
  const int n = cfg_.pool_stages();
  const int dpad = (cfg_.decoder_kernel - 1) / 2;
  Tensor x = jfr;
  for (int i = 0; i <= n; ++i) {
    const std::string p = "dec" + std::to_string(i);
    cache.dec_in.push_back(x);
    Tensor z = deconv2d(x, store_.get(p + ".w"), bias_vec(store_.get(p + ".b")), 1,
                        i == 0 ? 0 : dpad);
    cache.dec_z.push_back(z);
    x = relu(z);
    DropoutMask mask;
    x = dropout_train(x, cfg_.dropout_rate, rng, mask);
    cache.masks.push_back(std::move(mask));
    if (i < n) x = unpool2x2(x, indices[n - 1 - i]);
  }
  cache.head_in = x;
  Tensor logits = deconv2d(x, store_.get("head.w"), bias_vec(store_.get("head.b")), 1,
                           (cfg_.head_kernel - 1) / 2);
  cache.probs = softmax2(logits);
  return cache.probs;
}

Tensor Fcsn::decode_train_sample(const Tensor& jfr, const std::vector<PoolIndices>& indices,
                                 Rng& rng) const {
  DecTrainCache cache;
  return decode_train(jfr, indices, rng, cache);
}

namespace {
struct EncTrainCache {
  std::vector<Tensor> conv_in;  // input of each conv (blocks then fc6)
  std::vector<Tensor> z;        // pre-ReLU conv outputs
  std::vector<PoolIndices> indices;
  Tensor features;
};
}  // namespace

double Fcsn::pair_loss_and_grads(const TrainSample& sample, size_t norm, bool train_mode,
                                 Rng& rng, std::map<std::string, Tensor>& grads) const {
  const int n = cfg_.pool_stages();
  const int epad = (cfg_.encoder_kernel - 1) / 2;
  const int dpad = (cfg_.decoder_kernel - 1) / 2;

  auto encode_cached = [&](const Tensor& img, EncTrainCache& c) {
    Tensor x = img;
    for (int b = 0; b < n; ++b) {
      const std::string p = "enc" + std::to_string(b);
      c.conv_in.push_back(x);
      Tensor z = conv2d(x, store_.get(p + ".w"), bias_vec(store_.get(p + ".b")), 1, epad);
      c.z.push_back(z);
      auto [pooled, idx] = maxpool2x2(relu(z));
      x = std::move(pooled);
      c.indices.push_back(std::move(idx));
    }
    c.conv_in.push_back(x);
    Tensor z = conv2d(x, store_.get("fc6.w"), bias_vec(store_.get("fc6.b")), 1, epad);
    c.z.push_back(z);
    c.features = relu(z);
  };

  const Tensor img_a = image_to_tensor(sample.frame_a);
  const Tensor img_b = image_to_tensor(sample.frame_b);
  EncTrainCache ea, eb;
  encode_cached(img_a, ea);
  encode_cached(img_b, eb);
  Tensor jfr = fuse(ea.features, eb.features);

  // One-side loss: only the first-frame decoder branch is evaluated.
  Tensor probs;
  DecTrainCache dc;
  BranchCache evalcache;
  if (train_mode) {
    probs = decode_train(jfr, ea.indices, rng, dc);
  } else {
    probs = decode(jfr, ea.indices, &evalcache);
  }

  Tensor target(1, 1, sample.gt_a.h, sample.gt_a.w);
  std::copy(sample.gt_a.v.begin(), sample.gt_a.v.end(), target.data.begin());
  Tensor pred1(1, 1, probs.h, probs.w);
  std::copy(probs.plane(0, 1), probs.plane(0, 1) + pred1.size(), pred1.data.begin());
  const LossResult lr = weighted_bce_loss(pred1, target, {cfg_.lambda1, cfg_.lambda2}, norm);

  // Backward.
  Tensor gprobs(1, 2, probs.h, probs.w, 0.0f);
  std::copy(lr.grad.data.begin(), lr.grad.data.end(), gprobs.plane(0, 1));
  Tensor g = softmax2_backward(probs, gprobs);

  const Tensor& head_in = train_mode ? dc.head_in : evalcache.dec_acts.back();
  ConvGrads hg = deconv2d_backward(head_in, store_.get("head.w"), g, 1, (cfg_.head_kernel - 1) / 2);
  accumulate(grads, "head.w", hg.weights);
  accumulate_bias(grads, "head.b", hg.bias);
  g = std::move(hg.input);

  for (int i = n; i >= 0; --i) {
    const std::string p = "dec" + std::to_string(i);
    if (i < n) g = unpool2x2_backward(g, ea.indices[n - 1 - i]);
    if (train_mode) {
      g = dropout_backward(g, dc.masks[i]);
      g = relu_backward(dc.dec_z[i], g);
      ConvGrads dg = deconv2d_backward(dc.dec_in[i], store_.get(p + ".w"), g, 1, i == 0 ? 0 : dpad);
      accumulate(grads, p + ".w", dg.weights);
      accumulate_bias(grads, p + ".b", dg.bias);
      g = std::move(dg.input);
    } else {
      // eval mode: dropout is identity; reconstruct the deconv input
      const Tensor& in = (i == 0) ? evalcache.jfr : evalcache.unpool_acts[i - 1];
      Tensor z = deconv2d(in, store_.get(p + ".w"), bias_vec(store_.get(p + ".b")), 1,
                          i == 0 ? 0 : dpad);
      g = relu_backward(z, g);
      ConvGrads dg = deconv2d_backward(in, store_.get(p + ".w"), g, 1, i == 0 ? 0 : dpad);
      accumulate(grads, p + ".w", dg.weights);
      accumulate_bias(grads, p + ".b", dg.bias);
      g = std::move(dg.input);
    }
  }

  if (!cfg_.train_encoder) return lr.value;

  auto encoder_backward = [&](const EncTrainCache& c, Tensor ge) {
    ge = relu_backward(c.z[n], ge);
    ConvGrads cg = conv2d_backward(c.conv_in[n], store_.get("fc6.w"), ge, 1, epad);
    accumulate(grads, "fc6.w", cg.weights);
    accumulate_bias(grads, "fc6.b", cg.bias);
    ge = std::move(cg.input);
    for (int b = n - 1; b >= 0; --b) {
      const std::string p = "enc" + std::to_string(b);
      ge = maxpool2x2_backward(ge, c.indices[b]);
      ge = relu_backward(c.z[b], ge);
      cg = conv2d_backward(c.conv_in[b], store_.get(p + ".w"), ge, 1, epad);
      accumulate(grads, p + ".w", cg.weights);
      accumulate_bias(grads, p + ".b", cg.bias);
      ge = std::move(cg.input);
    }
  };
  auto [ga, gb] = split_channels_half(g);
  encoder_backward(ea, ga);
  encoder_backward(eb, gb);
  return lr.value;
}

double Fcsn::train_step(const std::vector<TrainSample>& batch,
                        std::map<std::string, Tensor>* grads_out, bool apply_update) {
  BFLOW_CHECK(!batch.empty(), "train_step: empty batch");
  size_t norm = 0;
  for (const TrainSample& s : batch) {
    BFLOW_CHECK(s.gt_a.w == s.frame_a.w && s.gt_a.h == s.frame_a.h,
                "train_step: ground truth size mismatch");
    norm += static_cast<size_t>(s.gt_a.w) * s.gt_a.h;
  }
  std::map<std::string, Tensor> grads;
  double loss = 0.0;
  for (const TrainSample& s : batch) loss += pair_loss_and_grads(s, norm, true, train_rng_, grads);
  if (grads_out) *grads_out = grads;
  if (apply_update) {
    BFLOW_CHECK(std::isfinite(loss), "train_step: non-finite loss, update aborted");
    adam_step(store_, grads, cfg_.lr);
  }
  return loss;
}

TrainStats Fcsn::train(const std::vector<TrainSample>& dataset, const TrainOptions& opts) {
  BFLOW_CHECK(!dataset.empty(), "train: empty dataset");
  for (const TrainSample& s : dataset) {
    BFLOW_CHECK(s.frame_a.w >= cfg_.patch_w && s.frame_a.h >= cfg_.patch_h,
                "train: image smaller than patch size");
  }
  TrainStats stats;
  for (int iter = 0; iter < opts.iterations; ++iter) {
    std::vector<TrainSample> batch;
    batch.reserve(cfg_.batch);
    for (int b = 0; b < cfg_.batch; ++b) {
      const TrainSample& src = dataset[train_rng_.uniform_u64(dataset.size())];
      const int x0 = train_rng_.uniform_int(0, src.frame_a.w - cfg_.patch_w);
      const int y0 = train_rng_.uniform_int(0, src.frame_a.h - cfg_.patch_h);
      TrainSample patch;
      patch.frame_a = RgbImage(cfg_.patch_w, cfg_.patch_h);
      patch.frame_b = RgbImage(cfg_.patch_w, cfg_.patch_h);
      patch.gt_a = Planef(cfg_.patch_w, cfg_.patch_h);
      for (int y = 0; y < cfg_.patch_h; ++y)
        for (int x = 0; x < cfg_.patch_w; ++x) {
          std::copy(src.frame_a.at(x0 + x, y0 + y), src.frame_a.at(x0 + x, y0 + y) + 3,
                    patch.frame_a.at(x, y));
          std::copy(src.frame_b.at(x0 + x, y0 + y), src.frame_b.at(x0 + x, y0 + y) + 3,
                    patch.frame_b.at(x, y));
          patch.gt_a.at(x, y) = src.gt_a.at(x0 + x, y0 + y);
        }
      batch.push_back(std::move(patch));
    }
    const double loss = train_step(batch);
    if (iter == 0) stats.first_loss = loss;
    stats.last_loss = loss;
    stats.iterations_run = iter + 1;
    if (opts.on_iter) opts.on_iter(iter, loss);
  }
  return stats;
}

double Fcsn::eval_loss(const TrainSample& sample) const {
  std::map<std::string, Tensor> grads;
  Rng rng(0);
  return pair_loss_and_grads(sample, 0, false, rng, grads);
}

std::map<std::string, Tensor> Fcsn::eval_grads(const TrainSample& sample) const {
  std::map<std::string, Tensor> grads;
  Rng rng(0);
  pair_loss_and_grads(sample, 0, false, rng, grads);
  return grads;
}

}  // namespace bflow
