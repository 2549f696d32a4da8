#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bflow/pipeline.hpp"

namespace py = pybind11;
using namespace bflow;

namespace {

RgbImage image_from_array(const py::array_t<uint8_t, py::array::c_style>& arr) {
  BFLOW_CHECK(arr.ndim() == 3 && arr.shape(2) == 3, "expected an (H, W, 3) uint8 image");
  RgbImage img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
  std::memcpy(img.px.data(), arr.data(), img.px.size());
  return img;
}

py::array_t<uint8_t> image_to_array(const RgbImage& img) {
  py::array_t<uint8_t> arr({img.h, img.w, 3});
  std::memcpy(arr.mutable_data(), img.px.data(), img.px.size());
  return arr;
}

Planef plane_from_array(const py::array_t<float, py::array::c_style>& arr) {
  BFLOW_CHECK(arr.ndim() == 2, "expected an (H, W) float32 map");
  Planef p(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
  std::memcpy(p.v.data(), arr.data(), p.v.size() * sizeof(float));
  return p;
}

py::array_t<float> plane_to_array(const Planef& p) {
  py::array_t<float> arr({p.h, p.w});
  std::memcpy(arr.mutable_data(), p.v.data(), p.v.size() * sizeof(float));
  return arr;
}

Tensor tensor_from_array(const py::array_t<float, py::array::c_style>& arr) {
  BFLOW_CHECK(arr.ndim() == 4, "expected an (N, C, H, W) float32 tensor");
  Tensor t(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
           static_cast<int>(arr.shape(2)), static_cast<int>(arr.shape(3)));
  std::memcpy(t.data.data(), arr.data(), t.size() * sizeof(float));
  return t;
}

py::array_t<float> tensor_to_array(const Tensor& t) {
  py::array_t<float> arr({t.n, t.c, t.h, t.w});
  std::memcpy(arr.mutable_data(), t.data.data(), t.size() * sizeof(float));
  return arr;
}

py::dict field_to_dict(const BoundaryFlowField& field) {
  const py::ssize_t n = static_cast<py::ssize_t>(field.entries.size());
  py::array_t<int32_t> keys({n, static_cast<py::ssize_t>(2)});
  py::array_t<double> disp({n, static_cast<py::ssize_t>(2)});
  py::array_t<int32_t> ids(n);
  auto k = keys.mutable_unchecked<2>();
  auto d = disp.mutable_unchecked<2>();
  auto e = ids.mutable_unchecked<1>();
  for (py::ssize_t i = 0; i < n; ++i) {
    k(i, 0) = field.entries[i].x;
    k(i, 1) = field.entries[i].y;
    d(i, 0) = field.entries[i].dx;
    d(i, 1) = field.entries[i].dy;
    e(i) = field.entries[i].edgelet_id;
  }
  py::dict out;
  out["keys"] = keys;
  out["disp"] = disp;
  out["edgelet_id"] = ids;
  return out;
}

BoundaryFlowField field_from_arrays(const py::array_t<int32_t, py::array::c_style>& keys,
                                    const py::array_t<double, py::array::c_style>& disp) {
  BFLOW_CHECK(keys.ndim() == 2 && keys.shape(1) == 2, "keys must be (N, 2) int32");
  BFLOW_CHECK(disp.ndim() == 2 && disp.shape(1) == 2 && disp.shape(0) == keys.shape(0),
              "disp must be (N, 2) float64 matching keys");
  BoundaryFlowField f;
  auto k = keys.unchecked<2>();
  auto d = disp.unchecked<2>();
  for (py::ssize_t i = 0; i < keys.shape(0); ++i)
    f.entries.push_back({k(i, 0), k(i, 1), d(i, 0), d(i, 1), -1});
  return f;
}

BfGroundTruth gt_from_arrays(const py::array_t<int32_t, py::array::c_style>& pixels,
                             const py::array_t<double, py::array::c_style>& disp,
                             const py::array_t<bool, py::array::c_style>& defined) {
  BFLOW_CHECK(pixels.ndim() == 2 && pixels.shape(1) == 2, "pixels must be (N, 2) int32");
  BfGroundTruth gt;
  auto p = pixels.unchecked<2>();
  auto d = disp.unchecked<2>();
  auto f = defined.unchecked<1>();
  for (py::ssize_t i = 0; i < pixels.shape(0); ++i)
    gt.entries.push_back({p(i, 0), p(i, 1), f(i), static_cast<float>(d(i, 0)),
                          static_cast<float>(d(i, 1)), BfUndefReason::kTieCaseI});
  return gt;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "boundary detection and boundary-flow estimation core";

  py::register_exception<Error>(m, "BflowError");

  py::class_<FcsnConfig>(m, "FcsnConfig")
      .def(py::init<>())
      .def_static("from_kv", &FcsnConfig::from_kv)
      .def_static("paper_scale", &FcsnConfig::paper_scale)
      .def("to_kv", &FcsnConfig::to_kv)
      .def("validate", &FcsnConfig::validate)
      .def_readwrite("encoder_channels", &FcsnConfig::encoder_channels)
      .def_readwrite("fc6_channels", &FcsnConfig::fc6_channels)
      .def_readwrite("decoder_channels", &FcsnConfig::decoder_channels)
      .def_readwrite("dropout_rate", &FcsnConfig::dropout_rate)
      .def_readwrite("patch_h", &FcsnConfig::patch_h)
      .def_readwrite("patch_w", &FcsnConfig::patch_w)
      .def_readwrite("lambda1", &FcsnConfig::lambda1)
      .def_readwrite("lambda2", &FcsnConfig::lambda2)
      .def_readwrite("lr", &FcsnConfig::lr)
      .def_readwrite("batch", &FcsnConfig::batch)
      .def_readwrite("iterations", &FcsnConfig::iterations)
      .def_readwrite("seed", &FcsnConfig::seed)
      .def_readwrite("train_encoder", &FcsnConfig::train_encoder);

  py::class_<Fcsn>(m, "Fcsn")
      .def(py::init<FcsnConfig, bool>(), py::arg("config"), py::arg("init_weights") = true)
      .def_static("load", &load_checkpoint)
      .def("save", [](const Fcsn& net, const std::string& path) { save_checkpoint(path, net); })
      .def("config", &Fcsn::config)
      .def("step", [](const Fcsn& net) { return net.store().step; })
      .def("forward_pair",
           [](const Fcsn& net, const py::array_t<uint8_t, py::array::c_style>& a,
              const py::array_t<uint8_t, py::array::c_style>& b) {
             const PairResult r = net.forward_pair(image_from_array(a), image_from_array(b));
             return py::make_tuple(plane_to_array(r.pred_a), plane_to_array(r.pred_b));
           })
      .def("train_step",
           [](Fcsn& net, const py::array_t<uint8_t, py::array::c_style>& a,
              const py::array_t<uint8_t, py::array::c_style>& b,
              const py::array_t<float, py::array::c_style>& gt) {
             TrainSample s{image_from_array(a), image_from_array(b), plane_from_array(gt)};
             return net.train_step({s});
           });

  m.def(
      "conv2d",
      [](const py::array_t<float, py::array::c_style>& x,
         const py::array_t<float, py::array::c_style>& w, const std::vector<float>& bias,
         int stride, int pad) {
        return tensor_to_array(
            conv2d(tensor_from_array(x), tensor_from_array(w), bias, stride, pad));
      },
      py::arg("input"), py::arg("weights"), py::arg("bias") = std::vector<float>{},
      py::arg("stride") = 1, py::arg("pad") = 0);

  m.def(
      "deconv2d",
      [](const py::array_t<float, py::array::c_style>& x,
         const py::array_t<float, py::array::c_style>& w, const std::vector<float>& bias,
         int stride, int pad) {
        return tensor_to_array(
            deconv2d(tensor_from_array(x), tensor_from_array(w), bias, stride, pad));
      },
      py::arg("input"), py::arg("weights"), py::arg("bias") = std::vector<float>{},
      py::arg("stride") = 1, py::arg("pad") = 0);

  m.def("nms_thin", [](const py::array_t<float, py::array::c_style>& b) {
    return plane_to_array(nms_thin(plane_from_array(b)));
  });

  m.def(
      "oversegment",
      [](const py::array_t<float, py::array::c_style>& thin,
         const py::array_t<uint8_t, py::array::c_style>& image, int spacing, float theta_b) {
        const SuperpixelMap sp =
            oversegment(plane_from_array(thin), image_from_array(image), spacing, theta_b);
        py::array_t<int32_t> arr({sp.h, sp.w});
        std::memcpy(arr.mutable_data(), sp.label.data(), sp.label.size() * sizeof(int32_t));
        return py::make_tuple(arr, sp.k);
      },
      py::arg("thin"), py::arg("image"), py::arg("seed_spacing") = 16, py::arg("theta_b") = 0.5f);

  m.def(
      "extract_edgelets",
      [](const py::array_t<int32_t, py::array::c_style>& labels, int k, int min_len) {
        SuperpixelMap sp;
        sp.h = static_cast<int>(labels.shape(0));
        sp.w = static_cast<int>(labels.shape(1));
        sp.k = k;
        sp.label.resize(static_cast<size_t>(sp.w) * sp.h);
        std::memcpy(sp.label.data(), labels.data(), sp.label.size() * sizeof(int32_t));
        py::list out;
        for (const Edgelet& e : extract_edgelets(sp, 0, min_len)) {
          py::dict d;
          d["region_a"] = e.region_a;
          d["region_b"] = e.region_b;
          d["normal"] = py::make_tuple(e.nx, e.ny);
          py::array_t<int32_t> chain(
              {static_cast<py::ssize_t>(e.chain.size()), static_cast<py::ssize_t>(2)});
          auto c = chain.mutable_unchecked<2>();
          for (py::ssize_t i = 0; i < static_cast<py::ssize_t>(e.chain.size()); ++i) {
            c(i, 0) = e.chain[i].first;
            c(i, 1) = e.chain[i].second;
          }
          d["chain"] = chain;
          out.append(d);
        }
        return out;
      },
      py::arg("labels"), py::arg("k"), py::arg("min_len") = 3);

  m.def(
      "boundary_flow",
      [](const Fcsn& net, const py::array_t<uint8_t, py::array::c_style>& a,
         const py::array_t<uint8_t, py::array::c_style>& b, double radius, int top_k,
         double max_angle, int seed_spacing, float theta_b) {
        PipelineParams params;
        params.match.radius = radius;
        params.match.top_k = top_k;
        params.match.max_angle_deg = max_angle;
        params.seg.seed_spacing = seed_spacing;
        params.seg.theta_b = theta_b;
        const FlowPipelineResult r =
            run_flow_pipeline(net, image_from_array(a), image_from_array(b), params);
        py::dict out = field_to_dict(r.field);
        out["prob_a"] = plane_to_array(r.prob_a);
        out["prob_b"] = plane_to_array(r.prob_b);
        out["thin_a"] = plane_to_array(r.thin_a);
        out["thin_b"] = plane_to_array(r.thin_b);
        out["n_matches"] = static_cast<int>(r.matches.size());
        out["warnings"] = r.warnings;
        return out;
      },
      py::arg("net"), py::arg("frame_a"), py::arg("frame_b"), py::arg("radius") = 100.0,
      py::arg("top_k") = 10, py::arg("max_angle") = 45.0, py::arg("seed_spacing") = 16,
      py::arg("theta_b") = 0.5f);

  m.def(
      "render_entry",
      [](int index, uint64_t seed, int w, int h, int min_shapes, int max_shapes,
         bool two_movers) {
        DatasetParams p;
        p.seed = seed;
        p.w = w;
        p.h = h;
        p.min_shapes = min_shapes;
        p.max_shapes = max_shapes;
        p.ensure_two_movers = two_movers;
        const DatasetEntry e = generate_entry(p, index);
        py::dict out;
        out["frame_a"] = image_to_array(e.frame_a.image);
        out["frame_b"] = image_to_array(e.frame_b.image);
        out["boundary_a"] = plane_to_array(e.frame_a.boundary_mask);
        out["boundary_b"] = plane_to_array(e.frame_b.boundary_mask);
        const DenseFlow& f = e.frame_a.flow;
        py::array_t<float> flow({f.h, f.w, 2});
        py::array_t<bool> valid({f.h, f.w});
        auto fl = flow.mutable_unchecked<3>();
        auto va = valid.mutable_unchecked<2>();
        for (int y = 0; y < f.h; ++y)
          for (int x = 0; x < f.w; ++x) {
            fl(y, x, 0) = f.dx[f.idx(x, y)];
            fl(y, x, 1) = f.dy[f.idx(x, y)];
            va(y, x) = f.valid[f.idx(x, y)] != 0;
          }
        out["flow"] = flow;
        out["flow_valid"] = valid;
        const py::ssize_t n = static_cast<py::ssize_t>(e.gt.entries.size());
        py::array_t<int32_t> pixels({n, static_cast<py::ssize_t>(2)});
        py::array_t<double> disp({n, static_cast<py::ssize_t>(2)});
        py::array_t<bool> defined(n);
        auto px = pixels.mutable_unchecked<2>();
        auto dp = disp.mutable_unchecked<2>();
        auto df = defined.mutable_unchecked<1>();
        for (py::ssize_t i = 0; i < n; ++i) {
          px(i, 0) = e.gt.entries[i].x;
          px(i, 1) = e.gt.entries[i].y;
          dp(i, 0) = e.gt.entries[i].dx;
          dp(i, 1) = e.gt.entries[i].dy;
          df(i) = e.gt.entries[i].defined;
        }
        out["gt_pixels"] = pixels;
        out["gt_disp"] = disp;
        out["gt_defined"] = defined;
        return out;
      },
      py::arg("index") = 0, py::arg("seed") = 1, py::arg("width") = 64, py::arg("height") = 64,
      py::arg("min_shapes") = 1, py::arg("max_shapes") = 3, py::arg("two_movers") = false);

  m.def(
      "synth_dataset",
      [](const std::string& out_dir, int n, uint64_t seed, int w, int h, bool force, int jobs) {
        SynthOptions opts;
        opts.params.n = n;
        opts.params.seed = seed;
        opts.params.w = w;
        opts.params.h = h;
        opts.out_dir = out_dir;
        opts.force = force;
        opts.jobs = jobs;
        cmd_synth(opts);
      },
      py::arg("out_dir"), py::arg("n"), py::arg("seed") = 1, py::arg("width") = 64,
      py::arg("height") = 64, py::arg("force") = false, py::arg("jobs") = 1);

  m.def("epe", [](const py::array_t<int32_t, py::array::c_style>& pred_keys,
                  const py::array_t<double, py::array::c_style>& pred_disp,
                  const py::array_t<int32_t, py::array::c_style>& gt_pixels,
                  const py::array_t<double, py::array::c_style>& gt_disp,
                  const py::array_t<bool, py::array::c_style>& gt_defined) {
    return epe(field_from_arrays(pred_keys, pred_disp),
               gt_from_arrays(gt_pixels, gt_disp, gt_defined));
  });

  m.def(
      "boundary_summary",
      [](const std::vector<py::array_t<float, py::array::c_style>>& preds,
         const std::vector<py::array_t<float, py::array::c_style>>& gts, int thresholds,
         double tol) {
        BFLOW_CHECK(preds.size() == gts.size(), "prediction/ground-truth count mismatch");
        std::vector<std::vector<PrCounts>> per_image;
        for (size_t i = 0; i < preds.size(); ++i)
          per_image.push_back(boundary_pr(nms_thin(plane_from_array(preds[i])),
                                          plane_from_array(gts[i]), thresholds, tol));
        const BenchmarkSummary s = summarize(per_image);
        py::dict out;
        out["ods"] = s.ods;
        out["ois"] = s.ois;
        out["ap"] = s.ap;
        return out;
      },
      py::arg("preds"), py::arg("gts"), py::arg("thresholds") = 33, py::arg("tol") = -1.0);

  m.def("read_ppm", [](const std::string& p) { return image_to_array(read_ppm(p)); });
  m.def("write_ppm", [](const std::string& p, const py::array_t<uint8_t, py::array::c_style>& a) {
    write_ppm(p, image_from_array(a));
  });
  m.def("read_pgm", [](const std::string& p) { return plane_to_array(read_pgm(p)); });
  m.def(
      "write_pgm",
      [](const std::string& p, const py::array_t<float, py::array::c_style>& a, int maxval) {
        write_pgm(p, plane_from_array(a), maxval);
      },
      py::arg("path"), py::arg("map"), py::arg("maxval") = 65535);
}
