// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <iomanip>
#include <iostream>
#include <memory>

#include "cli_context.hpp"
#include "relrot/baselines.hpp"
#include "relrot/evalharness.hpp"
#include "relrot/trainer.hpp"

namespace relrot::cli {

namespace {

void print_report(const EvalReport& r) {
  std::cout << std::fixed << std::setprecision(2);
  for (const char* row : kReportRows) {
    const ClassStats& s = r.rows.at(row);
    std::cout << std::setw(6) << row << "  n=" << s.count << '/' << s.attempted << "  avg=" << s.mean
              << "  med=" << s.median << "  <10=" << s.pct_under_10 << "%\n";
  }
}

std::unique_ptr<Trainable> model_of_kind(const std::string& kind, const ModelConfig& cfg) {
  if (kind == "reg6d") return std::make_unique<Reg6DNet>(cfg);
  return std::make_unique<RotationNet>(cfg);
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  CommonArgs common;
  std::string manifest;
  std::string kind = "rotation";
  std::string resume;
  bool deterministic = false;
};

void run_train(const TrainArgs& a) {
  RunContext ctx(a.common, "train");
  ModelConfig mc = model_config(ctx.config());
  TrainConfig tc = train_config(ctx.config());
  tc.manifest = fs::absolute(a.manifest).lexically_normal();

  const LoadedManifest data = load_manifest_with_images(a.manifest);
  const TrainingSet set = make_training_set(data.images, data.manifest.records, mc.encoder.input_size);
  auto model = model_of_kind(a.kind, mc);
  const InputNormalization norm = dataset_normalization(set);
  if (auto* r = dynamic_cast<RotationNet*>(model.get())) r->set_normalization(norm);
  if (auto* r = dynamic_cast<Reg6DNet*>(model.get())) r->set_normalization(norm);

  ctx.write_config();
  TrainOptions opt;
  opt.out_dir = ctx.out();
  if (!a.resume.empty()) opt.resume = a.resume;
  opt.quiet = false;
  opt.wall_clock = !a.deterministic;
  const TrainLog log = train(tc, *model, set, opt);
  ctx.write_outputs();
  if (!log.entries.empty()) {
    std::cout << "final loss " << log.entries.back().loss << " after iteration "
              << log.entries.back().iter << '\n';
  }
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  CommonArgs common;
  std::string checkpoint;
  std::string manifest;
  bool top2 = false;
  std::string decoding = "argmax";
  std::string probe;
  std::optional<double> max_roll;
  std::string panos;
};

std::vector<Image> unique_crops(const LoadedManifest& data) {
  std::vector<Image> out;
  std::map<std::string, bool> seen;
  for (std::size_t i = 0; i < data.manifest.records.size(); ++i) {
    const auto& r = data.manifest.records[i];
    if (!seen[r.crop1_ref]) out.push_back(data.images[i].img1);
    seen[r.crop1_ref] = true;
    if (!seen[r.crop2_ref]) out.push_back(data.images[i].img2);
    seen[r.crop2_ref] = true;
  }
  return out;
}

void run_eval(const EvalArgs& a) {
  RunContext ctx(a.common, "eval");
  const EvalConfig ec = eval_config(ctx.config());
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const LoadedManifest data = load_manifest_with_images(a.manifest);

  if (ck.kind == "reg6d") {
    if (!a.probe.empty() || a.top2) throw ConfigError("eval: probes and --top2 need a rotation checkpoint");
    const Reg6DNet net = reg6d_from_checkpoint(ck);
    const EvalReport r = evaluate_estimator(Reg6DEstimator(net), data.manifest, data.images);
    write_report(ctx.out() / "report.json", r);
    print_report(r);
    ctx.write_outputs();
    return;
  }

  const RotationNet net = rotation_net_from_checkpoint(ck);
  const NetPredictor predictor(net, a.decoding == "expectation" ? Decoding::Expectation : Decoding::Argmax);
  if (a.probe == "identity") {
    const IdentityProbe p = identity_probe(predictor, unique_crops(data));
    write_json(ctx.out() / "probe_identity.json", p);
    std::cout << "identity probe: mean " << p.mean_error << " deg, median " << p.median_error
              << " deg, mean pitch gap " << p.mean_pitch_gap << " deg\n";
  } else if (a.probe == "roll") {
    if (a.panos.empty()) throw ConfigError("eval --probe roll needs --panos");
    const PanoramaSet set = load_panorama_set(a.panos);
    const PanoramaLookup lookup = [&set](const std::string& id) -> const Panorama& {
      const auto it = set.by_id.find(id);
      if (it == set.by_id.end()) throw std::runtime_error("panorama '" + id + "' not found");
      return it->second;
    };
    const EvalReport r = roll_probe(predictor, data.manifest, lookup, a.max_roll.value_or(ec.max_roll),
                                    ctx.seed());
    write_report(ctx.out() / "probe_roll.json", r);
    print_report(r);
  } else {
    const EvalReport r = a.top2 ? top2_report(predictor, data.manifest, data.images)
                                : evaluate(predictor, data.manifest, data.images);
    write_report(ctx.out() / "report.json", r);
    print_report(r);
  }
  ctx.write_outputs();
}

// ---------------------------------------------------------------------------

struct BaselineArgs {
  CommonArgs common;
  std::string method = "rotation";
  std::string manifest;
  std::string checkpoint;
};

void run_baseline(const BaselineArgs& a) {
  RunContext ctx(a.common, "baseline");
  const EvalConfig ec = eval_config(ctx.config());
  const LoadedManifest data = load_manifest_with_images(a.manifest);
  EvalReport r;
  if (a.method == "reg6d") {
    if (a.checkpoint.empty()) throw ConfigError("baseline --method reg6d needs --checkpoint");
    const Reg6DNet net = reg6d_from_checkpoint(load_checkpoint(a.checkpoint));
    r = evaluate_estimator(Reg6DEstimator(net), data.manifest, data.images);
  } else {
    CameraSpec cam;
    cam.fov = data.manifest.fov;
    cam.size = data.manifest.crop_size;
    RansacOptions ro;
    ro.iters = ec.ransac_iters;
    ro.inlier_thresh_deg = ec.inlier_thresh_deg;
    ro.seed = ctx.seed();
    EssentialOptions eo;
    eo.iters = ec.ransac_iters;
    eo.seed = ctx.seed();
    const ClassicalEstimator est(cam, a.method == "essential" ? ClassicalMode::Essential : ClassicalMode::Rotation,
                                 nullptr, ro, eo);
    r = evaluate_estimator(est, data.manifest, data.images);
  }
  write_report(ctx.out() / "report.json", r);
  print_report(r);
  ctx.write_outputs();
}

// ---------------------------------------------------------------------------

struct OccludeArgs {
  CommonArgs common;
  std::string checkpoint;
  std::string manifest;
  std::size_t pair = 0;
  std::optional<int> window;
  std::optional<int> stride;
};

void run_occlude(const OccludeArgs& a) {
  RunContext ctx(a.common, "occlude");
  EvalConfig ec = eval_config(ctx.config());
  if (a.window) ec.window = *a.window;
  if (a.stride) ec.stride = *a.stride;
  const RotationNet net = rotation_net_from_checkpoint(load_checkpoint(a.checkpoint));
  const LoadedManifest data = load_manifest_with_images(a.manifest);
  if (a.pair >= data.manifest.records.size()) {
    throw ConfigError("--pair is out of range (manifest has " +
                      std::to_string(data.manifest.records.size()) + " pairs)");
  }
  std::vector<Image> all;
  for (const auto& p : data.images) {
    all.push_back(p.img1);
    all.push_back(p.img2);
  }
  const Rgb fill = mean_color(all);
  const int s = net.config().encoder.input_size;
  const auto& pair = data.images[a.pair];
  const Image img1 = resize_bilinear(pair.img1, s, s), img2 = resize_bilinear(pair.img2, s, s);
  const OcclusionMap m = occlusion_heatmap(NetPredictor(net), img1, img2,
                                           data.manifest.records[a.pair].rotation(), fill, ec.window,
                                           ec.stride, a.pair);
  write_occlusion_csv(ctx.out() / "occlusion.csv", m);
  write_occlusion_png(ctx.out() / "occlusion_img1.png", m, 0);
  write_occlusion_png(ctx.out() / "occlusion_img2.png", m, 1);
  ctx.write_outputs();
  std::cout << "unoccluded error " << m.baseline_error << " deg over a " << m.grid_w << "x"
            << m.grid_h << " grid\n";
}

// ---------------------------------------------------------------------------

struct PlotArgs {
  CommonArgs common;
  std::string report;
  std::string checkpoint;
  std::string manifest;
  std::string panos;
  int count = 4;
};

CameraSpec camera_from_rotation(const RotationMatrix& r, const CameraSpec& like) {
  const EulerTriple e = matrix_to_euler(r);
  CameraSpec c = like;
  c.roll = e.alpha;
  c.pitch = e.beta;
  c.yaw = e.gamma;
  return c;
}

void run_plot(const PlotArgs& a) {
  RunContext ctx(a.common, "plot");
  if (a.report.empty() && a.checkpoint.empty()) throw ConfigError("plot needs --report and/or --checkpoint");
  if (!a.report.empty()) {
    const nlohmann::json rep = read_json(a.report);
    std::vector<double> errors;
    for (const auto& p : rep.at("pairs")) {
      if (p.at("success").get<bool>()) errors.push_back(p.at("error").get<double>());
    }
    const ErrorStats stats = export_stats(errors);
    write_histogram_csv(ctx.out() / "histogram.csv", stats);
    write_cdf_csv(ctx.out() / "cdf.csv", stats);
  }
  if (!a.checkpoint.empty()) {
    if (a.manifest.empty() || a.panos.empty()) throw ConfigError("plot overlays need --manifest and --panos");
    const RotationNet net = rotation_net_from_checkpoint(load_checkpoint(a.checkpoint));
    const LoadedManifest data = load_manifest_with_images(a.manifest);
    const PanoramaSet set = load_panorama_set(a.panos);
    const NetPredictor predictor(net);
    fs::create_directories(ctx.out() / "overlays");
    const std::size_t n = std::min<std::size_t>(std::size_t(std::max(a.count, 0)), data.manifest.records.size());
    for (std::size_t i = 0; i < n; ++i) {
      const PairSample& rec = data.manifest.records[i];
      const auto it = set.by_id.find(rec.pano2_id);
      if (it == set.by_id.end()) throw std::runtime_error("panorama '" + rec.pano2_id + "' not found");
      const Prediction pred = predictor.predict({data.images[i].img1, data.images[i].img2, i});
      const CameraSpec cam2_pred = camera_from_rotation(pred.rotation * camera_rotation(rec.cam1), rec.cam2);
      Image canvas = it->second.pixels;
      draw_view_outline(canvas, rec.cam1, {0.f, 1.f, 0.f});
      draw_view_outline(canvas, rec.cam2, {1.f, 0.f, 0.f});
      draw_view_outline(canvas, cam2_pred, {0.f, 0.4f, 1.f});
      write_png(ctx.out() / "overlays" / ("pair_" + std::to_string(i) + ".png"), canvas);
    }
  }
  ctx.write_outputs();
}

}  // namespace

void register_model_commands(CLI::App& app) {
  auto train = std::make_shared<TrainArgs>();
  auto* t = app.add_subcommand("train", "Train a rotation classifier or 6D regressor");
  add_common(t, train->common);
  t->add_option("--manifest", train->manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  t->add_option("--kind", train->kind, "rotation or reg6d")->check(CLI::IsMember({"rotation", "reg6d"}));
  t->add_option("--resume", train->resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
  t->add_flag("--deterministic", train->deterministic, "Log wall_ms as 0 so reruns are byte-identical");
  t->callback([train] { run_train(*train); });

  auto ev = std::make_shared<EvalArgs>();
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  add_common(e, ev->common);
  e->add_option("--checkpoint", ev->checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  e->add_option("--manifest", ev->manifest, "Evaluation manifest")->required()->check(CLI::ExistingFile);
  e->add_flag("--top2", ev->top2, "Also report top-2 errors");
  e->add_option("--decoding", ev->decoding, "argmax or expectation")
      ->check(CLI::IsMember({"argmax", "expectation"}));
  e->add_option("--probe", ev->probe, "identity or roll")->check(CLI::IsMember({"identity", "roll"}));
  e->add_option("--max-roll", ev->max_roll, "Roll bound in degrees for the roll probe");
  e->add_option("--panos", ev->panos, "Panorama directory for the roll probe");
  e->callback([ev] { run_eval(*ev); });

  auto bl = std::make_shared<BaselineArgs>();
  auto* b = app.add_subcommand("baseline", "Evaluate a baseline estimator");
  add_common(b, bl->common);
  b->add_option("--method", bl->method, "rotation, essential or reg6d")
      ->check(CLI::IsMember({"rotation", "essential", "reg6d"}));
  b->add_option("--manifest", bl->manifest, "Evaluation manifest")->required()->check(CLI::ExistingFile);
  b->add_option("--checkpoint", bl->checkpoint, "6D regression checkpoint")->check(CLI::ExistingFile);
  b->callback([bl] { run_baseline(*bl); });

  auto oc = std::make_shared<OccludeArgs>();
  auto* o = app.add_subcommand("occlude", "Occlusion-sensitivity heatmaps for one pair");
  add_common(o, oc->common);
  o->add_option("--checkpoint", oc->checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  o->add_option("--manifest", oc->manifest, "Manifest holding the pair")->required()->check(CLI::ExistingFile);
  o->add_option("--pair", oc->pair, "Pair index in the manifest");
  o->add_option("--window", oc->window, "Window size in network-input pixels");
  o->add_option("--stride", oc->stride, "Window stride in network-input pixels");
  o->callback([oc] { run_occlude(*oc); });

  auto pl = std::make_shared<PlotArgs>();
  auto* p = app.add_subcommand("plot", "Error histogram/CDF CSVs and panorama overlays");
  add_common(p, pl->common);
  p->add_option("--report", pl->report, "EvalReport JSON")->check(CLI::ExistingFile);
  p->add_option("--checkpoint", pl->checkpoint, "Model checkpoint for overlays")->check(CLI::ExistingFile);
  p->add_option("--manifest", pl->manifest, "Manifest for overlays")->check(CLI::ExistingFile);
  p->add_option("--panos", pl->panos, "Panorama directory for overlays");
  p->add_option("--count", pl->count, "Number of overlay pairs");
  p->callback([pl] { run_plot(*pl); });
}

}  // namespace relrot::cli
