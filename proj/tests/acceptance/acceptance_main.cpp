// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "relrot/baselines.hpp"
#include "relrot/common.hpp"
#include "relrot/corrvol.hpp"
#include "relrot/evalharness.hpp"
#include "relrot/trainer.hpp"

namespace relrot {
namespace {

using testing::deg;
using testing::euler_oracle;
using testing::random_rotation;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ModelConfig tiny_config(std::uint64_t seed) {
  ModelConfig c = ModelConfig::toy();
  c.encoder.input_size = 32;
  c.seed = seed;
  return c;
}

/// Prediction whose decoded angles and rotation are exactly `p`.
Prediction exact_prediction(const RelPoseParam& p) {
  std::array<std::vector<double>, 3> l;
  const std::array<double, 3> angles{p.beta1, p.beta2, p.delta_gamma};
  for (int h = 0; h < 3; ++h) {
    l[h].assign(360, 0.0);
    l[h][std::size_t(angle_to_bin(angles[h]))] = 20.0;
  }
  Prediction pred = make_prediction(std::move(l), Parameterization::Relative);
  pred.decoded = angles;
  pred.rotation = relative_from_params(p);
  return pred;
}

/// Answers pair i with the label of manifest record i.
class LabelOracle : public Predictor {
 public:
  explicit LabelOracle(const DatasetManifest& m) : m_(m) {}
  Prediction predict(const PairInput& in) const override { return exact_prediction(m_.records.at(in.index).gt); }

 private:
  const DatasetManifest& m_;
};

/// Knows the camera behind image i and answers with the true relative pose.
class CameraOracle : public Predictor {
 public:
  explicit CameraOracle(std::vector<CameraSpec> cams) : cams_(std::move(cams)) {}
  Prediction predict(const PairInput& in) const override {
    const CameraSpec& c = cams_.at(in.index);
    return exact_prediction({c.pitch, c.pitch, 0.0});
  }

 private:
  std::vector<CameraSpec> cams_;
};

/// Gaussian logits keyed by the pair index.
class RandomModel : public Predictor {
 public:
  explicit RandomModel(std::uint64_t seed) : seed_(seed) {}
  Prediction predict(const PairInput& in) const override {
    std::mt19937_64 rng(seed_ * 7919 + in.index);
    std::normal_distribution<double> n(0.0, 2.0);
    std::array<std::vector<double>, 3> l;
    for (auto& v : l) {
      v.resize(360);
      for (double& x : v) x = n(rng);
    }
    return make_prediction(std::move(l), Parameterization::Relative);
  }

 private:
  std::uint64_t seed_;
};

DatasetManifest label_manifest(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pitch(-30, 30), yaw(-180, 180);
  DatasetManifest m;
  for (int i = 0; i < n; ++i) {
    View a{"p", {yaw(rng), pitch(rng), 0.0}, "a", std::nullopt};
    View b{"p", {yaw(rng), pitch(rng), 0.0}, "b", std::nullopt};
    m.records.push_back(make_pair_sample(a, b));
  }
  return m;
}

SynthDataset small_rendered_set(std::uint64_t seed) {
  SynthDatasetOptions o;
  o.n_panos = 2;
  o.views_per_pano = 6;
  o.quota = 12;
  o.pano_width = 256;
  o.crop_size = 64;
  o.seed = seed;
  return build_same_pano_dataset(o);
}

Outcome rotation_oracle_equivalence() {
  std::mt19937_64 rng(1001);
  double geo = 0.0, euler = 0.0, compose = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const RotationMatrix a = random_rotation(rng), b = random_rotation(rng);
    geo = std::max(geo, std::abs(geodesic_error(a, b) - testing::quaternion_dot_angle_deg(a.matrix(), b.matrix())));
    const EulerTriple e = matrix_to_euler(a);
    euler = std::max(euler, geodesic_error(euler_to_matrix(e), a));
    compose = std::max(compose, testing::quaternion_angle_deg(euler_to_matrix(e).matrix(),
                                                              euler_oracle(e.alpha, e.beta, e.gamma)));
  }
  return {geo < 1e-6 && euler < 1e-6 && compose < 1e-6,
          fmt("max |geodesic - quaternion| %.2e deg, Euler round trip %.2e deg, Rx Ry Rz %.2e deg", geo, euler,
              compose)};
}

FeatureMap random_features(int k, int h, int w, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  FeatureMap f{Tensor(Shape{1, k, h, w}), ""};
  for (double& v : f.data.data()) v = n(rng);
  return f;
}

Outcome correlation_correctness() {
  std::mt19937_64 rng(1002);
  std::uniform_int_distribution<int> kd(1, 8), sd(1, 6);
  std::uniform_real_distribution<double> sc(-3.0, 3.0);
  double oracle = 0.0, swap = 0.0, linear = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int k = kd(rng), h = sd(rng), w = sd(rng);
    const FeatureMap a = random_features(k, h, w, rng), b = random_features(k, h, w, rng),
                     c = random_features(k, h, w, rng);
    const std::vector<double> fa(a.data.data().begin(), a.data.data().end());
    const std::vector<double> fb(b.data.data().begin(), b.data.data().end());
    const CorrelationVolume ab = correlate(a, b), ba = correlate(b, a);
    const std::vector<double> ref = testing::correlation_oracle(fa, fb, k, h, w);
    for (std::size_t i = 0; i < ref.size(); ++i) oracle = std::max(oracle, std::abs(ab.data()[i] - ref[i]));

    // <s a + c, b> = s <a, b> + <c, b>
    const double s = sc(rng);
    FeatureMap mix = a;
    for (std::size_t i = 0; i < mix.data.size(); ++i) mix.data[i] = s * a.data[i] + c.data[i];
    const CorrelationVolume mb = correlate(mix, b), cb = correlate(c, b);
    for (int p = 0; p < h; ++p)
      for (int q = 0; q < w; ++q)
        for (int r = 0; r < h; ++r)
          for (int u = 0; u < w; ++u) {
            swap = std::max(swap, std::abs(ab.at(p, q, r, u) - ba.at(r, u, p, q)));
            const double want = s * ab.at(p, q, r, u) + cb.at(p, q, r, u);
            linear = std::max(linear, std::abs(mb.at(p, q, r, u) - want) / std::max(1.0, std::abs(want)));
          }
  }
  return {oracle < 1e-6 && swap < 1e-6 && linear < 1e-6,
          fmt("max |matmul - loop| %.2e, swap asymmetry %.2e, bilinearity residual %.2e", oracle, swap, linear)};
}

Tensor random_images(int n, int size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor t(Shape{n, 3, size, size});
  for (double& v : t.data()) v = u(rng);
  return t;
}

std::vector<RelPoseParam> random_labels(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> p(-30.0, 30.0), y(-180.0, 180.0);
  std::vector<RelPoseParam> out;
  for (int i = 0; i < n; ++i) out.push_back({p(rng), p(rng), y(rng)});
  return out;
}

Outcome gradient_check() {
  double worst = 0.0;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ModelConfig mc = ModelConfig::toy();
    mc.seed = seed;
    RotationNet net(mc);
    std::mt19937_64 rng(2000 + seed);
    const int s = mc.encoder.input_size;
    const Tensor a = random_images(2, s, rng), b = random_images(2, s, rng);
    const auto gt = random_labels(2, rng);
    const auto loss = [&] { return batch_loss(net.forward(a, b), gt, mc.parameterization, nullptr); };
    net.zero_grad();
    std::array<Tensor, 3> dl;
    batch_loss(net.forward(a, b), gt, mc.parameterization, &dl);
    net.backward(dl);

    auto params = net.parameters();
    std::uniform_int_distribution<std::size_t> pick(0, params.size() - 1);
    // At 64 px, ReLU kinks lie within 1e-6 of some sampled weights; 1e-8 stays
    // inside the smooth piece while roundoff stays near 1e-5 relative.
    const double eps = 1e-8;
    for (int t = 0; t < 32; ++t) {
      nn::Param* p = params[pick(rng)];
      const std::size_t i = std::uniform_int_distribution<std::size_t>(0, p->size() - 1)(rng);
      const double orig = p->value[i];
      p->value[i] = orig + eps;
      const double lp = loss();
      p->value[i] = orig - eps;
      const double lm = loss();
      p->value[i] = orig;
      const double num = (lp - lm) / (2 * eps);
      worst = std::max(worst, std::abs(p->grad[i] - num) / std::max(1e-2, std::abs(num)));
      ++checked;
    }
  }
  return {worst < 1e-3, fmt("%d weights over 5 seeds at step 1e-8, worst relative error %.2e", checked, worst)};
}

Outcome architecture_shape_count() {
  const RotationNet net(ModelConfig::paper());
  const int s = net.config().encoder.input_size;
  std::mt19937_64 rng(1004);
  const Tensor a = random_images(1, s, rng), b = random_images(1, s, rng);
  const auto logits = net.infer(a, b);
  bool shapes = s == 128;
  for (const Tensor& l : logits) shapes = shapes && l.shape().n == 1 && l.size() == 360;
  const std::size_t count = net.parameter_count();
  return {shapes && count >= 17'000'000 && count <= 21'000'000,
          fmt("input %d, logits 3 x %zu, %zu parameters", s, logits[0].size(), count)};
}

Outcome overfit_experiment() {
  SynthDatasetOptions o;
  o.n_panos = 5;
  o.quota = 50;
  o.seed = 1;
  const SynthDataset ds = build_same_pano_dataset(o);
  ModelConfig mc = ModelConfig::toy();
  mc.seed = 3;
  RotationNet net(mc);
  const TrainingSet set = make_training_set(ds.images, ds.manifest.records, mc.encoder.input_size);
  net.set_normalization(dataset_normalization(set));
  const TrainConfig tc = TrainConfig::desk();
  train(tc, net, set);
  const EvalReport r = evaluate(NetPredictor(net), ds.manifest, ds.images);
  const ClassStats& all = r.rows.at("all");
  return {tc.total_iters <= 2000 && tc.batch_size == 10 && all.median < 5.0 && all.pct_under_10 >= 90.0,
          fmt("%d pairs, %lld iterations at batch %d: median %.3f deg, %.1f%% under 10 deg", set.size(),
              static_cast<long long>(tc.total_iters), tc.batch_size, all.median, all.pct_under_10)};
}

Outcome top2_dominance() {
  const DatasetManifest m = label_manifest(1000, 1006);
  const std::vector<PairImages> imgs(m.records.size(), PairImages{Image(8, 8), Image(8, 8)});
  int violations = 0, improved = 0;
  const EvalReport r = top2_report(RandomModel(6), m, imgs);
  for (const auto& p : r.pairs) {
    violations += !p.top2_error || *p.top2_error > p.error;
    improved += p.top2_error && *p.top2_error < p.error;
  }
  const SynthDataset ds = small_rendered_set(16);
  const RotationNet net(tiny_config(6));
  const EvalReport rn = top2_report(NetPredictor(net), ds.manifest, ds.images);
  for (const auto& p : rn.pairs) violations += !p.top2_error || *p.top2_error > p.error;
  return {violations == 0 && r.pairs.size() == 1000,
          fmt("%zu random-logit pairs + %zu network pairs, %d violations, %d strictly improved", r.pairs.size(),
              rn.pairs.size(), violations, improved)};
}

Eigen::Matrix3d jitter(std::mt19937_64& rng, double sigma_deg) {
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::Vector3d axis = Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
  return Eigen::AngleAxisd(testing::rad(sigma_deg * n(rng)), axis).toRotationMatrix();
}

std::vector<BearingMatch> contaminated(const RotationMatrix& r, int n, double inlier_frac, double noise_deg,
                                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<BearingMatch> out;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d d1 = testing::random_forward_bearing(rng);
    if (u(rng) < inlier_frac) {
      out.push_back({d1, (jitter(rng, noise_deg) * (r * d1)).normalized()});
    } else {
      out.push_back({d1, testing::random_forward_bearing(rng)});
    }
  }
  return out;
}

Outcome classical_baseline() {
  std::mt19937_64 rng(1007);
  double two_point = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const RotationMatrix r = random_rotation(rng);
    const auto m = testing::rotation_matches(r, 2, rng);
    two_point = std::max(two_point, geodesic_error(two_point_rotation(m[0], m[1]), r));
  }
  int recovered = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const RotationMatrix r = random_rotation(rng);
    const FitResult f = ransac_rotation(contaminated(r, 100, 0.7, 0.3, rng), {1000, 1.0, std::uint64_t(trial)});
    recovered += f.success && geodesic_error(*f.rotation, r) < 2.0;
  }
  int rule = 0;
  for (int t = 0; t < 300; ++t) {
    const FitResult f = ransac_rotation(contaminated(random_rotation(rng), 2 + t % 30, 0.5, 0.5, rng),
                                        {200, 1.0, std::uint64_t(t)});
    rule += f.success != (f.inlier_count >= kMinInliers && f.rotation.has_value());
  }
  auto nine = testing::rotation_matches(random_rotation(rng), 9, rng);
  rule += ransac_rotation(nine).success;
  return {two_point < 1e-6 && recovered >= 95 && rule == 0,
          fmt("2-point worst %.2e deg, RANSAC %d/100 within 2 deg, %d inlier-rule violations", two_point, recovered,
              rule)};
}

Eigen::Vector2d pano_pixel_oracle(const Eigen::Vector3d& d, int w, int h) {
  const double lon = deg(std::atan2(-d.y(), d.x()));
  const double lat = deg(std::asin(d.z() / d.norm()));
  return {(lon + 180.0) / 360.0 * w - 0.5, (90.0 - lat) / 180.0 * h - 0.5};
}

Outcome rendering_fidelity() {
  std::mt19937_64 rng(1008);
  std::uniform_real_distribution<double> yaw(-180, 180), pitch(-45, 45), uv(0, 255);
  const int w = 1024, h = 512;
  double proj = 0.0;
  for (int t = 0; t < 50; ++t) {
    CameraSpec c;
    c.yaw = yaw(rng);
    c.pitch = pitch(rng);
    const double u = uv(rng), v = uv(rng), f = c.size / 2.0, cc = (c.size - 1) / 2.0;
    const Eigen::Vector3d world = euler_oracle(0, c.pitch, c.yaw).transpose() * Eigen::Vector3d(f, cc - u, cc - v);
    const Eigen::Vector2d want = pano_pixel_oracle(world, w, h), got = crop_to_pano(c, w, h, u, v);
    double dx = std::abs(got.x() - want.x());
    dx = std::min(dx, w - dx);
    proj = std::max({proj, dx, std::abs(got.y() - want.y())});
  }
  const Panorama p = synth_panorama(5, SynthStyle::Room, 1024);
  double equi = 0.0;
  for (double delta : {17.0, -64.5, 133.25, 90.0}) {
    CameraSpec c;
    c.yaw = 12.0;
    c.pitch = -8.0;
    c.size = 128;
    CameraSpec shifted = c;
    shifted.yaw += delta;
    equi = std::max(equi, mean_abs_diff(render_perspective(p, shifted),
                                        render_perspective(rotate_panorama_longitude(p, delta), c)));
  }
  return {proj < 0.5 && equi < 2.0 / 255.0,
          fmt("worst projection offset %.2e px over 50 directions, worst yaw-shift difference %.3f/255", proj,
              equi * 255.0)};
}

DatasetManifest translated_manifest(std::uint64_t seed, double max_dist) {
  const auto panos = synth_translated_panoramas(seed, SynthStyle::Street, 3, 2, 2.0, 256);
  std::vector<View> views;
  for (const Panorama& p : panos) {
    for (const CameraSpec& c : sample_views(p, 6, PitchRange::outdoor(), seed, 90.0, 64)) {
      views.push_back({p.id, c, "", p.position});
    }
  }
  DatasetManifest m;
  m.records = make_pairs_translated(views, max_dist, 30, seed).pairs;
  m.pitch_range = PitchRange::outdoor();
  return m;
}

Outcome protocol_conformance() {
  SynthDatasetOptions o;
  o.n_panos = 3;
  o.views_per_pano = 8;
  o.quota = 40;
  o.pano_width = 256;
  o.crop_size = 32;
  o.seed = 11;
  const DatasetManifest indoor = build_same_pano_dataset(o).manifest;
  o.seed = 111;
  o.split = Split::Test;
  const DatasetManifest indoor_test = build_same_pano_dataset(o).manifest;
  o.seed = 12;
  o.split = Split::Train;
  o.style = SynthStyle::Street;
  const DatasetManifest outdoor = build_same_pano_dataset(o).manifest;
  const DatasetManifest translated = translated_manifest(13, 3.0);

  // Independent field checks.
  int field = 0;
  double max_abs_pitch_in = 0.0, max_abs_pitch_out = 0.0, max_translation = 0.0;
  for (const auto* m : {&indoor, &indoor_test, &outdoor, &translated}) {
    const double lim = m == &outdoor || m == &translated ? 45.0 : 30.0;
    for (const PairSample& s : m->records) {
      for (const CameraSpec* c : {&s.cam1, &s.cam2}) {
        field += std::abs(c->pitch) > lim || c->roll != 0.0;
        (lim == 30.0 ? max_abs_pitch_in : max_abs_pitch_out) =
            std::max(lim == 30.0 ? max_abs_pitch_in : max_abs_pitch_out, std::abs(c->pitch));
      }
      if (m == &translated) max_translation = std::max(max_translation, s.translation_m);
    }
  }
  field += max_translation >= 3.0 || translated.records.empty();

  LintRules in_rules{PitchRange::indoor(), std::nullopt}, out_rules{PitchRange::outdoor(), std::nullopt};
  LintRules tr_rules{PitchRange::outdoor(), 3.0};
  const std::size_t clean = lint_manifests(indoor, &indoor_test, in_rules).size() +
                            lint_manifests(outdoor, nullptr, out_rules).size() +
                            lint_manifests(translated, nullptr, tr_rules).size();

  // Seeded violations must each be flagged.
  int missed = 0;
  DatasetManifest bad = indoor;
  bad.records[0].cam1.pitch = 35.0;
  missed += lint_manifests(bad, nullptr, in_rules).empty();
  bad = indoor;
  bad.records[1].cam2.roll = 1.0;
  missed += lint_manifests(bad, nullptr, in_rules).empty();
  missed += lint_manifests(indoor, &indoor, in_rules).empty();
  missed += lint_manifests(translated_manifest(13, 10.0), nullptr, tr_rules).empty();

  return {field == 0 && clean == 0 && missed == 0,
          fmt("|pitch| max %.1f indoor / %.1f outdoor, translation max %.2f m, %zu lint findings on clean sets, "
              "%d seeded violations missed",
              max_abs_pitch_in, max_abs_pitch_out, max_translation, clean, missed)};
}

Outcome probe_plumbing() {
  const SynthDataset ds = small_rendered_set(21);
  std::vector<Image> crops;
  std::vector<CameraSpec> cams;
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    crops.push_back(ds.images[i].img1);
    cams.push_back(ds.manifest.records[i].cam1);
    crops.push_back(ds.images[i].img2);
    cams.push_back(ds.manifest.records[i].cam2);
  }
  const IdentityProbe id = identity_probe(CameraOracle(cams), crops);
  double id_max = 0.0;
  for (double e : id.errors) id_max = std::max(id_max, e);

  std::map<std::string, const Panorama*> by_id;
  for (const Panorama& p : ds.panos) by_id[p.id] = &p;
  const PanoramaLookup lookup = [&](const std::string& k) -> const Panorama& { return *by_id.at(k); };
  double roll_gap = 0.0;
  const RotationNet net(tiny_config(10));
  const LabelOracle oracle(ds.manifest);
  const NetPredictor network(net);
  for (const Predictor* model : {static_cast<const Predictor*>(&oracle), static_cast<const Predictor*>(&network)}) {
    const EvalReport a = evaluate(*model, ds.manifest, ds.images);
    const EvalReport b = roll_probe(*model, ds.manifest, lookup, 0.0, 5);
    if (a.pairs.size() != b.pairs.size()) return {false, "roll probe pair count differs"};
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
      roll_gap = std::max(roll_gap, std::abs(a.pairs[i].error - b.pairs[i].error));
    }
    for (const char* row : kReportRows) {
      roll_gap = std::max(roll_gap, std::abs(a.rows.at(row).median - b.rows.at(row).median));
    }
  }
  return {id_max == 0.0 && roll_gap < 1e-9,
          fmt("identity probe max %.1e deg over %zu crops, roll 0 vs evaluate max gap %.1e deg", id_max, crops.size(),
              roll_gap)};
}

}  // namespace
}  // namespace relrot

int main(int argc, char** argv) {
  using namespace relrot;
  const std::vector<Criterion> all = {
      {"AC-1", "rotation oracle equivalence", 5, rotation_oracle_equivalence},
      {"AC-2", "correlation volume correctness", 10, correlation_correctness},
      {"AC-3", "gradient check", 120, gradient_check},
      {"AC-4", "architecture shape and count", 60, architecture_shape_count},
      {"AC-5", "overfit experiment", 1800, overfit_experiment},
      {"AC-6", "top-2 dominance", 10, top2_dominance},
      {"AC-7", "classical baseline", 120, classical_baseline},
      {"AC-8", "rendering fidelity", 60, rendering_fidelity},
      {"AC-9", "protocol conformance", 10, protocol_conformance},
      {"AC-10", "probe plumbing", 30, probe_plumbing},
  };
  const std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < c.budget_s;
    failed += !pass;
    std::printf("%-5s %s  %s: %s (%.1f s of %.0f s)\n", c.id.c_str(), pass ? "PASS" : "FAIL", c.title.c_str(),
                o.detail.c_str(), secs, c.budget_s);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
