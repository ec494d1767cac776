// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include "relrot/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <stdexcept>

#include "relrot/common.hpp"

namespace relrot {

Prediction NetPredictor::predict(const PairInput& in) const {
  return net_.predict(in.img1, in.img2, decoding_);
}

ClassStats summarize(std::span<const double> errors) {
  ClassStats s;
  s.count = s.attempted = errors.size();
  if (errors.empty()) return s;
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  std::size_t under = 0;
  for (double e : sorted) {
    sum += e;
    under += e < 10.0;
  }
  s.mean = sum / double(sorted.size());
  s.median = sorted[(sorted.size() - 1) / 2];
  s.pct_under_10 = 100.0 * double(under) / double(sorted.size());
  return s;
}

std::vector<double> EvalReport::errors() const {
  std::vector<double> out;
  for (const auto& p : pairs)
    if (p.success) out.push_back(p.error);
  return out;
}

void to_json(nlohmann::json& j, const ClassStats& s) {
  j = {{"count", s.count},
       {"attempted", s.attempted},
       {"avg", s.mean},
       {"med", s.median},
       {"under10_pct", s.pct_under_10}};
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  j["rows"] = r.rows;
  if (r.top2_rows) j["top2_rows"] = *r.top2_rows;
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.pairs) {
    nlohmann::json e = {{"index", p.index},
                        {"overlap", to_string(p.overlap)},
                        {"success", p.success},
                        {"error", p.success ? nlohmann::json(p.error) : nlohmann::json(nullptr)}};
    if (p.top2_error) e["top2_error"] = *p.top2_error;
    pairs.push_back(std::move(e));
  }
  j["pairs"] = std::move(pairs);
}

void write_report(const std::filesystem::path& path, const EvalReport& r) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << nlohmann::json(r).dump(2) << '\n';
}

namespace {

struct Item {
  const Image* img1;
  const Image* img2;
  RotationMatrix gt;
  OverlapClass overlap;
};

std::map<std::string, ClassStats> group_stats(const std::vector<PairRecord>& pairs, bool top2) {
  std::map<std::string, std::vector<double>> by_class;
  std::map<std::string, std::size_t> attempted;
  for (const char* row : kReportRows) {
    by_class[row];
    attempted[row] = 0;
  }
  for (const auto& p : pairs) {
    const std::string cls(to_string(p.overlap));
    ++attempted[cls];
    ++attempted["all"];
    if (!p.success) continue;
    const double e = top2 ? *p.top2_error : p.error;
    by_class[cls].push_back(e);
    by_class["all"].push_back(e);
  }
  std::map<std::string, ClassStats> out;
  for (const char* row : kReportRows) {
    out[row] = summarize(by_class[row]);
    out[row].attempted = attempted[row];
  }
  return out;
}

std::vector<Item> manifest_items(const DatasetManifest& m, std::span<const PairImages> images) {
  if (m.records.empty()) throw std::invalid_argument("evaluate: empty manifest");
  if (images.size() != m.records.size()) {
    throw std::invalid_argument("evaluate: image list does not match the manifest");
  }
  std::vector<Item> items;
  items.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& r = m.records[i];
    items.push_back({&images[i].img1, &images[i].img2, r.rotation(), r.overlap});
  }
  return items;
}

EvalReport score_predictions(const Predictor& model, const std::vector<Item>& items, bool top2) {
  EvalReport rep;
  rep.pairs.resize(items.size());
  const auto n = static_cast<std::int64_t>(items.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const Item& it = items[std::size_t(i)];
    const Prediction pred = model.predict({*it.img1, *it.img2, std::size_t(i)});
    PairRecord& rec = rep.pairs[std::size_t(i)];
    rec.index = std::size_t(i);
    rec.overlap = it.overlap;
    rec.error = geodesic_error(pred.rotation, it.gt);
    if (top2) {
      rec.top2_error = std::min(rec.error, geodesic_error(second_choice_rotation(pred), it.gt));
    }
  }
  rep.rows = group_stats(rep.pairs, false);
  if (top2) rep.top2_rows = group_stats(rep.pairs, true);
  return rep;
}

}  // namespace

RotationMatrix second_choice_rotation(const Prediction& pred) {
  std::array<double, 3> a;
  for (int i = 0; i < 3; ++i) a[i] = top_k_angles(pred.distributions[i], 2)[1].angle;
  return rotation_from_angles(a, pred.parameterization);
}

EvalReport evaluate(const Predictor& model, const DatasetManifest& m,
                    std::span<const PairImages> images) {
  return score_predictions(model, manifest_items(m, images), false);
}

EvalReport top2_report(const Predictor& model, const DatasetManifest& m,
                       std::span<const PairImages> images) {
  return score_predictions(model, manifest_items(m, images), true);
}

EvalReport evaluate_estimator(const RotationEstimator& est, const DatasetManifest& m,
                              std::span<const PairImages> images) {
  const auto items = manifest_items(m, images);
  EvalReport rep;
  rep.pairs.resize(items.size());
  const auto n = static_cast<std::int64_t>(items.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const Item& it = items[std::size_t(i)];
    const Estimate e = est.estimate({*it.img1, *it.img2, std::size_t(i)});
    PairRecord& rec = rep.pairs[std::size_t(i)];
    rec.index = std::size_t(i);
    rec.overlap = it.overlap;
    rec.success = e.success && e.rotation.has_value();
    if (rec.success) rec.error = geodesic_error(*e.rotation, it.gt);
  }
  rep.rows = group_stats(rep.pairs, false);
  return rep;
}

// ---------------------------------------------------------------------------

OcclusionMap occlusion_heatmap(const Predictor& model, const Image& img1, const Image& img2,
                               const RotationMatrix& gt, const Rgb& fill, int window, int stride,
                               std::size_t index) {
  if (stride <= 0) throw std::invalid_argument("occlusion_heatmap: stride must be positive");
  if (window <= 0) throw std::invalid_argument("occlusion_heatmap: window must be positive");
  if (img1.width() != img2.width() || img1.height() != img2.height()) {
    throw std::invalid_argument("occlusion_heatmap: images differ in size");
  }
  if (window > img1.width() || window > img1.height()) {
    throw std::invalid_argument("occlusion_heatmap: window exceeds the image");
  }
  OcclusionMap map;
  map.window = window;
  map.stride = stride;
  map.grid_w = (img1.width() - window) / stride + 1;
  map.grid_h = (img1.height() - window) / stride + 1;
  map.baseline_error = geodesic_error(model.predict({img1, img2, index}).rotation, gt);

  const int cells = map.grid_w * map.grid_h;
  for (int image = 0; image < 2; ++image) {
    map.errors[image].assign(std::size_t(cells), 0.0);
#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < cells; ++c) {
      const int gx = c % map.grid_w, gy = c / map.grid_w;
      Image occluded = image == 0 ? img1 : img2;
      fill_rect(occluded, gx * stride, gy * stride, window, window, fill);
      const Prediction p = image == 0 ? model.predict({occluded, img2, index})
                                      : model.predict({img1, occluded, index});
      map.errors[image][std::size_t(c)] = geodesic_error(p.rotation, gt);
    }
  }
  return map;
}

void write_occlusion_csv(const std::filesystem::path& path, const OcclusionMap& m) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "image,gx,gy,x0,y0,window,error_deg\n";
  f << std::setprecision(10);
  for (int image = 0; image < 2; ++image)
    for (int gy = 0; gy < m.grid_h; ++gy)
      for (int gx = 0; gx < m.grid_w; ++gx) {
        f << image << ',' << gx << ',' << gy << ',' << gx * m.stride << ',' << gy * m.stride << ','
          << m.window << ',' << m.at(image, gx, gy) << '\n';
      }
}

namespace {

Rgb heat_color(double error_deg) {
  const double t = std::clamp(error_deg / 180.0, 0.0, 1.0);
  return {float(std::clamp(3 * t, 0.0, 1.0)), float(std::clamp(3 * t - 1, 0.0, 1.0)),
          float(std::clamp(3 * t - 2, 0.0, 1.0))};
}

}  // namespace

void write_occlusion_png(const std::filesystem::path& path, const OcclusionMap& m, int image,
                         int cell_px) {
  if (image < 0 || image > 1) throw std::invalid_argument("write_occlusion_png: image must be 0 or 1");
  Image out(m.grid_w * cell_px, m.grid_h * cell_px);
  for (int gy = 0; gy < m.grid_h; ++gy)
    for (int gx = 0; gx < m.grid_w; ++gx) {
      fill_rect(out, gx * cell_px, gy * cell_px, cell_px, cell_px, heat_color(m.at(image, gx, gy)));
    }
  write_png(path, out);
}

// ---------------------------------------------------------------------------

std::vector<std::pair<CameraSpec, CameraSpec>> roll_probe_cameras(const DatasetManifest& m,
                                                                  double max_roll,
                                                                  std::uint64_t seed) {
  if (!(max_roll >= 0)) throw std::invalid_argument("roll_probe: max_roll must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> roll(-max_roll, max_roll);
  std::vector<std::pair<CameraSpec, CameraSpec>> out;
  for (const auto& r : m.records) {
    CameraSpec a = r.cam1, b = r.cam2;
    if (max_roll > 0) {
      a.roll = roll(rng);
      b.roll = roll(rng);
    }
    out.emplace_back(a, b);
  }
  return out;
}

EvalReport roll_probe(const Predictor& model, const DatasetManifest& m, const PanoramaLookup& panos,
                      double max_roll, std::uint64_t seed) {
  if (m.records.empty()) throw std::invalid_argument("roll_probe: empty manifest");
  const auto cams = roll_probe_cameras(m, max_roll, seed);
  std::vector<PairImages> images;
  std::vector<Item> items;
  images.reserve(cams.size());
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const auto& r = m.records[i];
    images.push_back({render_perspective(panos(r.pano1_id), cams[i].first),
                      render_perspective(panos(r.pano2_id), cams[i].second)});
  }
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const RotationMatrix gt =
        camera_rotation(cams[i].second) * camera_rotation(cams[i].first).transpose();
    items.push_back({&images[i].img1, &images[i].img2, gt, m.records[i].overlap});
  }
  return score_predictions(model, items, false);
}

IdentityProbe identity_probe(const Predictor& model, std::span<const Image> images) {
  IdentityProbe p;
  p.errors.resize(images.size());
  p.pitch_gaps.resize(images.size());
  const auto n = static_cast<std::int64_t>(images.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const Image& img = images[std::size_t(i)];
    const Prediction pred = model.predict({img, img, std::size_t(i)});
    p.errors[std::size_t(i)] = rotation_angle(pred.rotation);
    p.pitch_gaps[std::size_t(i)] = std::abs(wrap_degrees(pred.decoded[0] - pred.decoded[1]));
  }
  if (!images.empty()) {
    const ClassStats s = summarize(p.errors);
    p.mean_error = s.mean;
    p.median_error = s.median;
    double gap = 0.0;
    for (double g : p.pitch_gaps) gap += g;
    p.mean_pitch_gap = gap / double(images.size());
  }
  return p;
}

void to_json(nlohmann::json& j, const IdentityProbe& p) {
  j = {{"mean_error", p.mean_error},
       {"median_error", p.median_error},
       {"mean_pitch_gap", p.mean_pitch_gap},
       {"errors", p.errors},
       {"pitch_gaps", p.pitch_gaps}};
}

// ---------------------------------------------------------------------------

ErrorStats export_stats(std::span<const double> errors) {
  if (errors.empty()) throw std::invalid_argument("export_stats: no errors");
  ErrorStats s;
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  for (double e : sorted) {
    if (!(e >= 0.0 && e <= 180.0)) throw std::invalid_argument("export_stats: error outside [0, 180]");
    s.histogram[std::min<std::size_t>(std::size_t(e / 10.0), 17)]++;
  }
  for (int k = 0; k <= 180; ++k) {
    const auto upto = std::upper_bound(sorted.begin(), sorted.end(), double(k)) - sorted.begin();
    s.cdf[std::size_t(k)] = double(upto) / double(sorted.size());
  }
  return s;
}

void write_histogram_csv(const std::filesystem::path& path, const ErrorStats& s) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  std::size_t total = 0;
  for (auto c : s.histogram) total += c;
  f << "bin_lo,bin_hi,count,fraction\n" << std::setprecision(10);
  for (std::size_t i = 0; i < s.histogram.size(); ++i) {
    f << i * 10 << ',' << (i + 1) * 10 << ',' << s.histogram[i] << ','
      << double(s.histogram[i]) / double(total) << '\n';
  }
}

void write_cdf_csv(const std::filesystem::path& path, const ErrorStats& s) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "error_deg,fraction\n" << std::setprecision(10);
  for (std::size_t k = 0; k < s.cdf.size(); ++k) f << k << ',' << s.cdf[k] << '\n';
}

void draw_view_outline(Image& pano, const CameraSpec& cam, const Rgb& color, int thickness) {
  const int w = pano.width(), h = pano.height();
  const double last = cam.size - 1;
  auto plot = [&](double u, double v) {
    const Eigen::Vector2d p = crop_to_pano(cam, w, h, u, v);
    const int cx = int(std::lround(p.x())), cy = int(std::lround(p.y()));
    for (int dy = -thickness / 2; dy <= thickness / 2; ++dy)
      for (int dx = -thickness / 2; dx <= thickness / 2; ++dx) {
        const int y = cy + dy;
        if (y < 0 || y >= h) continue;
        pano.set_pixel(((cx + dx) % w + w) % w, y, color);
      }
  };
  const int steps = 4 * cam.size;
  for (int i = 0; i <= steps; ++i) {
    const double t = last * i / steps;
    plot(t, 0.0);
    plot(t, last);
    plot(0.0, t);
    plot(last, t);
  }
}

}  // namespace relrot
