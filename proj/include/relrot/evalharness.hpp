// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "relrot/netmodel.hpp"
#include "relrot/panosample.hpp"

namespace relrot {

/// One pair handed to a model. `index` is the position in the evaluated list,
/// so test doubles can look up their own answers.
struct PairInput {
  const Image& img1;
  const Image& img2;
  std::size_t index = 0;
};

/// Anything producing three per-head angle distributions. Implementations
/// must be callable concurrently.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual Prediction predict(const PairInput& in) const = 0;
};

/// Adapter over a trained network; images are resized to the network input.
class NetPredictor : public Predictor {
 public:
  explicit NetPredictor(const RotationNet& net, Decoding d = Decoding::Argmax)
      : net_(net), decoding_(d) {}
  Prediction predict(const PairInput& in) const override;

 private:
  const RotationNet& net_;
  Decoding decoding_;
};

struct Estimate {
  std::optional<RotationMatrix> rotation;
  bool success = false;
  int inliers = 0;
};

/// Direct rotation estimators (classical pipelines, regression heads) that may
/// fail on a pair.
class RotationEstimator {
 public:
  virtual ~RotationEstimator() = default;
  virtual Estimate estimate(const PairInput& in) const = 0;
};

struct ClassStats {
  std::size_t count = 0;      // pairs contributing to the statistics
  std::size_t attempted = 0;  // pairs in the class, including failures
  double mean = 0.0;          // degrees
  double median = 0.0;        // degrees, lower-middle element for even counts
  double pct_under_10 = 0.0;  // percent
};

/// Mean, median and share under 10 degrees of a set of errors.
ClassStats summarize(std::span<const double> errors);

struct PairRecord {
  std::size_t index = 0;
  OverlapClass overlap = OverlapClass::Large;
  bool success = true;
  double error = 0.0;
  std::optional<double> top2_error;
};

inline constexpr std::array<const char*, 4> kReportRows = {"large", "small", "none", "all"};

struct EvalReport {
  std::map<std::string, ClassStats> rows;  // keys of kReportRows
  std::optional<std::map<std::string, ClassStats>> top2_rows;
  std::vector<PairRecord> pairs;

  std::vector<double> errors() const;
};

void to_json(nlohmann::json& j, const ClassStats& s);
void to_json(nlohmann::json& j, const EvalReport& r);
void write_report(const std::filesystem::path& path, const EvalReport& r);

/// Geodesic error of each pair's decoded rotation against its label, grouped by
/// the stored overlap class. `images` is parallel to `m.records`.
EvalReport evaluate(const Predictor& model, const DatasetManifest& m,
                    std::span<const PairImages> images);

/// As evaluate, plus the smaller of the errors of the joint first-argmax and
/// joint second-argmax decodings.
EvalReport top2_report(const Predictor& model, const DatasetManifest& m,
                       std::span<const PairImages> images);

/// Rotation decoded from each head's second most probable bin.
RotationMatrix second_choice_rotation(const Prediction& pred);

/// Statistics over successful pairs only; failures are kept in `pairs`.
EvalReport evaluate_estimator(const RotationEstimator& est, const DatasetManifest& m,
                              std::span<const PairImages> images);

struct OcclusionMap {
  int window = 32;
  int stride = 16;
  int grid_w = 0;
  int grid_h = 0;
  double baseline_error = 0.0;
  std::array<std::vector<double>, 2> errors;  // row-major grid per image

  double at(int image, int gx, int gy) const { return errors[image][std::size_t(gy) * grid_w + gx]; }
};

/// Slides a window filled with `fill` over each image in turn (the other image
/// untouched) and records the geodesic error against `gt`.
OcclusionMap occlusion_heatmap(const Predictor& model, const Image& img1, const Image& img2,
                               const RotationMatrix& gt, const Rgb& fill, int window = 32,
                               int stride = 16, std::size_t index = 0);

void write_occlusion_csv(const std::filesystem::path& path, const OcclusionMap& m);
/// Heatmap per image (0 deg black to 180 deg white through red/yellow), each
/// cell drawn `cell_px` pixels wide.
void write_occlusion_png(const std::filesystem::path& path, const OcclusionMap& m, int image,
                         int cell_px = 16);

using PanoramaLookup = std::function<const Panorama&(const std::string& id)>;

/// Re-renders every crop with roll ~ U[-max_roll, max_roll] and scores the
/// model against the rotation between the rolled cameras.
EvalReport roll_probe(const Predictor& model, const DatasetManifest& m, const PanoramaLookup& panos,
                      double max_roll, std::uint64_t seed);

/// The rolled camera pairs drawn by roll_probe for a given seed.
std::vector<std::pair<CameraSpec, CameraSpec>> roll_probe_cameras(const DatasetManifest& m,
                                                                  double max_roll,
                                                                  std::uint64_t seed);

struct IdentityProbe {
  std::vector<double> errors;       // degrees from the identity
  std::vector<double> pitch_gaps;   // |beta1 - beta2| of the decoded heads
  double mean_error = 0.0;
  double median_error = 0.0;
  double mean_pitch_gap = 0.0;
};

/// Feeds each image as both inputs.
IdentityProbe identity_probe(const Predictor& model, std::span<const Image> images);
void to_json(nlohmann::json& j, const IdentityProbe& p);

struct ErrorStats {
  std::array<std::size_t, 18> histogram{};  // 10-degree bins, the last closed at 180
  std::array<double, 181> cdf{};            // fraction <= k degrees
};

ErrorStats export_stats(std::span<const double> errors);
void write_histogram_csv(const std::filesystem::path& path, const ErrorStats& s);
void write_cdf_csv(const std::filesystem::path& path, const ErrorStats& s);

/// Draws the border of a camera's field of view onto an equirectangular image.
void draw_view_outline(Image& pano, const CameraSpec& cam, const Rgb& color, int thickness = 2);

}  // namespace relrot
