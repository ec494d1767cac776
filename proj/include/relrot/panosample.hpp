// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "relrot/image.hpp"
#include "relrot/rotgeom.hpp"

namespace relrot {

// ---------------------------------------------------------------------------
// Cameras and panoramas
// ---------------------------------------------------------------------------

/// Pinhole camera looking out of the panorama center. Square output.
struct CameraSpec {
  double yaw = 0.0;    // degrees, positive turns right (towards -y)
  double pitch = 0.0;  // degrees, positive looks up
  double roll = 0.0;   // degrees, about the optical axis
  double fov = 90.0;   // degrees, horizontal = vertical
  int size = 256;      // pixels

  /// Throws invalid_argument unless fov is in (0, 180) and size >= 8.
  void validate() const;
  double focal() const;
};

/// World-to-camera rotation R(roll, pitch, yaw).
RotationMatrix camera_rotation(const CameraSpec& cam);

/// Full-sphere equirectangular image; height is exactly half the width.
struct Panorama {
  Image pixels;
  std::string id;
  std::optional<Eigen::Vector3d> position;  // meters
  std::string dataset_tag;

  void validate() const;
};

/// Unit ray through crop pixel (u, v) in the camera frame. Integer
/// coordinates are pixel centers; (size-1)/2 is the principal point.
Eigen::Vector3d pixel_ray(const CameraSpec& cam, double u, double v);
/// Pinhole projection of a camera-frame direction; empty behind the camera.
std::optional<Eigen::Vector2d> project_to_pixel(const CameraSpec& cam, const Eigen::Vector3d& dir);
/// Continuous panorama pixel coordinate of a world direction.
Eigen::Vector2d direction_to_pano(const Eigen::Vector3d& world_dir, int pano_w, int pano_h);
/// World direction through continuous panorama pixel coordinate (x, y).
Eigen::Vector3d pano_to_direction(double x, double y, int pano_w, int pano_h);
/// The resampling map used by render_perspective: crop pixel -> panorama pixel.
Eigen::Vector2d crop_to_pano(const CameraSpec& cam, int pano_w, int pano_h, double u, double v);

/// Bilinear panorama lookup with horizontal wrap and vertical clamp.
Rgb sample_panorama(const Image& pano, double x, double y);

/// Perspective crop (OpenMP over rows).
Image render_perspective(const Panorama& p, const CameraSpec& cam);
/// Single-threaded reference with the same per-pixel arithmetic.
Image render_perspective_serial(const Panorama& p, const CameraSpec& cam);

/// Panorama q with q(lon) = p(lon + delta), so rendering q at yaw equals
/// rendering p at yaw + delta.
Panorama rotate_panorama_longitude(const Panorama& p, double delta_deg);

// ---------------------------------------------------------------------------
// View and pair sampling
// ---------------------------------------------------------------------------

struct PitchRange {
  double lo = -30.0;
  double hi = 30.0;

  static PitchRange indoor() { return {-30.0, 30.0}; }
  static PitchRange outdoor() { return {-45.0, 45.0}; }
  bool contains(double pitch) const { return pitch >= lo && pitch <= hi; }
};

/// n cameras with yaw ~ U[-180, 180), pitch ~ U[range], zero roll.
std::vector<CameraSpec> sample_views(const Panorama& p, int n, PitchRange range,
                                     std::uint64_t seed, double fov = 90.0, int size = 256);

/// A sampled camera together with the panorama it looks into.
struct View {
  std::string pano_id;
  CameraSpec cam;
  std::string crop_ref;  // relative path of the rendered crop, may be empty
  std::optional<Eigen::Vector3d> position;
};

struct PairSample {
  std::string crop1_ref;
  std::string crop2_ref;
  CameraSpec cam1;
  CameraSpec cam2;
  RelPoseParam gt;
  OverlapClass overlap = OverlapClass::Large;
  std::string pano1_id;
  std::string pano2_id;
  double translation_m = 0.0;

  /// relative_from_params(gt).
  RotationMatrix rotation() const;
};

/// Labels a pair of views: pitches, wrapped yaw difference, overlap class and
/// the distance between their panorama centers.
PairSample make_pair_sample(const View& a, const View& b);

struct PairList {
  std::vector<PairSample> pairs;
  std::optional<std::string> warning;
};

/// Pairs of views sharing a panorama, drawn without repetition.
PairList make_pairs_same_pano(std::span<const View> views, std::size_t quota, std::uint64_t seed);
/// Pairs across distinct panoramas whose centers are closer than max_dist.
PairList make_pairs_translated(std::span<const View> views, double max_dist, std::size_t quota,
                               std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic panoramas
// ---------------------------------------------------------------------------

enum class SynthStyle { Room, Street };

std::string_view to_string(SynthStyle s);
SynthStyle synth_style_from_string(std::string_view s);

/// Procedural panorama rendered from the scene origin.
Panorama synth_panorama(std::uint64_t seed, SynthStyle style, int width = 1024);
/// The same scene rendered from an arbitrary position (meters, scene frame).
Panorama synth_panorama_at(std::uint64_t seed, SynthStyle style, const Eigen::Vector3d& position,
                           int width = 1024);
/// One scene captured from an nx x ny grid of positions spaced `spacing` apart.
std::vector<Panorama> synth_translated_panoramas(std::uint64_t seed, SynthStyle style, int nx,
                                                 int ny, double spacing = 2.0, int width = 1024);

/// Hue of each room wall in the order +x, -y, -x, +y (longitudes 0, 90, 180, -90).
std::vector<double> room_wall_hues(std::uint64_t seed);

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

enum class Split { Train, Test };

inline constexpr int kManifestVersion = 1;

struct DatasetManifest {
  std::vector<PairSample> records;
  Split split = Split::Train;
  std::uint64_t seed = 0;
  double fov = 90.0;
  int crop_size = 256;
  int pano_width = 1024;
  PitchRange pitch_range;
  std::string dataset_tag;
};

void to_json(nlohmann::json& j, const CameraSpec& c);
void from_json(const nlohmann::json& j, CameraSpec& c);
void to_json(nlohmann::json& j, const PairSample& s);
void from_json(const nlohmann::json& j, PairSample& s);
void to_json(nlohmann::json& j, const View& v);
void from_json(const nlohmann::json& j, View& v);

/// JSON-Lines: a header object followed by one PairSample per line.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Writes `img` as PNG under `root/crops/` named by the SHA-256 of the encoded
/// bytes; returns the path relative to `root`.
std::string store_crop(const std::filesystem::path& root, const Image& img);

struct LintRules {
  PitchRange pitch_range;
  std::optional<double> max_translation;  // strict upper bound, meters
};

/// Protocol checks over one or two manifests; returns human-readable violations.
std::vector<std::string> lint_manifests(const DatasetManifest& train,
                                        const DatasetManifest* test, const LintRules& rules);

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct PairImages {
  Image img1;
  Image img2;
};

/// Reads both crops of every record; refs are relative to `root`.
std::vector<PairImages> load_pair_images(const DatasetManifest& m, const std::filesystem::path& root);

struct SynthDatasetOptions {
  int n_panos = 5;
  SynthStyle style = SynthStyle::Room;
  int views_per_pano = 20;
  std::size_t quota = 50;
  int pano_width = 1024;
  int crop_size = 256;
  double fov = 90.0;
  std::uint64_t seed = 0;
  std::optional<PitchRange> pitch_range;  // defaults to the style's range
  Split split = Split::Train;
};

struct SynthDataset {
  std::vector<Panorama> panos;
  DatasetManifest manifest;
  std::vector<PairImages> images;  // parallel to manifest.records
};

/// Synthesizes panoramas, samples views on each and pairs views that share a
/// panorama. Crops are stored under `crop_root` when given (refs filled in).
SynthDataset build_same_pano_dataset(const SynthDatasetOptions& opt,
                                     const std::optional<std::filesystem::path>& crop_root = {});

}  // namespace relrot
