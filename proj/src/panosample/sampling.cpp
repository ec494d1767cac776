// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "relrot/common.hpp"
#include "relrot/panosample.hpp"

namespace relrot {

std::vector<CameraSpec> sample_views(const Panorama& p, int n, PitchRange range,
                                     std::uint64_t seed, double fov, int size) {
  p.validate();
  if (range.lo < -90.0 || range.hi > 90.0 || range.lo > range.hi) {
    throw std::invalid_argument("sample_views: pitch range must lie within [-90, 90]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> yaw_dist(-180.0, 180.0);
  std::uniform_real_distribution<double> pitch_dist(range.lo, range.hi);
  std::vector<CameraSpec> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) {
    CameraSpec cam;
    cam.yaw = wrap_degrees(yaw_dist(rng));
    cam.pitch = std::clamp(pitch_dist(rng), range.lo, range.hi);
    cam.roll = 0.0;
    cam.fov = fov;
    cam.size = size;
    cam.validate();
    out.push_back(cam);
  }
  return out;
}

RotationMatrix PairSample::rotation() const { return relative_from_params(gt); }

PairSample make_pair_sample(const View& a, const View& b) {
  PairSample s;
  s.crop1_ref = a.crop_ref;
  s.crop2_ref = b.crop_ref;
  s.cam1 = a.cam;
  s.cam2 = b.cam;
  s.gt = {a.cam.pitch, b.cam.pitch, wrap_degrees(b.cam.yaw - a.cam.yaw)};
  s.overlap = overlap_class(relative_from_params(s.gt));
  s.pano1_id = a.pano_id;
  s.pano2_id = b.pano_id;
  if (a.pano_id != b.pano_id) {
    if (!a.position || !b.position) {
      throw std::invalid_argument("make_pair_sample: cross-panorama pair without positions");
    }
    s.translation_m = (*a.position - *b.position).norm();
    if (s.translation_m <= 0.0) {
      throw std::invalid_argument("make_pair_sample: distinct panoramas share a position");
    }
  }
  return s;
}

namespace {

using IndexPair = std::pair<std::size_t, std::size_t>;

PairList draw_pairs(std::span<const View> views, std::vector<IndexPair> candidates,
                    std::size_t quota, std::uint64_t seed, const char* what) {
  PairList out;
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  if (quota > candidates.size()) {
    std::ostringstream msg;
    msg << what << ": quota " << quota << " exceeds " << candidates.size()
        << " available pairs; truncated";
    out.warning = msg.str();
    quota = candidates.size();
  }
  candidates.resize(quota);
  out.pairs.reserve(quota);
  for (const auto& [i, j] : candidates) out.pairs.push_back(make_pair_sample(views[i], views[j]));
  return out;
}

}  // namespace

PairList make_pairs_same_pano(std::span<const View> views, std::size_t quota, std::uint64_t seed) {
  if (views.size() < 2) throw std::invalid_argument("make_pairs_same_pano: need at least 2 views");
  std::vector<IndexPair> candidates;
  for (std::size_t i = 0; i < views.size(); ++i)
    for (std::size_t j = i + 1; j < views.size(); ++j)
      if (views[i].pano_id == views[j].pano_id) candidates.emplace_back(i, j);
  return draw_pairs(views, std::move(candidates), quota, seed, "make_pairs_same_pano");
}

PairList make_pairs_translated(std::span<const View> views, double max_dist, std::size_t quota,
                               std::uint64_t seed) {
  for (const View& v : views) {
    if (!v.position) throw std::invalid_argument("make_pairs_translated: view without position");
  }
  std::vector<IndexPair> candidates;
  for (std::size_t i = 0; i < views.size(); ++i) {
    for (std::size_t j = i + 1; j < views.size(); ++j) {
      if (views[i].pano_id == views[j].pano_id) continue;
      if ((*views[i].position - *views[j].position).norm() < max_dist) candidates.emplace_back(i, j);
    }
  }
  if (candidates.empty()) {
    PairList out;
    out.warning = "make_pairs_translated: no panorama pair closer than max_dist";
    return out;
  }
  return draw_pairs(views, std::move(candidates), quota, seed, "make_pairs_translated");
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const CameraSpec& c) {
  j = nlohmann::json{{"yaw", c.yaw}, {"pitch", c.pitch}, {"roll", c.roll}, {"fov", c.fov},
                     {"size", c.size}};
}

void from_json(const nlohmann::json& j, CameraSpec& c) {
  c.yaw = j.at("yaw").get<double>();
  c.pitch = j.at("pitch").get<double>();
  c.roll = j.at("roll").get<double>();
  c.fov = j.at("fov").get<double>();
  c.size = j.at("size").get<int>();
}

void to_json(nlohmann::json& j, const PairSample& s) {
  j = nlohmann::json{{"crop1_ref", s.crop1_ref},
                     {"crop2_ref", s.crop2_ref},
                     {"cam1", s.cam1},
                     {"cam2", s.cam2},
                     {"gt", s.gt},
                     {"overlap", to_string(s.overlap)},
                     {"pano1_id", s.pano1_id},
                     {"pano2_id", s.pano2_id},
                     {"translation_m", s.translation_m}};
}

void from_json(const nlohmann::json& j, PairSample& s) {
  s.crop1_ref = j.at("crop1_ref").get<std::string>();
  s.crop2_ref = j.at("crop2_ref").get<std::string>();
  s.cam1 = j.at("cam1").get<CameraSpec>();
  s.cam2 = j.at("cam2").get<CameraSpec>();
  s.gt = j.at("gt").get<RelPoseParam>();
  s.overlap = overlap_class_from_string(j.at("overlap").get<std::string>());
  s.pano1_id = j.at("pano1_id").get<std::string>();
  s.pano2_id = j.at("pano2_id").get<std::string>();
  s.translation_m = j.at("translation_m").get<double>();
}

void to_json(nlohmann::json& j, const View& v) {
  j = nlohmann::json{{"pano_id", v.pano_id}, {"cam", v.cam}, {"crop_ref", v.crop_ref}};
  if (v.position) j["position"] = {v.position->x(), v.position->y(), v.position->z()};
}

void from_json(const nlohmann::json& j, View& v) {
  v.pano_id = j.at("pano_id").get<std::string>();
  v.cam = j.at("cam").get<CameraSpec>();
  v.crop_ref = j.value("crop_ref", std::string());
  if (j.contains("position")) {
    const auto p = j.at("position").get<std::array<double, 3>>();
    v.position = Eigen::Vector3d(p[0], p[1], p[2]);
  } else {
    v.position.reset();
  }
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_manifest: cannot open " + path.string());
  nlohmann::json header{{"schema", "relrot.manifest"},
                        {"version", kManifestVersion},
                        {"split", m.split == Split::Train ? "train" : "test"},
                        {"seed", m.seed},
                        {"fov", m.fov},
                        {"crop_size", m.crop_size},
                        {"pano_width", m.pano_width},
                        {"pitch_range", {m.pitch_range.lo, m.pitch_range.hi}},
                        {"dataset_tag", m.dataset_tag},
                        {"count", m.records.size()}};
  f << header.dump() << '\n';
  for (const PairSample& s : m.records) f << nlohmann::json(s).dump() << '\n';
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_manifest: cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("read_manifest: empty file " + path.string());
  const auto header = nlohmann::json::parse(line);
  if (header.value("schema", "") != "relrot.manifest") {
    throw std::runtime_error("read_manifest: not a manifest: " + path.string());
  }
  if (header.at("version").get<int>() != kManifestVersion) {
    throw VersionMismatch("read_manifest: unsupported manifest version in " + path.string());
  }
  DatasetManifest m;
  m.split = header.at("split").get<std::string>() == "test" ? Split::Test : Split::Train;
  m.seed = header.at("seed").get<std::uint64_t>();
  m.fov = header.at("fov").get<double>();
  m.crop_size = header.at("crop_size").get<int>();
  m.pano_width = header.value("pano_width", 1024);
  const auto pr = header.at("pitch_range").get<std::array<double, 2>>();
  m.pitch_range = {pr[0], pr[1]};
  m.dataset_tag = header.value("dataset_tag", "");
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    m.records.push_back(nlohmann::json::parse(line).get<PairSample>());
  }
  return m;
}

std::string store_crop(const std::filesystem::path& root, const Image& img) {
  const auto bytes = encode_png(img);
  const std::string name = "crops/" + sha256_hex(bytes) + ".png";
  const auto full = root / name;
  if (!std::filesystem::exists(full)) {
    std::filesystem::create_directories(full.parent_path());
    std::ofstream f(full, std::ios::binary);
    if (!f) throw std::runtime_error("store_crop: cannot write " + full.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  return name;
}

std::vector<std::string> lint_manifests(const DatasetManifest& train, const DatasetManifest* test,
                                        const LintRules& rules) {
  std::vector<std::string> issues;
  auto check = [&](const DatasetManifest& m, const char* name) {
    for (std::size_t i = 0; i < m.records.size(); ++i) {
      const PairSample& s = m.records[i];
      const std::string where = std::string(name) + "[" + std::to_string(i) + "]: ";
      for (const CameraSpec* cam : {&s.cam1, &s.cam2}) {
        if (!rules.pitch_range.contains(cam->pitch)) {
          issues.push_back(where + "pitch " + std::to_string(cam->pitch) + " outside range");
        }
        if (cam->roll != 0.0) issues.push_back(where + "non-zero roll");
      }
      const bool same = s.pano1_id == s.pano2_id;
      if (same != (s.translation_m == 0.0)) {
        issues.push_back(where + "translation must be zero exactly for same-panorama pairs");
      }
      if (!same && rules.max_translation && !(s.translation_m < *rules.max_translation)) {
        issues.push_back(where + "translation " + std::to_string(s.translation_m) +
                         " m not below threshold");
      }
      const RelPoseParam expect{s.cam1.pitch, s.cam2.pitch, wrap_degrees(s.cam2.yaw - s.cam1.yaw)};
      if (std::abs(expect.beta1 - s.gt.beta1) > 1e-9 || std::abs(expect.beta2 - s.gt.beta2) > 1e-9 ||
          std::abs(wrap_degrees(expect.delta_gamma - s.gt.delta_gamma)) > 1e-9) {
        issues.push_back(where + "ground truth inconsistent with cameras");
      }
      if (overlap_class(s.rotation()) != s.overlap) issues.push_back(where + "wrong overlap class");
    }
  };
  check(train, "train");
  if (test) {
    check(*test, "test");
    std::set<std::string> train_ids;
    for (const PairSample& s : train.records) {
      train_ids.insert(s.pano1_id);
      train_ids.insert(s.pano2_id);
    }
    std::set<std::string> shared;
    for (const PairSample& s : test->records) {
      for (const std::string* id : {&s.pano1_id, &s.pano2_id})
        if (train_ids.count(*id)) shared.insert(*id);
    }
    for (const std::string& id : shared) issues.push_back("panorama " + id + " in both splits");
  }
  return issues;
}

}  // namespace relrot
