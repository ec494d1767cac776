// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <map>
#include <stdexcept>
#include <tuple>

#include "relrot/panosample.hpp"

namespace relrot {

std::vector<PairImages> load_pair_images(const DatasetManifest& m, const std::filesystem::path& root) {
  std::map<std::string, Image> cache;
  auto load = [&](const std::string& ref) -> const Image& {
    if (ref.empty()) throw std::runtime_error("load_pair_images: record without crop reference");
    auto it = cache.find(ref);
    if (it == cache.end()) it = cache.emplace(ref, read_png(root / ref)).first;
    return it->second;
  };
  std::vector<PairImages> out;
  out.reserve(m.records.size());
  for (const auto& r : m.records) out.push_back({load(r.crop1_ref), load(r.crop2_ref)});
  return out;
}

SynthDataset build_same_pano_dataset(const SynthDatasetOptions& opt,
                                     const std::optional<std::filesystem::path>& crop_root) {
  if (opt.n_panos <= 0 || opt.views_per_pano < 2) {
    throw std::invalid_argument("build_same_pano_dataset: need at least one panorama and two views");
  }
  const PitchRange range = opt.pitch_range.value_or(
      opt.style == SynthStyle::Room ? PitchRange::indoor() : PitchRange::outdoor());

  SynthDataset ds;
  std::vector<View> views;
  using Key = std::tuple<std::string, double, double>;
  std::map<Key, Image> crops;
  for (int i = 0; i < opt.n_panos; ++i) {
    Panorama p = synth_panorama(opt.seed + std::uint64_t(i), opt.style, opt.pano_width);
    const auto cams = sample_views(p, opt.views_per_pano, range, opt.seed * 1000003 + std::uint64_t(i),
                                   opt.fov, opt.crop_size);
    for (const auto& cam : cams) {
      Image crop = render_perspective(p, cam);
      View v{p.id, cam, {}, p.position};
      if (crop_root) v.crop_ref = store_crop(*crop_root, crop);
      crops.emplace(Key{p.id, cam.yaw, cam.pitch}, std::move(crop));
      views.push_back(std::move(v));
    }
    ds.panos.push_back(std::move(p));
  }

  PairList pairs = make_pairs_same_pano(views, opt.quota, opt.seed ^ 0x9e3779b97f4a7c15ULL);
  if (pairs.warning) throw std::invalid_argument(*pairs.warning);

  auto& m = ds.manifest;
  m.records = std::move(pairs.pairs);
  m.split = opt.split;
  m.seed = opt.seed;
  m.fov = opt.fov;
  m.crop_size = opt.crop_size;
  m.pano_width = opt.pano_width;
  m.pitch_range = range;
  m.dataset_tag = "synth-" + std::string(to_string(opt.style));
  for (const auto& r : m.records) {
    ds.images.push_back({crops.at(Key{r.pano1_id, r.cam1.yaw, r.cam1.pitch}),
                         crops.at(Key{r.pano2_id, r.cam2.yaw, r.cam2.pitch})});
  }
  return ds;
}

}  // namespace relrot
