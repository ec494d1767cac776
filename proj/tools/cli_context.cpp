// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli_context.hpp"

#include <algorithm>
#include <fstream>

#include "relrot/kernels.hpp"

namespace relrot::cli {

void add_common(CLI::App* cmd, CommonArgs& args, bool out_required) {
  auto* out = cmd->add_option("--out", args.out, "Output directory");
  if (out_required) out->required();
  cmd->add_option("--seed", args.seed, "Seed for models, training and sampling");
  cmd->add_option("--jobs", args.jobs, "Worker threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--preset", args.preset, "Configuration preset")
      ->check(CLI::IsMember({"paper", "desk"}));
  cmd->add_option("--config", args.config_file, "JSON config file merged over the preset");
  cmd->add_option("--set", args.overrides, "Override section.key=value (repeatable)");
}

RunContext::RunContext(const CommonArgs& args, std::string command)
    : command_(std::move(command)), cfg_(preset_config(args.preset)), out_(args.out) {
  if (!args.config_file.empty()) {
    nlohmann::json overlay;
    try {
      overlay = read_json(args.config_file);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    merge_config(cfg_, overlay);
  }
  for (const auto& o : args.overrides) apply_override(cfg_, o);
  if (args.seed) {
    cfg_["model"]["seed"] = *args.seed;
    cfg_["train"]["seed"] = *args.seed;
  }
  seed_ = cfg_["train"]["seed"].get<std::uint64_t>();
  // Validates every section before any work starts.
  model_config(cfg_);
  train_config(cfg_);
  data_config(cfg_);
  eval_config(cfg_);
  if (args.jobs > 0) kernels::set_num_threads(args.jobs);
  if (!out_.empty()) fs::create_directories(out_);
}

void RunContext::write_config() const {
  nlohmann::json j = cfg_;
  j["command"] = command_;
  write_json(out_ / "config.json", j);
}

void RunContext::write_outputs() const {
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(out_)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), out_).generic_string();
    if (rel != "outputs.json") files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  write_json(out_ / "outputs.json", {{"command", command_}, {"files", files}});
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(f);
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

PanoramaSet load_panorama_set(const fs::path& dir) {
  const nlohmann::json meta = read_json(dir / "panoramas.json");
  PanoramaSet set;
  set.style = meta.at("style").get<std::string>();
  for (const auto& e : meta.at("panoramas")) {
    Panorama p;
    p.id = e.at("id").get<std::string>();
    p.pixels = read_png(dir / e.at("file").get<std::string>());
    p.dataset_tag = "synth-" + set.style;
    if (e.contains("position")) {
      const auto v = e.at("position").get<std::vector<double>>();
      p.position = Eigen::Vector3d(v.at(0), v.at(1), v.at(2));
    }
    p.validate();
    set.order.push_back(p.id);
    set.by_id.emplace(p.id, std::move(p));
  }
  return set;
}

LoadedManifest load_manifest_with_images(const fs::path& path) {
  LoadedManifest out;
  out.manifest = read_manifest(path);
  out.images = load_pair_images(out.manifest, path.parent_path());
  return out;
}

}  // namespace relrot::cli
