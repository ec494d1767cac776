// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "relrot/config.hpp"
#include "relrot/panosample.hpp"

namespace relrot::cli {

namespace fs = std::filesystem;

/// Flags shared by every subcommand.
struct CommonArgs {
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::string preset = "paper";
  std::string config_file;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool out_required = true);

/// Resolved configuration plus the output directory of one command.
class RunContext {
 public:
  RunContext(const CommonArgs& args, std::string command);

  const nlohmann::json& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  const fs::path& out() const { return out_; }
  bool has_out() const { return !out_.empty(); }

  /// Writes `config.json` with the resolved configuration.
  void write_config() const;
  /// Writes `outputs.json` listing every file under the output directory.
  void write_outputs() const;

 private:
  std::string command_;
  nlohmann::json cfg_;
  std::uint64_t seed_ = 0;
  fs::path out_;
};

/// Panoramas described by a `panoramas.json` written by `dataset synth`.
struct PanoramaSet {
  std::string style;
  std::map<std::string, Panorama> by_id;
  std::vector<std::string> order;
};

PanoramaSet load_panorama_set(const fs::path& dir);

/// A manifest with its crops loaded relative to the manifest's directory.
struct LoadedManifest {
  DatasetManifest manifest;
  std::vector<PairImages> images;
};

LoadedManifest load_manifest_with_images(const fs::path& path);

nlohmann::json read_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& j);

void register_dataset(CLI::App& app);
void register_model_commands(CLI::App& app);

}  // namespace relrot::cli
