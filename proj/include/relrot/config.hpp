// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "relrot/netmodel.hpp"
#include "relrot/panosample.hpp"
#include "relrot/trainer.hpp"

// Run configuration: one JSON document with "model", "train", "data" and
// "eval" sections. Presets supply every key; config files and key=value
// overrides may only replace existing keys with values of the same type.

namespace relrot {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "paper" (full-scale defaults) or "desk" (toy model, 2000 iterations).
nlohmann::json preset_config(std::string_view preset);

/// Deep-merges `overlay` into `base`; unknown keys and type changes throw ConfigError.
void merge_config(nlohmann::json& base, const nlohmann::json& overlay);

/// Applies "section.key=value". The value is parsed as JSON when possible and
/// as a bare string otherwise, then type-checked against the existing entry.
void apply_override(nlohmann::json& cfg, std::string_view assignment);

struct DataConfig {
  int n_panos = 5;
  SynthStyle style = SynthStyle::Room;
  int views_per_pano = 20;
  std::size_t quota = 50;
  int pano_width = 1024;
  int crop_size = 256;
  double fov = 90.0;
  double max_dist = 3.0;
  int grid_x = 3;
  int grid_y = 3;
  double spacing = 2.0;
};

struct EvalConfig {
  int window = 32;
  int stride = 16;
  double max_roll = 5.0;
  int ransac_iters = 1000;
  double inlier_thresh_deg = 1.0;
};

/// Typed views of a validated configuration; errors become ConfigError.
ModelConfig model_config(const nlohmann::json& cfg);
TrainConfig train_config(const nlohmann::json& cfg);
DataConfig data_config(const nlohmann::json& cfg);
EvalConfig eval_config(const nlohmann::json& cfg);

}  // namespace relrot
