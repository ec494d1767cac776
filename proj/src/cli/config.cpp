// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include "relrot/config.hpp"

namespace relrot {

namespace {

using json = nlohmann::json;

const char* kind_name(const json& v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  if (v.is_object()) return "object";
  return "null";
}

// Integers are accepted where numbers are expected, never the reverse.
bool compatible(const json& expected, const json& given) {
  if (expected.is_number_integer()) {
    return given.is_number_integer() && !(expected.is_number_unsigned() && given.get<std::int64_t>() < 0);
  }
  if (expected.is_number()) return given.is_number();
  if (expected.is_array()) {
    if (!given.is_array() || given.size() != expected.size()) return false;
    for (std::size_t i = 0; i < given.size(); ++i)
      if (!compatible(expected[i], given[i])) return false;
    return true;
  }
  return std::string(kind_name(expected)) == kind_name(given);
}

void check_and_set(json& slot, const json& value, const std::string& key) {
  if (!compatible(slot, value)) {
    throw ConfigError("config: '" + key + "' expects " + kind_name(slot) + ", got " +
                      value.dump());
  }
  if (slot.is_number_float() && value.is_number_integer()) {
    slot = value.get<double>();
  } else {
    slot = value;
  }
}

void merge_at(json& base, const json& overlay, const std::string& prefix) {
  if (!overlay.is_object()) throw ConfigError("config: '" + prefix + "' must be an object");
  for (const auto& [k, v] : overlay.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (!base.contains(k)) throw ConfigError("config: unknown key '" + key + "'");
    if (base[k].is_object()) {
      merge_at(base[k], v, key);
    } else {
      check_and_set(base[k], v, key);
    }
  }
}

template <typename F>
auto typed(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

json preset_config(std::string_view preset) {
  json cfg;
  if (preset == "paper") {
    cfg["model"] = ModelConfig::paper();
    cfg["train"] = TrainConfig::paper();
    cfg["eval"] = {{"window", 32}, {"stride", 16}};
  } else if (preset == "desk") {
    cfg["model"] = ModelConfig::toy();
    cfg["train"] = TrainConfig::desk();
    cfg["eval"] = {{"window", 16}, {"stride", 8}};
  } else {
    throw ConfigError("config: unknown preset '" + std::string(preset) + "' (paper, desk)");
  }
  const DataConfig d;
  cfg["data"] = {{"n_panos", d.n_panos},   {"style", std::string(to_string(d.style))},
                 {"views_per_pano", d.views_per_pano}, {"quota", d.quota},
                 {"pano_width", d.pano_width}, {"crop_size", d.crop_size},
                 {"fov", d.fov},           {"max_dist", d.max_dist},
                 {"grid_x", d.grid_x},     {"grid_y", d.grid_y},
                 {"spacing", d.spacing}};
  const EvalConfig e;
  cfg["eval"]["max_roll"] = e.max_roll;
  cfg["eval"]["ransac_iters"] = e.ransac_iters;
  cfg["eval"]["inlier_thresh_deg"] = e.inlier_thresh_deg;
  // Paths are supplied per command.
  cfg["train"].erase("manifest");
  return cfg;
}

void merge_config(json& base, const json& overlay) { merge_at(base, overlay, ""); }

void apply_override(json& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("config: override must look like section.key=value: " + std::string(assignment));
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) {
      throw ConfigError("config: unknown key '" + key + "'");
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) throw ConfigError("config: '" + key + "' is a section, not a value");
  check_and_set(*node, value, key);
}

ModelConfig model_config(const json& cfg) {
  return typed([&] {
    ModelConfig m = cfg.at("model").get<ModelConfig>();
    m.validate();
    return m;
  });
}

TrainConfig train_config(const json& cfg) {
  return typed([&] {
    TrainConfig t = cfg.at("train").get<TrainConfig>();
    t.validate();
    return t;
  });
}

DataConfig data_config(const json& cfg) {
  return typed([&] {
    const json& j = cfg.at("data");
    DataConfig d;
    d.n_panos = j.at("n_panos").get<int>();
    d.style = synth_style_from_string(j.at("style").get<std::string>());
    d.views_per_pano = j.at("views_per_pano").get<int>();
    d.quota = j.at("quota").get<std::size_t>();
    d.pano_width = j.at("pano_width").get<int>();
    d.crop_size = j.at("crop_size").get<int>();
    d.fov = j.at("fov").get<double>();
    d.max_dist = j.at("max_dist").get<double>();
    d.grid_x = j.at("grid_x").get<int>();
    d.grid_y = j.at("grid_y").get<int>();
    d.spacing = j.at("spacing").get<double>();
    if (d.n_panos <= 0 || d.views_per_pano < 2 || d.pano_width < 16 || d.pano_width % 2 ||
        d.crop_size < 8 || d.grid_x <= 0 || d.grid_y <= 0 || !(d.max_dist > 0) || !(d.spacing > 0)) {
      throw std::invalid_argument("config: data section holds out-of-range values");
    }
    return d;
  });
}

EvalConfig eval_config(const json& cfg) {
  return typed([&] {
    const json& j = cfg.at("eval");
    EvalConfig e;
    e.window = j.at("window").get<int>();
    e.stride = j.at("stride").get<int>();
    e.max_roll = j.at("max_roll").get<double>();
    e.ransac_iters = j.at("ransac_iters").get<int>();
    e.inlier_thresh_deg = j.at("inlier_thresh_deg").get<double>();
    if (e.window <= 0 || e.stride <= 0 || e.max_roll < 0 || e.ransac_iters <= 0 ||
        !(e.inlier_thresh_deg > 0)) {
      throw std::invalid_argument("config: eval section holds out-of-range values");
    }
    return e;
  });
}

}  // namespace relrot
