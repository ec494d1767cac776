// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "relrot/config.hpp"

namespace relrot {
namespace {

using nlohmann::json;

TEST(Presets, PaperAndDeskSections) {
  const json paper = preset_config("paper");
  for (const char* s : {"model", "train", "data", "eval"}) EXPECT_TRUE(paper.contains(s)) << s;
  EXPECT_EQ(nlohmann::json(model_config(paper)), nlohmann::json(ModelConfig::paper()));
  EXPECT_EQ(train_config(paper).total_iters, 500000);
  EXPECT_EQ(eval_config(paper).window, 32);
  EXPECT_EQ(eval_config(paper).stride, 16);

  const json desk = preset_config("desk");
  EXPECT_EQ(model_config(desk).encoder.input_size, 64);
  EXPECT_EQ(train_config(desk).batch_size, 10);
  EXPECT_EQ(train_config(desk).total_iters, 2000);
  EXPECT_TRUE(train_config(desk).desk_preset);
  EXPECT_EQ(eval_config(desk).window, 16);
  EXPECT_EQ(data_config(desk).n_panos, 5);
  EXPECT_EQ(data_config(desk).quota, 50u);

  EXPECT_THROW(preset_config("huge"), ConfigError);
}

TEST(Overrides, ReplaceTypedValues) {
  json cfg = preset_config("desk");
  apply_override(cfg, "train.total_iters=3000");
  apply_override(cfg, "train.lr_init=1e-3");
  apply_override(cfg, "train.lr_final=1");
  apply_override(cfg, "data.style=street");
  apply_override(cfg, "model.use_correlation=false");
  const TrainConfig t = train_config(cfg);
  EXPECT_EQ(t.total_iters, 3000);
  EXPECT_DOUBLE_EQ(t.lr_init, 1e-3);
  EXPECT_DOUBLE_EQ(t.lr_final, 1.0);
  EXPECT_EQ(data_config(cfg).style, SynthStyle::Street);
  EXPECT_FALSE(model_config(cfg).use_correlation);
}

TEST(Overrides, RejectTypeChangesAndUnknownKeys) {
  json cfg = preset_config("paper");
  EXPECT_THROW(apply_override(cfg, "data.quota=abc"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "train.batch_size=2.5"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "train.nonexistent=1"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "nosection.key=1"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "train.batch_size"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "model.down_channels=[1,2]"), ConfigError);
  apply_override(cfg, "model.down_channels=[8,16,32]");
  EXPECT_EQ(model_config(cfg).encoder.down_channels[2], 32);
}

TEST(Overrides, SemanticValidationBecomesConfigError) {
  json cfg = preset_config("desk");
  apply_override(cfg, "model.input_size=72");
  EXPECT_THROW(model_config(cfg), ConfigError);
  cfg = preset_config("desk");
  apply_override(cfg, "train.decay_start=5000");
  EXPECT_THROW(train_config(cfg), ConfigError);
  cfg = preset_config("desk");
  apply_override(cfg, "eval.stride=0");
  EXPECT_THROW(eval_config(cfg), ConfigError);
}

TEST(MergeConfig, DeepMergeOfPartialDocument) {
  json cfg = preset_config("paper");
  merge_config(cfg, json::parse(R"({"train": {"seed": 11}, "eval": {"max_roll": 2.5}})"));
  EXPECT_EQ(train_config(cfg).seed, 11u);
  EXPECT_DOUBLE_EQ(eval_config(cfg).max_roll, 2.5);
  EXPECT_EQ(train_config(cfg).batch_size, 20);
  EXPECT_THROW(merge_config(cfg, json::parse(R"({"train": {"sed": 11}})")), ConfigError);
  EXPECT_THROW(merge_config(cfg, json::parse(R"({"train": 3})")), ConfigError);
}

}  // namespace
}  // namespace relrot
