// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>

#include "relrot/trainer.hpp"

namespace relrot {
namespace {

namespace fs = std::filesystem;

ModelConfig tiny_config(std::uint64_t seed) {
  ModelConfig c = ModelConfig::toy();
  c.encoder.input_size = 32;
  c.seed = seed;
  return c;
}

TrainConfig short_config(std::int64_t iters) {
  TrainConfig c = TrainConfig::desk();
  c.total_iters = iters;
  c.decay_start = iters / 2;
  c.batch_size = 3;
  c.checkpoint_every = 0;
  c.seed = 5;
  return c;
}

TrainingSet random_set(int n, int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0), p(-20.0, 20.0), y(-180.0, 180.0);
  TrainingSet s;
  s.img1 = Tensor(Shape{n, 3, size, size});
  s.img2 = Tensor(Shape{n, 3, size, size});
  for (double& v : s.img1.data()) v = u(rng);
  for (double& v : s.img2.data()) v = u(rng);
  for (int i = 0; i < n; ++i) s.labels.push_back({p(rng), p(rng), y(rng)});
  return s;
}

TrainOptions options(std::optional<fs::path> out, std::optional<fs::path> resume = {},
                     std::int64_t stop_after = -1) {
  TrainOptions o;
  o.out_dir = std::move(out);
  o.resume = std::move(resume);
  o.stop_after = stop_after;
  return o;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("relrot_unit_" + name);
  fs::remove_all(d);
  return d;
}

std::vector<double> flat_params(RotationNet& net) {
  std::vector<double> out;
  for (auto* p : net.parameters()) out.insert(out.end(), p->value.begin(), p->value.end());
  return out;
}

TEST(LearningRate, ScheduleFixedPoints) {
  const TrainConfig c = TrainConfig::paper();
  EXPECT_DOUBLE_EQ(lr_at(0, c), 5e-4);
  EXPECT_DOUBLE_EQ(lr_at(249999, c), 5e-4);
  EXPECT_DOUBLE_EQ(lr_at(500000, c), 5e-6);
  EXPECT_NEAR(lr_at(375000, c), 2.525e-4, 1e-15);
  EXPECT_THROW(lr_at(-1, c), std::invalid_argument);
  EXPECT_THROW(lr_at(500001, c), std::invalid_argument);
}

TEST(LearningRate, ContinuousAndNonIncreasing) {
  for (const TrainConfig& c : {TrainConfig::paper(), TrainConfig::desk()}) {
    double prev = lr_at(0, c);
    const std::int64_t step = std::max<std::int64_t>(1, c.total_iters / 5000);
    for (std::int64_t i = step; i <= c.total_iters; i += step) {
      const double lr = lr_at(i, c);
      EXPECT_LE(lr, prev);
      EXPECT_LE(prev - lr, (c.lr_init - c.lr_final) * double(step) / double(c.total_iters - c.decay_start) + 1e-15);
      prev = lr;
    }
  }
}

TEST(TrainConfig, PresetsAndValidation) {
  const TrainConfig p = TrainConfig::paper();
  EXPECT_EQ(p.batch_size, 20);
  EXPECT_EQ(p.total_iters, 500000);
  EXPECT_DOUBLE_EQ(p.adam_beta1, 0.5);
  EXPECT_DOUBLE_EQ(p.adam_beta2, 0.9);
  const TrainConfig d = TrainConfig::desk();
  EXPECT_EQ(d.batch_size, 10);
  EXPECT_EQ(d.total_iters, 2000);
  EXPECT_TRUE(d.desk_preset);
  TrainConfig bad = p;
  bad.decay_start = p.total_iters + 1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = p;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = p;
  bad.lr_init = -1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EXPECT_EQ(nlohmann::json(nlohmann::json(d).get<TrainConfig>()), nlohmann::json(d));
}

TEST(Adam, FirstStepMovesBySignTimesLearningRate) {
  nn::Param p{"w", {1.0, 2.0, 3.0}, {0.5, -4.0, 0.0}};
  Adam adam({&p}, 0.5, 0.9, 1e-8);
  adam.step(0.1);
  EXPECT_NEAR(p.value[0], 0.9, 1e-7);
  EXPECT_NEAR(p.value[1], 2.1, 1e-7);
  EXPECT_DOUBLE_EQ(p.value[2], 3.0);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(Adam, StateRoundTrip) {
  nn::Param p{"w", {0.0, 0.0}, {1.0, -2.0}};
  Adam a({&p}, 0.5, 0.9, 1e-8);
  a.step(0.01);
  a.step(0.01);
  nn::Param q = p;
  Adam b({&q}, 0.5, 0.9, 1e-8);
  b.load_state(a.state());
  EXPECT_EQ(b.steps(), 2);
  a.step(0.01);
  b.step(0.01);
  EXPECT_EQ(p.value, q.value);
  auto broken = a.state();
  broken.erase(broken.begin());
  EXPECT_THROW(b.load_state(broken), std::runtime_error);
}

TEST(BatchIndices, DeterministicPerIterationAndInRange) {
  const auto a = batch_indices(3, 17, 50, 7);
  EXPECT_EQ(a, batch_indices(3, 17, 50, 7));
  EXPECT_NE(a, batch_indices(3, 18, 50, 7));
  EXPECT_NE(a, batch_indices(4, 17, 50, 7));
  for (int i : a) {
    EXPECT_GE(i, 0);
    EXPECT_LT(i, 7);
  }
  // With replacement: 50 draws from 7 items must repeat.
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_NE(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
}

TEST(Train, EqualSeedsGiveEqualLossCurves) {
  const TrainingSet data = random_set(6, 32, 60);
  const TrainConfig cfg = short_config(4);
  RotationNet a(tiny_config(1)), b(tiny_config(1));
  const TrainLog la = train(cfg, a, data), lb = train(cfg, b, data);
  ASSERT_EQ(la.entries.size(), 4u);
  for (std::size_t i = 0; i < la.entries.size(); ++i) {
    EXPECT_EQ(la.entries[i].iter, std::int64_t(i));
    EXPECT_NEAR(la.entries[i].loss, lb.entries[i].loss, 1e-6);
    EXPECT_DOUBLE_EQ(la.entries[i].lr, lr_at(la.entries[i].iter, cfg));
  }
}

TEST(Train, ResumeMatchesUninterruptedRun) {
  const TrainingSet data = random_set(6, 32, 61);
  TrainConfig cfg = short_config(6);
  cfg.checkpoint_every = 3;
  const fs::path full_dir = scratch("train_full"), part_dir = scratch("train_part");

  RotationNet full(tiny_config(2));
  const TrainLog lf = train(cfg, full, data, options(full_dir));

  RotationNet part(tiny_config(2));
  train(cfg, part, data, options(part_dir, {}, 3));
  ASSERT_TRUE(fs::exists(part_dir / "checkpoint-3.ckpt"));
  RotationNet resumed(tiny_config(2));
  const TrainLog lr = train(cfg, resumed, data, options(part_dir, part_dir / "checkpoint-3.ckpt"));

  ASSERT_EQ(lr.entries.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(lr.entries[i].iter, lf.entries[i + 3].iter);
    EXPECT_NEAR(lr.entries[i].loss, lf.entries[i + 3].loss, 1e-9);
  }
  EXPECT_EQ(flat_params(resumed), flat_params(full));

  std::ifstream csv(part_dir / "log.csv");
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  EXPECT_EQ(lines, 1 + 6);
}

TEST(Train, ResumeRejectsDifferentConfig) {
  const TrainingSet data = random_set(4, 32, 62);
  TrainConfig cfg = short_config(2);
  const fs::path dir = scratch("train_cfg");
  RotationNet net(tiny_config(3));
  train(cfg, net, data, options(dir));
  cfg.lr_init = 1e-3;
  RotationNet other(tiny_config(3));
  EXPECT_THROW(train(cfg, other, data, options({}, dir / "final.ckpt")), std::invalid_argument);
}

TEST(Train, CheckpointPreservesParameterCountAndPredictions) {
  const TrainingSet data = random_set(4, 32, 63);
  const fs::path dir = scratch("train_ckpt");
  RotationNet net(tiny_config(4));
  train(short_config(2), net, data, options(dir));
  const RotationNet back = rotation_net_from_checkpoint(load_checkpoint(dir / "final.ckpt"));
  EXPECT_EQ(back.parameter_count(), net.parameter_count());
  const Tensor a = slice_batch(data.img1, 0, 2), b = slice_batch(data.img2, 0, 2);
  const auto p = net.predict_batch(a, b), q = back.predict_batch(a, b);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i].logits, q[i].logits);
}

TEST(Train, FrozenBatchLossHalvesWithinTwoHundredIterations) {
  RotationNet net(tiny_config(5));
  const TrainingSet data = random_set(4, 32, 64);
  Adam adam(net.parameters(), 0.5, 0.9, 1e-8);
  double first = 0, best = std::numeric_limits<double>::infinity();
  int reached = -1;
  for (int it = 0; it < 200 && reached < 0; ++it) {
    net.zero_grad();
    const double l = net.train_step(data.img1, data.img2, data.labels);
    if (it == 0) first = l;
    best = std::min(best, l);
    if (best <= 0.5 * first) reached = it;
    adam.step(5e-4);
  }
  EXPECT_GE(reached, 0) << "initial " << first << " best " << best;
}

class NanModel : public Trainable {
 public:
  NanModel() : p_{"w", {0.0}, {0.0}} {}
  std::vector<nn::Param*> parameters() override { return {&p_}; }
  std::vector<nn::Buffer*> buffers() override { return {}; }
  double train_step(const Tensor&, const Tensor&, std::span<const RelPoseParam>) override {
    return ++calls_ < 3 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
  }
  std::string kind() const override { return "nan"; }
  nlohmann::json describe() const override { return {{"model", nlohmann::json::object()}}; }

 private:
  nn::Param p_;
  int calls_ = 0;
};

TEST(Train, NonFiniteLossAborts) {
  NanModel m;
  const TrainingSet data = random_set(2, 16, 65);
  try {
    train(short_config(10), m, data);
    FAIL() << "expected DivergedError";
  } catch (const DivergedError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration 2"), std::string::npos);
  }
}

TEST(Train, DatasetNormalizationMatchesDirectMoments) {
  const TrainingSet data = random_set(3, 8, 66);
  const InputNormalization n = dataset_normalization(data);
  for (int c = 0; c < 3; ++c) {
    double s = 0, s2 = 0, k = 0;
    for (const Tensor* t : {&data.img1, &data.img2})
      for (int i = 0; i < 3; ++i)
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) {
            const double v = t->at(i, c, y, x);
            s += v;
            s2 += v * v;
            ++k;
          }
    const double mean = s / k;
    EXPECT_NEAR(n.mean[std::size_t(c)], mean, 1e-12);
    EXPECT_NEAR(n.stddev[std::size_t(c)], std::sqrt(s2 / k - mean * mean), 1e-9);
  }
}

}  // namespace
}  // namespace relrot
