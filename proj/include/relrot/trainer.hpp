// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "relrot/netmodel.hpp"
#include "relrot/panosample.hpp"

namespace relrot {

struct TrainConfig {
  double lr_init = 5e-4;
  double lr_final = 5e-6;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.9;
  double adam_eps = 1e-8;
  int batch_size = 20;
  std::int64_t total_iters = 500000;
  std::int64_t decay_start = 250000;
  std::int64_t checkpoint_every = 10000;  // 0 disables periodic checkpoints
  std::uint64_t seed = 0;
  std::filesystem::path manifest;
  bool desk_preset = false;

  /// Full-scale schedule: 500k iterations, batch 20, decay from 250k.
  static TrainConfig paper();
  /// 2000 iterations at batch 10 with the same optimizer; fits the toy model on a CPU.
  static TrainConfig desk();

  /// Throws invalid_argument on inconsistent values.
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Constant until decay_start, then linear to lr_final at total_iters.
double lr_at(std::int64_t iter, const TrainConfig& cfg);

/// Adam over a fixed list of parameters.
class Adam {
 public:
  Adam(std::vector<nn::Param*> params, double beta1, double beta2, double eps);

  void step(double lr);
  std::int64_t steps() const { return t_; }

  /// Moment arrays named "<param>.m" / "<param>.v" plus "adam.t".
  std::vector<NamedArray> state() const;
  void load_state(const std::vector<NamedArray>& s);

 private:
  std::vector<nn::Param*> params_;
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Image pairs with labels, pre-resized to the network input.
struct TrainingSet {
  Tensor img1;  // (N, 3, S, S)
  Tensor img2;
  std::vector<RelPoseParam> labels;

  int size() const { return static_cast<int>(labels.size()); }
};

TrainingSet make_training_set(std::span<const PairImages> images,
                              std::span<const PairSample> records, int input_size);

/// Channel means and standard deviations over every crop of the set.
InputNormalization dataset_normalization(const TrainingSet& set);

/// Batch indices for one iteration, drawn with replacement from a stream that
/// depends only on (seed, iter).
std::vector<int> batch_indices(std::uint64_t seed, std::int64_t iter, int batch, int n);

struct TrainLogEntry {
  std::int64_t iter = 0;
  double loss = 0.0;
  double lr = 0.0;
  double wall_ms = 0.0;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
  std::vector<std::pair<std::int64_t, nlohmann::json>> snapshots;
};

/// Thrown when the training loss becomes non-finite.
class DivergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainOptions {
  std::optional<std::filesystem::path> out_dir;  // log.csv and checkpoints
  std::optional<std::filesystem::path> resume;   // checkpoint to continue from
  std::int64_t stop_after = -1;  // stop early at this iteration (resume tests)
  std::int64_t snapshot_every = 0;
  /// Called at snapshot iterations; the result is stored in the log.
  std::function<nlohmann::json(Trainable&, std::int64_t)> snapshot;
  bool quiet = true;
  bool wall_clock = true;  // false logs wall_ms as 0 for byte-identical reruns
};

/**
 * @brief Runs the optimization loop on `net`.
 *
 * Each iteration samples a batch, minimizes the summed three-head
 * cross-entropy with Adam and appends (iter, loss, lr, wall_ms) to the log.
 * Resuming requires a checkpoint written with an identical config.
 */
TrainLog train(const TrainConfig& cfg, Trainable& model, const TrainingSet& data,
               const TrainOptions& opt = {});

void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log);

/// Checkpoint with model, optimizer state and config after `iter` iterations.
Checkpoint make_training_checkpoint(Trainable& model, const Adam& adam, const TrainConfig& cfg,
                                    std::int64_t iter);

/// Continues `model` from a training checkpoint written with the same config;
/// returns the iteration to resume at.
std::int64_t resume_from(const std::filesystem::path& path, const TrainConfig& cfg,
                         Trainable& model, Adam& adam);

}  // namespace relrot
