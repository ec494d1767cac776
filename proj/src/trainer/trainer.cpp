// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include "relrot/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

namespace relrot {

TrainConfig TrainConfig::paper() { return TrainConfig{}; }

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.batch_size = 10;
  c.total_iters = 2000;
  c.decay_start = 1000;
  c.checkpoint_every = 500;
  c.desk_preset = true;
  return c;
}

void TrainConfig::validate() const {
  if (!(lr_init > 0) || !(lr_final > 0)) throw std::invalid_argument("train: learning rates must be positive");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1)) {
    throw std::invalid_argument("train: Adam betas must be in [0, 1)");
  }
  if (!(adam_eps > 0)) throw std::invalid_argument("train: adam_eps must be positive");
  if (batch_size <= 0) throw std::invalid_argument("train: batch_size must be positive");
  if (total_iters <= 0) throw std::invalid_argument("train: total_iters must be positive");
  if (decay_start < 0 || decay_start > total_iters) {
    throw std::invalid_argument("train: decay_start must lie in [0, total_iters]");
  }
  if (checkpoint_every < 0) throw std::invalid_argument("train: checkpoint_every must be >= 0");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"lr_init", c.lr_init},         {"lr_final", c.lr_final},
       {"adam_beta1", c.adam_beta1},   {"adam_beta2", c.adam_beta2},
       {"adam_eps", c.adam_eps},       {"batch_size", c.batch_size},
       {"total_iters", c.total_iters}, {"decay_start", c.decay_start},
       {"checkpoint_every", c.checkpoint_every}, {"seed", c.seed},
       {"manifest", c.manifest.string()}, {"desk_preset", c.desk_preset}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.lr_init = j.value("lr_init", c.lr_init);
  c.lr_final = j.value("lr_final", c.lr_final);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.total_iters = j.value("total_iters", c.total_iters);
  c.decay_start = j.value("decay_start", c.decay_start);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.seed = j.value("seed", c.seed);
  c.manifest = j.value("manifest", std::string());
  c.desk_preset = j.value("desk_preset", c.desk_preset);
}

double lr_at(std::int64_t iter, const TrainConfig& cfg) {
  if (iter < 0 || iter > cfg.total_iters) throw std::invalid_argument("lr_at: iteration out of range");
  if (iter < cfg.decay_start) return cfg.lr_init;
  const double span = double(cfg.total_iters - cfg.decay_start);
  if (span <= 0) return cfg.lr_final;
  const double t = double(iter - cfg.decay_start) / span;
  return (1.0 - t) * cfg.lr_init + t * cfg.lr_final;
}

// ---------------------------------------------------------------------------

Adam::Adam(std::vector<nn::Param*> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const nn::Param* p : params_) {
    m_.emplace_back(p->size(), 0.0);
    v_.emplace_back(p->size(), 0.0);
  }
}

void Adam::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, double(t_));
  const double c2 = 1.0 - std::pow(beta2_, double(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    nn::Param& p = *params_[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      m[i] = beta1_ * m[i] + (1 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1 - beta2_) * g * g;
      p.value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

std::vector<NamedArray> Adam::state() const {
  std::vector<NamedArray> out;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    out.push_back({params_[k]->name + ".m", m_[k]});
    out.push_back({params_[k]->name + ".v", v_[k]});
  }
  out.push_back({"adam.t", {double(t_)}});
  return out;
}

void Adam::load_state(const std::vector<NamedArray>& s) {
  std::map<std::string, const std::vector<double>*> by_name;
  for (const auto& a : s) by_name[a.name] = &a.values;
  auto fetch = [&](const std::string& name, std::size_t size) -> const std::vector<double>& {
    const auto it = by_name.find(name);
    if (it == by_name.end() || it->second->size() != size) {
      throw std::runtime_error("optimizer state: missing or mis-sized " + name);
    }
    return *it->second;
  };
  for (std::size_t k = 0; k < params_.size(); ++k) {
    m_[k] = fetch(params_[k]->name + ".m", params_[k]->size());
    v_[k] = fetch(params_[k]->name + ".v", params_[k]->size());
  }
  t_ = static_cast<std::int64_t>(fetch("adam.t", 1)[0]);
}

// ---------------------------------------------------------------------------

TrainingSet make_training_set(std::span<const PairImages> images,
                              std::span<const PairSample> records, int input_size) {
  if (images.size() != records.size()) {
    throw std::invalid_argument("make_training_set: images and records differ in length");
  }
  if (images.empty()) throw std::invalid_argument("make_training_set: empty dataset");
  std::vector<Image> a, b;
  TrainingSet set;
  for (std::size_t i = 0; i < images.size(); ++i) {
    a.push_back(images[i].img1);
    b.push_back(images[i].img2);
    set.labels.push_back(records[i].gt);
  }
  set.img1 = images_to_tensor(a, input_size);
  set.img2 = images_to_tensor(b, input_size);
  return set;
}

InputNormalization dataset_normalization(const TrainingSet& set) {
  InputNormalization n;
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0, sq = 0.0, count = 0.0;
    for (const Tensor* t : {&set.img1, &set.img2}) {
      const Shape s = t->shape();
      for (int i = 0; i < s.n; ++i)
        for (int y = 0; y < s.h; ++y)
          for (int x = 0; x < s.w; ++x) {
            const double v = t->at(i, c, y, x);
            sum += v;
            sq += v * v;
          }
      count += double(s.n) * s.h * s.w;
    }
    const double mean = sum / count;
    n.mean[c] = mean;
    n.stddev[c] = std::max(std::sqrt(std::max(sq / count - mean * mean, 0.0)), 1e-3);
  }
  return n;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Tensor gather(const Tensor& t, const std::vector<int>& idx) {
  const Shape s = t.shape();
  Tensor out(Shape{static_cast<int>(idx.size()), s.c, s.h, s.w});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = t.item(idx[i]);
    std::copy(src.begin(), src.end(), out.item(static_cast<int>(i)).begin());
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::vector<int> batch_indices(std::uint64_t seed, std::int64_t iter, int batch, int n) {
  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(std::uint64_t(iter))));
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<int> out(static_cast<std::size_t>(batch));
  for (int& i : out) i = pick(rng);
  return out;
}

Checkpoint make_training_checkpoint(Trainable& model, const Adam& adam, const TrainConfig& cfg,
                                    std::int64_t iter) {
  Checkpoint ck = make_checkpoint(model);
  ck.header["train"] = cfg;
  ck.optimizer = adam.state();
  ck.iteration = iter;
  ck.seed = cfg.seed;
  return ck;
}

std::int64_t resume_from(const std::filesystem::path& path, const TrainConfig& cfg,
                         Trainable& model, Adam& adam) {
  const Checkpoint ck = load_checkpoint(path);
  if (ck.kind != model.kind()) {
    throw std::invalid_argument("train: checkpoint " + path.string() + " holds a '" + ck.kind +
                                "' model");
  }
  if (!ck.header.contains("train") || ck.header.at("train") != nlohmann::json(cfg)) {
    throw std::invalid_argument("train: checkpoint " + path.string() +
                                " was written with a different training config");
  }
  nlohmann::json described = ck.header;
  described.erase("train");
  if (described != model.describe()) {
    throw std::invalid_argument("train: checkpoint model config or normalization differs");
  }
  restore(model.parameters(), ck.params);
  restore(model.buffers(), ck.buffers);
  adam.load_state(ck.optimizer);
  return ck.iteration;
}

TrainLog train(const TrainConfig& cfg, Trainable& model, const TrainingSet& data,
               const TrainOptions& opt) {
  cfg.validate();
  if (data.size() == 0) throw std::invalid_argument("train: empty training set");
  Adam adam(model.parameters(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  const std::int64_t start = opt.resume ? resume_from(*opt.resume, cfg, model, adam) : 0;

  std::ofstream csv;
  if (opt.out_dir) {
    std::filesystem::create_directories(*opt.out_dir);
    const auto path = *opt.out_dir / "log.csv";
    const bool append = opt.resume && std::filesystem::exists(path);
    csv.open(path, append ? std::ios::app : std::ios::trunc);
    if (!csv) throw std::runtime_error("train: cannot write " + path.string());
    if (!append) csv << "iter,loss,lr,wall_ms\n";
  }

  const std::int64_t end = opt.stop_after >= 0 ? std::min(opt.stop_after, cfg.total_iters)
                                               : cfg.total_iters;
  TrainLog log;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::int64_t it = start; it < end; ++it) {
    const auto idx = batch_indices(cfg.seed, it, cfg.batch_size, data.size());
    std::vector<RelPoseParam> labels;
    for (int i : idx) labels.push_back(data.labels[std::size_t(i)]);

    model.zero_grad();
    const double loss = model.train_step(gather(data.img1, idx), gather(data.img2, idx), labels);
    if (!std::isfinite(loss)) {
      throw DivergedError("train: non-finite loss at iteration " + std::to_string(it) +
                          " (lr " + fmt(lr_at(it, cfg)) + ")");
    }
    const double lr = lr_at(it, cfg);
    adam.step(lr);

    const double wall =
        opt.wall_clock
            ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()
            : 0.0;
    log.entries.push_back({it, loss, lr, wall});
    if (csv.is_open()) csv << it << ',' << fmt(loss) << ',' << fmt(lr) << ',' << fmt(wall) << '\n';
    if (!opt.quiet && (it % 100 == 0 || it + 1 == end)) {
      std::cerr << "iter " << it << " loss " << loss << " lr " << lr << '\n';
    }

    const std::int64_t done = it + 1;
    if (opt.out_dir && cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0) {
      save_checkpoint(*opt.out_dir / ("checkpoint-" + std::to_string(done) + ".ckpt"),
                      make_training_checkpoint(model, adam, cfg, done));
    }
    if (opt.snapshot && opt.snapshot_every > 0 && done % opt.snapshot_every == 0) {
      log.snapshots.emplace_back(done, opt.snapshot(model, done));
    }
  }
  if (opt.out_dir) {
    save_checkpoint(*opt.out_dir / "final.ckpt", make_training_checkpoint(model, adam, cfg, end));
  }
  return log;
}

void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "iter,loss,lr,wall_ms\n";
  for (const auto& e : log.entries) {
    f << e.iter << ',' << fmt(e.loss) << ',' << fmt(e.lr) << ',' << fmt(e.wall_ms) << '\n';
  }
}

}  // namespace relrot
