// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <string>
#include <vector>

#include "relrot/tensor.hpp"

// Minimal layer library with explicit forward/backward passes. `forward` is
// the training pass: it caches what backward needs. `infer` is the const
// inference pass and touches no layer state. backward accumulates parameter
// gradients and returns the gradient with respect to the input.

namespace relrot::nn {

/// A learnable array with its gradient accumulator.
struct Param {
  std::string name;
  std::vector<double> value;
  std::vector<double> grad;

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

/// Non-learned state saved with the model (batch-norm running statistics).
struct Buffer {
  std::string name;
  std::vector<double> value;
};

enum class Backend { Omp, Serial };
/// Kernel implementation used by every convolution and correlation.
void set_backend(Backend b);
Backend backend();

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in_c, int out_c, int kernel, int stride, int pad, bool bias);

  Tensor forward(const Tensor& x);
  Tensor infer(const Tensor& x) const;
  /// Returns dx unless `need_dx` is false (then an empty tensor).
  Tensor backward(const Tensor& dy, bool need_dx = true);
  void init(std::mt19937_64& rng);
  void collect(std::vector<Param*>& out);
  std::size_t param_count() const { return w_.size() + b_.size(); }

 private:
  int in_c_ = 0, out_c_ = 0, kernel_ = 1, stride_ = 1, pad_ = 0;
  Param w_, b_;
  Tensor x_;
};

class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(std::string name, int channels, double momentum = 0.1, double eps = 1e-5);

  /// Normalizes with batch statistics and updates the running averages.
  Tensor forward(const Tensor& x);
  /// Normalizes with the running averages.
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& dy);
  void collect(std::vector<Param*>& out);
  void collect(std::vector<Buffer*>& out);
  std::size_t param_count() const { return gamma_.size() + beta_.size(); }

 private:
  int channels_ = 0;
  double momentum_ = 0.1, eps_ = 1e-5;
  Param gamma_, beta_;
  Buffer running_mean_, running_var_;
  Tensor xhat_;
  std::vector<double> invstd_;
};

class ReLU {
 public:
  Tensor forward(const Tensor& x);
  static Tensor infer(const Tensor& x);
  Tensor backward(const Tensor& dy) const;

 private:
  std::vector<unsigned char> mask_;
};

/// Nearest-neighbour 2x upsampling.
class Upsample2x {
 public:
  Tensor forward(const Tensor& x);
  static Tensor infer(const Tensor& x);
  Tensor backward(const Tensor& dy) const;

 private:
  Shape in_shape_;
};

/// y = x W^T + b on (n, in) -> (n, out); input spatial dims are flattened.
class Linear {
 public:
  Linear() = default;
  Linear(std::string name, int in, int out);

  Tensor forward(const Tensor& x);
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& dy);
  void init(std::mt19937_64& rng, double gain = 2.0);
  void collect(std::vector<Param*>& out);
  std::size_t param_count() const { return w_.size() + b_.size(); }

 private:
  int in_ = 0, out_ = 0;
  Param w_, b_;
  Tensor x_;
  Shape in_shape_;
};

/// Pre-activation residual block: conv(relu(bn(conv(relu(bn(x)))))) + shortcut.
/// The shortcut is a strided 1x1 projection of relu(bn(x)) when the shape
/// changes, the identity otherwise.
class PreActBlock {
 public:
  PreActBlock() = default;
  PreActBlock(const std::string& name, int in_c, int out_c, int stride);

  Tensor forward(const Tensor& x);
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& dy);
  void init(std::mt19937_64& rng);
  void collect(std::vector<Param*>& out);
  void collect(std::vector<Buffer*>& out);
  std::size_t param_count() const;

 private:
  bool project_ = false;
  BatchNorm2d bn1_, bn2_;
  ReLU relu1_, relu2_;
  Conv2d conv1_, conv2_, shortcut_;
};

/// Sum of softmax cross-entropies over rows of (n, bins) logits against class
/// targets; `grad` receives d(loss)/d(logits) scaled by `scale`.
double cross_entropy(const Tensor& logits, const std::vector<int>& targets, double scale,
                     Tensor* grad);

}  // namespace relrot::nn
