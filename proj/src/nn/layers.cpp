// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <cmath>

#include "relrot/kernels.hpp"
#include "relrot/nn.hpp"

namespace relrot::nn {

namespace {

std::atomic<Backend> g_backend{Backend::Omp};

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Param make_param(std::string name, std::size_t n, double fill = 0.0) {
  return Param{std::move(name), std::vector<double>(n, fill), std::vector<double>(n, 0.0)};
}

void he_normal(Param& p, std::mt19937_64& rng, double fan_in, double gain) {
  std::normal_distribution<double> dist(0.0, std::sqrt(gain / fan_in));
  for (double& v : p.value) v = dist(rng);
}

}  // namespace

void set_backend(Backend b) { g_backend.store(b); }
Backend backend() { return g_backend.load(); }

// ---------------------------------------------------------------------------

Conv2d::Conv2d(std::string name, int in_c, int out_c, int kernel, int stride, int pad, bool bias)
    : in_c_(in_c), out_c_(out_c), kernel_(kernel), stride_(stride), pad_(pad) {
  if (in_c <= 0 || out_c <= 0 || kernel <= 0 || stride <= 0 || pad < 0) {
    throw std::invalid_argument("Conv2d " + name + ": invalid geometry");
  }
  w_ = make_param(name + ".weight", std::size_t(out_c) * in_c * kernel * kernel);
  if (bias) b_ = make_param(name + ".bias", std::size_t(out_c));
}

Tensor Conv2d::infer(const Tensor& x) const {
  const Shape s = x.shape();
  if (s.c != in_c_) throw std::invalid_argument(w_.name + ": channel mismatch " + s.str());
  kernels::ConvGeometry g{s.n, s.c, s.h, s.w, out_c_, kernel_, stride_, pad_};
  Tensor y(Shape{s.n, out_c_, g.out_h(), g.out_w()});
  if (backend() == Backend::Omp) {
    kernels::omp::conv2d_forward(g, x.data(), w_.value, b_.value, y.data());
  } else {
    kernels::serial::conv2d_forward(g, x.data(), w_.value, b_.value, y.data());
  }
  return y;
}

Tensor Conv2d::forward(const Tensor& x) {
  Tensor y = infer(x);
  x_ = x;
  return y;
}

Tensor Conv2d::backward(const Tensor& dy, bool need_dx) {
  const Shape s = x_.shape();
  kernels::ConvGeometry g{s.n, s.c, s.h, s.w, out_c_, kernel_, stride_, pad_};
  Tensor dx;
  if (need_dx) dx = Tensor(s);
  if (backend() == Backend::Omp) {
    kernels::omp::conv2d_backward(g, x_.data(), w_.value, dy.data(), dx.data(), w_.grad, b_.grad);
  } else {
    kernels::serial::conv2d_backward(g, x_.data(), w_.value, dy.data(), dx.data(), w_.grad, b_.grad);
  }
  return dx;
}

void Conv2d::init(std::mt19937_64& rng) {
  he_normal(w_, rng, double(in_c_) * kernel_ * kernel_, 2.0);
  std::fill(b_.value.begin(), b_.value.end(), 0.0);
}

void Conv2d::collect(std::vector<Param*>& out) {
  out.push_back(&w_);
  if (b_.size() > 0) out.push_back(&b_);
}

// ---------------------------------------------------------------------------

BatchNorm2d::BatchNorm2d(std::string name, int channels, double momentum, double eps)
    : channels_(channels), momentum_(momentum), eps_(eps) {
  gamma_ = make_param(name + ".gamma", std::size_t(channels), 1.0);
  beta_ = make_param(name + ".beta", std::size_t(channels), 0.0);
  running_mean_ = Buffer{name + ".running_mean", std::vector<double>(std::size_t(channels), 0.0)};
  running_var_ = Buffer{name + ".running_var", std::vector<double>(std::size_t(channels), 1.0)};
}

Tensor BatchNorm2d::forward(const Tensor& x) {
  const Shape s = x.shape();
  if (s.c != channels_) throw std::invalid_argument(gamma_.name + ": channel mismatch");
  const std::size_t plane = std::size_t(s.h) * s.w;
  const double count = double(s.n) * plane;
  Tensor y(s);
  xhat_ = Tensor(s);
  invstd_.assign(std::size_t(channels_), 0.0);
  for (int c = 0; c < channels_; ++c) {
    double sum = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const std::size_t off = (std::size_t(n) * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) sum += x[off + i];
    }
    const double mean = sum / count;
    double sq = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const std::size_t off = (std::size_t(n) * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) sq += (x[off + i] - mean) * (x[off + i] - mean);
    }
    const double var = sq / count;
    const double unbiased = count > 1 ? sq / (count - 1) : var;
    running_mean_.value[c] = (1 - momentum_) * running_mean_.value[c] + momentum_ * mean;
    running_var_.value[c] = (1 - momentum_) * running_var_.value[c] + momentum_ * unbiased;

    const double inv = 1.0 / std::sqrt(var + eps_);
    invstd_[c] = inv;
    const double g = gamma_.value[c], b = beta_.value[c];
    for (int n = 0; n < s.n; ++n) {
      const std::size_t off = (std::size_t(n) * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double xh = (x[off + i] - mean) * inv;
        xhat_[off + i] = xh;
        y[off + i] = g * xh + b;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::infer(const Tensor& x) const {
  const Shape s = x.shape();
  if (s.c != channels_) throw std::invalid_argument(gamma_.name + ": channel mismatch");
  const std::size_t plane = std::size_t(s.h) * s.w;
  Tensor y(s);
  for (int c = 0; c < channels_; ++c) {
    const double inv = 1.0 / std::sqrt(running_var_.value[c] + eps_);
    const double scale = gamma_.value[c] * inv;
    const double shift = beta_.value[c] - running_mean_.value[c] * scale;
    for (int n = 0; n < s.n; ++n) {
      const std::size_t off = (std::size_t(n) * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) y[off + i] = scale * x[off + i] + shift;
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
  const Shape s = dy.shape();
  const std::size_t plane = std::size_t(s.h) * s.w;
  const double count = double(s.n) * plane;
  Tensor dx(s);
  for (int c = 0; c < channels_; ++c) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const std::size_t off = (std::size_t(n) * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += dy[off + i];
        sum_dy_xh += dy[off + i] * xhat_[off + i];
      }
    }
    gamma_.grad[c] += sum_dy_xh;
    beta_.grad[c] += sum_dy;
    const double g = gamma_.value[c], inv = invstd_[c];
    for (int n = 0; n < s.n; ++n) {
      const std::size_t off = (std::size_t(n) * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        dx[off + i] = g * inv / count * (count * dy[off + i] - sum_dy - xhat_[off + i] * sum_dy_xh);
      }
    }
  }
  return dx;
}

void BatchNorm2d::collect(std::vector<Param*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

void BatchNorm2d::collect(std::vector<Buffer*>& out) {
  out.push_back(&running_mean_);
  out.push_back(&running_var_);
}

// ---------------------------------------------------------------------------

Tensor ReLU::forward(const Tensor& x) {
  Tensor y(x.shape());
  mask_.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask_[i] = x[i] > 0.0;
    y[i] = mask_[i] ? x[i] : 0.0;
  }
  return y;
}

Tensor ReLU::infer(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Tensor ReLU::backward(const Tensor& dy) const {
  Tensor dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = mask_[i] ? dy[i] : 0.0;
  return dx;
}

Tensor Upsample2x::forward(const Tensor& x) {
  in_shape_ = x.shape();
  return infer(x);
}

Tensor Upsample2x::infer(const Tensor& x) {
  const Shape s = x.shape();
  Tensor y(Shape{s.n, s.c, 2 * s.h, 2 * s.w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int h = 0; h < 2 * s.h; ++h)
        for (int w = 0; w < 2 * s.w; ++w) y.at(n, c, h, w) = x.at(n, c, h / 2, w / 2);
  return y;
}

Tensor Upsample2x::backward(const Tensor& dy) const {
  const Shape s = in_shape_;
  Tensor dx(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int h = 0; h < 2 * s.h; ++h)
        for (int w = 0; w < 2 * s.w; ++w) dx.at(n, c, h / 2, w / 2) += dy.at(n, c, h, w);
  return dx;
}

// ---------------------------------------------------------------------------

Linear::Linear(std::string name, int in, int out) : in_(in), out_(out) {
  if (in <= 0 || out <= 0) throw std::invalid_argument("Linear " + name + ": invalid size");
  w_ = make_param(name + ".weight", std::size_t(out) * in);
  b_ = make_param(name + ".bias", std::size_t(out));
}

Tensor Linear::infer(const Tensor& x) const {
  const Shape s = x.shape();
  if (static_cast<int>(s.item_size()) != in_) {
    throw std::invalid_argument(w_.name + ": input size mismatch " + s.str());
  }
  Tensor y(Shape{s.n, out_, 1, 1});
  const Eigen::Map<const RowMat> xm(x.data().data(), s.n, in_);
  const Eigen::Map<const RowMat> wm(w_.value.data(), out_, in_);
  Eigen::Map<RowMat> ym(y.data().data(), s.n, out_);
  ym.noalias() = xm * wm.transpose();
  for (int n = 0; n < s.n; ++n)
    for (int o = 0; o < out_; ++o) ym(n, o) += b_.value[o];
  return y;
}

Tensor Linear::forward(const Tensor& x) {
  Tensor y = infer(x);
  in_shape_ = x.shape();
  x_ = x;
  return y;
}

Tensor Linear::backward(const Tensor& dy) {
  const int n = in_shape_.n;
  const Eigen::Map<const RowMat> xm(x_.data().data(), n, in_);
  const Eigen::Map<const RowMat> wm(w_.value.data(), out_, in_);
  const Eigen::Map<const RowMat> dym(dy.data().data(), n, out_);
  Eigen::Map<RowMat>(w_.grad.data(), out_, in_).noalias() += dym.transpose() * xm;
  for (int i = 0; i < n; ++i)
    for (int o = 0; o < out_; ++o) b_.grad[o] += dym(i, o);
  Tensor dx(in_shape_);
  Eigen::Map<RowMat>(dx.data().data(), n, in_).noalias() = dym * wm;
  return dx;
}

void Linear::init(std::mt19937_64& rng, double gain) {
  he_normal(w_, rng, double(in_), gain);
  std::fill(b_.value.begin(), b_.value.end(), 0.0);
}

void Linear::collect(std::vector<Param*>& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

// ---------------------------------------------------------------------------

PreActBlock::PreActBlock(const std::string& name, int in_c, int out_c, int stride)
    : project_(in_c != out_c || stride != 1),
      bn1_(name + ".bn1", in_c),
      bn2_(name + ".bn2", out_c),
      conv1_(name + ".conv1", in_c, out_c, 3, stride, 1, false),
      conv2_(name + ".conv2", out_c, out_c, 3, 1, 1, false) {
  if (project_) shortcut_ = Conv2d(name + ".shortcut", in_c, out_c, 1, stride, 0, false);
}

Tensor PreActBlock::forward(const Tensor& x) {
  const Tensor a = relu1_.forward(bn1_.forward(x));
  Tensor h = conv2_.forward(relu2_.forward(bn2_.forward(conv1_.forward(a))));
  h += project_ ? shortcut_.forward(a) : x;
  return h;
}

Tensor PreActBlock::infer(const Tensor& x) const {
  const Tensor a = ReLU::infer(bn1_.infer(x));
  Tensor h = conv2_.infer(ReLU::infer(bn2_.infer(conv1_.infer(a))));
  h += project_ ? shortcut_.infer(a) : x;
  return h;
}

Tensor PreActBlock::backward(const Tensor& dy) {
  Tensor da = conv1_.backward(bn2_.backward(relu2_.backward(conv2_.backward(dy))));
  if (project_) da += shortcut_.backward(dy);
  Tensor dx = bn1_.backward(relu1_.backward(da));
  if (!project_) dx += dy;
  return dx;
}

void PreActBlock::init(std::mt19937_64& rng) {
  conv1_.init(rng);
  conv2_.init(rng);
  if (project_) shortcut_.init(rng);
}

void PreActBlock::collect(std::vector<Param*>& out) {
  bn1_.collect(out);
  conv1_.collect(out);
  bn2_.collect(out);
  conv2_.collect(out);
  if (project_) shortcut_.collect(out);
}

void PreActBlock::collect(std::vector<Buffer*>& out) {
  bn1_.collect(out);
  bn2_.collect(out);
}

std::size_t PreActBlock::param_count() const {
  return bn1_.param_count() + conv1_.param_count() + bn2_.param_count() + conv2_.param_count() +
         (project_ ? shortcut_.param_count() : 0);
}

// ---------------------------------------------------------------------------

double cross_entropy(const Tensor& logits, const std::vector<int>& targets, double scale,
                     Tensor* grad) {
  const int rows = logits.shape().n;
  const int bins = static_cast<int>(logits.shape().item_size());
  if (static_cast<int>(targets.size()) != rows) {
    throw std::invalid_argument("cross_entropy: target count mismatch");
  }
  if (grad) *grad = Tensor(logits.shape());
  double total = 0.0;
  for (int r = 0; r < rows; ++r) {
    const auto z = logits.item(r);
    const int t = targets[r];
    if (t < 0 || t >= bins) throw std::invalid_argument("cross_entropy: target out of range");
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    total += lse - z[t];
    if (grad) {
      auto g = grad->item(r);
      for (int i = 0; i < bins; ++i) g[i] = scale * std::exp(z[i] - lse);
      g[t] -= scale;
    }
  }
  return total;
}

}  // namespace relrot::nn
