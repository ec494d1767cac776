// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>

#include "relrot/baselines.hpp"

namespace relrot {

namespace {

struct Orthonormalized {
  Eigen::Vector3d a1, a2, b1, u2, b2;
  double n1 = 0, n2 = 0;
  bool fallback1 = false, fallback2 = false;
};

Orthonormalized orthonormalize(std::span<const double, 6> v, double eps) {
  Orthonormalized o;
  o.a1 = {v[0], v[1], v[2]};
  o.a2 = {v[3], v[4], v[5]};
  o.n1 = o.a1.norm();
  o.fallback1 = !(o.n1 >= eps);
  o.b1 = o.fallback1 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d(o.a1 / o.n1);
  o.u2 = o.a2 - o.b1.dot(o.a2) * o.b1;
  o.n2 = o.u2.norm();
  o.fallback2 = o.fallback1 || !(o.n2 >= eps * std::max(1.0, o.a2.norm()));
  if (o.fallback2) {
    // Axis least aligned with b1, made orthogonal.
    Eigen::Index k;
    o.b1.cwiseAbs().minCoeff(&k);
    const Eigen::Vector3d e = Eigen::Vector3d::Unit(k);
    o.b2 = (e - o.b1.dot(e) * o.b1).normalized();
  } else {
    o.b2 = o.u2 / o.n2;
  }
  return o;
}

}  // namespace

Eigen::Matrix3d rotation_from_6d(std::span<const double, 6> v, double eps) {
  const Orthonormalized o = orthonormalize(v, eps);
  Eigen::Matrix3d r;
  r.col(0) = o.b1;
  r.col(1) = o.b2;
  r.col(2) = o.b1.cross(o.b2);
  return r;
}

std::array<double, 6> rotation_from_6d_backward(std::span<const double, 6> v,
                                                const Eigen::Matrix3d& dr, double eps) {
  const Orthonormalized o = orthonormalize(v, eps);
  const Eigen::Vector3d db3 = dr.col(2);
  Eigen::Vector3d db1 = dr.col(0) + o.b2.cross(db3);
  const Eigen::Vector3d db2 = dr.col(1) + db3.cross(o.b1);

  Eigen::Vector3d da1 = Eigen::Vector3d::Zero(), da2 = Eigen::Vector3d::Zero();
  if (!o.fallback2) {
    const Eigen::Vector3d du2 = (db2 - o.b2 * o.b2.dot(db2)) / o.n2;
    da2 = du2 - o.b1 * o.b1.dot(du2);
    db1 -= o.b1.dot(o.a2) * du2 + o.a2 * o.b1.dot(du2);
  }
  if (!o.fallback1) da1 = (db1 - o.b1 * o.b1.dot(db1)) / o.n1;
  return {da1(0), da1(1), da1(2), da2(0), da2(1), da2(2)};
}

double reg6d_loss(const Eigen::Matrix3d& pred, const RotationMatrix& gt) {
  return (pred - gt.matrix()).squaredNorm();
}

double reg6d_batch_loss(const Tensor& out, std::span<const RelPoseParam> gt, Tensor* grad) {
  const int b = out.shape().n;
  if (static_cast<int>(out.shape().item_size()) != 6 || static_cast<int>(gt.size()) != b) {
    throw std::invalid_argument("reg6d_batch_loss: expected (B, 6) outputs and B labels");
  }
  if (grad) *grad = Tensor(out.shape());
  double total = 0.0;
  for (int n = 0; n < b; ++n) {
    const std::span<const double, 6> v(out.item(n).data(), 6);
    const RotationMatrix target = relative_from_params(gt[std::size_t(n)]);
    const Eigen::Matrix3d r = rotation_from_6d(v);
    total += reg6d_loss(r, target);
    if (grad) {
      const auto g = rotation_from_6d_backward(v, 2.0 * (r - target.matrix()) / b);
      std::copy(g.begin(), g.end(), grad->item(n).begin());
    }
  }
  return total / b;
}

// ---------------------------------------------------------------------------

Reg6DNet::Reg6DNet(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  encoder_ = Encoder(cfg_.encoder);
  head_ = DecoderHead("reg6d", 2 * cfg_.encoder.out_channels, cfg_.feature_size(), cfg_.decoder, 6);
  std::mt19937_64 rng(cfg_.seed);
  encoder_.init(rng);
  head_.init(rng);
}

Tensor Reg6DNet::normalize(const Tensor& img) const {
  const Shape s = img.shape();
  if (s.c != 3 || s.h != cfg_.encoder.input_size || s.w != cfg_.encoder.input_size) {
    throw std::invalid_argument("Reg6DNet: unexpected input shape " + s.str());
  }
  Tensor out(s);
  const std::size_t plane = std::size_t(s.h) * s.w;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < 3; ++c) {
      const std::size_t off = (std::size_t(n) * 3 + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        out[off + i] = (img[off + i] - norm_.mean[c]) / norm_.stddev[c];
      }
    }
  return out;
}

Tensor Reg6DNet::forward(const Tensor& img1, const Tensor& img2) {
  if (img1.shape() != img2.shape()) throw std::invalid_argument("Reg6DNet: batch shape mismatch");
  batch_ = img1.shape().n;
  const Tensor f = encoder_.forward(concat_batch(normalize(img1), normalize(img2)));
  return head_.forward(concat_channels(slice_batch(f, 0, batch_), slice_batch(f, batch_, batch_)));
}

Tensor Reg6DNet::infer(const Tensor& img1, const Tensor& img2) const {
  if (img1.shape() != img2.shape()) throw std::invalid_argument("Reg6DNet: batch shape mismatch");
  const int b = img1.shape().n;
  const Tensor f = encoder_.infer(concat_batch(normalize(img1), normalize(img2)));
  return head_.infer(concat_channels(slice_batch(f, 0, b), slice_batch(f, b, b)));
}

void Reg6DNet::backward(const Tensor& dout) {
  const Tensor din = head_.backward(dout);
  Tensor df1, df2;
  split_channels(din, cfg_.encoder.out_channels, df1, df2);
  encoder_.backward(concat_batch(df1, df2), false);
}

RotationMatrix Reg6DNet::predict(const Image& img1, const Image& img2) const {
  const int s = cfg_.encoder.input_size;
  const Tensor out = infer(image_to_tensor(img1, s), image_to_tensor(img2, s));
  return RotationMatrix::from_matrix(rotation_from_6d(std::span<const double, 6>(out.item(0).data(), 6)),
                                     1e-6);
}

std::vector<nn::Param*> Reg6DNet::parameters() {
  std::vector<nn::Param*> out;
  encoder_.collect(out);
  head_.collect(out);
  return out;
}

std::vector<nn::Buffer*> Reg6DNet::buffers() {
  std::vector<nn::Buffer*> out;
  encoder_.collect(out);
  head_.collect(out);
  return out;
}

double Reg6DNet::train_step(const Tensor& img1, const Tensor& img2,
                            std::span<const RelPoseParam> labels) {
  const Tensor out = forward(img1, img2);
  Tensor grad;
  const double l = reg6d_batch_loss(out, labels, &grad);
  backward(grad);
  return l;
}

nlohmann::json Reg6DNet::describe() const {
  return {{"model", cfg_}, {"normalization", norm_}};
}

Reg6DNet reg6d_from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != "reg6d") {
    throw std::runtime_error("checkpoint holds a '" + ck.kind + "' model, not a 6D regression model");
  }
  Reg6DNet net(ck.header.at("model").get<ModelConfig>());
  net.set_normalization(ck.header.at("normalization").get<InputNormalization>());
  restore(net.parameters(), ck.params);
  restore(net.buffers(), ck.buffers);
  return net;
}

Estimate Reg6DEstimator::estimate(const PairInput& in) const {
  return {net_.predict(in.img1, in.img2), true, 0};
}

}  // namespace relrot
