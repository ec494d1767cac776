// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <stdexcept>

#include "relrot/common.hpp"
#include "relrot/netmodel.hpp"

namespace relrot {

namespace {

double circular_mean(const AngleDistribution& d) {
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double a = deg2rad(bin_to_angle(static_cast<int>(i)));
    s += d[i] * std::sin(a);
    c += d[i] * std::cos(a);
  }
  return wrap_degrees(rad2deg(std::atan2(s, c)));
}

}  // namespace

RotationMatrix rotation_from_angles(const std::array<double, 3>& a, Parameterization p) {
  if (p == Parameterization::Relative) return relative_from_params({a[0], a[1], a[2]});
  return euler_to_matrix({a[0], a[1], a[2]});
}

std::array<double, 3> target_angles(const RelPoseParam& gt, Parameterization p) {
  if (p == Parameterization::Relative) return {gt.beta1, gt.beta2, gt.delta_gamma};
  const EulerTriple e = matrix_to_euler(relative_from_params(gt));
  return {e.alpha, e.beta, e.gamma};
}

Prediction make_prediction(std::array<std::vector<double>, 3> logits, Parameterization p,
                           Decoding d) {
  Prediction pred;
  pred.parameterization = p;
  for (int i = 0; i < 3; ++i) {
    if (logits[i].size() != 360) throw std::invalid_argument("make_prediction: expected 360 logits");
    for (double v : logits[i]) {
      if (!std::isfinite(v)) throw std::invalid_argument("make_prediction: non-finite logit");
    }
    pred.distributions[i] = AngleDistribution::from_logits(logits[i]);
    pred.decoded[i] = d == Decoding::Argmax ? bin_to_angle(pred.distributions[i].argmax())
                                            : circular_mean(pred.distributions[i]);
  }
  pred.logits = std::move(logits);
  pred.rotation = rotation_from_angles(pred.decoded, p);
  return pred;
}

RotationMatrix predict_rotation(const Prediction& pred) {
  std::array<double, 3> a;
  for (int i = 0; i < 3; ++i) a[i] = bin_to_angle(pred.distributions[i].argmax());
  return rotation_from_angles(a, pred.parameterization);
}

double loss(const Prediction& pred, const RelPoseParam& gt) {
  const auto target = target_angles(gt, pred.parameterization);
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto& z = pred.logits[i];
    Tensor t(Shape{1, static_cast<int>(z.size()), 1, 1});
    std::copy(z.begin(), z.end(), t.data().begin());
    total += nn::cross_entropy(t, {angle_to_bin(target[i])}, 1.0, nullptr);
  }
  return total;
}

double batch_loss(const std::array<Tensor, 3>& logits, std::span<const RelPoseParam> gt,
                  Parameterization p, std::array<Tensor, 3>* grads) {
  const int b = logits[0].shape().n;
  if (static_cast<int>(gt.size()) != b) throw std::invalid_argument("batch_loss: label count mismatch");
  std::array<std::vector<int>, 3> targets;
  for (const auto& g : gt) {
    const auto a = target_angles(g, p);
    for (int i = 0; i < 3; ++i) targets[i].push_back(angle_to_bin(a[i]));
  }
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    total += nn::cross_entropy(logits[i], targets[i], 1.0 / b, grads ? &(*grads)[i] : nullptr);
  }
  return total / b;
}

Tensor image_to_tensor(const Image& img, int size) {
  return images_to_tensor(std::span<const Image>(&img, 1), size);
}

Tensor images_to_tensor(std::span<const Image> imgs, int size) {
  Tensor t(Shape{static_cast<int>(imgs.size()), 3, size, size});
  const std::size_t plane = std::size_t(size) * size;
  for (std::size_t n = 0; n < imgs.size(); ++n) {
    Image resized;
    const bool fits = imgs[n].width() == size && imgs[n].height() == size;
    if (!fits) resized = resize_bilinear(imgs[n], size, size);
    const Image& im = fits ? imgs[n] : resized;
    auto item = t.item(static_cast<int>(n));
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        for (int c = 0; c < 3; ++c) item[c * plane + std::size_t(y) * size + x] = im.at(x, y, c);
  }
  return t;
}

}  // namespace relrot
