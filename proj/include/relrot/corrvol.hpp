// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "relrot/tensor.hpp"

namespace relrot {

/// Dense K x h x w descriptor map of one image.
struct FeatureMap {
  Tensor data;  // shape (1, K, h, w)
  std::string image_id;

  int channels() const { return data.shape().c; }
  int height() const { return data.shape().h; }
  int width() const { return data.shape().w; }
};

/// All-pairs feature scores: entry (p, q, r, s) correlates position (p, q) of
/// image 1 with position (r, s) of image 2.
class CorrelationVolume {
 public:
  CorrelationVolume() = default;
  CorrelationVolume(int h, int w) : h_(h), w_(w), data_(std::size_t(h) * w * h * w, 0.0) {}

  int height() const { return h_; }
  int width() const { return w_; }
  double& at(int p, int q, int r, int s) { return data_[index(p, q, r, s)]; }
  double at(int p, int q, int r, int s) const { return data_[index(p, q, r, s)]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t index(int p, int q, int r, int s) const {
    return ((std::size_t(p) * w_ + q) * h_ + r) * w_ + s;
  }
  int h_ = 0, w_ = 0;
  std::vector<double> data_;
};

/// Raw dot products computed as one matrix product per pair.
CorrelationVolume correlate(const FeatureMap& f1, const FeatureMap& f2);
/// Quadruple-loop definition, kept for verification.
CorrelationVolume correlate_reference(const FeatureMap& f1, const FeatureMap& f2);

/// Per-position L2 normalization of a feature map (optional pre-correlation step).
FeatureMap l2_normalize(const FeatureMap& f, double eps = 1e-12);

/// (h*w, h, w) decoder input: channel p*w + q holds the slice over (r, s).
Tensor flatten_for_decoder(const CorrelationVolume& v);
CorrelationVolume unflatten_from_decoder(const Tensor& t);

/// Debug dump: `<stem>.bin` (little-endian float64) plus `<stem>.json` shape sidecar.
void dump_volume(const std::filesystem::path& stem, const CorrelationVolume& v);
CorrelationVolume load_volume(const std::filesystem::path& stem);

}  // namespace relrot
