// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace relrot {

/// NCHW extent. Matrices use (n, c, 1, 1).
struct Shape {
  int n = 1, c = 1, h = 1, w = 1;

  std::size_t size() const { return std::size_t(n) * c * h * w; }
  std::size_t item_size() const { return std::size_t(c) * h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense row-major NCHW tensor of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape_(s), data_(s.size(), fill) {}

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> item(int n) { return {data_.data() + n * shape_.item_size(), shape_.item_size()}; }
  std::span<const double> item(int n) const {
    return {data_.data() + n * shape_.item_size(), shape_.item_size()};
  }

  double& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
  double at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Reinterprets the buffer with a new shape of equal size.
  void reshape(Shape s) {
    if (s.size() != data_.size()) throw std::invalid_argument("Tensor::reshape: size mismatch");
    shape_ = s;
  }
  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  Tensor& operator+=(const Tensor& o);

 private:
  std::size_t offset(int n, int c, int h, int w) const {
    return ((std::size_t(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  Shape shape_{0, 0, 0, 0};
  std::vector<double> data_;
};

/// Concatenates along channels; both tensors share n, h, w.
Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Splits along channels at `first_c`.
void split_channels(const Tensor& t, int first_c, Tensor& a, Tensor& b);
/// Concatenates along the batch axis.
Tensor concat_batch(const Tensor& a, const Tensor& b);
/// Rows [begin, begin + count) of the batch axis.
Tensor slice_batch(const Tensor& t, int begin, int count);

}  // namespace relrot
