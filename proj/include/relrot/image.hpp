// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace relrot {

using Rgb = std::array<float, 3>;

/// Interleaved RGB image with channel values in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {0.f, 0.f, 0.f});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  float& at(int x, int y, int c) { return data_[index(x, y) + c]; }
  float at(int x, int y, int c) const { return data_[index(x, y) + c]; }
  Rgb pixel(int x, int y) const;
  void set_pixel(int x, int y, const Rgb& rgb);

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// Bilinear resampling with half-pixel centers (no corner alignment).
Image resize_bilinear(const Image& img, int width, int height);

Rgb mean_color(const Image& img);
/// Mean color over a set of images, weighted by pixel count.
Rgb mean_color(std::span<const Image> imgs);

/// Fills the rectangle [x0, x0+w) x [y0, y0+h), clipped to the image.
void fill_rect(Image& img, int x0, int y0, int w, int h, const Rgb& color);

/// Mean absolute channel difference; images must share dimensions.
double mean_abs_diff(const Image& a, const Image& b);

// 8-bit RGB PNG codec. Values are rounded to the nearest 1/255 step.
std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(std::span<const std::uint8_t> bytes);
void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);

/// Rounds every channel to the 8-bit grid, matching a PNG round trip.
Image quantize8(const Image& img);

/// Lowercase hex SHA-256 of a byte buffer.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

}  // namespace relrot
