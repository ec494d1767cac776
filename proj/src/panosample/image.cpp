// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include "relrot/image.hpp"

#include <openssl/sha.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace relrot {

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("Image: non-positive size");
  data_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill[0];
    data_[i + 1] = fill[1];
    data_[i + 2] = fill[2];
  }
}

Rgb Image::pixel(int x, int y) const {
  const std::size_t i = index(x, y);
  return {data_[i], data_[i + 1], data_[i + 2]};
}

void Image::set_pixel(int x, int y, const Rgb& rgb) {
  const std::size_t i = index(x, y);
  data_[i] = rgb[0];
  data_[i + 1] = rgb[1];
  data_[i + 2] = rgb[2];
}

Image resize_bilinear(const Image& img, int width, int height) {
  if (img.empty()) throw std::invalid_argument("resize_bilinear: empty image");
  if (width == img.width() && height == img.height()) return img;
  Image out(width, height);
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double tx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1 - tx) * img.at(x0, y0, c) + tx * img.at(x1, y0, c);
        const double bot = (1 - tx) * img.at(x0, y1, c) + tx * img.at(x1, y1, c);
        out.at(x, y, c) = static_cast<float>((1 - ty) * top + ty * bot);
      }
    }
  }
  return out;
}

Rgb mean_color(const Image& img) { return mean_color(std::span<const Image>(&img, 1)); }

Rgb mean_color(std::span<const Image> imgs) {
  std::array<double, 3> acc{};
  std::size_t n = 0;
  for (const Image& img : imgs) {
    const auto d = img.data();
    for (std::size_t i = 0; i < d.size(); i += 3) {
      acc[0] += d[i];
      acc[1] += d[i + 1];
      acc[2] += d[i + 2];
    }
    n += d.size() / 3;
  }
  if (n == 0) throw std::invalid_argument("mean_color: no pixels");
  return {static_cast<float>(acc[0] / n), static_cast<float>(acc[1] / n),
          static_cast<float>(acc[2] / n)};
}

void fill_rect(Image& img, int x0, int y0, int w, int h, const Rgb& color) {
  const int xa = std::max(0, x0), ya = std::max(0, y0);
  const int xb = std::min(img.width(), x0 + w), yb = std::min(img.height(), y0 + h);
  for (int y = ya; y < yb; ++y)
    for (int x = xa; x < xb; ++x) img.set_pixel(x, y, color);
}

double mean_abs_diff(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument("mean_abs_diff: size mismatch");
  }
  const auto da = a.data(), db = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) acc += std::abs(double(da[i]) - double(db[i]));
  return acc / static_cast<double>(da.size());
}

namespace {

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.f, 1.f) * 255.f));
}

}  // namespace

Image quantize8(const Image& img) {
  Image out = img;
  for (float& v : out.data()) v = to_byte(v) / 255.f;
  return out;
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.empty()) throw std::invalid_argument("encode_png: empty image");
  std::vector<std::uint8_t> raw(img.data().size());
  std::transform(img.data().begin(), img.data().end(), raw.begin(), to_byte);

  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width());
  pi.height = static_cast<png_uint_32>(img.height());
  pi.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&pi, nullptr, &size, 0, raw.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("encode_png: ") + pi.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&pi, out.data(), &size, 0, raw.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("encode_png: ") + pi.message);
  }
  out.resize(size);
  return out;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&pi, bytes.data(), bytes.size())) {
    throw std::runtime_error(std::string("decode_png: ") + pi.message);
  }
  pi.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(pi));
  if (!png_image_finish_read(&pi, nullptr, raw.data(), 0, nullptr)) {
    png_image_free(&pi);
    throw std::runtime_error(std::string("decode_png: ") + pi.message);
  }
  Image img(static_cast<int>(pi.width), static_cast<int>(pi.height));
  std::transform(raw.begin(), raw.end(), img.data().begin(),
                 [](std::uint8_t b) { return b / 255.f; });
  return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  const auto bytes = encode_png(img);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_png: cannot open " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Image read_png(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_png: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(bytes.data(), bytes.size(), digest);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

}  // namespace relrot
