// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include "relrot/corrvol.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "relrot/kernels.hpp"

namespace relrot {

namespace {

void check_pair(const FeatureMap& f1, const FeatureMap& f2) {
  const Shape a = f1.data.shape(), b = f2.data.shape();
  if (a.n != 1 || b.n != 1) throw std::invalid_argument("correlate: feature maps must be single items");
  if (a.c != b.c || a.h != b.h || a.w != b.w) {
    throw std::invalid_argument("correlate: shape mismatch " + a.str() + " vs " + b.str());
  }
}

}  // namespace

CorrelationVolume correlate(const FeatureMap& f1, const FeatureMap& f2) {
  check_pair(f1, f2);
  CorrelationVolume v(f1.height(), f1.width());
  const kernels::CorrGeometry g{1, f1.channels(), f1.height() * f1.width()};
  kernels::omp::correlate(g, f1.data.data(), f2.data.data(), v.data());
  return v;
}

CorrelationVolume correlate_reference(const FeatureMap& f1, const FeatureMap& f2) {
  check_pair(f1, f2);
  const int h = f1.height(), w = f1.width(), k = f1.channels();
  CorrelationVolume v(h, w);
  for (int p = 0; p < h; ++p)
    for (int q = 0; q < w; ++q)
      for (int r = 0; r < h; ++r)
        for (int s = 0; s < w; ++s) {
          double acc = 0.0;
          for (int c = 0; c < k; ++c) acc += f1.data.at(0, c, p, q) * f2.data.at(0, c, r, s);
          v.at(p, q, r, s) = acc;
        }
  return v;
}

FeatureMap l2_normalize(const FeatureMap& f, double eps) {
  FeatureMap out = f;
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) {
      double sq = 0.0;
      for (int c = 0; c < f.channels(); ++c) sq += f.data.at(0, c, y, x) * f.data.at(0, c, y, x);
      const double inv = 1.0 / std::max(std::sqrt(sq), eps);
      for (int c = 0; c < f.channels(); ++c) out.data.at(0, c, y, x) *= inv;
    }
  return out;
}

Tensor flatten_for_decoder(const CorrelationVolume& v) {
  const int h = v.height(), w = v.width();
  Tensor t(Shape{1, h * w, h, w});
  std::copy(v.data().begin(), v.data().end(), t.data().begin());
  return t;
}

CorrelationVolume unflatten_from_decoder(const Tensor& t) {
  const Shape s = t.shape();
  if (s.n != 1 || s.c != s.h * s.w) {
    throw std::invalid_argument("unflatten_from_decoder: expected (1, h*w, h, w), got " + s.str());
  }
  CorrelationVolume v(s.h, s.w);
  std::copy(t.data().begin(), t.data().end(), v.data().begin());
  return v;
}

void dump_volume(const std::filesystem::path& stem, const CorrelationVolume& v) {
  auto bin = stem;
  bin += ".bin";
  auto meta = stem;
  meta += ".json";
  std::ofstream f(bin, std::ios::binary);
  if (!f) throw std::runtime_error("dump_volume: cannot open " + bin.string());
  f.write(reinterpret_cast<const char*>(v.data().data()),
          static_cast<std::streamsize>(v.data().size() * sizeof(double)));
  const int h = v.height(), w = v.width();
  std::ofstream m(meta);
  m << nlohmann::json{{"dtype", "float64"}, {"order", "p,q,r,s"}, {"shape", {h, w, h, w}}}.dump(2)
    << '\n';
}

CorrelationVolume load_volume(const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".bin";
  auto meta = stem;
  meta += ".json";
  std::ifstream m(meta);
  if (!m) throw std::runtime_error("load_volume: cannot open " + meta.string());
  const auto j = nlohmann::json::parse(m);
  const auto shape = j.at("shape").get<std::vector<int>>();
  if (shape.size() != 4 || shape[0] != shape[2] || shape[1] != shape[3]) {
    throw std::runtime_error("load_volume: bad shape in " + meta.string());
  }
  CorrelationVolume v(shape[0], shape[1]);
  std::ifstream f(bin, std::ios::binary);
  f.read(reinterpret_cast<char*>(v.data().data()),
         static_cast<std::streamsize>(v.data().size() * sizeof(double)));
  if (!f) throw std::runtime_error("load_volume: truncated " + bin.string());
  return v;
}

}  // namespace relrot
