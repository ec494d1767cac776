// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>

#include "relrot/baselines.hpp"

namespace relrot {

namespace {

struct Gray {
  int w = 0, h = 0;
  std::vector<double> v;
  double at(int x, int y) const { return v[std::size_t(y) * w + x]; }
  double& at(int x, int y) { return v[std::size_t(y) * w + x]; }
};

Gray to_gray(const Image& img) {
  Gray g{img.width(), img.height(), std::vector<double>(std::size_t(img.width()) * img.height())};
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x)
      g.at(x, y) = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
  return g;
}

// Separable [1 4 6 4 1] / 16 smoothing with clamped borders.
Gray smooth(const Gray& in) {
  static constexpr double k[5] = {1 / 16., 4 / 16., 6 / 16., 4 / 16., 1 / 16.};
  Gray tmp = in, out = in;
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x) {
      double s = 0;
      for (int i = -2; i <= 2; ++i) s += k[i + 2] * in.at(std::clamp(x + i, 0, in.w - 1), y);
      tmp.at(x, y) = s;
    }
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x) {
      double s = 0;
      for (int i = -2; i <= 2; ++i) s += k[i + 2] * tmp.at(x, std::clamp(y + i, 0, in.h - 1));
      out.at(x, y) = s;
    }
  return out;
}

struct Feature {
  Eigen::Vector2d p;
  std::vector<double> desc;
};

std::vector<Feature> describe(const Gray& g, const std::vector<Eigen::Vector2d>& corners, int patch) {
  const int r = patch / 2;
  std::vector<Feature> out;
  for (const auto& c : corners) {
    const int cx = int(c.x()), cy = int(c.y());
    Feature f{c, {}};
    f.desc.reserve(std::size_t(patch) * patch);
    double mean = 0;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) f.desc.push_back(g.at(cx + dx, cy + dy));
    for (double v : f.desc) mean += v;
    mean /= double(f.desc.size());
    double norm = 0;
    for (double& v : f.desc) {
      v -= mean;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (double& v : f.desc) v /= norm;
    out.push_back(std::move(f));
  }
  return out;
}

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Index of the nearest neighbour of each feature in `to`, -1 when the ratio
// test fails.
std::vector<int> nearest(const std::vector<Feature>& from, const std::vector<Feature>& to,
                         double ratio) {
  std::vector<int> out(from.size(), -1);
  for (std::size_t i = 0; i < from.size(); ++i) {
    double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
    int best = -1;
    for (std::size_t j = 0; j < to.size(); ++j) {
      const double d = dist2(from[i].desc, to[j].desc);
      if (d < d1) {
        d2 = d1;
        d1 = d;
        best = int(j);
      } else if (d < d2) {
        d2 = d;
      }
    }
    if (best >= 0 && (to.size() == 1 || std::sqrt(d1) < ratio * std::sqrt(d2))) out[i] = best;
  }
  return out;
}

}  // namespace

std::vector<Eigen::Vector2d> CornerPatchMatcher::detect(const Image& img) const {
  const Gray g = to_gray(img);
  const int w = g.w, h = g.h;
  Gray ixx{w, h, std::vector<double>(g.v.size())}, iyy = ixx, ixy = ixx;
  for (int y = 1; y + 1 < h; ++y)
    for (int x = 1; x + 1 < w; ++x) {
      const double gx = (g.at(x + 1, y - 1) + 2 * g.at(x + 1, y) + g.at(x + 1, y + 1) -
                         g.at(x - 1, y - 1) - 2 * g.at(x - 1, y) - g.at(x - 1, y + 1)) / 8;
      const double gy = (g.at(x - 1, y + 1) + 2 * g.at(x, y + 1) + g.at(x + 1, y + 1) -
                         g.at(x - 1, y - 1) - 2 * g.at(x, y - 1) - g.at(x + 1, y - 1)) / 8;
      ixx.at(x, y) = gx * gx;
      iyy.at(x, y) = gy * gy;
      ixy.at(x, y) = gx * gy;
    }
  const Gray sxx = smooth(ixx), syy = smooth(iyy), sxy = smooth(ixy);
  Gray resp{w, h, std::vector<double>(g.v.size(), 0.0)};
  double peak = 0;
  for (std::size_t i = 0; i < resp.v.size(); ++i) {
    const double det = sxx.v[i] * syy.v[i] - sxy.v[i] * sxy.v[i];
    const double tr = sxx.v[i] + syy.v[i];
    resp.v[i] = det - opt_.harris_k * tr * tr;
    peak = std::max(peak, resp.v[i]);
  }
  const double thresh = std::max(opt_.rel_threshold * peak, 1e-10);
  const int margin = opt_.patch / 2 + 2, nr = opt_.nms_radius;
  std::vector<std::pair<double, Eigen::Vector2d>> cand;
  for (int y = margin; y < h - margin; ++y)
    for (int x = margin; x < w - margin; ++x) {
      const double v = resp.at(x, y);
      if (v <= thresh) continue;
      // Plateaus keep their first pixel in raster order.
      bool is_max = true;
      for (int dy = -nr; dy <= nr && is_max; ++dy)
        for (int dx = -nr; dx <= nr && is_max; ++dx) {
          if (!dx && !dy) continue;
          const double nv = resp.at(std::clamp(x + dx, 0, w - 1), std::clamp(y + dy, 0, h - 1));
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (nv > v || (nv == v && earlier)) is_max = false;
        }
      if (is_max) cand.emplace_back(v, Eigen::Vector2d(x, y));
    }
  std::stable_sort(cand.begin(), cand.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  if (int(cand.size()) > opt_.max_corners) cand.resize(std::size_t(opt_.max_corners));
  std::vector<Eigen::Vector2d> out;
  for (const auto& c : cand) out.push_back(c.second);
  return out;
}

std::vector<PixelMatch> CornerPatchMatcher::match(const Image& img1, const Image& img2) const {
  const auto f1 = describe(to_gray(img1), detect(img1), opt_.patch);
  const auto f2 = describe(to_gray(img2), detect(img2), opt_.patch);
  if (f1.empty() || f2.empty()) return {};
  const auto fwd = nearest(f1, f2, opt_.ratio);
  const auto bwd = nearest(f2, f1, opt_.ratio);
  std::vector<PixelMatch> out;
  for (std::size_t i = 0; i < f1.size(); ++i) {
    const int j = fwd[i];
    if (j >= 0 && bwd[std::size_t(j)] == int(i)) out.push_back({f1[i].p, f2[std::size_t(j)].p});
  }
  return out;
}

std::vector<BearingMatch> lift_matches(std::span<const PixelMatch> matches, const CameraSpec& cam) {
  std::vector<BearingMatch> out;
  out.reserve(matches.size());
  for (const auto& m : matches) {
    out.push_back({pixel_ray(cam, m.p1.x(), m.p1.y()), pixel_ray(cam, m.p2.x(), m.p2.y())});
  }
  return out;
}

std::vector<BearingMatch> detect_and_match(const Image& img1, const Image& img2,
                                           const CameraSpec& cam, const FeatureMatcher& matcher) {
  const auto px = matcher.match(img1, img2);
  return lift_matches(px, cam);
}

ClassicalEstimator::ClassicalEstimator(CameraSpec intrinsics, ClassicalMode mode,
                                       std::shared_ptr<const FeatureMatcher> matcher,
                                       RansacOptions ransac, EssentialOptions essential)
    : cam_(intrinsics),
      mode_(mode),
      matcher_(matcher ? std::move(matcher) : std::make_shared<CornerPatchMatcher>()),
      ransac_(ransac),
      essential_(essential) {
  cam_.yaw = cam_.pitch = cam_.roll = 0.0;
}

Estimate ClassicalEstimator::estimate(const PairInput& in) const {
  CameraSpec cam = cam_;
  cam.size = in.img1.width();
  const auto matches = detect_and_match(in.img1, in.img2, cam, *matcher_);
  const FitResult fit = mode_ == ClassicalMode::Rotation ? ransac_rotation(matches, ransac_)
                                                         : essential_rotation(matches, essential_);
  return {fit.rotation, fit.success && fit.rotation.has_value(), fit.inlier_count};
}

}  // namespace relrot
