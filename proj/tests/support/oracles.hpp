// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Independent reference implementations used to check the library.

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "relrot/baselines.hpp"
#include "relrot/rotgeom.hpp"

namespace relrot::testing {

inline double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double rad(double d) { return d * std::numbers::pi / 180.0; }

/// Uniform random unit quaternion (normalized 4D Gaussian).
inline Eigen::Quaterniond random_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q;
}

inline RotationMatrix random_rotation(std::mt19937_64& rng) {
  return RotationMatrix::from_matrix(random_quaternion(rng).toRotationMatrix(), 1e-9);
}

/// Angle between two rotations as 2 acos(|q1 . q2|).
inline double quaternion_dot_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Quaterniond qa(a), qb(b);
  const double d = std::min(1.0, std::abs(qa.dot(qb)));
  return deg(2.0 * std::acos(d));
}

/// Angle of the quaternion difference, atan2 of its vector and scalar parts.
inline double quaternion_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Quaterniond d = Eigen::Quaterniond(a).conjugate() * Eigen::Quaterniond(b);
  return deg(2.0 * std::atan2(d.vec().norm(), std::abs(d.w())));
}

/// Rx(alpha) Ry(beta) Rz(gamma) built from axis-angle factors.
inline Eigen::Matrix3d euler_oracle(double alpha, double beta, double gamma) {
  return (Eigen::AngleAxisd(rad(alpha), Eigen::Vector3d::UnitX()) *
          Eigen::AngleAxisd(rad(beta), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(rad(gamma), Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

/// Correlation by direct definition on (K, h, w) buffers.
inline std::vector<double> correlation_oracle(const std::vector<double>& f1,
                                              const std::vector<double>& f2, int k, int h, int w) {
  std::vector<double> v(std::size_t(h) * w * h * w, 0.0);
  for (int p = 0; p < h; ++p)
    for (int q = 0; q < w; ++q)
      for (int r = 0; r < h; ++r)
        for (int s = 0; s < w; ++s) {
          double acc = 0.0;
          for (int c = 0; c < k; ++c) {
            acc += f1[(std::size_t(c) * h + p) * w + q] * f2[(std::size_t(c) * h + r) * w + s];
          }
          v[((std::size_t(p) * w + q) * h + r) * w + s] = acc;
        }
  return v;
}

/// -log softmax(logits)[target] computed in long double.
inline double log_softmax_nll(const std::vector<double>& logits, int target) {
  long double m = logits[0];
  for (double v : logits) m = std::max<long double>(m, v);
  long double z = 0;
  for (double v : logits) z += std::exp(static_cast<long double>(v) - m);
  return static_cast<double>(-(logits[std::size_t(target)] - m - std::log(z)));
}

/// Random unit vector inside a cone of half-angle `max_deg` around +x.
inline Eigen::Vector3d random_forward_bearing(std::mt19937_64& rng, double max_deg = 40.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double t = std::tan(rad(max_deg));
  while (true) {
    const Eigen::Vector3d d(1.0, t * u(rng), t * u(rng));
    if (std::hypot(d.y(), d.z()) <= t) return d.normalized();
  }
}

/// Noise-free bearings related by a pure rotation: d2 = R d1.
inline std::vector<BearingMatch> rotation_matches(const RotationMatrix& r, int n, std::mt19937_64& rng) {
  std::vector<BearingMatch> out;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d d1 = random_forward_bearing(rng);
    out.push_back({d1, r * d1});
  }
  return out;
}

/// Bearings of 3D points seen from two cameras: x2 ~ R X + t with X in front of both.
inline std::vector<BearingMatch> two_view_matches(const Eigen::Matrix3d& r, const Eigen::Vector3d& t,
                                                  int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> depth(4.0, 12.0);
  std::vector<BearingMatch> out;
  while (static_cast<int>(out.size()) < n) {
    const Eigen::Vector3d x1 = random_forward_bearing(rng, 35.0) * depth(rng);
    const Eigen::Vector3d x2 = r * x1 + t;
    if (x2.x() <= 0.5) continue;
    out.push_back({x1.normalized(), x2.normalized()});
  }
  return out;
}

}  // namespace relrot::testing
