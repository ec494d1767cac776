// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace relrot {

/// Raised when a geometric solver receives inputs with no unique solution.
class DegenerateInput : public std::runtime_error {
 public:
  explicit DegenerateInput(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a checkpoint or manifest has an incompatible schema version.
class VersionMismatch : public std::runtime_error {
 public:
  explicit VersionMismatch(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle in degrees into [-180, 180).
inline double wrap_degrees(double deg) {
  double w = deg - 360.0 * std::floor((deg + 180.0) / 360.0);
  if (w >= 180.0) w -= 360.0;
  if (w < -180.0) w += 360.0;
  return w;
}

}  // namespace relrot
