// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <array>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace relrot {

/**
 * @brief 3x3 special-orthogonal matrix.
 *
 * World frame is right-handed with x along the optical axis at zero rotation,
 * y to the left and z up. A camera rotation maps world directions into the
 * camera frame; the relative rotation of a pair is R2 * R1^T.
 */
class RotationMatrix {
 public:
  RotationMatrix() : m_(Eigen::Matrix3d::Identity()) {}

  /// Validates orthogonality and unit determinant within `tol` (elementwise).
  static RotationMatrix from_matrix(const Eigen::Matrix3d& m, double tol = 1e-9);
  /// Builds from a row-major 9-element array, validated like from_matrix.
  static RotationMatrix from_row_major(std::span<const double, 9> v, double tol = 1e-9);

  const Eigen::Matrix3d& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  RotationMatrix transpose() const { return RotationMatrix(m_.transpose()); }
  RotationMatrix operator*(const RotationMatrix& o) const { return RotationMatrix(m_ * o.m_); }
  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return m_ * v; }

  std::array<double, 9> row_major() const;

  /// True when the matrix satisfies the SO(3) invariants within `tol`.
  static bool is_valid(const Eigen::Matrix3d& m, double tol = 1e-9);

 private:
  explicit RotationMatrix(const Eigen::Matrix3d& m) : m_(m) {}
  Eigen::Matrix3d m_;
};

/// Roll (alpha), pitch (beta) and yaw (gamma) in degrees.
struct EulerTriple {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// Absolute pitch of each image plus their relative yaw, in degrees.
struct RelPoseParam {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double delta_gamma = 0.0;

  bool operator==(const RelPoseParam&) const = default;
};

/// Uniform 1-degree bins over [-180, 180).
struct AngleBins {
  int n_bins = 360;
  double lo = -180.0;
  double hi = 180.0;

  double width() const { return (hi - lo) / n_bins; }
};

/// Probability vector over the angle bins.
class AngleDistribution {
 public:
  AngleDistribution() = default;

  /// Validates non-negativity and unit sum within 1e-6.
  static AngleDistribution from_probs(std::vector<double> probs);
  /// Numerically stable softmax.
  static AngleDistribution from_logits(std::span<const double> logits);
  static AngleDistribution one_hot(int bin, int n_bins = 360);

  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  int argmax() const;

 private:
  std::vector<double> probs_;
};

enum class OverlapClass { Large, Small, None };

std::string_view to_string(OverlapClass c);
OverlapClass overlap_class_from_string(std::string_view s);

// R(alpha, beta, gamma) = Rx(alpha) Ry(beta) Rz(gamma).
RotationMatrix euler_to_matrix(const EulerTriple& e);
/// Inverse of euler_to_matrix. At |beta| = 90 the yaw is fixed to zero.
EulerTriple matrix_to_euler(const RotationMatrix& r);
/// R(0, beta2, delta_gamma) * R(0, beta1, 0)^T.
RotationMatrix relative_from_params(const RelPoseParam& p);

/// Angle in degrees of R^T * Rstar, in [0, 180].
double geodesic_error(const RotationMatrix& r, const RotationMatrix& rstar);
/// Geodesic distance to the identity.
double rotation_angle(const RotationMatrix& r);

int angle_to_bin(double angle, const AngleBins& bins = {});
double bin_to_angle(int bin, const AngleBins& bins = {});

/// Large for theta <= 45, Small for 45 < theta <= 90, None above.
OverlapClass overlap_class(const RotationMatrix& rstar);
OverlapClass overlap_class_for_angle(double theta_deg);

struct AngleProb {
  double angle = 0.0;
  double prob = 0.0;
};

/// The k most probable bin centers; ties go to the lower bin index.
std::vector<AngleProb> top_k_angles(const AngleDistribution& d, int k,
                                    const AngleBins& bins = {});

void to_json(nlohmann::json& j, const RotationMatrix& r);
void from_json(const nlohmann::json& j, RotationMatrix& r);
void to_json(nlohmann::json& j, const RelPoseParam& p);
void from_json(const nlohmann::json& j, RelPoseParam& p);

}  // namespace relrot
