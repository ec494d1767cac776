// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "relrot/evalharness.hpp"
#include "relrot/netmodel.hpp"
#include "relrot/panosample.hpp"

namespace relrot {

/// Unit bearings of one correspondence, each in its own camera frame.
/// Under a pure rotation d2 = R* d1.
struct BearingMatch {
  Eigen::Vector3d d1;
  Eigen::Vector3d d2;
};

inline constexpr int kMinInliers = 10;

struct FitResult {
  std::optional<RotationMatrix> rotation;
  int inlier_count = 0;
  bool success = false;     // true iff inlier_count >= kMinInliers and a model was found
  bool degenerate = false;  // essential matrix undetermined (e.g. no translation)
  std::optional<Eigen::Vector3d> translation;  // unit direction, essential model only
};

/// Least-squares rotation with d2 ~ R d1 (SVD with determinant correction).
/// Throws DegenerateInput when the bearings do not span two directions.
RotationMatrix procrustes_rotation(std::span<const BearingMatch> matches);

/// Exact rotation from two correspondences.
RotationMatrix two_point_rotation(const BearingMatch& m1, const BearingMatch& m2);

/// Angle in degrees between R d1 and d2.
double angular_residual(const RotationMatrix& r, const BearingMatch& m);

struct RansacOptions {
  int iters = 1000;
  double inlier_thresh_deg = 1.0;
  std::uint64_t seed = 0;
};

/// Two-point hypotheses scored by inlier count, refit on the best inlier set.
FitResult ransac_rotation(std::span<const BearingMatch> matches, const RansacOptions& opt = {});

struct EssentialOptions {
  int iters = 1000;
  double inlier_thresh_deg = 0.5;  // angular distance to the epipolar plane
  std::uint64_t seed = 0;
  double degeneracy_ratio = 1e-6;  // sigma_8 / sigma_1 of the design matrix
};

/// Linear 8-point estimate of E with x2^T E x1 = 0, projected to the
/// essential manifold. Throws DegenerateInput when the solution is not unique.
Eigen::Matrix3d eight_point_essential(std::span<const BearingMatch> matches,
                                      double degeneracy_ratio = 1e-6);

/// The four (R, t) factorizations of an essential matrix.
std::array<std::pair<Eigen::Matrix3d, Eigen::Vector3d>, 4> decompose_essential(
    const Eigen::Matrix3d& e);

/// RANSAC over 8-point essential matrices; the rotation is chosen among the
/// four factorizations by a cheirality vote over the inliers.
FitResult essential_rotation(std::span<const BearingMatch> matches,
                             const EssentialOptions& opt = {});

// ---------------------------------------------------------------------------
// Feature matching
// ---------------------------------------------------------------------------

struct PixelMatch {
  Eigen::Vector2d p1;
  Eigen::Vector2d p2;
};

/// Pluggable detector + descriptor + matcher.
class FeatureMatcher {
 public:
  virtual ~FeatureMatcher() = default;
  virtual std::vector<PixelMatch> match(const Image& img1, const Image& img2) const = 0;
};

struct CornerMatcherOptions {
  int max_corners = 600;
  int patch = 11;               // odd descriptor side length
  double harris_k = 0.04;
  double rel_threshold = 0.01;  // corner response relative to the image maximum
  double ratio = 0.8;           // nearest / second-nearest descriptor distance
  int nms_radius = 3;
};

/// Harris corners described by normalized grayscale patches; mutual nearest
/// neighbours that pass a ratio test.
class CornerPatchMatcher : public FeatureMatcher {
 public:
  explicit CornerPatchMatcher(CornerMatcherOptions opt = {}) : opt_(opt) {}
  std::vector<PixelMatch> match(const Image& img1, const Image& img2) const override;

  std::vector<Eigen::Vector2d> detect(const Image& img) const;

 private:
  CornerMatcherOptions opt_;
};

/// Lifts pixel matches to unit bearings through the pinhole model of `cam`.
std::vector<BearingMatch> lift_matches(std::span<const PixelMatch> matches, const CameraSpec& cam);

std::vector<BearingMatch> detect_and_match(const Image& img1, const Image& img2,
                                           const CameraSpec& cam, const FeatureMatcher& matcher);

enum class ClassicalMode { Rotation, Essential };

/// Feature matching followed by rotation-only or essential-matrix RANSAC.
class ClassicalEstimator : public RotationEstimator {
 public:
  ClassicalEstimator(CameraSpec intrinsics, ClassicalMode mode,
                     std::shared_ptr<const FeatureMatcher> matcher = nullptr,
                     RansacOptions ransac = {}, EssentialOptions essential = {});
  Estimate estimate(const PairInput& in) const override;

 private:
  CameraSpec cam_;
  ClassicalMode mode_;
  std::shared_ptr<const FeatureMatcher> matcher_;
  RansacOptions ransac_;
  EssentialOptions essential_;
};

// ---------------------------------------------------------------------------
// 6D regression
// ---------------------------------------------------------------------------

/// Orthonormalizes two 3-vectors (first and second column) into a rotation:
/// normalize, project out, normalize, cross product. Degenerate inputs fall
/// back to a fixed completion so the output is always a rotation.
Eigen::Matrix3d rotation_from_6d(std::span<const double, 6> v, double eps = 1e-8);

/// Gradient of a scalar loss with respect to the 6 inputs given dL/dR.
std::array<double, 6> rotation_from_6d_backward(std::span<const double, 6> v,
                                                const Eigen::Matrix3d& dr, double eps = 1e-8);

/// Squared Frobenius distance between predicted and true rotation matrices.
double reg6d_loss(const Eigen::Matrix3d& pred, const RotationMatrix& gt);

/// Shared encoder on both images, concatenated features, one residual head
/// regressing 6 numbers.
class Reg6DNet : public Trainable {
 public:
  explicit Reg6DNet(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  const InputNormalization& normalization() const { return norm_; }
  void set_normalization(const InputNormalization& n) { norm_ = n; }

  /// (B, 6) raw outputs.
  Tensor forward(const Tensor& img1, const Tensor& img2);
  Tensor infer(const Tensor& img1, const Tensor& img2) const;
  void backward(const Tensor& dout);

  RotationMatrix predict(const Image& img1, const Image& img2) const;

  std::vector<nn::Param*> parameters() override;
  std::vector<nn::Buffer*> buffers() override;
  double train_step(const Tensor& img1, const Tensor& img2,
                    std::span<const RelPoseParam> labels) override;
  std::string kind() const override { return "reg6d"; }
  nlohmann::json describe() const override;

 private:
  Tensor normalize(const Tensor& img) const;

  ModelConfig cfg_;
  InputNormalization norm_;
  Encoder encoder_;
  DecoderHead head_;
  int batch_ = 0;
};

/// Batch loss (mean of reg6d_loss) on raw outputs; fills d(loss)/d(out).
double reg6d_batch_loss(const Tensor& out, std::span<const RelPoseParam> gt, Tensor* grad);

Reg6DNet reg6d_from_checkpoint(const Checkpoint& ck);

class Reg6DEstimator : public RotationEstimator {
 public:
  explicit Reg6DEstimator(const Reg6DNet& net) : net_(net) {}
  Estimate estimate(const PairInput& in) const override;

 private:
  const Reg6DNet& net_;
};

}  // namespace relrot
