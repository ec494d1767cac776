// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"
#include "relrot/baselines.hpp"
#include "relrot/common.hpp"

namespace relrot {
namespace {

using testing::random_rotation;
using testing::rotation_matches;

RotationMatrix rz(double deg) { return euler_to_matrix({0, 0, deg}); }

/// Small random rotation with angle drawn from N(0, sigma) degrees about a random axis.
Eigen::Matrix3d jitter(std::mt19937_64& rng, double sigma_deg) {
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::Vector3d axis = Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
  return Eigen::AngleAxisd(testing::rad(sigma_deg * n(rng)), axis).toRotationMatrix();
}

std::vector<BearingMatch> contaminated(const RotationMatrix& r, int n, double inlier_frac, double noise_deg,
                                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<BearingMatch> out;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d d1 = testing::random_forward_bearing(rng);
    if (u(rng) < inlier_frac) {
      out.push_back({d1, (jitter(rng, noise_deg) * (r * d1)).normalized()});
    } else {
      out.push_back({d1, testing::random_forward_bearing(rng)});
    }
  }
  return out;
}

TEST(TwoPoint, RecoversYawExactly) {
  std::mt19937_64 rng(80);
  const auto m = rotation_matches(rz(40), 2, rng);
  EXPECT_LT(geodesic_error(two_point_rotation(m[0], m[1]), rz(40)), 1e-6);
  const auto id = rotation_matches(RotationMatrix(), 2, rng);
  EXPECT_LT(rotation_angle(two_point_rotation(id[0], id[1])), 1e-6);
}

TEST(TwoPoint, ExactOnThousandRandomRotations) {
  std::mt19937_64 rng(81);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const RotationMatrix r = random_rotation(rng);
    const auto m = rotation_matches(r, 2, rng);
    worst = std::max(worst, geodesic_error(two_point_rotation(m[0], m[1]), r));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(TwoPoint, ParallelBearingsAreDegenerate) {
  const Eigen::Vector3d d = Eigen::Vector3d(1, 0.2, 0.1).normalized();
  EXPECT_THROW(two_point_rotation({d, d}, {d, d}), DegenerateInput);
}

TEST(Ransac, ExactMatchesSucceed) {
  std::mt19937_64 rng(82);
  const RotationMatrix r = random_rotation(rng);
  const FitResult f = ransac_rotation(rotation_matches(r, 50, rng));
  ASSERT_TRUE(f.success);
  EXPECT_EQ(f.inlier_count, 50);
  EXPECT_LT(geodesic_error(*f.rotation, r), 1e-4);
}

TEST(Ransac, TooFewInliersFail) {
  std::mt19937_64 rng(83);
  const FitResult five = ransac_rotation(rotation_matches(rz(10), 5, rng));
  EXPECT_FALSE(five.success);
  EXPECT_EQ(five.inlier_count, 5);
  // Nine exact matches among outliers: still below the ten-inlier floor.
  auto m = rotation_matches(rz(10), 9, rng);
  for (int i = 0; i < 30; ++i) m.push_back({testing::random_forward_bearing(rng), testing::random_forward_bearing(rng)});
  const FitResult nine = ransac_rotation(m);
  EXPECT_FALSE(nine.success);
  EXPECT_LT(nine.inlier_count, kMinInliers);
}

TEST(Ransac, NeverSucceedsBelowTenInliers) {
  std::mt19937_64 rng(84);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + t % 30;
    const auto m = contaminated(random_rotation(rng), n, 0.5, 0.5, rng);
    const FitResult f = ransac_rotation(m, {200, 1.0, std::uint64_t(t)});
    EXPECT_EQ(f.success, f.inlier_count >= kMinInliers && f.rotation.has_value());
  }
}

TEST(Ransac, MonteCarloContaminatedRecovery) {
  std::mt19937_64 rng(85);
  int recovered = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const RotationMatrix r = random_rotation(rng);
    const auto m = contaminated(r, 100, 0.7, 0.3, rng);
    const FitResult f = ransac_rotation(m, {500, 1.0, std::uint64_t(trial)});
    recovered += f.success && geodesic_error(*f.rotation, r) < 2.0;
  }
  EXPECT_GE(recovered, 95);
}

TEST(Ransac, DeterministicGivenSeed) {
  std::mt19937_64 rng(86);
  const auto m = contaminated(rz(33), 80, 0.6, 0.3, rng);
  const FitResult a = ransac_rotation(m, {300, 1.0, 4}), b = ransac_rotation(m, {300, 1.0, 4});
  EXPECT_EQ(a.inlier_count, b.inlier_count);
  EXPECT_EQ(a.rotation->row_major(), b.rotation->row_major());
}

TEST(Essential, TranslatedPairRecoversRotation) {
  std::mt19937_64 rng(87);
  const Eigen::Matrix3d r = rz(30).matrix();
  const auto m = testing::two_view_matches(r, {0, 2, 0}, 60, rng);
  const FitResult f = essential_rotation(m);
  ASSERT_TRUE(f.success);
  EXPECT_FALSE(f.degenerate);
  EXPECT_LT(testing::quaternion_angle_deg(f.rotation->matrix(), r), 0.5);
  ASSERT_TRUE(f.translation.has_value());
  EXPECT_GT(std::abs(f.translation->normalized().dot(Eigen::Vector3d::UnitY())), 0.99);
}

TEST(Essential, RandomPosesWithOutliers) {
  std::mt19937_64 rng(88);
  int ok = 0;
  for (int t = 0; t < 20; ++t) {
    const Eigen::Matrix3d r = euler_to_matrix({0, 10.0 * (t % 3), -40.0 + 4.0 * t}).matrix();
    const Eigen::Vector3d tr(0.3 * (t % 2), 1.5, 0.2);
    auto m = testing::two_view_matches(r, tr, 80, rng);
    for (int i = 0; i < 15; ++i) m.push_back({testing::random_forward_bearing(rng), testing::random_forward_bearing(rng)});
    const FitResult f = essential_rotation(m, {1000, 0.5, std::uint64_t(t)});
    ok += f.success && testing::quaternion_angle_deg(f.rotation->matrix(), r) < 0.5;
  }
  EXPECT_GE(ok, 19);
}

TEST(Essential, PureRotationIsDegenerateOrRecovered) {
  std::mt19937_64 rng(89);
  const RotationMatrix r = rz(25);
  const FitResult f = essential_rotation(rotation_matches(r, 60, rng));
  if (f.degenerate) {
    EXPECT_FALSE(f.success);
  } else {
    ASSERT_TRUE(f.rotation.has_value());
    EXPECT_LT(geodesic_error(*f.rotation, r), 2.0);
  }
  // Noise-free bearings leave the translation undetermined.
  EXPECT_TRUE(f.degenerate);
}

TEST(Essential, TooFewMatchesFail) {
  std::mt19937_64 rng(90);
  const Eigen::Matrix3d r = rz(30).matrix();
  for (int n : {0, 3, 4, 7}) {
    const FitResult f = essential_rotation(testing::two_view_matches(r, {0, 2, 0}, n, rng));
    EXPECT_FALSE(f.success) << n;
  }
  const FitResult nine = essential_rotation(testing::two_view_matches(r, {0, 2, 0}, 9, rng));
  EXPECT_FALSE(nine.success);
  EXPECT_LT(nine.inlier_count, kMinInliers);
}

TEST(Essential, DecompositionContainsTruth) {
  std::mt19937_64 rng(91);
  const Eigen::Matrix3d r = euler_to_matrix({5, -10, 50}).matrix();
  const Eigen::Vector3d t(0.2, 1.0, -0.3);
  const Eigen::Matrix3d e = eight_point_essential(testing::two_view_matches(r, t, 40, rng));
  double best = 180;
  for (const auto& [rc, tc] : decompose_essential(e)) {
    best = std::min(best, testing::quaternion_angle_deg(rc, r));
    EXPECT_NEAR(rc.determinant(), 1.0, 1e-9);
  }
  EXPECT_LT(best, 1e-6);
}

// ---------------------------------------------------------------------------
// 6D

TEST(SixD, ColumnsOfRotationAreFixedPoint) {
  std::mt19937_64 rng(92);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Matrix3d r = random_rotation(rng).matrix();
    const std::array<double, 6> v{r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)};
    EXPECT_LT((rotation_from_6d(v) - r).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SixD, ScaledAxesGiveIdentity) {
  const std::array<double, 6> v{2, 0, 0, 0, 3, 0};
  EXPECT_LT((rotation_from_6d(v) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SixD, AlwaysARotation) {
  std::mt19937_64 rng(93);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> scale(-12.0, 12.0);
  for (int i = 0; i < 10000; ++i) {
    std::array<double, 6> v;
    for (double& x : v) x = n(rng) * std::pow(10.0, scale(rng));
    if (i % 10 == 1) {
      for (int k = 0; k < 3; ++k) v[std::size_t(k + 3)] = 2.5 * v[std::size_t(k)];  // parallel columns
    }
    if (i % 10 == 2) v = {0, 0, 0, n(rng), n(rng), n(rng)};
    if (i % 10 == 3) v = {0, 0, 0, 0, 0, 0};
    const Eigen::Matrix3d r = rotation_from_6d(v);
    EXPECT_LT((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-6) << i;
    EXPECT_NEAR(r.determinant(), 1.0, 1e-6) << i;
  }
}

TEST(SixD, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(94);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::array<double, 6> v;
    for (double& x : v) x = n(rng);
    const RotationMatrix gt = random_rotation(rng);
    const Eigen::Matrix3d r = rotation_from_6d(v);
    const auto g = rotation_from_6d_backward(v, 2.0 * (r - gt.matrix()));
    for (int k = 0; k < 6; ++k) {
      auto vp = v, vm = v;
      vp[std::size_t(k)] += 1e-6;
      vm[std::size_t(k)] -= 1e-6;
      const double num = (reg6d_loss(rotation_from_6d(vp), gt) - reg6d_loss(rotation_from_6d(vm), gt)) / 2e-6;
      EXPECT_NEAR(g[std::size_t(k)], num, 1e-6 * std::max(1.0, std::abs(num)));
    }
  }
}

TEST(SixD, LossIsSquaredFrobenius) {
  EXPECT_DOUBLE_EQ(reg6d_loss(Eigen::Matrix3d::Identity(), RotationMatrix()), 0.0);
  // Rz(180) differs from I by -2 on two diagonal entries.
  EXPECT_NEAR(reg6d_loss(Eigen::Matrix3d::Identity(), rz(180)), 8.0, 1e-12);
}

TEST(Reg6DNet, PredictsRotationsAndRoundTrips) {
  ModelConfig c = ModelConfig::toy();
  c.encoder.input_size = 32;
  c.seed = 6;
  Reg6DNet net(c);
  Image a(40, 40, {0.2f, 0.5f, 0.7f}), b(40, 40, {0.6f, 0.1f, 0.3f});
  const RotationMatrix r = net.predict(a, b);
  EXPECT_TRUE(RotationMatrix::is_valid(r.matrix()));
  const Reg6DNet back = reg6d_from_checkpoint(make_checkpoint(net));
  EXPECT_EQ(back.predict(a, b).row_major(), r.row_major());
  const Estimate e = Reg6DEstimator(net).estimate({a, b, 0});
  EXPECT_TRUE(e.success);
  EXPECT_EQ(e.rotation->row_major(), r.row_major());
}

TEST(Reg6DNet, TrainingStepReducesLoss) {
  ModelConfig c = ModelConfig::toy();
  c.encoder.input_size = 32;
  Reg6DNet net(c);
  std::mt19937_64 rng(95);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor a(Shape{3, 3, 32, 32}), b(Shape{3, 3, 32, 32});
  for (double& v : a.data()) v = u(rng);
  for (double& v : b.data()) v = u(rng);
  const std::vector<RelPoseParam> gt{{5, -3, 40}, {0, 10, -120}, {-20, 4, 170}};
  net.zero_grad();
  const double before = net.train_step(a, b, gt);
  double g2 = 0;
  for (auto* p : net.parameters())
    for (double g : p->grad) g2 += g * g;
  for (auto* p : net.parameters())
    for (std::size_t i = 0; i < p->size(); ++i) p->value[i] -= 1e-3 / std::sqrt(g2) * p->grad[i];
  net.zero_grad();
  EXPECT_LT(net.train_step(a, b, gt), before);
}

// ---------------------------------------------------------------------------
// Matching

Image textured_crop(const Panorama& p, double yaw, int size = 128) {
  return render_perspective(p, CameraSpec{yaw, 0.0, 0.0, 90.0, size});
}

TEST(Matching, LiftThenProjectIsIdentity) {
  const CameraSpec cam{0, 0, 0, 75.0, 96};
  std::mt19937_64 rng(96);
  std::uniform_real_distribution<double> u(0.0, 95.0);
  std::vector<PixelMatch> px;
  for (int i = 0; i < 200; ++i) px.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
  const auto b = lift_matches(px, cam);
  for (std::size_t i = 0; i < px.size(); ++i) {
    EXPECT_NEAR(b[i].d1.norm(), 1.0, 1e-9);
    const auto back = project_to_pixel(cam, b[i].d1);
    ASSERT_TRUE(back.has_value());
    EXPECT_LT((*back - px[i].p1).norm(), 1e-6);
  }
}

TEST(Matching, IdenticalImagesGiveIdentity) {
  const Panorama p = synth_panorama(4, SynthStyle::Room, 1024);
  const Image img = textured_crop(p, 30.0);
  const CameraSpec cam{0, 0, 0, 90.0, 128};
  const auto m = detect_and_match(img, img, cam, CornerPatchMatcher());
  ASSERT_GE(m.size(), std::size_t(kMinInliers));
  for (const auto& b : m) EXPECT_LT((b.d1 - b.d2).norm(), 1e-12);
  const FitResult f = ransac_rotation(m);
  ASSERT_TRUE(f.success);
  EXPECT_LT(rotation_angle(*f.rotation), 1e-6);
}

TEST(Matching, YawedCropsRecoverRelativeRotation) {
  const Panorama p = synth_panorama(4, SynthStyle::Room, 1024);
  const CameraSpec c1{0.0, 0.0, 0.0, 90.0, 256}, c2{20.0, 0.0, 0.0, 90.0, 256};
  const auto m = detect_and_match(render_perspective(p, c1), render_perspective(p, c2), c1, CornerPatchMatcher());
  const FitResult f = ransac_rotation(m);
  ASSERT_TRUE(f.success);
  const RotationMatrix gt = camera_rotation(c2) * camera_rotation(c1).transpose();
  EXPECT_NEAR(rotation_angle(gt), 20.0, 1e-9);
  EXPECT_LT(geodesic_error(*f.rotation, gt), 2.0);

  const Estimate e = ClassicalEstimator(c1, ClassicalMode::Rotation)
                         .estimate({render_perspective(p, c1), render_perspective(p, c2), 0});
  ASSERT_TRUE(e.success);
  EXPECT_LT(geodesic_error(*e.rotation, gt), 2.0);
}

TEST(Matching, BlankImagesFail) {
  const Image blank(64, 64, {0.5f, 0.5f, 0.5f});
  const CameraSpec cam{0, 0, 0, 90.0, 64};
  EXPECT_TRUE(detect_and_match(blank, blank, cam, CornerPatchMatcher()).empty());
  EXPECT_FALSE(ransac_rotation({}).success);
  for (ClassicalMode mode : {ClassicalMode::Rotation, ClassicalMode::Essential}) {
    const Estimate e = ClassicalEstimator(cam, mode).estimate({blank, blank, 0});
    EXPECT_FALSE(e.success);
    EXPECT_FALSE(e.rotation.has_value());
  }
}

}  // namespace
}  // namespace relrot
