// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <random>

#include "relrot/baselines.hpp"
#include "relrot/common.hpp"

namespace relrot {

RotationMatrix procrustes_rotation(std::span<const BearingMatch> matches) {
  if (matches.size() < 2) throw DegenerateInput("procrustes_rotation: need at least two matches");
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d s1 = Eigen::Matrix3d::Zero(), s2 = Eigen::Matrix3d::Zero();
  for (const auto& m : matches) {
    h += m.d2 * m.d1.transpose();
    s1 += m.d1 * m.d1.transpose();
    s2 += m.d2 * m.d2.transpose();
  }
  // Two non-parallel directions are needed on each side.
  const double tiny = 1e-12 * std::max(1.0, s1.trace());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> e1(s1), e2(s2);
  if (e1.eigenvalues()(1) <= tiny || e2.eigenvalues()(1) <= tiny) {
    throw DegenerateInput("procrustes_rotation: bearings are parallel");
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return RotationMatrix::from_matrix(svd.matrixU() * d * svd.matrixV().transpose(), 1e-6);
}

RotationMatrix two_point_rotation(const BearingMatch& m1, const BearingMatch& m2) {
  const double min_sin = std::sin(1e-6);
  if (m1.d1.normalized().cross(m2.d1.normalized()).norm() <= min_sin ||
      m1.d2.normalized().cross(m2.d2.normalized()).norm() <= min_sin) {
    throw DegenerateInput("two_point_rotation: parallel bearings");
  }
  const BearingMatch pair[2] = {m1, m2};
  return procrustes_rotation(pair);
}

double angular_residual(const RotationMatrix& r, const BearingMatch& m) {
  const Eigen::Vector3d a = r * m.d1;
  return rad2deg(std::atan2(a.cross(m.d2).norm(), a.dot(m.d2)));
}

FitResult ransac_rotation(std::span<const BearingMatch> matches, const RansacOptions& opt) {
  FitResult res;
  const int n = static_cast<int>(matches.size());
  if (n < 2 || opt.iters <= 0) return res;
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);

  auto count_inliers = [&](const RotationMatrix& r) {
    int c = 0;
    for (const auto& m : matches) c += angular_residual(r, m) < opt.inlier_thresh_deg;
    return c;
  };

  int best = -1;
  std::optional<RotationMatrix> best_r;
  for (int it = 0; it < opt.iters; ++it) {
    const int i = pick(rng);
    int j = pick(rng);
    if (i == j) continue;
    RotationMatrix r;
    try {
      r = two_point_rotation(matches[std::size_t(i)], matches[std::size_t(j)]);
    } catch (const DegenerateInput&) {
      continue;
    }
    const int c = count_inliers(r);
    if (c > best) {
      best = c;
      best_r = r;
    }
  }
  if (!best_r) return res;

  std::vector<BearingMatch> inliers;
  for (const auto& m : matches)
    if (angular_residual(*best_r, m) < opt.inlier_thresh_deg) inliers.push_back(m);
  res.rotation = best_r;
  if (inliers.size() >= 2) {
    try {
      res.rotation = procrustes_rotation(inliers);
    } catch (const DegenerateInput&) {
    }
  }
  res.inlier_count = best;
  res.success = best >= kMinInliers;
  return res;
}

// ---------------------------------------------------------------------------

Eigen::Matrix3d eight_point_essential(std::span<const BearingMatch> matches,
                                      double degeneracy_ratio) {
  if (matches.size() < 8) throw DegenerateInput("eight_point_essential: need at least 8 matches");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(std::max<std::size_t>(matches.size(), 9)), 9);
  a.setZero();
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const Eigen::Vector3d x1 = matches[i].d1.normalized(), x2 = matches[i].d2.normalized();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) a(Eigen::Index(i), r * 3 + c) = x2(r) * x1(c);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(7) > degeneracy_ratio * s(0))) {
    throw DegenerateInput("eight_point_essential: solution space is not one-dimensional");
  }
  const Eigen::VectorXd e = svd.matrixV().col(8);
  Eigen::Matrix3d em;
  em << e(0), e(1), e(2), e(3), e(4), e(5), e(6), e(7), e(8);
  Eigen::JacobiSVD<Eigen::Matrix3d> esvd(em, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return esvd.matrixU() * Eigen::Vector3d(1, 1, 0).asDiagonal() * esvd.matrixV().transpose();
}

std::array<std::pair<Eigen::Matrix3d, Eigen::Vector3d>, 4> decompose_essential(
    const Eigen::Matrix3d& e) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU(), v = svd.matrixV();
  if (u.determinant() < 0) u = -u;
  if (v.determinant() < 0) v = -v;
  Eigen::Matrix3d w;
  w << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Eigen::Matrix3d ra = u * w * v.transpose(), rb = u * w.transpose() * v.transpose();
  const Eigen::Vector3d t = u.col(2);
  return {{{ra, t}, {ra, -t}, {rb, t}, {rb, -t}}};
}

namespace {

double epipolar_residual(const Eigen::Matrix3d& e, const BearingMatch& m) {
  const Eigen::Vector3d x1 = m.d1.normalized(), x2 = m.d2.normalized();
  const Eigen::Vector3d n2 = e * x1, n1 = e.transpose() * x2;
  if (n2.norm() < 1e-12 || n1.norm() < 1e-12) return 90.0;
  const double s2 = std::abs(x2.dot(n2)) / n2.norm();
  const double s1 = std::abs(x1.dot(n1)) / n1.norm();
  return rad2deg(std::asin(std::min(1.0, std::max(s1, s2))));
}

// Depths (lambda1, lambda2) with lambda2 x2 = lambda1 R x1 + t.
bool in_front(const Eigen::Matrix3d& r, const Eigen::Vector3d& t, const BearingMatch& m) {
  Eigen::Matrix<double, 3, 2> a;
  a.col(0) = r * m.d1.normalized();
  a.col(1) = -m.d2.normalized();
  const Eigen::Vector2d lambda = a.colPivHouseholderQr().solve(-t);
  return lambda(0) > 0 && lambda(1) > 0;
}

}  // namespace

FitResult essential_rotation(std::span<const BearingMatch> matches, const EssentialOptions& opt) {
  FitResult res;
  const int n = static_cast<int>(matches.size());
  if (n < 8 || opt.iters <= 0) return res;
  std::mt19937_64 rng(opt.seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[std::size_t(i)] = i;

  int best = -1, degenerate_samples = 0;
  Eigen::Matrix3d best_e;
  std::vector<BearingMatch> sample(8);
  for (int it = 0; it < opt.iters; ++it) {
    for (int k = 0; k < 8; ++k) {
      std::uniform_int_distribution<int> pick(k, n - 1);
      std::swap(order[std::size_t(k)], order[std::size_t(pick(rng))]);
      sample[std::size_t(k)] = matches[std::size_t(order[std::size_t(k)])];
    }
    Eigen::Matrix3d e;
    try {
      e = eight_point_essential(sample, opt.degeneracy_ratio);
    } catch (const DegenerateInput&) {
      ++degenerate_samples;
      continue;
    }
    int c = 0;
    for (const auto& m : matches) c += epipolar_residual(e, m) < opt.inlier_thresh_deg;
    if (c > best) {
      best = c;
      best_e = e;
    }
  }
  if (best < 0) {
    res.degenerate = degenerate_samples > 0;
    return res;
  }

  std::vector<BearingMatch> inliers;
  for (const auto& m : matches)
    if (epipolar_residual(best_e, m) < opt.inlier_thresh_deg) inliers.push_back(m);
  Eigen::Matrix3d e = best_e;
  if (inliers.size() >= 8) {
    try {
      e = eight_point_essential(inliers, opt.degeneracy_ratio);
    } catch (const DegenerateInput&) {
      res.degenerate = true;
      res.inlier_count = best;
      return res;
    }
  }

  int best_votes = -1;
  for (const auto& [r, t] : decompose_essential(e)) {
    int votes = 0;
    for (const auto& m : inliers) votes += in_front(r, t, m);
    if (votes > best_votes) {
      best_votes = votes;
      res.rotation = RotationMatrix::from_matrix(r, 1e-6);
      res.translation = t;
    }
  }
  res.inlier_count = best;
  res.success = best >= kMinInliers;
  return res;
}

}  // namespace relrot
