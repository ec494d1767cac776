// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include "relrot/rotgeom.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "relrot/common.hpp"

namespace relrot {

bool RotationMatrix::is_valid(const Eigen::Matrix3d& m, double tol) {
  if (!m.allFinite()) return false;
  const Eigen::Matrix3d gram = m.transpose() * m;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(m.determinant() - 1.0) <= tol;
}

RotationMatrix RotationMatrix::from_matrix(const Eigen::Matrix3d& m, double tol) {
  if (!is_valid(m, tol)) {
    throw std::invalid_argument("RotationMatrix: input is not special-orthogonal");
  }
  return RotationMatrix(m);
}

RotationMatrix RotationMatrix::from_row_major(std::span<const double, 9> v, double tol) {
  Eigen::Matrix3d m;
  m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
  return from_matrix(m, tol);
}

std::array<double, 9> RotationMatrix::row_major() const {
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[3 * r + c] = m_(r, c);
  return out;
}

AngleDistribution AngleDistribution::from_probs(std::vector<double> probs) {
  if (probs.empty()) throw std::invalid_argument("AngleDistribution: empty");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("AngleDistribution: negative or non-finite probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw std::invalid_argument("AngleDistribution: probabilities do not sum to 1");
  }
  AngleDistribution d;
  d.probs_ = std::move(probs);
  return d;
}

AngleDistribution AngleDistribution::from_logits(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("AngleDistribution: empty logits");
  const double mx = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(mx)) throw std::invalid_argument("AngleDistribution: non-finite logits");
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  AngleDistribution d;
  d.probs_ = std::move(p);
  return d;
}

AngleDistribution AngleDistribution::one_hot(int bin, int n_bins) {
  if (bin < 0 || bin >= n_bins) throw std::invalid_argument("one_hot: bin out of range");
  std::vector<double> p(static_cast<std::size_t>(n_bins), 0.0);
  p[static_cast<std::size_t>(bin)] = 1.0;
  AngleDistribution d;
  d.probs_ = std::move(p);
  return d;
}

int AngleDistribution::argmax() const {
  // max_element returns the first maximum, so ties resolve to the lower index.
  return static_cast<int>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

std::string_view to_string(OverlapClass c) {
  switch (c) {
    case OverlapClass::Large: return "large";
    case OverlapClass::Small: return "small";
    case OverlapClass::None: return "none";
  }
  return "none";
}

OverlapClass overlap_class_from_string(std::string_view s) {
  if (s == "large") return OverlapClass::Large;
  if (s == "small") return OverlapClass::Small;
  if (s == "none") return OverlapClass::None;
  throw std::invalid_argument("unknown overlap class: " + std::string(s));
}

namespace {

Eigen::Matrix3d rot_x(double deg) {
  const double c = std::cos(deg2rad(deg)), s = std::sin(deg2rad(deg));
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Eigen::Matrix3d rot_y(double deg) {
  const double c = std::cos(deg2rad(deg)), s = std::sin(deg2rad(deg));
  Eigen::Matrix3d m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Eigen::Matrix3d rot_z(double deg) {
  const double c = std::cos(deg2rad(deg)), s = std::sin(deg2rad(deg));
  Eigen::Matrix3d m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

}  // namespace

RotationMatrix euler_to_matrix(const EulerTriple& e) {
  if (!std::isfinite(e.alpha) || !std::isfinite(e.beta) || !std::isfinite(e.gamma)) {
    throw std::invalid_argument("euler_to_matrix: non-finite angle");
  }
  return RotationMatrix::from_matrix(rot_x(e.alpha) * rot_y(e.beta) * rot_z(e.gamma));
}

EulerTriple matrix_to_euler(const RotationMatrix& r) {
  const Eigen::Matrix3d& m = r.matrix();
  // m(0,2) = sin(beta); the first row and last column carry gamma and alpha.
  const double sb = std::clamp(m(0, 2), -1.0, 1.0);
  EulerTriple e;
  e.beta = rad2deg(std::asin(sb));
  if (std::abs(sb) > 1.0 - 1e-12) {
    e.gamma = 0.0;
    e.alpha = rad2deg(std::atan2(m(1, 0) * sb, m(1, 1)));
    e.beta = sb > 0 ? 90.0 : -90.0;
  } else {
    e.alpha = rad2deg(std::atan2(-m(1, 2), m(2, 2)));
    e.gamma = rad2deg(std::atan2(-m(0, 1), m(0, 0)));
  }
  e.alpha = wrap_degrees(e.alpha);
  e.gamma = wrap_degrees(e.gamma);
  return e;
}

RotationMatrix relative_from_params(const RelPoseParam& p) {
  const RotationMatrix r2 = euler_to_matrix({0.0, p.beta2, p.delta_gamma});
  const RotationMatrix r1 = euler_to_matrix({0.0, p.beta1, 0.0});
  return r2 * r1.transpose();
}

double geodesic_error(const RotationMatrix& r, const RotationMatrix& rstar) {
  const Eigen::Matrix3d d = r.matrix().transpose() * rstar.matrix();
  // theta = atan2(2 sin(theta), 2 cos(theta)) from the skew part and the trace.
  const double cos2 = d.trace() - 1.0;
  const Eigen::Vector3d skew(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
  const double theta = std::atan2(skew.norm(), std::clamp(cos2, -2.0, 2.0));
  return std::clamp(rad2deg(theta), 0.0, 180.0);
}

double rotation_angle(const RotationMatrix& r) { return geodesic_error(RotationMatrix(), r); }

int angle_to_bin(double angle, const AngleBins& bins) {
  const double a = wrap_degrees(angle);
  const int i = static_cast<int>(std::floor((a - bins.lo) / bins.width()));
  return std::clamp(i, 0, bins.n_bins - 1);
}

double bin_to_angle(int bin, const AngleBins& bins) {
  if (bin < 0 || bin >= bins.n_bins) throw std::invalid_argument("bin_to_angle: bin out of range");
  return bins.lo + (bin + 0.5) * bins.width();
}

OverlapClass overlap_class_for_angle(double theta_deg) {
  if (theta_deg <= 45.0) return OverlapClass::Large;
  if (theta_deg <= 90.0) return OverlapClass::Small;
  return OverlapClass::None;
}

OverlapClass overlap_class(const RotationMatrix& rstar) {
  return overlap_class_for_angle(rotation_angle(rstar));
}

std::vector<AngleProb> top_k_angles(const AngleDistribution& d, int k, const AngleBins& bins) {
  const int n = static_cast<int>(d.size());
  if (k < 1 || k > n) throw std::invalid_argument("top_k_angles: k out of range");
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    if (d[a] != d[b]) return d[a] > d[b];
    return a < b;
  });
  std::vector<AngleProb> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back({bin_to_angle(idx[i], bins), d[idx[i]]});
  return out;
}

void to_json(nlohmann::json& j, const RotationMatrix& r) { j = r.row_major(); }

void from_json(const nlohmann::json& j, RotationMatrix& r) {
  const auto v = j.get<std::array<double, 9>>();
  r = RotationMatrix::from_row_major(v, 1e-6);
}

void to_json(nlohmann::json& j, const RelPoseParam& p) {
  j = nlohmann::json{{"beta1", p.beta1}, {"beta2", p.beta2}, {"delta_gamma", p.delta_gamma}};
}

void from_json(const nlohmann::json& j, RelPoseParam& p) {
  p.beta1 = j.at("beta1").get<double>();
  p.beta2 = j.at("beta2").get<double>();
  p.delta_gamma = j.at("delta_gamma").get<double>();
}

}  // namespace relrot
