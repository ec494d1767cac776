// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "relrot/common.hpp"
#include "relrot/panosample.hpp"

namespace relrot {

void CameraSpec::validate() const {
  if (!(fov > 0.0 && fov < 180.0)) throw std::invalid_argument("CameraSpec: fov must be in (0, 180)");
  if (size < 8) throw std::invalid_argument("CameraSpec: size must be >= 8");
  if (!std::isfinite(yaw) || !std::isfinite(pitch) || !std::isfinite(roll)) {
    throw std::invalid_argument("CameraSpec: non-finite angle");
  }
}

double CameraSpec::focal() const { return (size / 2.0) / std::tan(deg2rad(fov) / 2.0); }

RotationMatrix camera_rotation(const CameraSpec& cam) {
  return euler_to_matrix({cam.roll, cam.pitch, cam.yaw});
}

void Panorama::validate() const {
  if (pixels.empty()) throw std::invalid_argument("Panorama: empty image");
  if (pixels.width() != 2 * pixels.height()) {
    throw std::invalid_argument("Panorama: height must be exactly half the width");
  }
}

Eigen::Vector3d pixel_ray(const CameraSpec& cam, double u, double v) {
  const double c = (cam.size - 1) / 2.0;
  return Eigen::Vector3d(cam.focal(), c - u, c - v).normalized();
}

std::optional<Eigen::Vector2d> project_to_pixel(const CameraSpec& cam, const Eigen::Vector3d& dir) {
  if (dir.x() <= 0.0) return std::nullopt;
  const double c = (cam.size - 1) / 2.0, f = cam.focal();
  return Eigen::Vector2d(c - f * dir.y() / dir.x(), c - f * dir.z() / dir.x());
}

Eigen::Vector2d direction_to_pano(const Eigen::Vector3d& d, int pano_w, int pano_h) {
  const double lon = rad2deg(std::atan2(-d.y(), d.x()));
  const double lat = rad2deg(std::atan2(d.z(), std::hypot(d.x(), d.y())));
  return {(lon + 180.0) / 360.0 * pano_w - 0.5, (90.0 - lat) / 180.0 * pano_h - 0.5};
}

Eigen::Vector3d pano_to_direction(double x, double y, int pano_w, int pano_h) {
  const double lon = deg2rad((x + 0.5) / pano_w * 360.0 - 180.0);
  const double lat = deg2rad(90.0 - (y + 0.5) / pano_h * 180.0);
  return {std::cos(lat) * std::cos(lon), -std::cos(lat) * std::sin(lon), std::sin(lat)};
}

Eigen::Vector2d crop_to_pano(const CameraSpec& cam, int pano_w, int pano_h, double u, double v) {
  const Eigen::Vector3d world = camera_rotation(cam).matrix().transpose() * pixel_ray(cam, u, v);
  return direction_to_pano(world, pano_w, pano_h);
}

Rgb sample_panorama(const Image& pano, double x, double y) {
  const int w = pano.width(), h = pano.height();
  const double fx = std::floor(x);
  const double fy = std::clamp(y, 0.0, h - 1.0);
  const int y0 = static_cast<int>(std::floor(fy));
  const int y1 = std::min(y0 + 1, h - 1);
  const double ty = fy - y0, tx = x - fx;
  int x0 = static_cast<int>(fx) % w;
  if (x0 < 0) x0 += w;
  const int x1 = (x0 + 1) % w;
  Rgb out{};
  for (int c = 0; c < 3; ++c) {
    const double top = (1 - tx) * pano.at(x0, y0, c) + tx * pano.at(x1, y0, c);
    const double bot = (1 - tx) * pano.at(x0, y1, c) + tx * pano.at(x1, y1, c);
    out[c] = static_cast<float>((1 - ty) * top + ty * bot);
  }
  return out;
}

namespace {

struct RenderSetup {
  Eigen::Matrix3d cam_to_world;
  double focal;
  double center;
};

RenderSetup prepare(const Panorama& p, const CameraSpec& cam) {
  cam.validate();
  p.validate();
  return {camera_rotation(cam).matrix().transpose(), cam.focal(), (cam.size - 1) / 2.0};
}

void render_row(const Panorama& p, const RenderSetup& s, int size, int v, Image& out) {
  const int pw = p.pixels.width(), ph = p.pixels.height();
  for (int u = 0; u < size; ++u) {
    const Eigen::Vector3d ray =
        Eigen::Vector3d(s.focal, s.center - u, s.center - v).normalized();
    const Eigen::Vector2d xy = direction_to_pano(s.cam_to_world * ray, pw, ph);
    out.set_pixel(u, v, sample_panorama(p.pixels, xy.x(), xy.y()));
  }
}

}  // namespace

Image render_perspective(const Panorama& p, const CameraSpec& cam) {
  const RenderSetup s = prepare(p, cam);
  Image out(cam.size, cam.size);
#pragma omp parallel for schedule(static)
  for (int v = 0; v < cam.size; ++v) render_row(p, s, cam.size, v, out);
  return out;
}

Image render_perspective_serial(const Panorama& p, const CameraSpec& cam) {
  const RenderSetup s = prepare(p, cam);
  Image out(cam.size, cam.size);
  for (int v = 0; v < cam.size; ++v) render_row(p, s, cam.size, v, out);
  return out;
}

Panorama rotate_panorama_longitude(const Panorama& p, double delta_deg) {
  p.validate();
  Panorama q = p;
  const int w = p.pixels.width(), h = p.pixels.height();
  const double shift = delta_deg / 360.0 * w;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) q.pixels.set_pixel(x, y, sample_panorama(p.pixels, x + shift, y));
  }
  return q;
}

}  // namespace relrot
