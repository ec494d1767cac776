// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "relrot/common.hpp"
#include "relrot/panosample.hpp"

namespace relrot {

std::string_view to_string(SynthStyle s) { return s == SynthStyle::Room ? "room" : "street"; }

SynthStyle synth_style_from_string(std::string_view s) {
  if (s == "room") return SynthStyle::Room;
  if (s == "street") return SynthStyle::Street;
  throw std::invalid_argument("unknown synthetic style: " + std::string(s));
}

namespace {

using Vec3 = Eigen::Vector3d;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic uniform [0, 1) from a key tuple.
double hash01(std::uint64_t seed, std::int64_t a, std::int64_t b = 0, std::int64_t c = 0) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ static_cast<std::uint64_t>(a));
  h = splitmix(h ^ static_cast<std::uint64_t>(b) * 0x632be59bd9b4e019ULL);
  h = splitmix(h ^ static_cast<std::uint64_t>(c) * 0x85157af5ULL);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

Vec3 hsv(double h, double s, double v) {
  h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0) / 60.0;
  const int i = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

bool near_line(double coord, double period, double half_width) {
  const double m = coord - period * std::floor(coord / period);
  return m < half_width || m > period - half_width;
}

// ---------------------------------------------------------------------------
// Room: axis-aligned box with per-wall hues, striped walls, tiled floor.
// ---------------------------------------------------------------------------

struct Rect {
  double u0, u1, z0, z1;
  Vec3 color;
};

struct RoomScene {
  double lx, ly, height, eye;
  std::array<double, 4> hues;
  std::array<std::vector<Rect>, 4> rects;  // +x, -y, -x, +y
  Vec3 light;
};

RoomScene make_room(std::uint64_t seed) {
  std::mt19937_64 rng(splitmix(seed ^ 0x524f4f4dULL));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  RoomScene r;
  r.lx = 5.0 + 1.5 * u01(rng);
  r.ly = 4.0 + 1.5 * u01(rng);
  r.height = 2.7 + 0.5 * u01(rng);
  r.eye = 1.5;
  const double base = 360.0 * u01(rng);
  for (int w = 0; w < 4; ++w) r.hues[w] = std::fmod(base + 90.0 * w, 360.0);
  for (int w = 0; w < 4; ++w) {
    const double half = (w % 2 == 0) ? r.ly : r.lx;
    const int n = 3 + static_cast<int>(u01(rng) * 3);
    for (int i = 0; i < n; ++i) {
      const double width = 0.5 + 1.3 * u01(rng);
      const double tall = 0.4 + 1.6 * u01(rng);
      const double u0 = -half + 0.2 + (2 * half - width - 0.4) * u01(rng);
      const double z0 = 0.2 + (r.height - tall - 0.4) * u01(rng);
      r.rects[w].push_back({u0, u0 + width, z0, z0 + tall,
                            hsv(360.0 * u01(rng), 0.35 + 0.6 * u01(rng), 0.25 + 0.7 * u01(rng))});
    }
  }
  r.light = Vec3(0.4 + u01(rng), -0.5 + u01(rng), 1.5).normalized();
  return r;
}

Vec3 shade_room(const RoomScene& r, const Vec3& origin, const Vec3& d) {
  double t = std::numeric_limits<double>::infinity();
  int face = -1;  // 0:+x 1:-y 2:-x 3:+y 4:floor 5:ceiling
  auto consider = [&](double tt, int f) {
    if (tt > 1e-9 && tt < t) {
      t = tt;
      face = f;
    }
  };
  if (d.x() > 0) consider((r.lx - origin.x()) / d.x(), 0);
  if (d.x() < 0) consider((-r.lx - origin.x()) / d.x(), 2);
  if (d.y() < 0) consider((-r.ly - origin.y()) / d.y(), 1);
  if (d.y() > 0) consider((r.ly - origin.y()) / d.y(), 3);
  if (d.z() < 0) consider(-origin.z() / d.z(), 4);
  if (d.z() > 0) consider((r.height - origin.z()) / d.z(), 5);
  const Vec3 p = origin + t * d;

  Vec3 color;
  Vec3 normal;
  if (face <= 3) {
    static constexpr std::array<std::array<double, 3>, 4> kNormals{
        {{-1, 0, 0}, {0, 1, 0}, {1, 0, 0}, {0, -1, 0}}};
    normal = Vec3(kNormals[face][0], kNormals[face][1], kNormals[face][2]);
    // Horizontal coordinate along the wall, increasing to the viewer's right.
    const double u = face == 0 ? -p.y() : face == 1 ? -p.x() : face == 2 ? p.y() : p.x();
    color = hsv(r.hues[face], 0.55, 0.8);
    if (near_line(p.z(), 0.5, 0.025)) color *= 0.7;
    if (near_line(u, 1.25, 0.02)) color *= 0.85;
    if (p.z() < 0.12) color = Vec3(0.15, 0.12, 0.1);
    for (const Rect& rc : r.rects[face]) {
      if (u >= rc.u0 && u <= rc.u1 && p.z() >= rc.z0 && p.z() <= rc.z1) {
        color = rc.color;
        const double fu = (u - rc.u0) / (rc.u1 - rc.u0), fz = (p.z() - rc.z0) / (rc.z1 - rc.z0);
        if (fu < 0.06 || fu > 0.94 || fz < 0.06 || fz > 0.94) color = Vec3(0.08, 0.08, 0.08);
      }
    }
  } else if (face == 4) {
    normal = Vec3(0, 0, 1);
    const bool odd = (static_cast<long>(std::floor(p.x() / 0.6)) + static_cast<long>(std::floor(p.y() / 0.6))) & 1;
    color = odd ? Vec3(0.55, 0.38, 0.22) : Vec3(0.7, 0.52, 0.32);
    if (near_line(p.x(), 0.6, 0.015) || near_line(p.y(), 0.6, 0.015)) color = Vec3(0.2, 0.15, 0.1);
  } else {
    normal = Vec3(0, 0, -1);
    color = Vec3(0.92, 0.92, 0.88);
    if (std::abs(p.x() - 0.8) < 0.6 && std::abs(p.y() + 0.4) < 0.3) color = Vec3(1.0, 1.0, 0.85);
    if (near_line(p.x(), 2.0, 0.03)) color *= 0.8;
  }
  const double lambert = 0.7 + 0.3 * std::max(0.0, normal.dot(r.light));
  return (color * lambert).cwiseMin(1.0);
}

// ---------------------------------------------------------------------------
// Street: ground plane between two rows of facades under a sun-lit sky.
// ---------------------------------------------------------------------------

struct StreetScene {
  std::uint64_t seed;
  double half_width;
  double eye;
  Vec3 sun;
  double segment = 12.0;
};

StreetScene make_street(std::uint64_t seed) {
  std::mt19937_64 rng(splitmix(seed ^ 0x53545245ULL));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  StreetScene s;
  s.seed = seed;
  s.half_width = 9.0 + 3.0 * u01(rng);
  s.eye = 2.0;
  const double az = deg2rad(360.0 * u01(rng)), el = deg2rad(20.0 + 25.0 * u01(rng));
  s.sun = Vec3(std::cos(el) * std::cos(az), -std::cos(el) * std::sin(az), std::sin(el));
  return s;
}

Vec3 sky_color(const StreetScene& s, const Vec3& d) {
  const double el = std::max(0.0, d.z());
  Vec3 c = Vec3(0.75, 0.85, 0.95) * (1 - el) + Vec3(0.25, 0.45, 0.85) * el;
  const double ang = std::acos(std::clamp(d.dot(s.sun), -1.0, 1.0));
  c += Vec3(1.0, 0.9, 0.6) * (0.55 * std::exp(-ang / deg2rad(18.0)));
  if (ang < deg2rad(3.0)) c = Vec3(1.0, 1.0, 0.92);
  return c.cwiseMin(1.0);
}

Vec3 shade_street(const StreetScene& s, const Vec3& origin, const Vec3& d) {
  double t_ground = std::numeric_limits<double>::infinity();
  if (d.z() < 0) t_ground = -origin.z() / d.z();
  double t_wall = std::numeric_limits<double>::infinity();
  int side = 0;
  if (d.y() > 0) {
    t_wall = (s.half_width - origin.y()) / d.y();
    side = 1;
  } else if (d.y() < 0) {
    t_wall = (-s.half_width - origin.y()) / d.y();
    side = -1;
  }
  Vec3 color;
  double t;
  const Vec3 haze(0.78, 0.84, 0.9);
  if (t_wall < t_ground) {
    const Vec3 p = origin + t_wall * d;
    const auto seg = static_cast<std::int64_t>(std::floor(p.x() / s.segment));
    const double height = 8.0 + 24.0 * hash01(s.seed, seg, side, 1);
    if (p.z() > height) return sky_color(s, d);
    t = t_wall;
    color = hsv(360.0 * hash01(s.seed, seg, side, 2), 0.25 + 0.45 * hash01(s.seed, seg, side, 3),
                0.45 + 0.45 * hash01(s.seed, seg, side, 4));
    const double lx = p.x() - seg * s.segment;
    if (lx < 0.3 || lx > s.segment - 0.3) color *= 0.55;
    const double col = std::fmod(lx, 3.0), row = std::fmod(p.z(), 3.2);
    if (p.z() < 4.0) {
      if (col > 0.8 && col < 2.2 && p.z() < 2.8) color = Vec3(0.12, 0.1, 0.1);
    } else if (col > 0.8 && col < 2.2 && row > 0.7 && row < 2.5) {
      color = Vec3(0.15, 0.22, 0.35);
    }
    if (std::abs(p.z() - height) < 0.35) color *= 0.6;
    const Vec3 normal(0, -side, 0);
    color *= 0.55 + 0.45 * std::max(0.0, normal.dot(s.sun));
  } else if (std::isfinite(t_ground)) {
    const Vec3 p = origin + t_ground * d;
    t = t_ground;
    const double ay = std::abs(p.y());
    if (ay > s.half_width - 3.0) {
      color = Vec3(0.62, 0.6, 0.56);
      if (near_line(p.x(), 1.5, 0.04) || near_line(ay, 1.5, 0.04)) color *= 0.75;
    } else {
      color = Vec3(0.28, 0.28, 0.3);
      if (ay < 0.12 && std::fmod(std::fmod(p.x(), 6.0) + 6.0, 6.0) < 3.0) color = Vec3(0.95, 0.95, 0.9);
      if (std::abs(ay - (s.half_width - 3.4)) < 0.1) color = Vec3(0.9, 0.8, 0.3);
    }
    color *= 0.6 + 0.4 * std::max(0.0, s.sun.z());
  } else {
    return sky_color(s, d);
  }
  const double fog = 1.0 - std::exp(-t / 180.0);
  return (color * (1 - fog) + haze * fog).cwiseMin(1.0);
}

template <typename Shade>
Image render_equirect(int width, const Shade& shade) {
  if (width < 16 || width % 2 != 0) throw std::invalid_argument("synth: width must be even and >= 16");
  const int height = width / 2;
  Image img(width, height);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      Vec3 acc = Vec3::Zero();
      for (int sy = 0; sy < 2; ++sy)
        for (int sx = 0; sx < 2; ++sx)
          acc += shade(pano_to_direction(x - 0.25 + 0.5 * sx, y - 0.25 + 0.5 * sy, width, height));
      acc /= 4.0;
      img.set_pixel(x, y, {float(acc.x()), float(acc.y()), float(acc.z())});
    }
  }
  return img;
}

std::string pano_id(std::uint64_t seed, SynthStyle style, const Vec3& pos) {
  std::ostringstream os;
  os << to_string(style) << '-' << seed;
  if (!pos.isZero()) os << "-x" << pos.x() << "y" << pos.y();
  return os.str();
}

}  // namespace

std::vector<double> room_wall_hues(std::uint64_t seed) {
  const RoomScene r = make_room(seed);
  return {r.hues.begin(), r.hues.end()};
}

Panorama synth_panorama_at(std::uint64_t seed, SynthStyle style, const Eigen::Vector3d& position,
                           int width) {
  Panorama p;
  if (style == SynthStyle::Room) {
    const RoomScene r = make_room(seed);
    if (std::abs(position.x()) > r.lx - 0.5 || std::abs(position.y()) > r.ly - 0.5) {
      throw std::invalid_argument("synth_panorama_at: position outside the room");
    }
    const Vec3 origin = position + Vec3(0, 0, r.eye);
    p.pixels = render_equirect(width, [&](const Vec3& d) { return shade_room(r, origin, d); });
    p.dataset_tag = "synth-room";
  } else {
    const StreetScene s = make_street(seed);
    if (std::abs(position.y()) > s.half_width - 1.0) {
      throw std::invalid_argument("synth_panorama_at: position outside the street");
    }
    const Vec3 origin = position + Vec3(0, 0, s.eye);
    p.pixels = render_equirect(width, [&](const Vec3& d) { return shade_street(s, origin, d); });
    p.dataset_tag = "synth-street";
  }
  p.id = pano_id(seed, style, position);
  p.position = position;
  return p;
}

Panorama synth_panorama(std::uint64_t seed, SynthStyle style, int width) {
  return synth_panorama_at(seed, style, Vec3::Zero(), width);
}

std::vector<Panorama> synth_translated_panoramas(std::uint64_t seed, SynthStyle style, int nx,
                                                 int ny, double spacing, int width) {
  std::vector<Panorama> out;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const Vec3 pos((i - (nx - 1) / 2.0) * spacing, (j - (ny - 1) / 2.0) * spacing, 0.0);
      out.push_back(synth_panorama_at(seed, style, pos, width));
    }
  }
  return out;
}

}  // namespace relrot
