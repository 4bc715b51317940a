#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "egostan/data/geom.hpp"

namespace egostan::data {

inline constexpr double kDefaultThetaMaxDeg = 100.0;
inline constexpr double kPi = 3.14159265358979323846;

// Head-mounted equidistant fisheye: r = f * theta. The mount hangs the camera
// 60mm above and 80mm in front of the head joint, looking straight down with
// world +x to the right of the image and world +z downward in the image.
struct FisheyeCamera {
  double f = 0.0;   // pixels per radian
  double cx = 0.0;
  double cy = 0.0;
  int64_t width = 0;
  int64_t height = 0;
  double theta_max = 0.0;  // radians
  Vec3 position;           // world mm
  Mat3 world_to_cam;       // rows are the camera axes in world coordinates

  Vec3 to_camera(const Vec3& p_world) const { return world_to_cam.apply(p_world - position); }
};

inline constexpr Vec3 kHeadMountOffset = {0.0, 60.0, 80.0};

inline FisheyeCamera make_head_camera(const Vec3& head, int64_t height, int64_t width,
                                      double theta_max_deg = kDefaultThetaMaxDeg) {
  if (height < 2 || width < 2) throw std::invalid_argument("make_head_camera: image too small");
  if (theta_max_deg <= 0.0 || theta_max_deg > 180.0) {
    throw std::invalid_argument("make_head_camera: theta_max out of range");
  }
  FisheyeCamera cam;
  cam.width = width;
  cam.height = height;
  cam.theta_max = theta_max_deg * kPi / 180.0;
  cam.f = 0.5 * static_cast<double>(std::min(height, width)) / cam.theta_max;
  cam.cx = 0.5 * static_cast<double>(width - 1);
  cam.cy = 0.5 * static_cast<double>(height - 1);
  cam.position = head + kHeadMountOffset;
  cam.world_to_cam = Mat3::from_rows({1, 0, 0}, {0, 0, 1}, {0, -1, 0});
  return cam;
}

struct Projection {
  double u = 0.0;
  double v = 0.0;
  bool valid = false;
};

// point is in camera-frame mm; azimuth is preserved, radius is f * theta.
inline Projection project_fisheye(const Vec3& point, const FisheyeCamera& cam) {
  const double n = point.norm();
  if (n == 0.0) throw std::invalid_argument("project_fisheye: zero-length input");
  const double rho = std::sqrt(point.x * point.x + point.y * point.y);
  const double theta = std::atan2(rho, point.z);
  Projection pr;
  if (theta > cam.theta_max) return pr;
  if (rho == 0.0) {
    pr.u = cam.cx;
    pr.v = cam.cy;
  } else {
    const double r = cam.f * theta;
    pr.u = cam.cx + r * point.x / rho;
    pr.v = cam.cy + r * point.y / rho;
  }
  pr.valid = pr.u >= 0.0 && pr.u <= static_cast<double>(cam.width - 1) && pr.v >= 0.0 &&
             pr.v <= static_cast<double>(cam.height - 1);
  return pr;
}

// Closed-form inverse: unit direction in the camera frame.
inline Vec3 unproject_fisheye(double u, double v, const FisheyeCamera& cam) {
  const double du = u - cam.cx, dv = v - cam.cy;
  const double r = std::sqrt(du * du + dv * dv);
  const double theta = r / cam.f;
  if (r == 0.0) return {0.0, 0.0, 1.0};
  const double s = std::sin(theta) / r;
  return {du * s, dv * s, std::cos(theta)};
}

}  // namespace egostan::data
