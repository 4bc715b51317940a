#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "egostan/data/geom.hpp"
#include "egostan/data/skeleton.hpp"
#include "egostan/util/rng.hpp"

namespace egostan::data {

inline constexpr double kMotionDt = 0.1;  // seconds between frames

// One sinusoidal joint-angle channel: angle(t) = amp * sin(2*pi*freq*t + phase)
// around the given local axis (0=x, 1=y, 2=z). Per-sequence jitter perturbs
// phase and scales amplitude; the skeleton's angle limit caps the result.
struct MotionChannel {
  int joint;
  int axis;
  double amplitude;  // radians
  double frequency;  // Hz
  double phase;      // radians
};

struct MotionProfile {
  std::string name;
  std::vector<MotionChannel> channels;
  Vec3 root_amplitude;   // mm sway of the pelvis
  double root_frequency = 0.0;
};

inline const std::vector<std::string>& action_catalog() {
  static const std::vector<std::string> v = {"game",  "gesticulate", "greet",
                                             "lower_stretch", "pat", "react",
                                             "talk",  "upper_stretch", "walk"};
  return v;
}

inline MotionProfile motion_profile(const std::string& action) {
  const double pi = 3.14159265358979323846;
  MotionProfile p;
  p.name = action;
  auto ch = [&](int joint, int axis, double amp, double freq, double phase = 0.0) {
    p.channels.push_back({joint, axis, amp, freq, phase});
  };
  if (action == "static") {
    return p;  // zero-amplitude profile, used by tests
  }
  if (action == "walk") {
    ch(kLHip, 0, 0.55, 1.0, 0.0);
    ch(kRHip, 0, 0.55, 1.0, pi);
    ch(kLKnee, 0, 0.75, 1.0, pi / 2);
    ch(kRKnee, 0, 0.75, 1.0, pi / 2 + pi);
    ch(kLShoulder, 0, 0.30, 1.0, pi);
    ch(kRShoulder, 0, 0.30, 1.0, 0.0);
    ch(kPelvis, 1, 0.10, 1.0, 0.0);
    p.root_amplitude = {0, 25, 0};
    p.root_frequency = 2.0;
  } else if (action == "upper_stretch") {
    ch(kLShoulder, 2, 1.10, 0.3, 0.0);
    ch(kRShoulder, 2, -1.10, 0.3, 0.0);
    ch(kLElbow, 0, 0.40, 0.3, pi / 3);
    ch(kRElbow, 0, 0.40, 0.3, pi / 3);
    ch(kThorax, 0, 0.15, 0.3, 0.0);
  } else if (action == "lower_stretch") {
    ch(kLHip, 0, 0.90, 0.4, 0.0);
    ch(kRHip, 0, 0.90, 0.4, 0.0);
    ch(kLKnee, 0, 1.20, 0.4, pi);
    ch(kRKnee, 0, 1.20, 0.4, pi);
    ch(kThorax, 0, 0.25, 0.4, pi / 2);
    p.root_amplitude = {0, 120, 0};
    p.root_frequency = 0.4;
  } else if (action == "gesticulate") {
    ch(kLElbow, 0, 0.90, 1.7, 0.0);
    ch(kRElbow, 0, 0.90, 1.9, pi / 2);
    ch(kLWrist, 0, 0.60, 2.3, 0.0);
    ch(kRWrist, 0, 0.60, 2.1, pi / 4);
    ch(kLShoulder, 0, 0.35, 1.3, pi);
    ch(kRShoulder, 0, 0.35, 1.3, 0.0);
  } else if (action == "greet") {
    ch(kRShoulder, 2, -1.00, 0.8, 0.0);
    ch(kRElbow, 0, 0.90, 1.6, 0.0);
    ch(kRWrist, 0, 0.40, 1.6, pi / 2);
    ch(kHead, 2, 0.15, 0.8, 0.0);
  } else if (action == "pat") {
    ch(kRShoulder, 0, 0.70, 0.7, 0.0);
    ch(kRElbow, 0, 0.50, 0.7, pi / 3);
    ch(kLShoulder, 0, 0.15, 0.7, pi);
  } else if (action == "game") {
    ch(kLShoulder, 0, 0.40, 1.1, 0.0);
    ch(kRShoulder, 0, 0.40, 1.1, pi / 5);
    ch(kLElbow, 0, 0.70, 1.4, 0.0);
    ch(kRElbow, 0, 0.70, 1.4, pi / 2);
    ch(kHead, 0, 0.20, 0.9, 0.0);
  } else if (action == "react") {
    ch(kLShoulder, 0, 0.80, 0.6, 0.0);
    ch(kRShoulder, 0, 0.80, 0.6, pi / 6);
    ch(kLElbow, 0, 0.60, 0.9, pi / 2);
    ch(kRElbow, 0, 0.60, 0.9, 2 * pi / 3);
    ch(kHead, 0, 0.30, 0.7, 0.0);
    ch(kThorax, 0, 0.20, 0.6, pi);
  } else if (action == "talk") {
    ch(kLElbow, 0, 0.35, 1.1, 0.0);
    ch(kRElbow, 0, 0.35, 1.2, pi / 2);
    ch(kLWrist, 2, 0.30, 1.5, 0.0);
    ch(kRWrist, 2, 0.30, 1.4, pi / 3);
    ch(kHead, 1, 0.20, 0.8, 0.0);
  } else {
    throw std::invalid_argument("motion_profile: unknown action '" + action + "'");
  }
  return p;
}

inline Mat3 axis_rotation(int axis, double angle) {
  switch (axis) {
    case 0:
      return Mat3::rot_x(angle);
    case 1:
      return Mat3::rot_y(angle);
    case 2:
      return Mat3::rot_z(angle);
    default:
      throw std::invalid_argument("axis_rotation: axis must be 0, 1 or 2");
  }
}

// T world poses (mm) for the given action, deterministic per (seed, action, T).
// Per-sequence jitter: each channel's phase shifts uniformly and its amplitude
// scales by U(0.8, 1.0); angles are capped by the joint's limit.
inline std::vector<std::vector<Vec3>> sample_motion(const SkeletonSpec& spec,
                                                    const std::string& action, int64_t t_steps,
                                                    uint64_t seed) {
  if (t_steps < 1) throw std::invalid_argument("sample_motion: T must be >= 1");
  MotionProfile profile = motion_profile(action);
  util::Rng rng(util::derive_seed(seed, 0x6d6f74696f6eULL));
  const double two_pi = 6.28318530717958647692;
  for (auto& c : profile.channels) {
    c.phase += rng.uniform(0.0, two_pi);
    const double amp = c.amplitude * rng.uniform(0.8, 1.0);
    const double lim = spec.angle_limit[static_cast<size_t>(c.joint)];
    c.amplitude = std::min(std::abs(amp), lim) * (amp < 0.0 ? -1.0 : 1.0);
  }
  const double root_phase = rng.uniform(0.0, two_pi);

  const Vec3 base_root = {0, 1000, 0};
  std::vector<std::vector<Vec3>> poses;
  poses.reserve(static_cast<size_t>(t_steps));
  for (int64_t k = 0; k < t_steps; ++k) {
    const double t = static_cast<double>(k) * kMotionDt;
    std::vector<Mat3> rot(static_cast<size_t>(spec.joints()), Mat3::identity());
    for (const auto& c : profile.channels) {
      const double angle = c.amplitude * std::sin(two_pi * c.frequency * t + c.phase);
      rot[static_cast<size_t>(c.joint)] =
          rot[static_cast<size_t>(c.joint)] * axis_rotation(c.axis, angle);
    }
    const double sway = std::sin(two_pi * profile.root_frequency * t + root_phase);
    const Vec3 root = base_root + profile.root_amplitude * sway;
    poses.push_back(forward_kinematics(spec, root, rot));
  }
  return poses;
}

}  // namespace egostan::data
