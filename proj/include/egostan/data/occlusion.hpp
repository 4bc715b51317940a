#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "egostan/data/camera.hpp"
#include "egostan/data/geom.hpp"
#include "egostan/data/skeleton.hpp"

namespace egostan::data {

inline constexpr double kDefaultTorsoRadius = 80.0;  // mm

struct Capsule {
  Vec3 a, b;
  double radius = 0.0;
};

inline Capsule torso_capsule(const std::vector<Vec3>& pose, double radius = kDefaultTorsoRadius) {
  if (pose.size() != static_cast<size_t>(kNumJoints)) {
    throw std::invalid_argument("torso_capsule: expected 16-joint pose");
  }
  return {pose[kNeck], pose[kPelvis], radius};
}

// The sight line hits the capsule strictly before reaching the target iff the
// eye->target segment comes closer to the capsule axis than its radius. A
// target inside the capsule is blocked too: the boundary crossing happens on
// the way in. Radius 0 blocks nothing.
inline bool sight_blocked(const Vec3& eye, const Vec3& target, const Capsule& c) {
  if (c.radius <= 0.0) return false;
  return seg_seg_distance(eye, target, c.a, c.b) < c.radius;
}

inline std::vector<uint8_t> occlusion_flags(const std::vector<Vec3>& pose,
                                            const FisheyeCamera& cam, const Capsule& torso) {
  std::vector<uint8_t> flags(pose.size(), 0);
  for (size_t j = 0; j < pose.size(); ++j) {
    flags[j] = sight_blocked(cam.position, pose[j], torso) ? 1 : 0;
  }
  return flags;
}

}  // namespace egostan::data
