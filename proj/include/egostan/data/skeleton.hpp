#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "egostan/data/geom.hpp"

namespace egostan::data {

// Fixed 16-joint humanoid. Indices are frozen: dataset records, loss subsets
// and the evaluation report all refer to them.
enum Joint : int {
  kHead = 0,
  kNeck = 1,
  kLShoulder = 2,
  kRShoulder = 3,
  kLElbow = 4,
  kRElbow = 5,
  kLWrist = 6,
  kRWrist = 7,
  kThorax = 8,
  kPelvis = 9,
  kLHip = 10,
  kRHip = 11,
  kLKnee = 12,
  kRKnee = 13,
  kLAnkle = 14,
  kRAnkle = 15,
};

inline constexpr int kNumJoints = 16;

inline const char* joint_name(int j) {
  static const char* names[kNumJoints] = {
      "head",    "neck",    "l_shoulder", "r_shoulder", "l_elbow", "r_elbow",
      "l_wrist", "r_wrist", "thorax",     "pelvis",     "l_hip",   "r_hip",
      "l_knee",  "r_knee",  "l_ankle",    "r_ankle"};
  if (j < 0 || j >= kNumJoints) throw std::invalid_argument("joint_name: bad index");
  return names[j];
}

inline const std::vector<int64_t>& upper_body_joints() {
  static const std::vector<int64_t> v = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  return v;
}

inline const std::vector<int64_t>& lower_body_joints() {
  static const std::vector<int64_t> v = {10, 11, 12, 13, 14, 15};
  return v;
}

// Tree rooted at the pelvis. `offset[j]` is the rest-pose bone vector from
// parent to joint j in the parent's frame (mm). `angle_limit[j]` bounds the
// magnitude of each rotation angle applied at joint j.
struct SkeletonSpec {
  std::vector<int> parent;
  std::vector<Vec3> offset;
  std::vector<double> angle_limit;

  int64_t joints() const { return static_cast<int64_t>(parent.size()); }
  int root() const {
    for (size_t j = 0; j < parent.size(); ++j) {
      if (parent[j] < 0) return static_cast<int>(j);
    }
    throw std::invalid_argument("SkeletonSpec: no root");
  }

  void validate() const {
    if (parent.size() != offset.size() || parent.size() != angle_limit.size()) {
      throw std::invalid_argument("SkeletonSpec: field sizes differ");
    }
    int roots = 0;
    for (size_t j = 0; j < parent.size(); ++j) {
      if (parent[j] < 0) {
        ++roots;
        continue;
      }
      if (parent[j] >= static_cast<int>(parent.size())) {
        throw std::invalid_argument("SkeletonSpec: parent index out of range");
      }
      if (offset[j].norm() <= 0.0) {
        throw std::invalid_argument("SkeletonSpec: bone length must be positive");
      }
      // walking up must terminate at the root (tree, no cycles)
      int p = parent[j], hops = 0;
      while (p >= 0) {
        p = parent[static_cast<size_t>(p)];
        if (++hops > static_cast<int>(parent.size())) {
          throw std::invalid_argument("SkeletonSpec: parent map has a cycle");
        }
      }
    }
    if (roots != 1) throw std::invalid_argument("SkeletonSpec: exactly one root required");
  }

  static SkeletonSpec humanoid() {
    SkeletonSpec s;
    s.parent.resize(kNumJoints);
    s.offset.resize(kNumJoints);
    s.angle_limit.resize(kNumJoints);
    auto set = [&](int j, int p, Vec3 o, double lim) {
      s.parent[static_cast<size_t>(j)] = p;
      s.offset[static_cast<size_t>(j)] = o;
      s.angle_limit[static_cast<size_t>(j)] = lim;
    };
    set(kPelvis, -1, {0, 0, 0}, 0.3);
    set(kThorax, kPelvis, {0, 250, 0}, 0.3);
    set(kNeck, kThorax, {0, 200, 0}, 0.4);
    set(kHead, kNeck, {0, 150, 0}, 0.5);
    set(kLShoulder, kNeck, {-180, 0, 0}, 1.2);
    set(kRShoulder, kNeck, {180, 0, 0}, 1.2);
    set(kLElbow, kLShoulder, {0, -280, 0}, 1.5);
    set(kRElbow, kRShoulder, {0, -280, 0}, 1.5);
    set(kLWrist, kLElbow, {0, -250, 0}, 0.8);
    set(kRWrist, kRElbow, {0, -250, 0}, 0.8);
    set(kLHip, kPelvis, {-100, 0, 0}, 1.0);
    set(kRHip, kPelvis, {100, 0, 0}, 1.0);
    set(kLKnee, kLHip, {0, -420, 0}, 1.3);
    set(kRKnee, kRHip, {0, -420, 0}, 1.3);
    set(kLAnkle, kLKnee, {0, -400, 0}, 0.5);
    set(kRAnkle, kRKnee, {0, -400, 0}, 0.5);
    s.validate();
    return s;
  }
};

// World positions from per-joint rotations. Each joint's rotation acts on its
// subtree: p[c] = p[j] + W[j]*offset[c], W[c] = W[j]*R[c].
inline std::vector<Vec3> forward_kinematics(const SkeletonSpec& spec, const Vec3& root_pos,
                                            const std::vector<Mat3>& rotation) {
  const size_t j = static_cast<size_t>(spec.joints());
  if (rotation.size() != j) {
    throw std::invalid_argument("forward_kinematics: rotation count mismatch");
  }
  std::vector<Vec3> pos(j);
  std::vector<Mat3> world(j);
  std::vector<uint8_t> done(j, 0);
  const int root = spec.root();
  pos[static_cast<size_t>(root)] = root_pos;
  world[static_cast<size_t>(root)] = rotation[static_cast<size_t>(root)];
  done[static_cast<size_t>(root)] = 1;
  // parents may appear after children in index order; sweep until settled
  for (size_t settled = 1; settled < j;) {
    const size_t before = settled;
    for (size_t c = 0; c < j; ++c) {
      if (done[c]) continue;
      const size_t p = static_cast<size_t>(spec.parent[c]);
      if (!done[p]) continue;
      pos[c] = pos[p] + world[p].apply(spec.offset[c]);
      world[c] = world[p] * rotation[c];
      done[c] = 1;
      ++settled;
    }
    if (settled == before) {
      throw std::invalid_argument("forward_kinematics: unreachable joints in parent map");
    }
  }
  return pos;
}

}  // namespace egostan::data
