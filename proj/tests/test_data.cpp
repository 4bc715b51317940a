#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "egostan/data/camera.hpp"
#include "egostan/data/dataset.hpp"
#include "egostan/data/geom.hpp"
#include "egostan/data/motion.hpp"
#include "egostan/data/occlusion.hpp"
#include "egostan/data/render.hpp"
#include "egostan/data/skeleton.hpp"
#include "egostan/util/rng.hpp"

namespace data = egostan::data;
namespace util = egostan::util;
using data::FisheyeCamera;
using data::SkeletonSpec;
using data::Vec3;

namespace {

double point_seg_dist(const Vec3& x, const Vec3& p, const Vec3& q) {
  const Vec3 d = q - p;
  const double dd = d.dot(d);
  const double t = dd == 0.0 ? 0.0 : std::clamp((x - p).dot(d) / dd, 0.0, 1.0);
  return (x - (p + d * t)).norm();
}

// independent oracle: dense sampling along the sight segment
double brute_min_dist(const Vec3& a, const Vec3& b, const Vec3& p, const Vec3& q, int n = 4001) {
  double best = 1e300;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    best = std::min(best, point_seg_dist(data::lerp(a, b, t), p, q));
  }
  return best;
}

Vec3 rand_vec(util::Rng& rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

double angle_between(const Vec3& a, const Vec3& b) {
  // atan2 form stays precise for tiny angles where acos(dot) floors at ~1e-8
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

TEST(Geom, SegSegDistanceKnownCases) {
  // parallel unit-separated segments
  EXPECT_NEAR(data::seg_seg_distance({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}), 1.0, 1e-12);
  // crossing segments touch
  EXPECT_NEAR(data::seg_seg_distance({-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}), 0.0, 1e-12);
  // skew segments: closest between (0,0,0)-(1,0,0) and line z=1 along y at x=3
  EXPECT_NEAR(data::seg_seg_distance({0, 0, 0}, {1, 0, 0}, {3, -1, 1}, {3, 1, 1}),
              std::sqrt(4.0 + 1.0), 1e-12);
  // degenerate: both segments are points
  EXPECT_NEAR(data::seg_seg_distance({0, 0, 0}, {0, 0, 0}, {1, 1, 1}, {1, 1, 1}),
              std::sqrt(3.0), 1e-12);
}

TEST(Geom, SegSegDistanceMatchesBruteForce) {
  util::Rng rng(101);
  for (int k = 0; k < 200; ++k) {
    const Vec3 a = rand_vec(rng, -500, 500), b = rand_vec(rng, -500, 500);
    const Vec3 p = rand_vec(rng, -500, 500), q = rand_vec(rng, -500, 500);
    const double exact = data::seg_seg_distance(a, b, p, q);
    const double sampled = brute_min_dist(a, b, p, q);
    EXPECT_GE(sampled + 1e-9, exact);  // sampling can only overestimate
    EXPECT_NEAR(exact, sampled, 0.5);
  }
}

TEST(Skeleton, HumanoidSpecShape) {
  const SkeletonSpec s = SkeletonSpec::humanoid();
  EXPECT_EQ(s.joints(), 16);
  EXPECT_EQ(s.root(), data::kPelvis);
  EXPECT_EQ(data::upper_body_joints().size(), 10u);
  EXPECT_EQ(data::lower_body_joints().size(), 6u);
  EXPECT_STREQ(data::joint_name(data::kLKnee), "l_knee");
  EXPECT_THROW(data::joint_name(16), std::invalid_argument);
}

TEST(Skeleton, ValidateRejectsMalformedSpecs) {
  SkeletonSpec s = SkeletonSpec::humanoid();
  s.parent[data::kHead] = data::kHead;  // self-cycle
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = SkeletonSpec::humanoid();
  s.offset[data::kNeck] = {0, 0, 0};
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = SkeletonSpec::humanoid();
  s.parent[data::kHead] = -1;  // second root
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Skeleton, RestPoseForwardKinematics) {
  const SkeletonSpec s = SkeletonSpec::humanoid();
  std::vector<data::Mat3> rot(16, data::Mat3::identity());
  const auto pos = data::forward_kinematics(s, {0, 1000, 0}, rot);
  EXPECT_NEAR(pos[data::kPelvis].y, 1000.0, 1e-12);
  EXPECT_NEAR(pos[data::kNeck].y, 1450.0, 1e-12);
  EXPECT_NEAR(pos[data::kHead].y, 1600.0, 1e-12);
  EXPECT_NEAR(pos[data::kRShoulder].x, 180.0, 1e-12);
  EXPECT_NEAR(pos[data::kLAnkle].y, 1000.0 - 820.0, 1e-12);
}

TEST(Skeleton, BoneLengthsPreservedUnderRandomRotations) {
  const SkeletonSpec s = SkeletonSpec::humanoid();
  util::Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<data::Mat3> rot;
    for (int j = 0; j < 16; ++j) {
      rot.push_back(data::Mat3::rot_x(rng.uniform(-1.0, 1.0)) *
                    data::Mat3::rot_y(rng.uniform(-1.0, 1.0)) *
                    data::Mat3::rot_z(rng.uniform(-1.0, 1.0)));
    }
    const auto pos = data::forward_kinematics(s, {0, 1000, 0}, rot);
    for (int j = 0; j < 16; ++j) {
      const int p = s.parent[static_cast<size_t>(j)];
      if (p < 0) continue;
      const double len = (pos[static_cast<size_t>(j)] - pos[static_cast<size_t>(p)]).norm();
      EXPECT_NEAR(len, s.offset[static_cast<size_t>(j)].norm(), 1e-9);
    }
  }
}

TEST(Motion, StaticActionIsConstant) {
  const SkeletonSpec s = SkeletonSpec::humanoid();
  const auto poses = data::sample_motion(s, "static", 5, 3);
  ASSERT_EQ(poses.size(), 5u);
  for (size_t k = 1; k < poses.size(); ++k) {
    for (int j = 0; j < 16; ++j) {
      EXPECT_EQ(poses[k][static_cast<size_t>(j)].x, poses[0][static_cast<size_t>(j)].x);
      EXPECT_EQ(poses[k][static_cast<size_t>(j)].y, poses[0][static_cast<size_t>(j)].y);
      EXPECT_EQ(poses[k][static_cast<size_t>(j)].z, poses[0][static_cast<size_t>(j)].z);
    }
  }
}

TEST(Motion, DeterministicAndSeedSensitive) {
  const SkeletonSpec s = SkeletonSpec::humanoid();
  const auto a = data::sample_motion(s, "walk", 4, 11);
  const auto b = data::sample_motion(s, "walk", 4, 11);
  const auto c = data::sample_motion(s, "walk", 4, 12);
  EXPECT_EQ(a[3][data::kLKnee].z, b[3][data::kLKnee].z);
  EXPECT_NE(a[3][data::kLKnee].z, c[3][data::kLKnee].z);
  // step k depends on time only: shorter clips are prefixes
  const auto prefix = data::sample_motion(s, "walk", 2, 11);
  EXPECT_EQ(prefix[1][data::kRWrist].x, a[1][data::kRWrist].x);
}

TEST(Motion, UnknownActionThrows) {
  const SkeletonSpec s = SkeletonSpec::humanoid();
  EXPECT_THROW(data::sample_motion(s, "jog", 2, 1), std::invalid_argument);
  EXPECT_THROW(data::sample_motion(s, "walk", 0, 1), std::invalid_argument);
  EXPECT_EQ(data::action_catalog().size(), 9u);
}

TEST(Motion, BoneLengthsConservedForAllActions) {
  const SkeletonSpec s = SkeletonSpec::humanoid();
  for (const auto& action : data::action_catalog()) {
    const auto poses = data::sample_motion(s, action, 6, 21);
    for (const auto& pose : poses) {
      for (int j = 0; j < 16; ++j) {
        const int p = s.parent[static_cast<size_t>(j)];
        if (p < 0) continue;
        const double len = (pose[static_cast<size_t>(j)] - pose[static_cast<size_t>(p)]).norm();
        EXPECT_NEAR(len, s.offset[static_cast<size_t>(j)].norm(), 1e-9) << action;
      }
    }
  }
}

TEST(Camera, AxisAndQuarterTurnProjections) {
  const FisheyeCamera cam = data::make_head_camera({0, 0, 0}, 32, 32);
  const auto center = data::project_fisheye({0, 0, 500}, cam);
  EXPECT_TRUE(center.valid);
  EXPECT_EQ(center.u, cam.cx);
  EXPECT_EQ(center.v, cam.cy);
  const auto side = data::project_fisheye({500, 0, 0}, cam);  // theta = 90 deg, azimuth 0
  EXPECT_TRUE(side.valid);
  EXPECT_NEAR(side.u, cam.cx + cam.f * data::kPi / 2.0, 1e-12);
  EXPECT_NEAR(side.v, cam.cy, 1e-12);
  EXPECT_THROW(data::project_fisheye({0, 0, 0}, cam), std::invalid_argument);
}

TEST(Camera, ValidityLimits) {
  const FisheyeCamera cam = data::make_head_camera({0, 0, 0}, 32, 32);
  // behind the hemisphere limit: theta = 180 deg
  EXPECT_FALSE(data::project_fisheye({0, 0, -500}, cam).valid);
  // 45-degree azimuth keeps the pixel in-frame, isolating the theta_max check
  const double az = std::sqrt(0.5);
  const double th = cam.theta_max + 0.01;
  EXPECT_FALSE(
      data::project_fisheye({std::sin(th) * az * 500, std::sin(th) * az * 500,
                             std::cos(th) * 500},
                            cam)
          .valid);
  const double ok = cam.theta_max - 0.01;
  EXPECT_TRUE(
      data::project_fisheye({std::sin(ok) * az * 500, std::sin(ok) * az * 500,
                             std::cos(ok) * 500},
                            cam)
          .valid);
  // past the image edge at zero azimuth even though theta is legal
  EXPECT_FALSE(data::project_fisheye({std::sin(ok) * 500, 0, std::cos(ok) * 500}, cam).valid);
}

TEST(Camera, RoundTripRecoversDirection) {
  const FisheyeCamera cam = data::make_head_camera({0, 0, 0}, 32, 32);
  util::Rng rng(31);
  int checked = 0;
  while (checked < 100) {
    Vec3 p = rand_vec(rng, -400, 400);
    p.z = rng.uniform(50.0, 600.0);
    const auto pr = data::project_fisheye(p, cam);
    if (!pr.valid) continue;
    const Vec3 dir = data::unproject_fisheye(pr.u, pr.v, cam);
    EXPECT_LE(angle_between(dir, p), 1e-9);
    ++checked;
  }
}

TEST(Camera, PeripheryCompressesWorldDisplacements) {
  const FisheyeCamera cam = data::make_head_camera({0, 0, 0}, 256, 256);
  const double rho = 500.0, d = 10.0;
  const Vec3 near_p = {0, 0, rho};
  const double th = 75.0 * data::kPi / 180.0;
  const Vec3 far_p = {rho * std::sin(th), 0, rho * std::cos(th)};
  const Vec3 delta = {d, 0, 0};
  auto pix_disp = [&](const Vec3& p) {
    const auto a = data::project_fisheye(p, cam);
    const auto b = data::project_fisheye(p + delta, cam);
    EXPECT_TRUE(a.valid && b.valid);
    return std::hypot(a.u - b.u, a.v - b.v);
  };
  EXPECT_LT(pix_disp(far_p), 0.5 * pix_disp(near_p));
}

TEST(Occlusion, SpecExamples) {
  const SkeletonSpec s = SkeletonSpec::humanoid();
  std::vector<data::Mat3> rot(16, data::Mat3::identity());
  const auto pose = data::forward_kinematics(s, {0, 1000, 0}, rot);
  const FisheyeCamera cam = data::make_head_camera(pose[data::kHead], 32, 32);
  const auto torso = data::torso_capsule(pose);
  const auto flags = data::occlusion_flags(pose, cam, torso);
  // directly-below-torso joints are blocked at rest
  EXPECT_TRUE(flags[data::kLKnee]);
  EXPECT_TRUE(flags[data::kRAnkle]);
  EXPECT_TRUE(flags[data::kLHip]);
  // on-axis joints sit inside the occluder itself
  EXPECT_TRUE(flags[data::kThorax]);
  EXPECT_TRUE(flags[data::kPelvis]);
  // laterally extended joints stay visible
  EXPECT_FALSE(flags[data::kLShoulder]);
  EXPECT_FALSE(flags[data::kRShoulder]);
  EXPECT_FALSE(flags[data::kHead]);
  // degenerate capsule blocks nothing
  const auto none = data::occlusion_flags(pose, cam, data::torso_capsule(pose, 0.0));
  for (auto f : none) EXPECT_FALSE(f);
}

TEST(Occlusion, MatchesBruteForceOracle) {
  util::Rng rng(77);
  int occluded_seen = 0, visible_seen = 0;
  for (int k = 0; k < 300; ++k) {
    const Vec3 eye = {rng.uniform(-200, 200), rng.uniform(1500, 1900), rng.uniform(-200, 200)};
    const Vec3 target = rand_vec(rng, -600, 600) + Vec3{0, 800, 0};
    const Vec3 a = {rng.uniform(-100, 100), rng.uniform(1300, 1500), rng.uniform(-100, 100)};
    const Vec3 b = {rng.uniform(-100, 100), rng.uniform(900, 1100), rng.uniform(-100, 100)};
    const double radius = rng.uniform(40.0, 140.0);
    const double sampled = brute_min_dist(eye, target, a, b);
    if (std::abs(sampled - radius) < 1.0) continue;  // skip razor-thin margins
    const bool expect_blocked = sampled < radius;
    const bool got = data::sight_blocked(eye, target, {a, b, radius});
    EXPECT_EQ(got, expect_blocked) << "case " << k;
    (expect_blocked ? occluded_seen : visible_seen) += 1;
  }
  EXPECT_GT(occluded_seen, 20);
  EXPECT_GT(visible_seen, 20);
}

TEST(Render, DeterministicAndBounded) {
  const SkeletonSpec s = SkeletonSpec::humanoid();
  const auto poses = data::sample_motion(s, "walk", 1, 5);
  const auto& pose = poses[0];
  const FisheyeCamera cam = data::make_head_camera(pose[data::kHead], 32, 32);
  const auto torso = data::torso_capsule(pose);
  const auto f1 = data::render_frame(pose, s, cam, torso);
  const auto f2 = data::render_frame(pose, s, cam, torso);
  EXPECT_EQ(f1.shape(), (egostan::ad::Shape{1, 32, 32}));
  EXPECT_EQ(f1.values(), f2.values());
  double peak = 0.0;
  for (double v : f1.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    peak = std::max(peak, v);
  }
  EXPECT_GT(peak, 0.2);  // something visible was drawn
  const auto rgb = data::render_frame(pose, s, cam, torso, 3);
  EXPECT_EQ(rgb.shape(), (egostan::ad::Shape{3, 32, 32}));
  EXPECT_EQ(rgb.value_at(0), rgb.value_at(32 * 32));
}

TEST(Render, AllJointsBehindCameraGiveZeroFrame) {
  const SkeletonSpec s = SkeletonSpec::humanoid();
  std::vector<data::Mat3> rot(16, data::Mat3::identity());
  const auto pose = data::forward_kinematics(s, {0, 1000, 0}, rot);
  // camera far below the body: everything is above the downward optical axis
  const FisheyeCamera cam = data::make_head_camera({0, -5000, 0}, 32, 32);
  const auto frame = data::render_frame(pose, s, cam, data::torso_capsule(pose, 0.0));
  for (double v : frame.values()) EXPECT_EQ(v, 0.0);
}

TEST(Render, VisibleJointsLandOnLitPixels) {
  const SkeletonSpec s = SkeletonSpec::humanoid();
  util::Rng seed_rng(13);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto& action = data::action_catalog()[static_cast<size_t>(trial) % 9];
    const auto poses = data::sample_motion(s, action, 3, 1000 + static_cast<uint64_t>(trial));
    const auto& pose = poses.back();
    const FisheyeCamera cam = data::make_head_camera(pose[data::kHead], 32, 32);
    const auto torso = data::torso_capsule(pose);
    const auto flags = data::occlusion_flags(pose, cam, torso);
    const auto frame = data::render_frame(pose, s, cam, torso);
    for (int j = 0; j < 16; ++j) {
      if (flags[static_cast<size_t>(j)]) continue;
      const auto pr = data::project_fisheye(cam.to_camera(pose[static_cast<size_t>(j)]), cam);
      if (!pr.valid) continue;
      const int64_t px = static_cast<int64_t>(std::floor(pr.u));
      const int64_t py = static_cast<int64_t>(std::floor(pr.v));
      EXPECT_GT(frame.value_at(static_cast<size_t>(py * 32 + px)), 0.0)
          << action << " joint " << data::joint_name(j);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Heatmap, PeaksArgmaxAndInvalidChannels) {
  const SkeletonSpec s = SkeletonSpec::humanoid();
  for (int trial = 0; trial < 20; ++trial) {
    const auto& action = data::action_catalog()[static_cast<size_t>(trial) % 9];
    const auto poses = data::sample_motion(s, action, 2, 500 + static_cast<uint64_t>(trial));
    const auto& pose = poses.back();
    const FisheyeCamera cam = data::make_head_camera(pose[data::kHead], 32, 32);
    const auto hm = data::render_gt_heatmap(pose, cam, 16, 1.0);
    ASSERT_EQ(hm.shape(), (egostan::ad::Shape{16, 16, 16}));
    for (int j = 0; j < 16; ++j) {
      // independent projection recomputation
      const auto pr = data::project_fisheye(cam.to_camera(pose[static_cast<size_t>(j)]), cam);
      double peak = 0.0;
      int64_t arg_y = -1, arg_x = -1;
      for (int64_t y = 0; y < 16; ++y) {
        for (int64_t x = 0; x < 16; ++x) {
          const double v = hm.value_at(static_cast<size_t>((y * 16 + x) * 16 + j));
          if (v > peak) {
            peak = v;
            arg_y = y;
            arg_x = x;
          }
        }
      }
      if (!pr.valid) {
        EXPECT_EQ(peak, 0.0);
        continue;
      }
      EXPECT_EQ(peak, 1.0);  // normalized maximum is exact
      EXPECT_LE(std::abs(static_cast<double>(arg_x) - pr.u * 16.0 / 32.0), 1.0);
      EXPECT_LE(std::abs(static_cast<double>(arg_y) - pr.v * 16.0 / 32.0), 1.0);
    }
  }
  EXPECT_THROW(
      data::render_gt_heatmap({{0, 0, 500}}, data::make_head_camera({0, 0, 0}, 32, 32), 16, 0.0),
      std::invalid_argument);
}

TEST(Dataset, GenerateLoadRoundTrip) {
  data::GeneratorConfig cfg;
  cfg.n_sequences = 6;
  cfg.seed = 99;
  const auto dir = std::filesystem::path(testing::TempDir()) / "egods_roundtrip";
  const auto man = data::generate_dataset(cfg, dir);
  ASSERT_EQ(man.sequences.size(), 6u);
  EXPECT_EQ(man.sequences[0].action, "game");
  EXPECT_EQ(man.sequences[5].action, "react");

  const auto loaded_man = data::load_manifest(dir);
  EXPECT_EQ(loaded_man.config.n_sequences, 6);
  EXPECT_EQ(loaded_man.config.actions, cfg.actions);
  EXPECT_EQ(loaded_man.upper_occlusion_rate, man.upper_occlusion_rate);

  for (int64_t i = 0; i < 6; ++i) {
    const auto ref = data::generate_sequence(
        cfg, man.sequences[static_cast<size_t>(i)].action,
        man.sequences[static_cast<size_t>(i)].seed);
    const auto got = data::load_sequence(dir, loaded_man, i);
    EXPECT_EQ(got.frames.values(), ref.frames.values());
    EXPECT_EQ(got.heatmaps.values(), ref.heatmaps.values());
    EXPECT_EQ(got.pose.values(), ref.pose.values());
    EXPECT_EQ(got.occluded, ref.occluded);
    EXPECT_EQ(got.action, ref.action);
    EXPECT_EQ(got.seed, ref.seed);
    const auto frames = got.frame_list();
    ASSERT_EQ(frames.size(), 4u);
    EXPECT_EQ(frames[0].shape(), (egostan::ad::Shape{1, 32, 32}));
    EXPECT_EQ(frames[3].value_at(5), got.frames.value_at(3 * 32 * 32 + 5));
  }
}

TEST(Dataset, RegenerationIsByteIdentical) {
  data::GeneratorConfig cfg;
  cfg.n_sequences = 4;
  cfg.seed = 123;
  const auto dir_a = std::filesystem::path(testing::TempDir()) / "egods_a";
  const auto dir_b = std::filesystem::path(testing::TempDir()) / "egods_b";
  data::generate_dataset(cfg, dir_a);
  data::generate_dataset(cfg, dir_b);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  for (const auto& name : {"manifest.json", "seq_00000.bin", "seq_00003.bin"}) {
    const std::string a = slurp(dir_a / name), b = slurp(dir_b / name);
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(a, b) << name;
  }
  const std::string head = slurp(dir_a / "seq_00000.bin").substr(0, 8);
  EXPECT_EQ(head, "EGOSEQ01");
}

TEST(Dataset, RejectsCorruptedFiles) {
  data::GeneratorConfig cfg;
  cfg.n_sequences = 1;
  cfg.seed = 5;
  const auto dir = std::filesystem::path(testing::TempDir()) / "egods_corrupt";
  data::generate_dataset(cfg, dir);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  std::string bytes = slurp(dir / "seq_00000.bin");
  EXPECT_NO_THROW(data::parse_sequence_bytes(bytes, cfg.actions));
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(data::parse_sequence_bytes(bad_magic, cfg.actions), std::runtime_error);
  std::string bad_version = bytes;
  bad_version[8] = 9;
  EXPECT_THROW(data::parse_sequence_bytes(bad_version, cfg.actions), std::runtime_error);
  std::string truncated = bytes.substr(0, bytes.size() - 3);
  EXPECT_THROW(data::parse_sequence_bytes(truncated, cfg.actions), std::runtime_error);
}

TEST(Dataset, LowerBodyMoreOccludedThanUpper) {
  data::GeneratorConfig cfg;
  cfg.n_sequences = 18;
  cfg.seed = 2024;
  const auto dir = std::filesystem::path(testing::TempDir()) / "egods_occl";
  const auto man = data::generate_dataset(cfg, dir);
  EXPECT_GT(man.lower_occlusion_rate, man.upper_occlusion_rate);
  EXPECT_GT(man.lower_occlusion_rate, 0.5);
  EXPECT_LT(man.upper_occlusion_rate, 0.8);
}

TEST(Dataset, ConfigValidation) {
  data::GeneratorConfig cfg;
  cfg.n_sequences = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = data::GeneratorConfig{};
  cfg.actions = {"jog"};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = data::GeneratorConfig{};
  cfg.sigma = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_NO_THROW(data::GeneratorConfig{}.validate());
}

}  // namespace
