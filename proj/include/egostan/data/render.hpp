#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "egostan/ad/tensor.hpp"
#include "egostan/data/camera.hpp"
#include "egostan/data/occlusion.hpp"
#include "egostan/data/skeleton.hpp"

namespace egostan::data {

inline constexpr int kSamplesPerBone = 96;
inline constexpr double kDefaultHeatmapSigma = 1.0;  // heatmap cells

// Limbs as anti-aliased projected segments: samples along each bone are
// projected and splat bilinearly, pixel = max(pixel, level * weight). The two
// torso bones (pelvis->thorax, thorax->neck) are the occluder's own surface
// and skip the capsule test; every other sample is dropped when the capsule
// blocks its sight line. Gray levels are fixed per bone.
inline ad::Tensor render_frame(const std::vector<Vec3>& pose, const SkeletonSpec& spec,
                               const FisheyeCamera& cam, const Capsule& torso,
                               int64_t channels = 1) {
  if (pose.size() != static_cast<size_t>(spec.joints())) {
    throw std::invalid_argument("render_frame: pose size does not match skeleton");
  }
  if (channels < 1) throw std::invalid_argument("render_frame: channels must be >= 1");
  const int64_t h = cam.height, w = cam.width;
  std::vector<double> img(static_cast<size_t>(h * w), 0.0);

  std::vector<int> bones;
  for (int j = 0; j < spec.joints(); ++j) {
    if (spec.parent[static_cast<size_t>(j)] >= 0) bones.push_back(j);
  }
  for (size_t b = 0; b < bones.size(); ++b) {
    const int child = bones[b];
    const int par = spec.parent[static_cast<size_t>(child)];
    const bool torso_bone = child == kThorax || child == kNeck;
    const double level =
        0.3 + 0.7 * static_cast<double>(b + 1) / static_cast<double>(bones.size());
    const Vec3 p0 = pose[static_cast<size_t>(par)], p1 = pose[static_cast<size_t>(child)];
    for (int i = 0; i < kSamplesPerBone; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(kSamplesPerBone - 1);
      const Vec3 pt = lerp(p0, p1, t);
      if (!torso_bone && sight_blocked(cam.position, pt, torso)) continue;
      const Projection pr = project_fisheye(cam.to_camera(pt), cam);
      if (!pr.valid) continue;
      const int64_t x0 = static_cast<int64_t>(std::floor(pr.u));
      const int64_t y0 = static_cast<int64_t>(std::floor(pr.v));
      const double fx = pr.u - static_cast<double>(x0);
      const double fy = pr.v - static_cast<double>(y0);
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int64_t px = x0 + dx, py = y0 + dy;
          if (px < 0 || px >= w || py < 0 || py >= h) continue;
          const double wgt = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
          double& cell = img[static_cast<size_t>(py * w + px)];
          cell = std::max(cell, level * wgt);
        }
      }
    }
  }

  std::vector<double> out;
  out.reserve(static_cast<size_t>(channels * h * w));
  for (int64_t c = 0; c < channels; ++c) out.insert(out.end(), img.begin(), img.end());
  return ad::Tensor({channels, h, w}, std::move(out));
}

// Gaussian ground-truth heatmaps [h, w, J]. Projections are scaled from image
// to heatmap coordinates; each in-image channel is normalized so its maximum
// is exactly 1. Invalid projections leave the channel all-zero; occluded
// joints are rendered like any other.
inline ad::Tensor render_gt_heatmap(const std::vector<Vec3>& pose, const FisheyeCamera& cam,
                                    int64_t heatmap_size, double sigma = kDefaultHeatmapSigma) {
  if (sigma <= 0.0) throw std::invalid_argument("render_gt_heatmap: sigma must be positive");
  if (heatmap_size < 1) throw std::invalid_argument("render_gt_heatmap: bad heatmap size");
  const int64_t hm = heatmap_size;
  const int64_t j_count = static_cast<int64_t>(pose.size());
  std::vector<double> out(static_cast<size_t>(hm * hm * j_count), 0.0);
  const double su = static_cast<double>(hm) / static_cast<double>(cam.width);
  const double sv = static_cast<double>(hm) / static_cast<double>(cam.height);
  for (int64_t j = 0; j < j_count; ++j) {
    const Projection pr = project_fisheye(cam.to_camera(pose[static_cast<size_t>(j)]), cam);
    if (!pr.valid) continue;
    const double uj = pr.u * su, vj = pr.v * sv;
    double peak = 0.0;
    for (int64_t y = 0; y < hm; ++y) {
      for (int64_t x = 0; x < hm; ++x) {
        const double dx = static_cast<double>(x) - uj, dy = static_cast<double>(y) - vj;
        const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        out[static_cast<size_t>((y * hm + x) * j_count + j)] = g;
        peak = std::max(peak, g);
      }
    }
    for (int64_t y = 0; y < hm; ++y) {
      for (int64_t x = 0; x < hm; ++x) {
        out[static_cast<size_t>((y * hm + x) * j_count + j)] /= peak;
      }
    }
  }
  return ad::Tensor({hm, hm, j_count}, std::move(out));
}

}  // namespace egostan::data
