#pragma once

#include <cstdint>
#include <string>

#include "egostan/ad/tensor.hpp"

namespace egostan::model {

// Output-token selection strategy for the spatio-temporal transformer.
enum class Variant { kSlice, kAvg, kFmt };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kSlice: return "slice";
    case Variant::kAvg: return "avg";
    case Variant::kFmt: return "fmt";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "slice") return Variant::kSlice;
  if (s == "avg") return Variant::kAvg;
  if (s == "fmt") return Variant::kFmt;
  throw ad::ShapeError("unknown variant '" + s + "' (expected slice|avg|fmt)");
}

struct ModelConfig {
  int64_t frames = 4;         // temporal window T; the last frame is current
  int64_t image_size = 32;    // square input, H = W
  int64_t in_channels = 1;
  int64_t d_model = 32;
  int64_t heads = 4;
  int64_t layers = 2;
  int64_t ffn_dim = 128;
  Variant variant = Variant::kFmt;
  int64_t heatmap_size = 16;  // square heatmaps, h = w
  int64_t joints = 16;
  int64_t lifting_hidden = 128;
  // Fixed output scale after the last lifting linear; keeps mm-range targets
  // reachable from O(1) network outputs.
  double pose_scale = 1000.0;

  // The backbone always applies three stride-2 stages.
  int64_t grid_size() const { return image_size / 8; }
  int64_t grid_tokens() const { return grid_size() * grid_size(); }
  // FMT query token count; the head consumes exactly one grid worth of tokens.
  int64_t n_fmt() const { return grid_tokens(); }
  int64_t tokens() const {
    return frames * grid_tokens() + (variant == Variant::kFmt ? n_fmt() : 0);
  }
  int64_t upsample_stages() const {
    int64_t n = 0;
    for (int64_t s = grid_size(); s < heatmap_size; s *= 2) ++n;
    return n;
  }

  void validate() const {
    auto fail = [](const std::string& msg) { throw ad::ShapeError("config: " + msg); };
    if (frames < 1) fail("frames must be >= 1");
    if (in_channels < 1) fail("in_channels must be >= 1");
    if (image_size < 8 || image_size % 8 != 0) {
      fail("image_size must be a positive multiple of 8 (three stride-2 stages), got " +
           std::to_string(image_size));
    }
    if (d_model < 4 || d_model % 4 != 0) fail("d_model must be a positive multiple of 4");
    if (heads < 1 || d_model % heads != 0) {
      fail("d_model " + std::to_string(d_model) + " must divide into " + std::to_string(heads) +
           " heads");
    }
    if (layers < 1) fail("layers must be >= 1");
    if (ffn_dim < 1) fail("ffn_dim must be >= 1");
    if (joints < 1) fail("joints must be >= 1");
    if (lifting_hidden < 1) fail("lifting_hidden must be >= 1");
    if (pose_scale <= 0.0) fail("pose_scale must be positive");
    // heatmap must be reachable from the grid by doubling
    int64_t s = grid_size();
    while (s < heatmap_size) s *= 2;
    if (s != heatmap_size || heatmap_size == grid_size()) {
      fail("heatmap_size " + std::to_string(heatmap_size) +
           " must be grid_size * 2^k (k >= 1), grid is " + std::to_string(grid_size()));
    }
    // channel halving through the deconv stack must stay integral
    int64_t c = d_model;
    for (int64_t i = 0; i < upsample_stages(); ++i) {
      if (c % 2 != 0) fail("d_model cannot halve through " +
                           std::to_string(upsample_stages()) + " deconv stages");
      c /= 2;
    }
    // the two stride-2 lifting convs need exact tiling (k4 s2 p1)
    if (heatmap_size % 4 != 0) fail("heatmap_size must be divisible by 4 for the lifting convs");
  }

  static ModelConfig desk_default() { return ModelConfig{}; }

  // Smallest legal geometry; used by the finite-difference model check.
  static ModelConfig tiny() {
    ModelConfig c;
    c.frames = 2;
    c.image_size = 16;
    c.in_channels = 1;
    c.d_model = 8;
    c.heads = 2;
    c.layers = 1;
    c.ffn_dim = 16;
    c.variant = Variant::kFmt;
    c.heatmap_size = 4;
    c.joints = 3;
    c.lifting_hidden = 16;
    return c;
  }
};

// The single-frame reference model: same trunk, no temporal context.
inline ModelConfig baseline_config(ModelConfig cfg) {
  cfg.frames = 1;
  cfg.variant = Variant::kSlice;
  return cfg;
}

}  // namespace egostan::model
