#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "egostan/ad/ops.hpp"
#include "egostan/model/config.hpp"
#include "egostan/nn/layers.hpp"
#include "egostan/nn/registry.hpp"

namespace egostan::model {

using ad::Tensor;

// Egocentric pose model: residual CNN feature extractor over a short frame
// window, spatio-temporal transformer over the flattened feature tokens,
// heatmap reconstruction through stride-2 deconvolutions, and a convolutional
// 2D->3D lifting head. Token selection before the heatmap head follows the
// configured variant (slice / avg / fmt).
class EgoStanModel {
 public:
  struct Output {
    Tensor heatmaps;  // [h, w, J]
    Tensor pose;      // [J, 3]
  };

  EgoStanModel(ModelConfig cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    util::Rng rng(util::derive_seed(seed, 0x6d6f64656cULL));
    build(rng);
  }

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterRegistry& registry() { return reg_; }
  const nn::ParameterRegistry& registry() const { return reg_; }
  int64_t param_count() const { return reg_.param_count(); }

  // frames: oldest -> newest, each [C, H, W]; the last frame is current.
  Output forward(const std::vector<Tensor>& frames, std::vector<Tensor>* attn = nullptr) const {
    if (static_cast<int64_t>(frames.size()) != cfg_.frames) {
      throw ad::ShapeError("forward: expected " + std::to_string(cfg_.frames) +
                           " frames, got " + std::to_string(frames.size()));
    }
    std::vector<Tensor> frame_tokens;
    frame_tokens.reserve(frames.size());
    for (const auto& f : frames) frame_tokens.push_back(extract_features(f));
    Tensor tokens = assemble_tokens(frame_tokens);
    Tensor encoded = transformer_forward(tokens, attn);
    Tensor selected = select_tokens(encoded);
    Output out;
    out.heatmaps = heatmap_head(selected);
    out.pose = lift_pose(out.heatmaps);
    return out;
  }

  // [C, H, W] -> [G, d] feature tokens in row-major grid order.
  Tensor extract_features(const Tensor& frame) const {
    if (frame.rank() != 3 || frame.dim(0) != cfg_.in_channels ||
        frame.dim(1) != cfg_.image_size || frame.dim(2) != cfg_.image_size) {
      throw ad::ShapeError("extract_features: frame " + ad::shape_str(frame.shape()) +
                           " does not match config");
    }
    Tensor x = ad::reshape(frame, {1, cfg_.in_channels, cfg_.image_size, cfg_.image_size});
    x = ad::relu(stem_->forward(x));
    for (int s = 0; s < 3; ++s) {
      x = blocks_[static_cast<size_t>(2 * s)].forward(x);
      x = blocks_[static_cast<size_t>(2 * s + 1)].forward(x);
      x = ad::relu(downs_[static_cast<size_t>(s)].forward(x));
    }
    const int64_t g = cfg_.grid_size();
    return ad::permute(ad::reshape(x, {cfg_.d_model, g * g}), {1, 0});
  }

  // Adds spatial + temporal embeddings, appends FMT queries when configured.
  Tensor assemble_tokens(const std::vector<Tensor>& frame_tokens) const {
    const int64_t gt = cfg_.grid_tokens();
    std::vector<Tensor> parts;
    parts.reserve(frame_tokens.size() + 1);
    for (size_t t = 0; t < frame_tokens.size(); ++t) {
      Tensor row = ad::slice(temporal_, 0, static_cast<int64_t>(t), static_cast<int64_t>(t) + 1);
      Tensor tok = ad::add(ad::add(frame_tokens[t], spatial_),
                           ad::broadcast(row, {gt, cfg_.d_model}));
      parts.push_back(tok);
    }
    if (cfg_.variant == Variant::kFmt) {
      // learnable queries live in the dedicated temporal slot T
      Tensor row = ad::slice(temporal_, 0, cfg_.frames, cfg_.frames + 1);
      parts.push_back(ad::add(fmt_k_, ad::broadcast(row, {cfg_.n_fmt(), cfg_.d_model})));
    }
    return parts.size() == 1 ? parts[0] : ad::concat(parts, 0);
  }

  Tensor transformer_forward(const Tensor& tokens, std::vector<Tensor>* attn = nullptr) const {
    Tensor x = tokens;
    for (const auto& enc : encoders_) x = enc.forward(x, attn);
    return x;
  }

  // [tokens, d] -> [G, d] fed to the heatmap head.
  Tensor select_tokens(const Tensor& encoded) const {
    const int64_t gt = cfg_.grid_tokens();
    switch (cfg_.variant) {
      case Variant::kSlice:
        return ad::slice(encoded, 0, (cfg_.frames - 1) * gt, cfg_.frames * gt);
      case Variant::kAvg: {
        Tensor stacked = ad::reshape(encoded, {cfg_.frames, gt, cfg_.d_model});
        return ad::reduce_mean(stacked, 0);
      }
      case Variant::kFmt:
        return ad::slice(encoded, 0, cfg_.frames * gt, cfg_.frames * gt + cfg_.n_fmt());
    }
    throw ad::ShapeError("select_tokens: bad variant");
  }

  // [G, d] -> [h, w, J] raw heatmaps.
  Tensor heatmap_head(const Tensor& selected) const {
    const int64_t g = cfg_.grid_size();
    Tensor x = ad::reshape(ad::permute(selected, {1, 0}), {1, cfg_.d_model, g, g});
    for (const auto& up : ups_) x = ad::relu(up.forward(x));
    x = to_joints_->forward(x);
    const int64_t h = cfg_.heatmap_size;
    return ad::permute(ad::reshape(x, {cfg_.joints, h, h}), {1, 2, 0});
  }

  // [h, w, J] -> [J, 3] pose in mm.
  Tensor lift_pose(const Tensor& heatmaps) const {
    const int64_t h = cfg_.heatmap_size;
    Tensor x = ad::reshape(ad::permute(heatmaps, {2, 0, 1}), {1, cfg_.joints, h, h});
    x = ad::relu(lift1_->forward(x));
    x = ad::relu(lift2_->forward(x));
    x = ad::reshape(x, {1, x.size()});
    x = ad::relu(lift_fc1_->forward(x));
    x = lift_fc2_->forward(x);
    return ad::scale(ad::reshape(x, {cfg_.joints, 3}), cfg_.pose_scale);
  }

 private:
  void build(util::Rng& rng) {
    const int64_t d = cfg_.d_model;
    const int64_t c1 = d / 4, c2 = d / 2;
    stem_ = std::make_unique<nn::Conv2d>(reg_, "backbone.stem", cfg_.in_channels, c1, 3, 1, 1,
                                         rng);
    const int64_t chans[4] = {c1, c2, d, d};
    for (int s = 0; s < 3; ++s) {
      const std::string sp = "backbone.s" + std::to_string(s);
      blocks_.emplace_back(reg_, sp + ".b0", chans[s], rng);
      blocks_.emplace_back(reg_, sp + ".b1", chans[s], rng);
      downs_.emplace_back(reg_, sp + ".down", chans[s], chans[s + 1], 4, 2, 1, rng);
    }
    spatial_ = reg_.add("emb.spatial", nn::init::gaussian({cfg_.grid_tokens(), d}, 0.02, rng));
    // one temporal row per frame plus the FMT query slot; the slot row is
    // present in every variant so variant choice only adds the queries
    temporal_ = reg_.add("emb.temporal", nn::init::gaussian({cfg_.frames + 1, d}, 0.02, rng));
    if (cfg_.variant == Variant::kFmt) {
      fmt_k_ = reg_.add("fmt.queries", nn::init::gaussian({cfg_.n_fmt(), d}, 0.02, rng));
    }
    for (int64_t l = 0; l < cfg_.layers; ++l) {
      encoders_.emplace_back(reg_, "encoder." + std::to_string(l), d, cfg_.heads, cfg_.ffn_dim,
                             rng);
    }
    int64_t c = d;
    for (int64_t i = 0; i < cfg_.upsample_stages(); ++i) {
      ups_.emplace_back(reg_, "head.up" + std::to_string(i), c, c / 2, 4, 2, 1, rng);
      c /= 2;
    }
    to_joints_ = std::make_unique<nn::Conv2d>(reg_, "head.joints", c, cfg_.joints, 1, 1, 0, rng);
    lift1_ = std::make_unique<nn::Conv2d>(reg_, "lift.conv1", cfg_.joints, d, 4, 2, 1, rng);
    lift2_ = std::make_unique<nn::Conv2d>(reg_, "lift.conv2", d, 2 * d, 4, 2, 1, rng);
    const int64_t feat = 2 * d * (cfg_.heatmap_size / 4) * (cfg_.heatmap_size / 4);
    lift_fc1_ = std::make_unique<nn::Linear>(reg_, "lift.fc1", feat, cfg_.lifting_hidden, rng);
    lift_fc2_ = std::make_unique<nn::Linear>(reg_, "lift.fc2", cfg_.lifting_hidden,
                                             cfg_.joints * 3, rng);
  }

  ModelConfig cfg_;
  nn::ParameterRegistry reg_;
  std::unique_ptr<nn::Conv2d> stem_;
  std::vector<nn::ResidualBlock> blocks_;
  std::vector<nn::Conv2d> downs_;
  Tensor spatial_, temporal_, fmt_k_;
  std::vector<nn::EncoderLayer> encoders_;
  std::vector<nn::Deconv2d> ups_;
  std::unique_ptr<nn::Conv2d> to_joints_;
  std::unique_ptr<nn::Conv2d> lift1_, lift2_;
  std::unique_ptr<nn::Linear> lift_fc1_, lift_fc2_;
};

}  // namespace egostan::model
