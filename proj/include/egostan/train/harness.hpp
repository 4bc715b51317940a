#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "egostan/ad/ops.hpp"
#include "egostan/ad/tape.hpp"
#include "egostan/data/dataset.hpp"
#include "egostan/loss/losses.hpp"
#include "egostan/model/egostan.hpp"
#include "egostan/nn/checkpoint.hpp"
#include "egostan/train/adam.hpp"
#include "egostan/train/evaluate.hpp"
#include "egostan/util/rng.hpp"

namespace egostan::train {

struct TrainConfig {
  AdamConfig adam;
  int64_t batch_size = 4;
  int64_t steps = 500;
  int64_t eval_interval = 100;
  uint64_t seed = 1;
  double grad_clip = 0.0;  // <= 0 disables clipping
  loss::LossWeights weights;
  std::string out_dir;  // empty: keep everything in memory

  void validate() const {
    adam.validate();
    weights.validate();
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (steps < 1) throw std::invalid_argument("TrainConfig: steps must be >= 1");
    if (eval_interval < 1) throw std::invalid_argument("TrainConfig: eval_interval must be >= 1");
  }
};

struct TrainResult {
  std::vector<loss::LossBreakdown> log;  // one batch-averaged row per step
  std::string csv;                       // header + one row per step
  std::vector<std::string> checkpoints;  // paths written when out_dir is set
};

namespace detail {

// A single-frame model reads only the current (last) frame of a sequence;
// everything else must match exactly.
inline void check_sample_shapes(const model::ModelConfig& mc, const data::SequenceSample& s) {
  const auto& f = s.frames.shape();
  const ad::Shape want_f{mc.frames, mc.in_channels, mc.image_size, mc.image_size};
  const bool frames_ok = (f == want_f) || (mc.frames == 1 && f.size() == 4 && f[0] >= 1 &&
                                           ad::Shape{1, f[1], f[2], f[3]} == want_f);
  if (!frames_ok) {
    throw ad::ShapeError("train: sample frames " + ad::shape_str(f) + " do not match model " +
                         ad::shape_str(want_f));
  }
  const ad::Shape want_h{mc.heatmap_size, mc.heatmap_size, mc.joints};
  if (s.heatmaps.shape() != want_h) {
    throw ad::ShapeError("train: sample heatmaps " + ad::shape_str(s.heatmaps.shape()) +
                         " do not match model " + ad::shape_str(want_h));
  }
  const ad::Shape want_p{mc.joints, 3};
  if (s.pose.shape() != want_p) {
    throw ad::ShapeError("train: sample pose " + ad::shape_str(s.pose.shape()) +
                         " does not match model " + ad::shape_str(want_p));
  }
}

inline std::string non_finite_culprit(const model::EgoStanModel& m,
                                      const model::EgoStanModel::Output& out) {
  std::string name = m.registry().first_non_finite();
  if (!name.empty()) return name;
  if (!out.heatmaps.all_finite()) return "heatmap output";
  if (!out.pose.all_finite()) return "pose output";
  return "loss";
}

}  // namespace detail

// Deterministic fixed-budget loop: seeded shuffled batches, one Adam step per
// batch, batch-averaged loss rows. The logged total is recomposed from the
// logged parts, so the CSV is self-consistent to the last bit.
inline TrainResult train_loop(model::EgoStanModel& model,
                              const std::vector<data::SequenceSample>& samples,
                              const TrainConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw std::invalid_argument("train_loop: no samples");
  for (const auto& s : samples) detail::check_sample_shapes(model.config(), s);

  util::Rng rng(util::derive_seed(cfg.seed, 0x747261696eULL));
  std::vector<size_t> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  size_t cursor = 0;
  auto next_index = [&]() {
    if (cursor == order.size()) {
      rng.shuffle(order);
      cursor = 0;
    }
    return order[cursor++];
  };

  AdamOptimizer opt(model.registry(), cfg.adam);
  const double inv_b = 1.0 / static_cast<double>(cfg.batch_size);

  TrainResult res;
  res.csv = loss::loss_csv_header() + "\n";

  namespace fs = std::filesystem;
  if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);

  for (int64_t step = 1; step <= cfg.steps; ++step) {
    model.registry().zero_grad();
    loss::LossBreakdown avg;
    for (int64_t b = 0; b < cfg.batch_size; ++b) {
      const auto& s = samples[next_index()];
      ad::Tape tape;
      ad::TapeScope scope(tape);
      auto out = model.forward(detail::frames_for(model.config(), s));
      auto bd = loss::total_loss(s.heatmaps, out.heatmaps, s.pose, out.pose, cfg.weights);
      if (!std::isfinite(bd.total)) {
        throw ad::AutodiffError("train_loop: non-finite loss at step " + std::to_string(step) +
                                " (first non-finite tensor: " +
                                detail::non_finite_culprit(model, out) + ")");
      }
      tape.backward(ad::scale(bd.total_tensor, inv_b));
      avg.l2d += bd.l2d * inv_b;
      avg.l_l2 += bd.l_l2 * inv_b;
      avg.l_theta += bd.l_theta * inv_b;
      avg.l_l1 += bd.l_l1 * inv_b;
      avg.degenerate_joints += bd.degenerate_joints;
    }
    avg.total = loss::recompose_total(avg, cfg.weights);
    if (cfg.grad_clip > 0.0) clip_gradients(model.registry(), cfg.grad_clip);
    opt.step();
    res.csv += loss::loss_csv_row(step, avg) + "\n";
    res.log.push_back(avg);

    if (!cfg.out_dir.empty() && (step % cfg.eval_interval == 0 || step == cfg.steps)) {
      const std::string path =
          (fs::path(cfg.out_dir) / ("checkpoint_" + std::to_string(step) + ".ckpt")).string();
      nn::save_checkpoint(model.registry(), path);
      if (res.checkpoints.empty() || res.checkpoints.back() != path) res.checkpoints.push_back(path);
    }
  }

  if (!cfg.out_dir.empty()) {
    const std::string path = (fs::path(cfg.out_dir) / "loss.csv").string();
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("train_loop: cannot write " + path);
    f << res.csv;
  }
  return res;
}

}  // namespace egostan::train
