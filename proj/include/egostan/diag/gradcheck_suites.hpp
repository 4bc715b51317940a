#pragma once

// Finite-difference audit suites shared by the gradcheck subcommand and the
// acceptance tests: every primitive, every layer, and the full tiny model.

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "egostan/ad/gradcheck.hpp"
#include "egostan/loss/losses.hpp"
#include "egostan/model/egostan.hpp"
#include "egostan/nn/layers.hpp"
#include "egostan/util/rng.hpp"

namespace egostan::diag {

struct CheckEntry {
  std::string name;
  double max_error = 0.0;
  size_t n_checked = 0;
  size_t n_kinked = 0;
  bool pass = false;
};

inline CheckEntry entry_from(std::string name, const ad::GradCheckResult& r, double tol) {
  CheckEntry e;
  e.name = std::move(name);
  e.max_error = r.max_error;
  e.n_checked = r.n_checked;
  e.n_kinked = r.n_kinked;
  e.pass = r.n_checked > 0 && r.max_error <= tol;
  return e;
}

inline std::vector<CheckEntry> run_layer_suite(uint64_t seed, double tol) {
  std::vector<CheckEntry> out;
  auto probes_of = [](const nn::ParameterRegistry& reg, std::vector<ad::Tensor> extra) {
    for (const auto& [n, t] : reg.entries()) {
      (void)n;
      extra.push_back(t);
    }
    return extra;
  };
  auto run = [&](const std::string& name, const ad::ScalarFn& fn, std::vector<ad::Tensor> probes,
                 bool kinks) {
    auto res = ad::grad_check(fn, std::move(probes), ad::kGradCheckStep, nullptr, kinks);
    out.push_back(entry_from("layer/" + name, res, tol));
  };

  {
    util::Rng rng(util::derive_seed(seed, 1));
    nn::ParameterRegistry reg;
    nn::Linear lay(reg, "l", 4, 3, rng);
    ad::Tensor x = ad::Tensor::randn({2, 4}, rng);
    ad::Tensor cw = ad::Tensor::randn({2, 3}, rng);
    run("linear",
        [lay, x, cw](const std::vector<ad::Tensor>&) {
          return ad::sum_all(ad::mul(lay.forward(x), cw));
        },
        probes_of(reg, {x}), false);
  }
  {
    util::Rng rng(util::derive_seed(seed, 2));
    nn::ParameterRegistry reg;
    nn::Conv2d lay(reg, "c", 2, 3, 3, 1, 1, rng);
    ad::Tensor x = ad::Tensor::randn({1, 2, 5, 5}, rng);
    ad::Tensor cw = ad::Tensor::randn({1, 3, 5, 5}, rng);
    run("conv2d",
        [lay, x, cw](const std::vector<ad::Tensor>&) {
          return ad::sum_all(ad::mul(lay.forward(x), cw));
        },
        probes_of(reg, {x}), false);
  }
  {
    util::Rng rng(util::derive_seed(seed, 3));
    nn::ParameterRegistry reg;
    nn::Conv2d lay(reg, "c", 2, 2, 4, 2, 1, rng);  // the model's stride-2 geometry
    ad::Tensor x = ad::Tensor::randn({1, 2, 6, 6}, rng);
    ad::Tensor cw = ad::Tensor::randn({1, 2, 3, 3}, rng);
    run("conv2d_stride2",
        [lay, x, cw](const std::vector<ad::Tensor>&) {
          return ad::sum_all(ad::mul(lay.forward(x), cw));
        },
        probes_of(reg, {x}), false);
  }
  {
    util::Rng rng(util::derive_seed(seed, 4));
    nn::ParameterRegistry reg;
    nn::Deconv2d lay(reg, "d", 2, 2, 4, 2, 1, rng);
    ad::Tensor x = ad::Tensor::randn({1, 2, 3, 3}, rng);
    ad::Tensor cw = ad::Tensor::randn({1, 2, 6, 6}, rng);
    run("deconv2d",
        [lay, x, cw](const std::vector<ad::Tensor>&) {
          return ad::sum_all(ad::mul(lay.forward(x), cw));
        },
        probes_of(reg, {x}), false);
  }
  {
    util::Rng rng(util::derive_seed(seed, 5));
    nn::ParameterRegistry reg;
    nn::LayerNorm lay(reg, "n", 5, rng);
    ad::Tensor x = ad::Tensor::randn({3, 5}, rng);
    ad::Tensor cw = ad::Tensor::randn({3, 5}, rng);
    run("layer_norm",
        [lay, x, cw](const std::vector<ad::Tensor>&) {
          return ad::sum_all(ad::mul(lay.forward(x), cw));
        },
        probes_of(reg, {x}), false);
  }
  {
    util::Rng rng(util::derive_seed(seed, 6));
    nn::ParameterRegistry reg;
    nn::Embedding lay(reg, "e", 6, 4, rng);
    ad::Tensor cw = ad::Tensor::randn({6, 4}, rng);
    run("embedding",
        [lay, cw](const std::vector<ad::Tensor>&) {
          return ad::sum_all(ad::mul(lay.rows(0, 6), cw));
        },
        probes_of(reg, {}), false);
  }
  {
    util::Rng rng(util::derive_seed(seed, 7));
    nn::ParameterRegistry reg;
    nn::MultiHeadAttention lay(reg, "a", 4, 2, rng);
    ad::Tensor x = ad::Tensor::randn({3, 4}, rng);
    ad::Tensor cw = ad::Tensor::randn({3, 4}, rng);
    run("attention",
        [lay, x, cw](const std::vector<ad::Tensor>&) {
          return ad::sum_all(ad::mul(lay.forward(x), cw));
        },
        probes_of(reg, {x}), false);
  }
  {
    util::Rng rng(util::derive_seed(seed, 8));
    nn::ParameterRegistry reg;
    nn::EncoderLayer lay(reg, "t", 4, 2, 8, rng);
    ad::Tensor x = ad::Tensor::randn({3, 4}, rng);
    ad::Tensor cw = ad::Tensor::randn({3, 4}, rng);
    run("encoder",
        [lay, x, cw](const std::vector<ad::Tensor>&) {
          return ad::sum_all(ad::mul(lay.forward(x), cw));
        },
        probes_of(reg, {x}), false);
  }
  {
    util::Rng rng(util::derive_seed(seed, 9));
    nn::ParameterRegistry reg;
    nn::ResidualBlock lay(reg, "r", 2, rng);
    ad::Tensor x = ad::Tensor::randn({1, 2, 4, 4}, rng);
    ad::Tensor cw = ad::Tensor::randn({1, 2, 4, 4}, rng);
    run("residual",
        [lay, x, cw](const std::vector<ad::Tensor>&) {
          return ad::sum_all(ad::mul(lay.forward(x), cw));
        },
        probes_of(reg, {x}), true);
  }
  return out;
}

inline CheckEntry run_tiny_model_check(uint64_t seed, double tol) {
  auto cfg = model::ModelConfig::tiny();
  auto m = std::make_shared<model::EgoStanModel>(cfg, 61);
  util::Rng rng(util::derive_seed(seed, 99));
  std::vector<ad::Tensor> frames = {ad::Tensor::randn({1, 16, 16}, rng),
                                    ad::Tensor::randn({1, 16, 16}, rng)};
  ad::Tensor gt_hm = ad::Tensor::rand_uniform({4, 4, 3}, rng, 0.0, 1.0);
  ad::Tensor gt_pose = ad::Tensor::randn({3, 3}, rng, 100.0);
  auto fn = [m, frames, gt_hm, gt_pose](const std::vector<ad::Tensor>&) {
    auto out = m->forward(frames);
    return loss::total_loss(gt_hm, out.heatmaps, gt_pose, out.pose).total_tensor;
  };
  std::vector<ad::Tensor> probes = frames;
  for (const char* key : {"fmt.queries", "emb.temporal", "backbone.stem.weight",
                          "encoder.0.attn.wq.weight", "head.up0.weight", "lift.fc2.weight"}) {
    probes.push_back(m->registry().get(key));
  }
  std::vector<std::vector<int64_t>> coords;
  for (size_t i = 0; i < probes.size(); ++i) {
    const int64_t per = i < frames.size() ? 8 : 6;
    coords.push_back(ad::pick_coords(probes[i].size(), per, 1000 + i));
  }
  auto res = ad::grad_check(fn, probes, ad::kGradCheckStep, &coords, true);
  return entry_from("model/tiny", res, tol);
}

// Primitives, then layers, then the end-to-end tiny model.
inline std::vector<CheckEntry> run_full_suite(uint64_t seed, double tol) {
  std::vector<CheckEntry> entries;
  for (const auto& pc : ad::run_primitive_gradcheck_suite(seed, 5, tol)) {
    CheckEntry e;
    e.name = "primitive/" + pc.primitive;
    e.max_error = pc.max_error;
    e.n_checked = pc.n_checked;
    e.pass = pc.pass;
    entries.push_back(e);
  }
  for (auto& e : run_layer_suite(seed, tol)) entries.push_back(e);
  entries.push_back(run_tiny_model_check(seed, tol));
  return entries;
}

}  // namespace egostan::diag
