#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "egostan/ad/tensor.hpp"
#include "egostan/nn/registry.hpp"

namespace egostan::train {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("AdamConfig: lr must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
      throw std::invalid_argument("AdamConfig: betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("AdamConfig: eps must be positive");
  }
};

// Standard bias-corrected Adam over a parameter registry. Moment tensors
// mirror parameter shapes; the step counter drives the correction terms.
class AdamOptimizer {
 public:
  AdamOptimizer(const nn::ParameterRegistry& reg, AdamConfig cfg)
      : params_(reg.entries()), cfg_(cfg) {
    cfg_.validate();
    for (const auto& [name, param] : params_) {
      (void)name;
      m_.emplace_back(param.size(), 0.0);
      v_.emplace_back(param.size(), 0.0);
    }
  }

  int64_t step_count() const { return t_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& [name, param] = params_[i];
      if (!param.has_grad()) {
        throw ad::AutodiffError("adam_step: missing gradient for parameter '" + name + "'");
      }
      const auto& g = param.grad();
      auto& vals = param.mutable_values();
      auto& m = m_[i];
      auto& v = v_[i];
      for (size_t k = 0; k < vals.size(); ++k) {
        m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
        v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
        const double mhat = m[k] / bc1;
        const double vhat = v[k] / bc2;
        vals[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

 private:
  std::vector<std::pair<std::string, ad::Tensor>> params_;
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Global-norm gradient clipping; a non-positive limit is a no-op.
inline double clip_gradients(const nn::ParameterRegistry& reg, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, param] : reg.entries()) {
    (void)name;
    if (!param.has_grad()) continue;
    for (double g : param.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& [name, param] : reg.entries()) {
      (void)name;
      if (!param.has_grad()) continue;
      auto pd = param.ptr();
      for (auto& g : pd->grad) g *= scale;
    }
  }
  return norm;
}

}  // namespace egostan::train
