#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "egostan/ad/tensor.hpp"
#include "egostan/util/rng.hpp"

namespace egostan::nn {

struct RegistryError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Owns every trainable tensor of a model, keyed by a unique dotted name.
// Iteration order is registration order, which fixes both the init draw
// sequence and the checkpoint layout.
class ParameterRegistry {
 public:
  ad::Tensor add(const std::string& name, ad::Tensor t) {
    if (index_.count(name) != 0) {
      throw RegistryError("parameter registered twice: '" + name + "'");
    }
    t.set_requires_grad(true);
    index_[name] = entries_.size();
    entries_.emplace_back(name, t);
    return t;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  const ad::Tensor& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw RegistryError("unknown parameter: '" + name + "'");
    return entries_[it->second].second;
  }

  const std::vector<std::pair<std::string, ad::Tensor>>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  int64_t param_count() const {
    int64_t n = 0;
    for (const auto& [name, t] : entries_) n += t.size();
    return n;
  }

  void zero_grad() {
    for (auto& [name, t] : entries_) t.zero_grad();
  }

  // First parameter holding a non-finite value, or empty string.
  std::string first_non_finite() const {
    for (const auto& [name, t] : entries_) {
      if (!t.all_finite()) return name;
    }
    return {};
  }

 private:
  std::vector<std::pair<std::string, ad::Tensor>> entries_;
  std::unordered_map<std::string, size_t> index_;
};

// Shared init conventions; every draw comes from the caller's stream so a
// model's full state is a function of (config, seed).
namespace init {

inline ad::Tensor he_uniform(ad::Shape shape, int64_t fan_in, util::Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  return ad::Tensor::rand_uniform(std::move(shape), rng, -bound, bound);
}

inline ad::Tensor gaussian(ad::Shape shape, double stddev, util::Rng& rng) {
  return ad::Tensor::randn(std::move(shape), rng, stddev);
}

}  // namespace init

}  // namespace egostan::nn
