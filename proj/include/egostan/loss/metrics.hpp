#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "egostan/ad/tensor.hpp"

namespace egostan::loss {

// Mean per-joint position error over a joint subset, in the pose's native
// units (mm). Camera-frame coordinates; no alignment or root-centering.
inline double mpjpe(const ad::Tensor& p, const ad::Tensor& p_hat,
                    const std::vector<int64_t>& subset) {
  if (p.rank() != 2 || p.dim(1) != 3 || !ad::same_shape(p, p_hat)) {
    throw ad::ShapeError("mpjpe: poses must be matching [J,3] tensors");
  }
  if (subset.empty()) throw std::invalid_argument("mpjpe: empty joint subset");
  const int64_t j = p.dim(0);
  double acc = 0.0;
  for (int64_t idx : subset) {
    if (idx < 0 || idx >= j) {
      throw std::invalid_argument("mpjpe: joint index " + std::to_string(idx) +
                                  " out of range [0, " + std::to_string(j) + ")");
    }
    double d2 = 0.0;
    for (int64_t c = 0; c < 3; ++c) {
      const double d = p_hat.value_at(static_cast<size_t>(idx * 3 + c)) -
                       p.value_at(static_cast<size_t>(idx * 3 + c));
      d2 += d * d;
    }
    acc += std::sqrt(d2);
  }
  return acc / static_cast<double>(subset.size());
}

inline std::vector<int64_t> all_joints(int64_t j) {
  std::vector<int64_t> v(static_cast<size_t>(j));
  for (int64_t i = 0; i < j; ++i) v[static_cast<size_t>(i)] = i;
  return v;
}

inline double mpjpe(const ad::Tensor& p, const ad::Tensor& p_hat) {
  return mpjpe(p, p_hat, all_joints(p.dim(0)));
}

}  // namespace egostan::loss
