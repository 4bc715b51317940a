#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "egostan/ad/ops.hpp"
#include "egostan/ad/tensor.hpp"

namespace egostan::loss {

using ad::Tensor;

struct LossWeights {
  double lambda_theta = -0.01;
  double lambda_l1 = 0.1;

  void validate() const {
    if (!std::isfinite(lambda_theta) || !std::isfinite(lambda_l1) || lambda_l1 < 0.0) {
      throw std::invalid_argument("loss weights: lambda_theta finite, lambda_l1 finite and >= 0");
    }
  }
};

// Scalar summary of one objective evaluation. `total_tensor` is the live
// graph node; the doubles are its exact decomposition:
// total == l2d + ((l_l2 + lambda_theta*l_theta) + lambda_l1*l_l1), composed
// in that association so the identity is bit-exact, not approximate.
struct LossBreakdown {
  double l2d = 0.0;
  double l_l2 = 0.0;
  double l_theta = 0.0;
  double l_l1 = 0.0;
  double total = 0.0;
  int64_t degenerate_joints = 0;
  Tensor total_tensor;
};

// Joint-norm threshold below which the cosine term is masked to 0.
inline constexpr double kCosineNormEps = 1e-9;

// Heatmap objective: mean squared error over every heatmap entry.
inline Tensor loss_2d_t(const Tensor& m, const Tensor& m_hat) {
  if (!ad::same_shape(m, m_hat)) {
    throw ad::ShapeError("loss_2d: shape mismatch " + ad::shape_str(m.shape()) + " vs " +
                         ad::shape_str(m_hat.shape()));
  }
  Tensor diff = ad::sub(m_hat, m);
  return ad::mean_all(ad::mul(diff, diff));
}

inline double loss_2d(const Tensor& m, const Tensor& m_hat) { return loss_2d_t(m, m_hat).item(); }

namespace detail {

inline void check_pose(const char* op, const Tensor& p, const Tensor& p_hat) {
  if (p.rank() != 2 || p.dim(1) != 3) {
    throw ad::ShapeError(std::string(op) + ": pose must be [J,3], got " +
                         ad::shape_str(p.shape()));
  }
  if (!ad::same_shape(p, p_hat)) {
    throw ad::ShapeError(std::string(op) + ": shape mismatch " + ad::shape_str(p.shape()) +
                         " vs " + ad::shape_str(p_hat.shape()));
  }
}

struct PoseTerms {
  Tensor l2;       // ||P_hat - P||^2 summed over all coordinates
  Tensor theta;    // sum_i cos(P_i, P_hat_i), masked joints contribute 0
  Tensor l1;       // sum_i ||P_hat_i - P_i||_1
  int64_t degenerate = 0;
};

inline PoseTerms pose_terms(const Tensor& p, const Tensor& p_hat) {
  check_pose("loss_3d", p, p_hat);
  const int64_t j = p.dim(0);
  PoseTerms t;
  Tensor diff = ad::sub(p_hat, p);
  t.l2 = ad::sum_all(ad::mul(diff, diff));
  t.l1 = ad::sum_all(ad::abs_t(diff));

  Tensor dots = ad::reduce_sum(ad::mul(p, p_hat), 1);
  Tensor sp = ad::reduce_sum(ad::mul(p, p), 1);
  Tensor sh = ad::reduce_sum(ad::mul(p_hat, p_hat), 1);
  // mask is data-dependent but constant w.r.t. the graph
  const double eps_sq = kCosineNormEps * kCosineNormEps;
  std::vector<double> mask(static_cast<size_t>(j)), inv_mask(static_cast<size_t>(j));
  for (int64_t i = 0; i < j; ++i) {
    const bool ok = sp.value_at(static_cast<size_t>(i)) >= eps_sq &&
                    sh.value_at(static_cast<size_t>(i)) >= eps_sq;
    mask[static_cast<size_t>(i)] = ok ? 1.0 : 0.0;
    inv_mask[static_cast<size_t>(i)] = ok ? 0.0 : 1.0;
    if (!ok) ++t.degenerate;
  }
  Tensor m({j}, mask);
  Tensor im({j}, inv_mask);
  // single sqrt of the squared-norm product: for P_hat == P this evaluates
  // to exactly ||P||^2, so each unmasked cosine is exactly 1.0; masked
  // lines are pinned to denominator 1 to keep the backward pass finite
  Tensor denom_sq = ad::add(ad::mul(ad::mul(sp, sh), m), im);
  Tensor cosines = ad::div(ad::mul(dots, m), ad::sqrt(denom_sq));
  t.theta = ad::reduce_sum(cosines, 0);
  return t;
}

// (l_l2 + lambda_theta*l_theta) + lambda_l1*l_l1, mirrored on doubles and graph
inline Tensor compose_3d(const PoseTerms& t, const LossWeights& w) {
  return ad::add(ad::add(t.l2, ad::scale(t.theta, w.lambda_theta)),
                 ad::scale(t.l1, w.lambda_l1));
}

}  // namespace detail

// 3D pose objective: the l2, cosine, and l1 terms plus the weighted total.
inline LossBreakdown loss_3d(const Tensor& p, const Tensor& p_hat, const LossWeights& w = {}) {
  w.validate();
  auto terms = detail::pose_terms(p, p_hat);
  LossBreakdown b;
  b.l_l2 = terms.l2.item();
  b.l_theta = terms.theta.item();
  b.l_l1 = terms.l1.item();
  b.degenerate_joints = terms.degenerate;
  b.total_tensor = detail::compose_3d(terms, w);
  b.total = b.total_tensor.item();
  return b;
}

// Combined objective: loss_2d + loss_3d.
inline LossBreakdown total_loss(const Tensor& m, const Tensor& m_hat, const Tensor& p,
                                const Tensor& p_hat, const LossWeights& w = {}) {
  w.validate();
  Tensor l2d = loss_2d_t(m, m_hat);
  auto terms = detail::pose_terms(p, p_hat);
  LossBreakdown b;
  b.l2d = l2d.item();
  b.l_l2 = terms.l2.item();
  b.l_theta = terms.theta.item();
  b.l_l1 = terms.l1.item();
  b.degenerate_joints = terms.degenerate;
  b.total_tensor = ad::add(l2d, detail::compose_3d(terms, w));
  b.total = b.total_tensor.item();
  return b;
}

// The exact recomposition used by log consumers to recheck a row.
inline double recompose_total(const LossBreakdown& b, const LossWeights& w) {
  return b.l2d + ((b.l_l2 + w.lambda_theta * b.l_theta) + w.lambda_l1 * b.l_l1);
}

// --- CSV serialization (one row per training step) ---------------------------

inline std::string loss_csv_header() { return "step,l2d,l_l2,l_theta,l_l1,total"; }

inline std::string format_f64(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string loss_csv_row(int64_t step, const LossBreakdown& b) {
  return std::to_string(step) + "," + format_f64(b.l2d) + "," + format_f64(b.l_l2) + "," +
         format_f64(b.l_theta) + "," + format_f64(b.l_l1) + "," + format_f64(b.total);
}

}  // namespace egostan::loss
