#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "egostan/ad/gradcheck.hpp"
#include "egostan/ad/ops.hpp"
#include "egostan/loss/losses.hpp"
#include "egostan/loss/metrics.hpp"
#include "egostan/loss/reference.hpp"
#include "egostan/util/rng.hpp"

namespace ad = egostan::ad;
namespace loss = egostan::loss;
namespace util = egostan::util;
using ad::Tensor;

namespace {

// independent scalar recomputation, structured per joint
struct Oracle {
  double l2 = 0, theta = 0, l1 = 0;
};

Oracle brute_force(const std::vector<double>& p, const std::vector<double>& ph, int64_t j) {
  Oracle o;
  for (int64_t i = 0; i < j; ++i) {
    double dotpp = 0, dothh = 0, dotph = 0;
    for (int64_t c = 0; c < 3; ++c) {
      const double a = p[static_cast<size_t>(i * 3 + c)];
      const double b = ph[static_cast<size_t>(i * 3 + c)];
      o.l2 += (b - a) * (b - a);
      o.l1 += std::abs(b - a);
      dotpp += a * a;
      dothh += b * b;
      dotph += a * b;
    }
    if (std::sqrt(dotpp) >= 1e-9 && std::sqrt(dothh) >= 1e-9) {
      o.theta += dotph / (std::sqrt(dotpp) * std::sqrt(dothh));
    }
  }
  return o;
}

Tensor rand_pose(util::Rng& rng, int64_t j, double scale = 1000.0) {
  std::vector<double> v(static_cast<size_t>(j * 3));
  for (auto& x : v) x = rng.normal(0.0, scale);
  return Tensor({j, 3}, std::move(v));
}

TEST(Loss2d, IdentityAndConstantOffset) {
  Tensor m = Tensor::zeros({2, 2, 1});
  EXPECT_EQ(loss::loss_2d(m, m), 0.0);
  EXPECT_EQ(loss::loss_2d(m, Tensor::full({2, 2, 1}, 1.0)), 1.0);
  EXPECT_THROW(loss::loss_2d(m, Tensor::zeros({2, 2, 2})), ad::ShapeError);
}

TEST(Loss2d, MatchesBruteForce) {
  util::Rng rng(31);
  Tensor m = Tensor::randn({2, 2, 1}, rng);
  Tensor mh = Tensor::randn({2, 2, 1}, rng);
  double want = 0.0;
  for (size_t i = 0; i < 4; ++i) {
    const double d = mh.value_at(i) - m.value_at(i);
    want += d * d;
  }
  want /= 4.0;
  EXPECT_NEAR(loss::loss_2d(m, mh), want, 1e-12);
}

TEST(Loss3d, PerfectPredictionIdentities) {
  util::Rng rng(32);
  Tensor p = rand_pose(rng, 16);
  auto b = loss::loss_3d(p, p);
  EXPECT_EQ(b.l_l2, 0.0);
  EXPECT_EQ(b.l_theta, 16.0);  // cosine of identical vectors is exactly 1 per joint
  EXPECT_EQ(b.l_l1, 0.0);
  EXPECT_EQ(b.degenerate_joints, 0);
}

TEST(Loss3d, UnitOffsetL1) {
  util::Rng rng(33);
  Tensor p = rand_pose(rng, 16);
  std::vector<double> shifted = p.values();
  for (auto& v : shifted) v += 1.0;
  auto b = loss::loss_3d(p, Tensor({16, 3}, shifted));
  EXPECT_EQ(b.l_l1, 48.0);
  EXPECT_EQ(b.l_l2, 48.0);  // 48 coords each contributing 1^2
}

TEST(Loss3d, MatchesBruteForceOracle) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    util::Rng rng(util::derive_seed(100, seed));
    const int64_t j = seed % 2 == 0 ? 3 : 16;
    Tensor p = rand_pose(rng, j, seed % 3 == 0 ? 1.0 : 1000.0);
    Tensor ph = rand_pose(rng, j, seed % 3 == 0 ? 1.0 : 1000.0);
    auto b = loss::loss_3d(p, ph);
    auto o = brute_force(p.values(), ph.values(), j);
    const double s = 1.0;  // absolute agreement, per criterion
    EXPECT_NEAR(b.l_l2, o.l2, 1e-10 * std::max(s, std::abs(o.l2))) << seed;
    EXPECT_NEAR(b.l_theta, o.theta, 1e-10) << seed;
    EXPECT_NEAR(b.l_l1, o.l1, 1e-10 * std::max(s, std::abs(o.l1))) << seed;
    // exact recomposition from logged parts
    EXPECT_EQ(b.total, loss::recompose_total(b, loss::LossWeights{}));
  }
}

TEST(Loss3d, DegenerateJointMaskedWithFiniteGradients) {
  std::vector<double> pv = {0, 0, 0, 100, 200, 300, -50, 60, 70};
  Tensor p({3, 3}, pv);
  util::Rng rng(34);
  Tensor ph = rand_pose(rng, 3);
  ph.set_requires_grad(true);
  ad::Tape tape;
  loss::LossBreakdown b;
  {
    ad::TapeScope scope(tape);
    b = loss::loss_3d(p, ph);
    tape.backward(b.total_tensor);
  }
  EXPECT_EQ(b.degenerate_joints, 1);
  ASSERT_TRUE(ph.has_grad());
  for (double g : ph.grad()) EXPECT_TRUE(std::isfinite(g));
  // the masked joint still contributes l2/l1 but not theta
  auto o = brute_force(p.values(), ph.values(), 3);
  EXPECT_NEAR(b.l_theta, o.theta, 1e-12);
}

TEST(TotalLoss, PerfectPredictionConstants) {
  util::Rng rng(35);
  Tensor p = rand_pose(rng, 16);
  Tensor m = Tensor::rand_uniform({8, 8, 16}, rng, 0.0, 1.0);
  auto b = loss::total_loss(m, m, p, p);
  EXPECT_EQ(b.l2d, 0.0);
  EXPECT_EQ(b.total, -0.16);  // only the cosine reward survives: -0.01 * 16

  loss::LossWeights off{0.0, 0.0};
  auto b0 = loss::total_loss(m, m, p, p, off);
  EXPECT_EQ(b0.total, 0.0);
}

TEST(TotalLoss, CompositionIsExact) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    util::Rng rng(util::derive_seed(200, seed));
    Tensor p = rand_pose(rng, 16);
    Tensor ph = rand_pose(rng, 16);
    Tensor m = Tensor::rand_uniform({4, 4, 16}, rng, 0.0, 1.0);
    Tensor mh = Tensor::rand_uniform({4, 4, 16}, rng, 0.0, 1.0);
    loss::LossWeights w{-0.01, 0.1};
    auto b = loss::total_loss(m, mh, p, ph, w);
    EXPECT_EQ(b.total, loss::recompose_total(b, w)) << seed;
    EXPECT_EQ(b.total, b.total_tensor.item()) << seed;
    // invariants
    EXPECT_GE(b.l2d, 0.0);
    EXPECT_GE(b.l_l2, 0.0);
    EXPECT_GE(b.l_l1, 0.0);
    EXPECT_LE(std::abs(b.l_theta), 16.0 + 1e-12);
  }
}

TEST(TotalLoss, WeightValidation) {
  util::Rng rng(36);
  Tensor p = rand_pose(rng, 4);
  EXPECT_THROW(loss::loss_3d(p, p, loss::LossWeights{0.0, -1.0}), std::invalid_argument);
  EXPECT_THROW(loss::loss_3d(p, p, loss::LossWeights{std::nan(""), 0.1}),
               std::invalid_argument);
}

TEST(LossGradients, AllTermsPassGradCheck) {
  util::Rng rng(37);
  Tensor p = rand_pose(rng, 4, 1.0);
  // keep every coordinate difference away from the l1 kink
  std::vector<double> ph = p.values();
  util::Rng r2(38);
  for (auto& v : ph) v += (r2.uniform() < 0.5 ? -1.0 : 1.0) * r2.uniform(0.5, 1.5);
  Tensor phat({4, 3}, ph);

  auto fn3d = [](const std::vector<Tensor>& ins) {
    return loss::loss_3d(ins[0], ins[1]).total_tensor;
  };
  auto res = ad::grad_check(fn3d, {p, phat});
  EXPECT_TRUE(res.pass()) << "loss_3d max_error=" << res.max_error;

  Tensor m = Tensor::randn({3, 3, 2}, rng);
  Tensor mh = Tensor::randn({3, 3, 2}, rng);
  auto fn2d = [](const std::vector<Tensor>& ins) { return loss::loss_2d_t(ins[0], ins[1]); };
  auto res2 = ad::grad_check(fn2d, {m, mh});
  EXPECT_TRUE(res2.pass()) << "loss_2d max_error=" << res2.max_error;
}

TEST(Mpjpe, KnownValuesAndProperties) {
  util::Rng rng(39);
  Tensor p = rand_pose(rng, 16);
  EXPECT_EQ(loss::mpjpe(p, p), 0.0);

  std::vector<double> off = p.values();
  for (size_t i = 0; i < off.size(); i += 3) {
    off[i] += 3.0;
    off[i + 2] += 4.0;
  }
  Tensor ph({16, 3}, off);
  EXPECT_NEAR(loss::mpjpe(p, ph), 5.0, 1e-12);
  EXPECT_NEAR(loss::mpjpe(p, ph), loss::mpjpe(ph, p), 1e-15);  // symmetry

  // translation by v when starting equal gives exactly ||v||
  std::vector<double> tr = p.values();
  for (size_t i = 0; i < tr.size(); i += 3) tr[i + 1] += 7.0;
  EXPECT_NEAR(loss::mpjpe(p, Tensor({16, 3}, tr)), 7.0, 1e-12);

  // subsets
  EXPECT_NEAR(loss::mpjpe(p, ph, {0, 5, 9}), 5.0, 1e-12);
  EXPECT_THROW(loss::mpjpe(p, ph, {}), std::invalid_argument);
  EXPECT_THROW(loss::mpjpe(p, ph, {16}), std::invalid_argument);
  EXPECT_THROW(loss::mpjpe(p, Tensor::zeros({4, 3})), ad::ShapeError);
}

TEST(Reference, HeadlineArithmetic) {
  EXPECT_EQ(loss::reference_table().size(), 6u);
  EXPECT_EQ(loss::reference_actions().size(), 10u);
  const auto& fmt = loss::reference_row("egostan-fmt");
  const auto& dual = loss::reference_row("dual-branch-ae");
  EXPECT_EQ(fmt.average[9], 40.4);
  EXPECT_EQ(dual.average[9], 58.2);
  EXPECT_NEAR(loss::reference_improvement_mm(), 17.8, 1e-9);
  // published rounding: 30.6% relative, 22% parameter reduction
  EXPECT_NEAR(std::round(loss::reference_improvement_frac() * 1000.0) / 10.0, 30.6, 1e-12);
  EXPECT_NEAR(std::round(loss::reference_param_reduction_frac() * 100.0), 22.0, 1e-12);
  EXPECT_THROW(loss::reference_row("missing"), std::invalid_argument);
}

TEST(LossCsv, RowFormat) {
  loss::LossBreakdown b;
  b.l2d = 0.5;
  b.l_l2 = 1.25;
  b.l_theta = 16.0;
  b.l_l1 = 2.0;
  b.total = 0.5 + ((1.25 + -0.01 * 16.0) + 0.1 * 2.0);
  EXPECT_EQ(loss::loss_csv_header(), "step,l2d,l_l2,l_theta,l_l1,total");
  const std::string row = loss::loss_csv_row(7, b);
  EXPECT_EQ(row.substr(0, 2), "7,");
  // round-trip: parsing the printed doubles recovers the exact bits
  double vals[5];
  ASSERT_EQ(std::sscanf(row.c_str(), "7,%lf,%lf,%lf,%lf,%lf", &vals[0], &vals[1], &vals[2],
                        &vals[3], &vals[4]),
            5);
  EXPECT_EQ(vals[0], b.l2d);
  EXPECT_EQ(vals[1], b.l_l2);
  EXPECT_EQ(vals[2], b.l_theta);
  EXPECT_EQ(vals[3], b.l_l1);
  EXPECT_EQ(vals[4], b.total);
  EXPECT_EQ(vals[4], loss::recompose_total(b, loss::LossWeights{}));
}

}  // namespace
