#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "egostan/ad/gradcheck.hpp"
#include "egostan/ad/ops.hpp"
#include "egostan/ad/tape.hpp"
#include "egostan/ad/tensor.hpp"
#include "egostan/util/rng.hpp"

namespace ad = egostan::ad;
namespace util = egostan::util;
using ad::Tensor;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

TEST(Tape, NoActiveTapeMeansNoRecording) {
  Tensor x({2}, {1, 2}, /*requires_grad=*/true);
  Tensor y = ad::mul(x, x);
  EXPECT_FALSE(y.requires_grad());  // nothing recorded, nothing to reach it
  ad::Tape t;
  EXPECT_THROW(t.backward(y), ad::AutodiffError);  // empty tape
}

TEST(Tape, ScalarLossRequired) {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  Tensor x({2}, {1, 2}, true);
  Tensor y = ad::mul(x, x);
  EXPECT_THROW(tape.backward(y), ad::AutodiffError);
}

TEST(Tape, DetachedLossRejected) {
  ad::Tape a;
  Tensor loss;
  {
    ad::TapeScope scope(a);
    Tensor x({2}, {1, 2}, true);
    loss = ad::sum_all(ad::mul(x, x));
  }
  ad::Tape b;
  {
    ad::TapeScope scope(b);
    Tensor z({2}, {1, 1}, true);
    (void)ad::sum_all(z);  // give tape b a node
  }
  EXPECT_THROW(b.backward(loss), ad::AutodiffError);
  EXPECT_NO_THROW(a.backward(loss));
}

TEST(Backward, SquareChain) {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  Tensor x({3}, {1, 2, 3}, true);
  Tensor y = ad::sum_all(ad::mul(x, x));
  tape.backward(y);
  ASSERT_TRUE(x.has_grad());
  EXPECT_NEAR(x.grad()[0], 2.0, 1e-14);
  EXPECT_NEAR(x.grad()[1], 4.0, 1e-14);
  EXPECT_NEAR(x.grad()[2], 6.0, 1e-14);
}

TEST(Backward, FanOutAccumulates) {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  Tensor x({2}, {1.5, -2.0}, true);
  Tensor y1 = ad::mul(x, x);
  Tensor y2 = ad::mul(x, x);
  Tensor s = ad::sum_all(ad::add(y1, y2));
  tape.backward(s);
  EXPECT_NEAR(x.grad()[0], 4.0 * 1.5, 1e-14);
  EXPECT_NEAR(x.grad()[1], 4.0 * -2.0, 1e-14);
}

TEST(Backward, OffPathTensorKeepsNoGrad) {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  Tensor x({2}, {1, 2}, true);
  Tensor w({2}, {3, 4}, true);
  Tensor unused = ad::mul(w, w);  // recorded but not reachable from the loss
  Tensor loss = ad::sum_all(x);
  tape.backward(loss);
  EXPECT_FALSE(w.has_grad());
  EXPECT_FALSE(unused.has_grad());
  EXPECT_TRUE(x.has_grad());
}

TEST(Backward, NonRequiresGradInputStaysClean) {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  Tensor x({2}, {1, 2}, true);
  Tensor c({2}, {5, 5}, false);
  Tensor loss = ad::sum_all(ad::mul(x, c));
  tape.backward(loss);
  EXPECT_FALSE(c.has_grad());
  EXPECT_NEAR(x.grad()[0], 5.0, 1e-14);
}

TEST(Backward, TapeScopeNests) {
  ad::Tape outer;
  ad::TapeScope s1(outer);
  EXPECT_EQ(ad::active_tape(), &outer);
  {
    ad::Tape inner;
    ad::TapeScope s2(inner);
    EXPECT_EQ(ad::active_tape(), &inner);
  }
  EXPECT_EQ(ad::active_tape(), &outer);
}

TEST(Backward, HelperGradients) {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  Tensor x({2}, {-2.0, 3.0}, true);
  Tensor loss = ad::sum_all(ad::abs_t(x));
  tape.backward(loss);
  EXPECT_NEAR(x.grad()[0], -1.0, 1e-14);
  EXPECT_NEAR(x.grad()[1], 1.0, 1e-14);

  Tensor z({2}, {1.0, 2.0}, true);
  ad::Tape t2;
  {
    ad::TapeScope s2(t2);
    Tensor l2 = ad::sum_all(ad::scale(z, 3.0));
    t2.backward(l2);
  }
  EXPECT_NEAR(z.grad()[0], 3.0, 1e-14);
  EXPECT_NEAR(z.grad()[1], 3.0, 1e-14);
}

// adjoint identity: <conv(x,K), g> == <x, deconv(g,K)> with the shared kernel
// layout ([Co,Ci,kh,kw] for conv; deconv reads it as [in,out,kh,kw]).
TEST(ConvDeconv, AdjointDotProduct) {
  util::Rng rng(11);
  for (const auto& [stride, pad, kh] : {std::tuple<int64_t, int64_t, int64_t>{1, 1, 3},
                                        {2, 1, 4},
                                        {1, 0, 3},
                                        {2, 0, 2}}) {
    Tensor x = Tensor::randn({2, 3, 8, 8}, rng);
    Tensor k = Tensor::randn({4, 3, kh, kh}, rng);
    Tensor y = ad::conv2d(x, k, stride, pad);
    Tensor g = Tensor::randn(y.shape(), rng);
    Tensor xadj = ad::deconv2d(g, k, stride, pad);
    ASSERT_EQ(xadj.shape(), x.shape());
    const double lhs = dot(y.values(), g.values());
    const double rhs = dot(x.values(), xadj.values());
    EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, std::abs(lhs)))
        << "stride=" << stride << " pad=" << pad << " k=" << kh;
  }
}

TEST(ConvDeconv, BackwardMatchesAdjointOperator) {
  util::Rng rng(12);
  Tensor x = Tensor::randn({1, 2, 6, 6}, rng);
  x.set_requires_grad(true);
  Tensor k = Tensor::randn({3, 2, 3, 3}, rng);
  Tensor gfix;
  {
    ad::Tape tape;
    ad::TapeScope scope(tape);
    Tensor y = ad::conv2d(x, k, 1, 1);
    gfix = Tensor::randn(y.shape(), rng);
    Tensor loss = ad::sum_all(ad::mul(y, gfix));
    tape.backward(loss);
  }
  Tensor expect = ad::deconv2d(gfix, k, 1, 1);
  ASSERT_TRUE(x.has_grad());
  for (size_t i = 0; i < expect.values().size(); ++i) {
    EXPECT_NEAR(x.grad()[i], expect.value_at(i), 1e-12) << "coord " << i;
  }

  // mirrored: d/dx of <deconv(x,K), g> is conv(g,K)
  Tensor x2 = Tensor::randn({1, 3, 4, 4}, rng);
  x2.set_requires_grad(true);
  Tensor k2 = Tensor::randn({3, 2, 4, 4}, rng);
  Tensor g2;
  {
    ad::Tape tape;
    ad::TapeScope scope(tape);
    Tensor y2 = ad::deconv2d(x2, k2, 2, 1);
    g2 = Tensor::randn(y2.shape(), rng);
    Tensor loss = ad::sum_all(ad::mul(y2, g2));
    tape.backward(loss);
  }
  Tensor expect2 = ad::conv2d(g2, k2, 2, 1);
  for (size_t i = 0; i < expect2.values().size(); ++i) {
    EXPECT_NEAR(x2.grad()[i], expect2.value_at(i), 1e-12) << "coord " << i;
  }
}

TEST(GradCheck, PerPrimitiveSuitePasses) {
  const auto checks = ad::run_primitive_gradcheck_suite(12345);
  EXPECT_EQ(checks.size(), ad::primitive_catalog().size());
  for (const auto& c : checks) {
    EXPECT_TRUE(c.pass) << c.primitive << " max_error=" << c.max_error;
    EXPECT_GT(c.n_checked, 0u) << c.primitive;
  }
}

TEST(GradCheck, DetectsInjectedBackwardFault) {
  ad::set_backward_fault("mul", 1.5);
  auto fn = [](const std::vector<Tensor>& ins) { return ad::sum_all(ad::mul(ins[0], ins[0])); };
  util::Rng rng(5);
  auto res = ad::grad_check(fn, {Tensor::randn({3, 3}, rng)});
  ad::clear_backward_fault();
  EXPECT_FALSE(res.pass()) << "fault should break the mul rule, max_error=" << res.max_error;

  auto res2 = ad::grad_check(fn, {Tensor::randn({3, 3}, rng)});
  EXPECT_TRUE(res2.pass()) << "after clearing, max_error=" << res2.max_error;
}

TEST(GradCheck, CompositeFunction) {
  // mixes matmul, softmax, layer_norm, gelu, reductions
  auto fn = [](const std::vector<Tensor>& ins) {
    Tensor h = ad::matmul(ins[0], ins[1]);
    h = ad::gelu(ad::layer_norm(h, 1));
    Tensor a = ad::softmax(h, 1);
    return ad::sum_all(ad::mul(a, h));
  };
  util::Rng rng(21);
  auto res = ad::grad_check(fn, {Tensor::randn({3, 4}, rng), Tensor::randn({4, 5}, rng)});
  EXPECT_TRUE(res.pass()) << "max_error=" << res.max_error << " at input " << res.worst_input
                          << " coord " << res.worst_coord;
}

TEST(GradCheck, CoordinateSubsetsAreDeterministic) {
  const auto a = ad::pick_coords(1000, 25, 7);
  const auto b = ad::pick_coords(1000, 25, 7);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 25u);
  const auto c = ad::pick_coords(10, 25, 7);
  EXPECT_EQ(c.size(), 10u);
  for (size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c[i], static_cast<int64_t>(i));
}

}  // namespace
