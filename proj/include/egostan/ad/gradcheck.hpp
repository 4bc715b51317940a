#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "egostan/ad/ops.hpp"
#include "egostan/ad/tape.hpp"
#include "egostan/ad/tensor.hpp"
#include "egostan/util/rng.hpp"

// Finite-difference oracle for the reverse-mode engine. Central differences,
// relative error |a - n| / max(1, |a|, |n|).

namespace egostan::ad {

using ScalarFn = std::function<Tensor(const std::vector<Tensor>&)>;

struct GradCheckResult {
  double max_error = 0.0;
  size_t n_checked = 0;
  size_t n_kinked = 0;  // coordinates excluded: relu branch flipped in-window
  size_t worst_input = 0;
  int64_t worst_coord = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool pass(double tol = 1e-4) const { return max_error <= tol; }
};

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckTol = 1e-4;

// Deterministic subset of coordinate indices for large tensors.
inline std::vector<int64_t> pick_coords(int64_t size, int64_t max_n, uint64_t seed) {
  std::vector<int64_t> all(static_cast<size_t>(size));
  for (int64_t i = 0; i < size; ++i) all[static_cast<size_t>(i)] = i;
  if (size <= max_n) return all;
  util::Rng rng(seed);
  rng.shuffle(all);
  all.resize(static_cast<size_t>(max_n));
  std::sort(all.begin(), all.end());
  return all;
}

// Checks d(f)/d(inputs) at the given point. If `coords` is non-null it must
// have one index list per input; only those coordinates are probed (the
// analytic pass always covers everything). With `filter_kinks` a coordinate
// is excluded when any relu switches branch between the two evaluation
// points: central differences carry no gradient information across a kink.
// Excluded coordinates are tallied in n_kinked.
inline GradCheckResult grad_check(const ScalarFn& f, std::vector<Tensor> inputs,
                                  double step = kGradCheckStep,
                                  const std::vector<std::vector<int64_t>>* coords = nullptr,
                                  bool filter_kinks = false) {
  if (coords != nullptr && coords->size() != inputs.size()) {
    throw AutodiffError("grad_check: coords list size must match input count");
  }
  std::vector<std::vector<double>> analytic(inputs.size());
  {
    Tape tape;
    TapeScope scope(tape);
    for (auto& t : inputs) t.set_requires_grad(true);
    Tensor y = f(inputs);
    if (y.size() != 1) throw AutodiffError("grad_check: objective must be scalar");
    tape.backward(y);
    for (size_t i = 0; i < inputs.size(); ++i) analytic[i] = inputs[i].grad_or_zero();
  }
  for (auto& t : inputs) t.zero_grad();

  std::vector<uint8_t> branches_p, branches_m;
  auto eval = [&](std::vector<uint8_t>* branches) {
    if (branches == nullptr) {
      Tensor y = f(inputs);  // no active tape: plain forward
      return y.item();
    }
    ReluBranchTrace trace(*branches);
    Tensor y = f(inputs);
    return y.item();
  };

  GradCheckResult res;
  for (size_t i = 0; i < inputs.size(); ++i) {
    auto& vals = inputs[i].mutable_values();
    const std::vector<int64_t> all =
        coords ? (*coords)[i] : pick_coords(inputs[i].size(), inputs[i].size(), 0);
    for (int64_t c : all) {
      const size_t ci = static_cast<size_t>(c);
      const double saved = vals[ci];
      vals[ci] = saved + step;
      const double fp = eval(filter_kinks ? &branches_p : nullptr);
      vals[ci] = saved - step;
      const double fm = eval(filter_kinks ? &branches_m : nullptr);
      vals[ci] = saved;
      if (filter_kinks && branches_p != branches_m) {
        ++res.n_kinked;
        continue;
      }
      const double numeric = (fp - fm) / (2.0 * step);
      const double a = analytic[i][ci];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      ++res.n_checked;
      if (err > res.max_error) {
        res.max_error = err;
        res.worst_input = i;
        res.worst_coord = c;
        res.worst_analytic = a;
        res.worst_numeric = numeric;
      }
    }
  }
  return res;
}

// --- per-primitive suite ----------------------------------------------------

struct PrimitiveCheck {
  std::string primitive;
  double max_error = 0.0;
  size_t n_checked = 0;
  bool pass = false;
};

namespace detail {

// Scalar objective: fixed-weight contraction of the primitive output, so the
// check is sensitive to every output coordinate.
inline ScalarFn weighted_primitive(std::string name, Attrs attrs, Tensor weights) {
  return [name = std::move(name), attrs = std::move(attrs),
          weights = std::move(weights)](const std::vector<Tensor>& ins) {
    Tensor y = primitive_forward(name, ins, attrs);
    return sum_all(mul(y, weights));
  };
}

inline Tensor rand_signed(const Shape& s, util::Rng& rng, double lo, double hi) {
  std::vector<double> v(static_cast<size_t>(numel(s)));
  for (auto& x : v) {
    const double mag = rng.uniform(lo, hi);
    x = rng.uniform() < 0.5 ? -mag : mag;
  }
  return Tensor(s, std::move(v));
}

inline Tensor rand_normal(const Shape& s, util::Rng& rng) {
  std::vector<double> v(static_cast<size_t>(numel(s)));
  for (auto& x : v) x = rng.normal();
  return Tensor(s, std::move(v));
}

struct PrimitiveCase {
  std::string name;
  Attrs attrs;
  std::vector<Tensor> inputs;
  Shape out_shape;
};

inline PrimitiveCase make_case(const std::string& name, uint64_t seed) {
  util::Rng rng(util::derive_seed(seed, 0x9e3779b9ULL));
  PrimitiveCase pc;
  pc.name = name;
  const bool alt = (seed % 2) == 1;
  if (name == "matmul") {
    pc.inputs = {rand_normal({3, 4}, rng), rand_normal({4, 2}, rng)};
    pc.out_shape = {3, 2};
  } else if (name == "conv2d") {
    pc.attrs.stride = alt ? 2 : 1;
    pc.attrs.pad = 1;
    pc.inputs = {rand_normal({2, 2, 5, 5}, rng), rand_normal({3, 2, 3, 3}, rng)};
    const int64_t oh = (5 + 2 - 3) / pc.attrs.stride + 1;
    pc.out_shape = {2, 3, oh, oh};
  } else if (name == "deconv2d") {
    pc.attrs.stride = alt ? 2 : 1;
    pc.attrs.pad = 1;
    pc.inputs = {rand_normal({2, 2, 3, 3}, rng), rand_normal({2, 3, 4, 4}, rng)};
    const int64_t oh = (3 - 1) * pc.attrs.stride + 4 - 2;
    pc.out_shape = {2, 3, oh, oh};
  } else if (name == "add" || name == "mul") {
    pc.inputs = {rand_normal({2, 3, 4}, rng), rand_normal({2, 3, 4}, rng)};
    pc.out_shape = {2, 3, 4};
  } else if (name == "div") {
    pc.inputs = {rand_normal({2, 3, 4}, rng), rand_signed({2, 3, 4}, rng, 0.5, 2.0)};
    pc.out_shape = {2, 3, 4};
  } else if (name == "relu" || name == "gelu") {
    // keep relu probes away from the kink at 0
    pc.inputs = {rand_signed({3, 5}, rng, 0.2, 1.5)};
    pc.out_shape = {3, 5};
  } else if (name == "softmax") {
    pc.attrs.axis = alt ? 0 : 1;
    pc.inputs = {rand_normal({4, 5, 3}, rng)};
    pc.out_shape = {4, 5, 3};
  } else if (name == "layer_norm") {
    pc.attrs.axis = alt ? 0 : 1;
    pc.inputs = {rand_normal({4, 6}, rng)};
    pc.out_shape = {4, 6};
  } else if (name == "reshape") {
    pc.attrs.shape = {4, 6};
    pc.inputs = {rand_normal({2, 3, 4}, rng)};
    pc.out_shape = {4, 6};
  } else if (name == "permute") {
    pc.attrs.perm = {2, 0, 1};
    pc.inputs = {rand_normal({2, 3, 4}, rng)};
    pc.out_shape = {4, 2, 3};
  } else if (name == "concat") {
    pc.attrs.axis = 1;
    pc.inputs = {rand_normal({2, 2, 3}, rng), rand_normal({2, 1, 3}, rng),
                 rand_normal({2, 3, 3}, rng)};
    pc.out_shape = {2, 6, 3};
  } else if (name == "slice") {
    pc.attrs.axis = 1;
    pc.attrs.start = 1;
    pc.attrs.stop = 4;
    pc.inputs = {rand_normal({2, 6, 3}, rng)};
    pc.out_shape = {2, 3, 3};
  } else if (name == "reduce_mean" || name == "reduce_sum") {
    pc.attrs.axis = static_cast<int>(seed % 3);
    pc.inputs = {rand_normal({2, 4, 3}, rng)};
    Shape s = {2, 4, 3};
    s.erase(s.begin() + pc.attrs.axis);
    pc.out_shape = s;
  } else if (name == "sqrt") {
    std::vector<double> v(12);
    for (auto& x : v) x = rng.uniform(0.5, 2.0);
    pc.inputs = {Tensor({3, 4}, std::move(v))};
    pc.out_shape = {3, 4};
  } else if (name == "neg") {
    pc.inputs = {rand_normal({2, 3}, rng)};
    pc.out_shape = {2, 3};
  } else if (name == "broadcast") {
    pc.attrs.target = {2, 4, 3};
    pc.inputs = {rand_normal({2, 1, 3}, rng)};
    pc.out_shape = {2, 4, 3};
  } else {
    throw UnknownPrimitiveError("make_case: unknown primitive '" + name + "'");
  }
  return pc;
}

}  // namespace detail

// Runs 5 seeded points per catalog primitive; each point checks every input
// coordinate against central differences.
inline std::vector<PrimitiveCheck> run_primitive_gradcheck_suite(uint64_t master_seed = 12345,
                                                                 int points = 5,
                                                                 double tol = kGradCheckTol) {
  std::vector<PrimitiveCheck> out;
  for (const auto& name : primitive_catalog()) {
    PrimitiveCheck pc;
    pc.primitive = name;
    for (int p = 0; p < points; ++p) {
      auto cse = detail::make_case(name, util::derive_seed(master_seed, static_cast<uint64_t>(p)));
      util::Rng wrng(util::derive_seed(master_seed, 1000 + static_cast<uint64_t>(p)));
      Tensor w = detail::rand_signed(cse.out_shape, wrng, 0.5, 1.5);
      auto fn = detail::weighted_primitive(cse.name, cse.attrs, w);
      auto res = grad_check(fn, cse.inputs);
      pc.max_error = std::max(pc.max_error, res.max_error);
      pc.n_checked += res.n_checked;
    }
    pc.pass = pc.max_error <= tol;
    out.push_back(std::move(pc));
  }
  return out;
}

}  // namespace egostan::ad
