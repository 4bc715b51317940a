#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "egostan/util/rng.hpp"

namespace egostan::ad {

using Shape = std::vector<int64_t>;

class Tape;  // fwd

inline int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

// Row-major strides.
inline std::vector<int64_t> strides_of(const Shape& s) {
  std::vector<int64_t> st(s.size(), 1);
  for (size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct UnknownPrimitiveError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct AutodiffError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TensorData {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<double> grad;      // empty until first accumulation
  const Tape* producer = nullptr;
  int producer_node = -1;

  void ensure_grad() {
    if (grad.empty()) grad.assign(values.size(), 0.0);
  }
};

// Value-semantics handle over shared storage. Values are immutable after
// creation through the op layer; only the grad slot mutates.
class Tensor {
 public:
  Tensor() : d_(std::make_shared<TensorData>()) {}

  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false)
      : d_(std::make_shared<TensorData>()) {
    if (numel(shape) != static_cast<int64_t>(values.size())) {
      throw ShapeError("tensor: " + shape_str(shape) + " does not hold " +
                       std::to_string(values.size()) + " values");
    }
    for (int64_t e : shape) {
      if (e <= 0) throw ShapeError("tensor: non-positive extent in " + shape_str(shape));
    }
    d_->shape = std::move(shape);
    d_->values = std::move(values);
    d_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape) {
    const auto n = static_cast<size_t>(numel(shape));
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
  }

  static Tensor full(Shape shape, double v) {
    const auto n = static_cast<size_t>(numel(shape));
    return Tensor(std::move(shape), std::vector<double>(n, v));
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor randn(Shape shape, util::Rng& rng, double stddev = 1.0) {
    const auto n = static_cast<size_t>(numel(shape));
    std::vector<double> v(n);
    for (auto& x : v) x = stddev * rng.normal();
    return Tensor(std::move(shape), std::move(v));
  }

  static Tensor rand_uniform(Shape shape, util::Rng& rng, double lo, double hi) {
    const auto n = static_cast<size_t>(numel(shape));
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor(std::move(shape), std::move(v));
  }

  const Shape& shape() const { return d_->shape; }
  int64_t dim(size_t i) const { return d_->shape[i]; }
  size_t rank() const { return d_->shape.size(); }
  int64_t size() const { return numel(d_->shape); }

  const std::vector<double>& values() const { return d_->values; }
  double value_at(size_t i) const { return d_->values[i]; }
  double item() const {
    if (size() != 1) throw ShapeError("item(): tensor " + shape_str(shape()) + " is not scalar");
    return d_->values[0];
  }

  bool requires_grad() const { return d_->requires_grad; }
  Tensor& set_requires_grad(bool v) {
    d_->requires_grad = v;
    return *this;
  }

  bool has_grad() const { return !d_->grad.empty(); }
  const std::vector<double>& grad() const {
    if (d_->grad.empty()) throw AutodiffError("grad(): no gradient accumulated");
    return d_->grad;
  }
  // Grad as a full vector, zeros when absent.
  std::vector<double> grad_or_zero() const {
    if (d_->grad.empty()) return std::vector<double>(d_->values.size(), 0.0);
    return d_->grad;
  }
  void zero_grad() { d_->grad.clear(); }

  // Out-of-band mutation used by the optimizer between passes; never call
  // on a tensor that is alive on a tape.
  std::vector<double>& mutable_values() { return d_->values; }

  std::shared_ptr<TensorData> ptr() const { return d_; }
  bool same_storage(const Tensor& o) const { return d_ == o.d_; }

  bool all_finite() const {
    for (double v : d_->values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  // Debug dump for golden-file tests: {"shape": [...], "values": [...]}.
  std::string debug_json() const;

 private:
  std::shared_ptr<TensorData> d_;
};

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

inline std::string Tensor::debug_json() const {
  std::string s = "{\"shape\": [";
  for (size_t i = 0; i < d_->shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(d_->shape[i]);
  }
  s += "], \"values\": [";
  char buf[40];
  for (size_t i = 0; i < d_->values.size(); ++i) {
    if (i) s += ", ";
    std::snprintf(buf, sizeof(buf), "%.17g", d_->values[i]);
    s += buf;
  }
  s += "]}";
  return s;
}

}  // namespace egostan::ad
