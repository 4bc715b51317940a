#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "egostan/ad/tape.hpp"
#include "egostan/ad/tensor.hpp"

// Primitive catalog: matmul, conv2d, deconv2d, add, mul, relu, gelu,
// softmax(axis), layer_norm(axis), reshape, permute, concat(axis),
// slice(axis, range), reduce_mean(axis), reduce_sum(axis), sqrt, div, neg,
// broadcast. All forwards are deterministic; each records a backward rule on
// the active tape when any input requires grad.

namespace egostan::ad {

namespace detail {

// Backward fault injection: lets the gradcheck harness prove it catches a
// corrupted rule. Off unless a test/CLI sets a primitive name.
inline std::string& fault_op() {
  static std::string s;
  return s;
}
inline double& fault_scale() {
  static double v = 1.0;
  return v;
}

// Optional relu branch recorder. A central-difference probe is only valid
// when every relu keeps the same branch at both evaluation points; the
// gradcheck harness compares recorded branch patterns to detect coordinates
// whose probe window straddles a kink.
inline std::vector<uint8_t>*& relu_branch_slot() {
  thread_local std::vector<uint8_t>* slot = nullptr;
  return slot;
}

inline void check_finite(const char* op, const TensorData& out) {
#ifdef EGOSTAN_CHECK_FINITE
  for (double v : out.values) {
    if (!std::isfinite(v)) {
      throw AutodiffError(std::string("non-finite value produced by primitive '") + op + "'");
    }
  }
#else
  (void)op;
  (void)out;
#endif
}

template <typename TensorRange>
inline void record_range(const char* op, const TensorRange& inputs, Tensor& out,
                         std::function<void()> bw) {
  check_finite(op, *out.ptr());
  Tape* t = active_tape();
  if (t == nullptr) return;
  bool need = false;
  for (const auto& in : inputs) {
    if (in.requires_grad()) {
      need = true;
      break;
    }
  }
  if (!need) return;
  if (!fault_op().empty() && fault_op() == op) {
    auto yd = out.ptr();
    const double scale = fault_scale();
    bw = [inner = std::move(bw), yd, scale]() {
      for (auto& g : yd->grad) g *= scale;
      inner();
    };
  }
  std::vector<std::shared_ptr<TensorData>> ptrs;
  for (const auto& in : inputs) ptrs.push_back(in.ptr());
  auto yd = out.ptr();
  yd->requires_grad = true;
  yd->producer = t;
  yd->producer_node = t->record(op, std::move(ptrs), yd, std::move(bw));
}

inline void record(const char* op, std::initializer_list<Tensor> inputs, Tensor& out,
                   std::function<void()> bw) {
  record_range(op, inputs, out, std::move(bw));
}

inline void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

inline size_t check_axis(const char* op, const Shape& s, int axis) {
  if (axis < 0 || static_cast<size_t>(axis) >= s.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for " + shape_str(s));
  }
  return static_cast<size_t>(axis);
}

// Decompose shape around `axis` into (outer, n, inner) for line iteration.
struct LineSplit {
  int64_t outer, n, inner;
};
inline LineSplit line_split(const Shape& s, size_t axis) {
  LineSplit ls{1, s[axis], 1};
  for (size_t i = 0; i < axis; ++i) ls.outer *= s[i];
  for (size_t i = axis + 1; i < s.size(); ++i) ls.inner *= s[i];
  return ls;
}

// --- dense matmul kernels ------------------------------------------------

// c[m,n] += a[m,k] * b[k,n]
inline void mm_acc(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (int64_t l = 0; l < k; ++l) {
      const double av = arow[l];
      if (av == 0.0) continue;
      const double* brow = b + l * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[m,k] += a[m,n] * b[k,n]^T
inline void mm_a_bt(const double* a, const double* b, double* c, int64_t m, int64_t n, int64_t k) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double* crow = c + i * k;
    for (int64_t j = 0; j < k; ++j) {
      const double* brow = b + j * n;
      double acc = 0.0;
      for (int64_t l = 0; l < n; ++l) acc += arow[l] * brow[l];
      crow[j] += acc;
    }
  }
}

// c[k,n] += a[m,k]^T * b[m,n]
inline void mm_at_b(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  for (int64_t l = 0; l < m; ++l) {
    const double* arow = a + l * k;
    const double* brow = b + l * n;
    for (int64_t i = 0; i < k; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c + i * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// --- convolution loop kernels --------------------------------------------
// Position along one image axis: pos = o * stride + t, with t = k - pad.
// Valid output range keeps pos inside [0, m).
inline int64_t conv_lo(int64_t t, int64_t stride) {
  return t >= 0 ? 0 : (-t + stride - 1) / stride;
}
inline int64_t conv_hi(int64_t t, int64_t stride, int64_t m, int64_t limit) {
  const int64_t num = m - 1 - t;
  if (num < 0) return -1;
  return std::min(limit - 1, num / stride);
}

struct ConvDims {
  int64_t N, Ci, H, W;   // input
  int64_t Co, kh, kw;    // kernel
  int64_t s, p;          // stride, pad
  int64_t OH, OW;        // output
};

// out[n,co,oy,ox] += sum_{ci,ky,kx} in[n,ci,oy*s-p+ky, ox*s-p+kx] * k[co,ci,ky,kx]
inline void conv_fwd(const double* in, const double* krn, double* out, const ConvDims& d) {
  for (int64_t n = 0; n < d.N; ++n) {
    for (int64_t co = 0; co < d.Co; ++co) {
      double* obase = out + (n * d.Co + co) * d.OH * d.OW;
      for (int64_t ci = 0; ci < d.Ci; ++ci) {
        const double* ibase = in + (n * d.Ci + ci) * d.H * d.W;
        const double* kbase = krn + (co * d.Ci + ci) * d.kh * d.kw;
        for (int64_t ky = 0; ky < d.kh; ++ky) {
          const int64_t ty = ky - d.p;
          const int64_t oy_lo = conv_lo(ty, d.s), oy_hi = conv_hi(ty, d.s, d.H, d.OH);
          for (int64_t kx = 0; kx < d.kw; ++kx) {
            const double kv = kbase[ky * d.kw + kx];
            if (kv == 0.0) continue;
            const int64_t tx = kx - d.p;
            const int64_t ox_lo = conv_lo(tx, d.s), ox_hi = conv_hi(tx, d.s, d.W, d.OW);
            for (int64_t oy = oy_lo; oy <= oy_hi; ++oy) {
              const double* irow = ibase + (oy * d.s + ty) * d.W + tx;
              double* orow = obase + oy * d.OW;
              for (int64_t ox = ox_lo; ox <= ox_hi; ++ox) orow[ox] += kv * irow[ox * d.s];
            }
          }
        }
      }
    }
  }
}

// gin[n,ci,iy,ix] += sum gout[n,co,oy,ox] * k[co,ci,ky,kx]  (adjoint of conv_fwd)
inline void conv_adj_input(const double* gout, const double* krn, double* gin,
                           const ConvDims& d) {
  for (int64_t n = 0; n < d.N; ++n) {
    for (int64_t co = 0; co < d.Co; ++co) {
      const double* gbase = gout + (n * d.Co + co) * d.OH * d.OW;
      for (int64_t ci = 0; ci < d.Ci; ++ci) {
        double* ibase = gin + (n * d.Ci + ci) * d.H * d.W;
        const double* kbase = krn + (co * d.Ci + ci) * d.kh * d.kw;
        for (int64_t ky = 0; ky < d.kh; ++ky) {
          const int64_t ty = ky - d.p;
          const int64_t oy_lo = conv_lo(ty, d.s), oy_hi = conv_hi(ty, d.s, d.H, d.OH);
          for (int64_t kx = 0; kx < d.kw; ++kx) {
            const double kv = kbase[ky * d.kw + kx];
            if (kv == 0.0) continue;
            const int64_t tx = kx - d.p;
            const int64_t ox_lo = conv_lo(tx, d.s), ox_hi = conv_hi(tx, d.s, d.W, d.OW);
            for (int64_t oy = oy_lo; oy <= oy_hi; ++oy) {
              double* irow = ibase + (oy * d.s + ty) * d.W + tx;
              const double* grow = gbase + oy * d.OW;
              for (int64_t ox = ox_lo; ox <= ox_hi; ++ox) irow[ox * d.s] += kv * grow[ox];
            }
          }
        }
      }
    }
  }
}

// gk[co,ci,ky,kx] += sum_{n,oy,ox} gout[n,co,oy,ox] * in[n,ci,oy*s-p+ky, ox*s-p+kx]
inline void conv_kernel_grad(const double* gout, const double* in, double* gk,
                             const ConvDims& d) {
  for (int64_t co = 0; co < d.Co; ++co) {
    for (int64_t ci = 0; ci < d.Ci; ++ci) {
      double* kbase = gk + (co * d.Ci + ci) * d.kh * d.kw;
      for (int64_t ky = 0; ky < d.kh; ++ky) {
        const int64_t ty = ky - d.p;
        const int64_t oy_lo = conv_lo(ty, d.s), oy_hi = conv_hi(ty, d.s, d.H, d.OH);
        for (int64_t kx = 0; kx < d.kw; ++kx) {
          const int64_t tx = kx - d.p;
          const int64_t ox_lo = conv_lo(tx, d.s), ox_hi = conv_hi(tx, d.s, d.W, d.OW);
          double acc = 0.0;
          for (int64_t n = 0; n < d.N; ++n) {
            const double* gbase = gout + (n * d.Co + co) * d.OH * d.OW;
            const double* ibase = in + (n * d.Ci + ci) * d.H * d.W;
            for (int64_t oy = oy_lo; oy <= oy_hi; ++oy) {
              const double* irow = ibase + (oy * d.s + ty) * d.W + tx;
              const double* grow = gbase + oy * d.OW;
              for (int64_t ox = ox_lo; ox <= ox_hi; ++ox) acc += grow[ox] * irow[ox * d.s];
            }
          }
          kbase[ky * d.kw + kx] += acc;
        }
      }
    }
  }
}

}  // namespace detail

// --- elementwise ----------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape("add", a, b);
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  Tensor y(a.shape(), std::move(out));
  detail::record("add", {a, b}, y, [ad = a.ptr(), bd = b.ptr(), yd = y.ptr()]() {
    const auto& g = yd->grad;
    if (ad->requires_grad) {
      ad->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) ad->grad[i] += g[i];
    }
    if (bd->requires_grad) {
      bd->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) bd->grad[i] += g[i];
    }
  });
  return y;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape("mul", a, b);
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  Tensor y(a.shape(), std::move(out));
  detail::record("mul", {a, b}, y, [ad = a.ptr(), bd = b.ptr(), yd = y.ptr()]() {
    const auto& g = yd->grad;
    if (ad->requires_grad) {
      ad->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) ad->grad[i] += g[i] * bd->values[i];
    }
    if (bd->requires_grad) {
      bd->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) bd->grad[i] += g[i] * ad->values[i];
    }
  });
  return y;
}

inline Tensor neg(const Tensor& x) {
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (size_t i = 0; i < xv.size(); ++i) out[i] = -xv[i];
  Tensor y(x.shape(), std::move(out));
  detail::record("neg", {x}, y, [xd = x.ptr(), yd = y.ptr()]() {
    if (!xd->requires_grad) return;
    xd->ensure_grad();
    for (size_t i = 0; i < yd->grad.size(); ++i) xd->grad[i] -= yd->grad[i];
  });
  return y;
}

inline Tensor div(const Tensor& a, const Tensor& b) {
  detail::require_same_shape("div", a, b);
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] / bv[i];
  Tensor y(a.shape(), std::move(out));
  detail::record("div", {a, b}, y, [ad = a.ptr(), bd = b.ptr(), yd = y.ptr()]() {
    const auto& g = yd->grad;
    if (ad->requires_grad) {
      ad->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) ad->grad[i] += g[i] / bd->values[i];
    }
    if (bd->requires_grad) {
      bd->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) {
        const double bb = bd->values[i];
        bd->grad[i] -= g[i] * ad->values[i] / (bb * bb);
      }
    }
  });
  return y;
}

inline Tensor sqrt(const Tensor& x) {
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (size_t i = 0; i < xv.size(); ++i) out[i] = std::sqrt(xv[i]);
  Tensor y(x.shape(), std::move(out));
  detail::record("sqrt", {x}, y, [xd = x.ptr(), yd = y.ptr()]() {
    if (!xd->requires_grad) return;
    xd->ensure_grad();
    for (size_t i = 0; i < yd->grad.size(); ++i)
      xd->grad[i] += yd->grad[i] * 0.5 / yd->values[i];
  });
  return y;
}

inline Tensor relu(const Tensor& x) {
  const auto& xv = x.values();
  if (auto* b = detail::relu_branch_slot()) {
    for (double v : xv) b->push_back(v > 0.0 ? 1 : 0);
  }
  std::vector<double> out(xv.size());
  for (size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  Tensor y(x.shape(), std::move(out));
  detail::record("relu", {x}, y, [xd = x.ptr(), yd = y.ptr()]() {
    if (!xd->requires_grad) return;
    xd->ensure_grad();
    for (size_t i = 0; i < yd->grad.size(); ++i)
      if (xd->values[i] > 0.0) xd->grad[i] += yd->grad[i];
  });
  return y;
}

inline Tensor gelu(const Tensor& x) {
  // exact form: x * Phi(x)
  const double inv_sqrt2 = 0.70710678118654752440;
  const double inv_sqrt2pi = 0.39894228040143267794;
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (size_t i = 0; i < xv.size(); ++i)
    out[i] = 0.5 * xv[i] * (1.0 + std::erf(xv[i] * inv_sqrt2));
  Tensor y(x.shape(), std::move(out));
  detail::record("gelu", {x}, y, [xd = x.ptr(), yd = y.ptr(), inv_sqrt2, inv_sqrt2pi]() {
    if (!xd->requires_grad) return;
    xd->ensure_grad();
    for (size_t i = 0; i < yd->grad.size(); ++i) {
      const double v = xd->values[i];
      const double phi = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
      const double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
      xd->grad[i] += yd->grad[i] * (phi + v * pdf);
    }
  });
  return y;
}

// --- normalization --------------------------------------------------------

inline Tensor softmax(const Tensor& x, int axis) {
  const size_t ax = detail::check_axis("softmax", x.shape(), axis);
  const auto ls = detail::line_split(x.shape(), ax);
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (int64_t o = 0; o < ls.outer; ++o) {
    for (int64_t in = 0; in < ls.inner; ++in) {
      const int64_t base = o * ls.n * ls.inner + in;
      double m = -1e308;
      for (int64_t a = 0; a < ls.n; ++a) m = std::max(m, xv[base + a * ls.inner]);
      double s = 0.0;
      for (int64_t a = 0; a < ls.n; ++a) {
        const double e = std::exp(xv[base + a * ls.inner] - m);
        out[base + a * ls.inner] = e;
        s += e;
      }
      for (int64_t a = 0; a < ls.n; ++a) out[base + a * ls.inner] /= s;
    }
  }
  Tensor y(x.shape(), std::move(out));
  detail::record("softmax", {x}, y, [xd = x.ptr(), yd = y.ptr(), ls]() {
    if (!xd->requires_grad) return;
    xd->ensure_grad();
    const auto& g = yd->grad;
    const auto& yv = yd->values;
    for (int64_t o = 0; o < ls.outer; ++o) {
      for (int64_t in = 0; in < ls.inner; ++in) {
        const int64_t base = o * ls.n * ls.inner + in;
        double dot = 0.0;
        for (int64_t a = 0; a < ls.n; ++a) {
          const int64_t i = base + a * ls.inner;
          dot += g[i] * yv[i];
        }
        for (int64_t a = 0; a < ls.n; ++a) {
          const int64_t i = base + a * ls.inner;
          xd->grad[i] += yv[i] * (g[i] - dot);
        }
      }
    }
  });
  return y;
}

inline constexpr double kLayerNormEps = 1e-5;

inline Tensor layer_norm(const Tensor& x, int axis) {
  const size_t ax = detail::check_axis("layer_norm", x.shape(), axis);
  const auto ls = detail::line_split(x.shape(), ax);
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  std::vector<double> inv_std(static_cast<size_t>(ls.outer * ls.inner));
  for (int64_t o = 0; o < ls.outer; ++o) {
    for (int64_t in = 0; in < ls.inner; ++in) {
      const int64_t base = o * ls.n * ls.inner + in;
      double mean = 0.0;
      for (int64_t a = 0; a < ls.n; ++a) mean += xv[base + a * ls.inner];
      mean /= static_cast<double>(ls.n);
      double var = 0.0;
      for (int64_t a = 0; a < ls.n; ++a) {
        const double dv = xv[base + a * ls.inner] - mean;
        var += dv * dv;
      }
      var /= static_cast<double>(ls.n);
      const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
      inv_std[static_cast<size_t>(o * ls.inner + in)] = inv;
      for (int64_t a = 0; a < ls.n; ++a)
        out[base + a * ls.inner] = (xv[base + a * ls.inner] - mean) * inv;
    }
  }
  Tensor y(x.shape(), std::move(out));
  detail::record("layer_norm", {x}, y,
                 [xd = x.ptr(), yd = y.ptr(), ls, inv_std = std::move(inv_std)]() {
    if (!xd->requires_grad) return;
    xd->ensure_grad();
    const auto& g = yd->grad;
    const auto& yv = yd->values;
    const double n = static_cast<double>(ls.n);
    for (int64_t o = 0; o < ls.outer; ++o) {
      for (int64_t in = 0; in < ls.inner; ++in) {
        const int64_t base = o * ls.n * ls.inner + in;
        const double inv = inv_std[static_cast<size_t>(o * ls.inner + in)];
        double gmean = 0.0, gymean = 0.0;
        for (int64_t a = 0; a < ls.n; ++a) {
          const int64_t i = base + a * ls.inner;
          gmean += g[i];
          gymean += g[i] * yv[i];
        }
        gmean /= n;
        gymean /= n;
        for (int64_t a = 0; a < ls.n; ++a) {
          const int64_t i = base + a * ls.inner;
          xd->grad[i] += inv * (g[i] - gmean - yv[i] * gymean);
        }
      }
    }
  });
  return y;
}

// --- shape ops --------------------------------------------------------------

inline Tensor reshape(const Tensor& x, Shape new_shape) {
  if (numel(new_shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                     shape_str(new_shape));
  }
  Tensor y(std::move(new_shape), x.values());
  detail::record("reshape", {x}, y, [xd = x.ptr(), yd = y.ptr()]() {
    if (!xd->requires_grad) return;
    xd->ensure_grad();
    for (size_t i = 0; i < yd->grad.size(); ++i) xd->grad[i] += yd->grad[i];
  });
  return y;
}

inline Tensor permute(const Tensor& x, const std::vector<int64_t>& perm) {
  const size_t r = x.rank();
  if (perm.size() != r) throw ShapeError("permute: perm rank mismatch for " + shape_str(x.shape()));
  std::vector<bool> seen(r, false);
  Shape out_shape(r);
  for (size_t i = 0; i < r; ++i) {
    const int64_t p = perm[i];
    if (p < 0 || static_cast<size_t>(p) >= r || seen[static_cast<size_t>(p)]) {
      throw ShapeError("permute: invalid permutation");
    }
    seen[static_cast<size_t>(p)] = true;
    out_shape[i] = x.dim(static_cast<size_t>(p));
  }
  const auto in_strides = strides_of(x.shape());
  const auto out_strides = strides_of(out_shape);
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  const int64_t total = x.size();
  // map output linear index -> input linear index
  std::vector<int64_t> in_stride_for_out(r);
  for (size_t i = 0; i < r; ++i) in_stride_for_out[i] = in_strides[static_cast<size_t>(perm[i])];
  for (int64_t idx = 0; idx < total; ++idx) {
    int64_t rem = idx, src = 0;
    for (size_t i = 0; i < r; ++i) {
      const int64_t q = rem / out_strides[i];
      rem -= q * out_strides[i];
      src += q * in_stride_for_out[i];
    }
    out[static_cast<size_t>(idx)] = xv[static_cast<size_t>(src)];
  }
  Tensor y(out_shape, std::move(out));
  detail::record("permute", {x}, y,
                 [xd = x.ptr(), yd = y.ptr(), out_strides, in_stride_for_out, r, total]() {
    if (!xd->requires_grad) return;
    xd->ensure_grad();
    for (int64_t idx = 0; idx < total; ++idx) {
      int64_t rem = idx, src = 0;
      for (size_t i = 0; i < r; ++i) {
        const int64_t q = rem / out_strides[i];
        rem -= q * out_strides[i];
        src += q * in_stride_for_out[i];
      }
      xd->grad[static_cast<size_t>(src)] += yd->grad[static_cast<size_t>(idx)];
    }
  });
  return y;
}

inline Tensor concat(const std::vector<Tensor>& xs, int axis) {
  if (xs.empty()) throw ShapeError("concat: no inputs");
  const size_t ax = detail::check_axis("concat", xs[0].shape(), axis);
  Shape out_shape = xs[0].shape();
  int64_t total_axis = 0;
  for (const auto& x : xs) {
    if (x.rank() != out_shape.size()) throw ShapeError("concat: rank mismatch");
    for (size_t i = 0; i < out_shape.size(); ++i) {
      if (i != ax && x.dim(i) != out_shape[i]) {
        throw ShapeError("concat: shape mismatch at dim " + std::to_string(i) + ": " +
                         shape_str(x.shape()) + " vs " + shape_str(out_shape));
      }
    }
    total_axis += x.dim(ax);
  }
  out_shape[ax] = total_axis;
  const auto ls = detail::line_split(out_shape, ax);
  std::vector<double> out(static_cast<size_t>(numel(out_shape)));
  int64_t offset = 0;
  for (const auto& x : xs) {
    const int64_t na = x.dim(ax);
    const auto& xv = x.values();
    for (int64_t o = 0; o < ls.outer; ++o) {
      const double* src = xv.data() + o * na * ls.inner;
      double* dst = out.data() + (o * ls.n + offset) * ls.inner;
      std::copy(src, src + na * ls.inner, dst);
    }
    offset += na;
  }
  Tensor y(out_shape, std::move(out));
  std::vector<std::shared_ptr<TensorData>> in_ptrs;
  std::vector<int64_t> extents;
  for (const auto& x : xs) {
    in_ptrs.push_back(x.ptr());
    extents.push_back(x.dim(ax));
  }
  detail::record_range("concat", xs, y, [in_ptrs, yd = y.ptr(), ls, extents]() {
    int64_t off = 0;
    for (size_t xi = 0; xi < in_ptrs.size(); ++xi) {
      const auto& xd = in_ptrs[xi];
      const int64_t na = extents[xi];
      if (xd->requires_grad) {
        xd->ensure_grad();
        for (int64_t o = 0; o < ls.outer; ++o) {
          const double* src = yd->grad.data() + (o * ls.n + off) * ls.inner;
          double* dst = xd->grad.data() + o * na * ls.inner;
          for (int64_t i = 0; i < na * ls.inner; ++i) dst[i] += src[i];
        }
      }
      off += na;
    }
  });
  return y;
}

inline Tensor slice(const Tensor& x, int axis, int64_t start, int64_t stop) {
  const size_t ax = detail::check_axis("slice", x.shape(), axis);
  if (start < 0 || stop <= start || stop > x.dim(ax)) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " + std::to_string(stop) +
                     ") invalid for axis " + std::to_string(axis) + " of " +
                     shape_str(x.shape()));
  }
  Shape out_shape = x.shape();
  out_shape[ax] = stop - start;
  const auto ls = detail::line_split(x.shape(), ax);
  const int64_t na = stop - start;
  const auto& xv = x.values();
  std::vector<double> out(static_cast<size_t>(numel(out_shape)));
  for (int64_t o = 0; o < ls.outer; ++o) {
    const double* src = xv.data() + (o * ls.n + start) * ls.inner;
    double* dst = out.data() + o * na * ls.inner;
    std::copy(src, src + na * ls.inner, dst);
  }
  Tensor y(out_shape, std::move(out));
  detail::record("slice", {x}, y, [xd = x.ptr(), yd = y.ptr(), ls, start, na]() {
    if (!xd->requires_grad) return;
    xd->ensure_grad();
    for (int64_t o = 0; o < ls.outer; ++o) {
      const double* src = yd->grad.data() + o * na * ls.inner;
      double* dst = xd->grad.data() + (o * ls.n + start) * ls.inner;
      for (int64_t i = 0; i < na * ls.inner; ++i) dst[i] += src[i];
    }
  });
  return y;
}

// --- reductions -------------------------------------------------------------

namespace detail {
inline Shape reduced_shape(const Shape& s, size_t ax) {
  Shape out;
  for (size_t i = 0; i < s.size(); ++i)
    if (i != ax) out.push_back(s[i]);
  if (out.empty()) out.push_back(1);
  return out;
}

inline Tensor reduce_impl(const Tensor& x, int axis, bool mean) {
  const char* op = mean ? "reduce_mean" : "reduce_sum";
  const size_t ax = check_axis(op, x.shape(), axis);
  const auto ls = line_split(x.shape(), ax);
  const double scale = mean ? 1.0 / static_cast<double>(ls.n) : 1.0;
  const auto& xv = x.values();
  std::vector<double> out(static_cast<size_t>(ls.outer * ls.inner), 0.0);
  for (int64_t o = 0; o < ls.outer; ++o) {
    for (int64_t a = 0; a < ls.n; ++a) {
      const double* src = xv.data() + (o * ls.n + a) * ls.inner;
      double* dst = out.data() + o * ls.inner;
      for (int64_t i = 0; i < ls.inner; ++i) dst[i] += src[i];
    }
  }
  if (mean) {
    for (auto& v : out) v *= scale;
  }
  Tensor y(reduced_shape(x.shape(), ax), std::move(out));
  record(op, {x}, y, [xd = x.ptr(), yd = y.ptr(), ls, scale]() {
    if (!xd->requires_grad) return;
    xd->ensure_grad();
    for (int64_t o = 0; o < ls.outer; ++o) {
      const double* src = yd->grad.data() + o * ls.inner;
      for (int64_t a = 0; a < ls.n; ++a) {
        double* dst = xd->grad.data() + (o * ls.n + a) * ls.inner;
        for (int64_t i = 0; i < ls.inner; ++i) dst[i] += src[i] * scale;
      }
    }
  });
  return y;
}
}  // namespace detail

inline Tensor reduce_sum(const Tensor& x, int axis) { return detail::reduce_impl(x, axis, false); }
inline Tensor reduce_mean(const Tensor& x, int axis) { return detail::reduce_impl(x, axis, true); }

// --- broadcast ---------------------------------------------------------------

// Explicit expansion to `target`; dims must match or be 1. Backward reduces
// over the expanded dims.
inline Tensor broadcast(const Tensor& x, const Shape& target) {
  const size_t r = x.rank();
  if (target.size() != r) {
    throw ShapeError("broadcast: rank mismatch " + shape_str(x.shape()) + " -> " +
                     shape_str(target));
  }
  for (size_t i = 0; i < r; ++i) {
    if (x.dim(i) != target[i] && x.dim(i) != 1) {
      throw ShapeError("broadcast: dim " + std::to_string(i) + " of " + shape_str(x.shape()) +
                       " incompatible with " + shape_str(target));
    }
  }
  const auto in_strides = strides_of(x.shape());
  const auto out_strides = strides_of(target);
  std::vector<int64_t> eff(r);
  for (size_t i = 0; i < r; ++i) eff[i] = x.dim(i) == 1 ? 0 : in_strides[i];
  const int64_t total = numel(target);
  const auto& xv = x.values();
  std::vector<double> out(static_cast<size_t>(total));
  for (int64_t idx = 0; idx < total; ++idx) {
    int64_t rem = idx, src = 0;
    for (size_t i = 0; i < r; ++i) {
      const int64_t q = rem / out_strides[i];
      rem -= q * out_strides[i];
      src += q * eff[i];
    }
    out[static_cast<size_t>(idx)] = xv[static_cast<size_t>(src)];
  }
  Tensor y(target, std::move(out));
  detail::record("broadcast", {x}, y, [xd = x.ptr(), yd = y.ptr(), out_strides, eff, r, total]() {
    if (!xd->requires_grad) return;
    xd->ensure_grad();
    for (int64_t idx = 0; idx < total; ++idx) {
      int64_t rem = idx, src = 0;
      for (size_t i = 0; i < r; ++i) {
        const int64_t q = rem / out_strides[i];
        rem -= q * out_strides[i];
        src += q * eff[i];
      }
      xd->grad[static_cast<size_t>(src)] += yd->grad[static_cast<size_t>(idx)];
    }
  });
  return y;
}

// --- matmul -------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(static_cast<size_t>(m * n), 0.0);
  detail::mm_acc(a.values().data(), b.values().data(), out.data(), m, k, n);
  Tensor y({m, n}, std::move(out));
  detail::record("matmul", {a, b}, y, [ad = a.ptr(), bd = b.ptr(), yd = y.ptr(), m, k, n]() {
    const double* g = yd->grad.data();
    if (ad->requires_grad) {
      ad->ensure_grad();
      detail::mm_a_bt(g, bd->values.data(), ad->grad.data(), m, n, k);
    }
    if (bd->requires_grad) {
      bd->ensure_grad();
      detail::mm_at_b(ad->values.data(), g, bd->grad.data(), m, k, n);
    }
  });
  return y;
}

// --- convolutions ---------------------------------------------------------------

// Cross-correlation, symmetric zero padding, integer stride. Input
// [N,Ci,H,W], kernel [Co,Ci,kh,kw]. The spatial extent must tile exactly:
// (H + 2p - kh) divisible by stride.
inline Tensor conv2d(const Tensor& x, const Tensor& k, int64_t stride, int64_t pad) {
  if (x.rank() != 4 || k.rank() != 4) {
    throw ShapeError("conv2d: expected 4-d input and kernel, got " + shape_str(x.shape()) +
                     " and " + shape_str(k.shape()));
  }
  if (x.dim(1) != k.dim(1)) {
    throw ShapeError("conv2d: input channels " + std::to_string(x.dim(1)) +
                     " != kernel channels " + std::to_string(k.dim(1)));
  }
  if (stride < 1 || pad < 0) throw ShapeError("conv2d: invalid stride/pad");
  detail::ConvDims d;
  d.N = x.dim(0);
  d.Ci = x.dim(1);
  d.H = x.dim(2);
  d.W = x.dim(3);
  d.Co = k.dim(0);
  d.kh = k.dim(2);
  d.kw = k.dim(3);
  d.s = stride;
  d.p = pad;
  const int64_t eh = d.H + 2 * pad - d.kh;
  const int64_t ew = d.W + 2 * pad - d.kw;
  if (eh < 0 || ew < 0 || eh % stride != 0 || ew % stride != 0) {
    throw ShapeError("conv2d: kernel " + shape_str(k.shape()) + " stride " +
                     std::to_string(stride) + " pad " + std::to_string(pad) +
                     " does not tile input " + shape_str(x.shape()));
  }
  d.OH = eh / stride + 1;
  d.OW = ew / stride + 1;
  std::vector<double> out(static_cast<size_t>(d.N * d.Co * d.OH * d.OW), 0.0);
  detail::conv_fwd(x.values().data(), k.values().data(), out.data(), d);
  Tensor y({d.N, d.Co, d.OH, d.OW}, std::move(out));
  detail::record("conv2d", {x, k}, y, [xd = x.ptr(), kd = k.ptr(), yd = y.ptr(), d]() {
    const double* g = yd->grad.data();
    if (xd->requires_grad) {
      xd->ensure_grad();
      detail::conv_adj_input(g, kd->values.data(), xd->grad.data(), d);
    }
    if (kd->requires_grad) {
      kd->ensure_grad();
      detail::conv_kernel_grad(g, xd->values.data(), kd->grad.data(), d);
    }
  });
  return y;
}

// Transposed convolution, the adjoint of conv2d. Input [N,Ci,H,W], kernel
// [Ci,Co,kh,kw]; output spatial extent (H-1)*stride + kh - 2*pad.
inline Tensor deconv2d(const Tensor& x, const Tensor& k, int64_t stride, int64_t pad) {
  if (x.rank() != 4 || k.rank() != 4) {
    throw ShapeError("deconv2d: expected 4-d input and kernel, got " + shape_str(x.shape()) +
                     " and " + shape_str(k.shape()));
  }
  if (x.dim(1) != k.dim(0)) {
    throw ShapeError("deconv2d: input channels " + std::to_string(x.dim(1)) +
                     " != kernel in-channels " + std::to_string(k.dim(0)));
  }
  if (stride < 1 || pad < 0) throw ShapeError("deconv2d: invalid stride/pad");
  const int64_t N = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Co = k.dim(1), kh = k.dim(2), kw = k.dim(3);
  const int64_t OH = (H - 1) * stride + kh - 2 * pad;
  const int64_t OW = (W - 1) * stride + kw - 2 * pad;
  if (OH <= 0 || OW <= 0) {
    throw ShapeError("deconv2d: non-positive output extent for input " + shape_str(x.shape()));
  }
  // Reuse the conv kernels: deconv forward is exactly conv_adj_input with the
  // roles of in/out swapped, viewing the kernel as [Co',Ci',kh,kw] = [Ci,Co,..].
  detail::ConvDims d;
  d.N = N;
  d.Ci = Co;   // conv-view input channels  = deconv output channels
  d.H = OH;
  d.W = OW;
  d.Co = Ci;   // conv-view output channels = deconv input channels
  d.kh = kh;
  d.kw = kw;
  d.s = stride;
  d.p = pad;
  d.OH = H;
  d.OW = W;
  std::vector<double> out(static_cast<size_t>(N * Co * OH * OW), 0.0);
  detail::conv_adj_input(x.values().data(), k.values().data(), out.data(), d);
  Tensor y({N, Co, OH, OW}, std::move(out));
  detail::record("deconv2d", {x, k}, y, [xd = x.ptr(), kd = k.ptr(), yd = y.ptr(), d]() {
    const double* g = yd->grad.data();
    if (xd->requires_grad) {
      xd->ensure_grad();
      detail::conv_fwd(g, kd->values.data(), xd->grad.data(), d);
    }
    if (kd->requires_grad) {
      kd->ensure_grad();
      detail::conv_kernel_grad(xd->values.data(), g, kd->grad.data(), d);
    }
  });
  return y;
}

// --- composite helpers (built from catalog primitives) -------------------------

inline Tensor flatten(const Tensor& x) { return reshape(x, {x.size()}); }

inline Tensor sum_all(const Tensor& x) { return reduce_sum(flatten(x), 0); }

inline Tensor mean_all(const Tensor& x) { return reduce_mean(flatten(x), 0); }

inline Tensor sub(const Tensor& a, const Tensor& b) { return add(a, neg(b)); }

// x * c with a constant scalar broadcast to x's shape.
inline Tensor scale(const Tensor& x, double c) {
  Shape ones(x.rank(), 1);
  return mul(x, broadcast(Tensor(ones, {c}), x.shape()));
}

// |x| assembled from catalog primitives; subgradient 0 at the kink.
inline Tensor abs_t(const Tensor& x) { return add(relu(x), relu(neg(x))); }

// --- generic dispatcher ---------------------------------------------------------

struct Attrs {
  int axis = 0;
  int64_t stride = 1;
  int64_t pad = 0;
  int64_t start = 0;
  int64_t stop = 0;
  std::vector<int64_t> perm;
  Shape shape;    // reshape
  Shape target;   // broadcast
};

inline const std::vector<std::string>& primitive_catalog() {
  static const std::vector<std::string> names = {
      "matmul",     "conv2d",  "deconv2d",   "add",        "mul",     "relu",
      "gelu",       "softmax", "layer_norm", "reshape",    "permute", "concat",
      "slice",      "reduce_mean", "reduce_sum", "sqrt",   "div",     "neg",
      "broadcast"};
  return names;
}

inline Tensor primitive_forward(const std::string& name, const std::vector<Tensor>& inputs,
                                const Attrs& attrs = {}) {
  auto want = [&](size_t n) {
    if (inputs.size() != n) {
      throw ShapeError(name + ": expected " + std::to_string(n) + " inputs, got " +
                       std::to_string(inputs.size()));
    }
  };
  if (name == "matmul") {
    want(2);
    return matmul(inputs[0], inputs[1]);
  }
  if (name == "conv2d") {
    want(2);
    return conv2d(inputs[0], inputs[1], attrs.stride, attrs.pad);
  }
  if (name == "deconv2d") {
    want(2);
    return deconv2d(inputs[0], inputs[1], attrs.stride, attrs.pad);
  }
  if (name == "add") {
    want(2);
    return add(inputs[0], inputs[1]);
  }
  if (name == "mul") {
    want(2);
    return mul(inputs[0], inputs[1]);
  }
  if (name == "relu") {
    want(1);
    return relu(inputs[0]);
  }
  if (name == "gelu") {
    want(1);
    return gelu(inputs[0]);
  }
  if (name == "softmax") {
    want(1);
    return softmax(inputs[0], attrs.axis);
  }
  if (name == "layer_norm") {
    want(1);
    return layer_norm(inputs[0], attrs.axis);
  }
  if (name == "reshape") {
    want(1);
    return reshape(inputs[0], attrs.shape);
  }
  if (name == "permute") {
    want(1);
    return permute(inputs[0], attrs.perm);
  }
  if (name == "concat") {
    return concat(inputs, attrs.axis);
  }
  if (name == "slice") {
    want(1);
    return slice(inputs[0], attrs.axis, attrs.start, attrs.stop);
  }
  if (name == "reduce_mean") {
    want(1);
    return reduce_mean(inputs[0], attrs.axis);
  }
  if (name == "reduce_sum") {
    want(1);
    return reduce_sum(inputs[0], attrs.axis);
  }
  if (name == "sqrt") {
    want(1);
    return sqrt(inputs[0]);
  }
  if (name == "div") {
    want(2);
    return div(inputs[0], inputs[1]);
  }
  if (name == "neg") {
    want(1);
    return neg(inputs[0]);
  }
  if (name == "broadcast") {
    want(1);
    return broadcast(inputs[0], attrs.target);
  }
  std::string known;
  for (const auto& n : primitive_catalog()) known += (known.empty() ? "" : ", ") + n;
  throw UnknownPrimitiveError("unknown primitive '" + name + "'; catalog: " + known);
}

// Test hook; scale 1.0 restores the honest rule.
inline void set_backward_fault(const std::string& primitive, double scale) {
  detail::fault_op() = primitive;
  detail::fault_scale() = scale;
}
inline void clear_backward_fault() {
  detail::fault_op().clear();
  detail::fault_scale() = 1.0;
}

// Collects relu branch decisions (input > 0) from every relu evaluated while
// alive, in execution order, into a caller-owned vector.
class ReluBranchTrace {
 public:
  explicit ReluBranchTrace(std::vector<uint8_t>& sink) : sink_(sink) {
    sink_.clear();
    detail::relu_branch_slot() = &sink_;
  }
  ~ReluBranchTrace() { detail::relu_branch_slot() = nullptr; }
  ReluBranchTrace(const ReluBranchTrace&) = delete;
  ReluBranchTrace& operator=(const ReluBranchTrace&) = delete;

 private:
  std::vector<uint8_t>& sink_;
};

}  // namespace egostan::ad
