#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "egostan/ad/ops.hpp"
#include "egostan/nn/registry.hpp"

namespace egostan::nn {

using ad::Tensor;

// --- Linear -----------------------------------------------------------------

class Linear {
 public:
  Linear(ParameterRegistry& reg, const std::string& prefix, int64_t in, int64_t out,
         util::Rng& rng)
      : in_(in), out_(out) {
    w_ = reg.add(prefix + ".weight", init::he_uniform({in, out}, in, rng));
    b_ = reg.add(prefix + ".bias", Tensor::zeros({out}));
  }

  // x: [N, in] -> [N, out]
  Tensor forward(const Tensor& x) const {
    Tensor y = ad::matmul(x, w_);
    Tensor bias = ad::broadcast(ad::reshape(b_, {1, out_}), y.shape());
    return ad::add(y, bias);
  }

  int64_t in() const { return in_; }
  int64_t out() const { return out_; }

 private:
  int64_t in_, out_;
  Tensor w_, b_;
};

// --- Conv2d / Deconv2d --------------------------------------------------------

class Conv2d {
 public:
  Conv2d(ParameterRegistry& reg, const std::string& prefix, int64_t cin, int64_t cout,
         int64_t ksize, int64_t stride, int64_t pad, util::Rng& rng)
      : cout_(cout), stride_(stride), pad_(pad) {
    const int64_t fan_in = cin * ksize * ksize;
    w_ = reg.add(prefix + ".weight", init::he_uniform({cout, cin, ksize, ksize}, fan_in, rng));
    b_ = reg.add(prefix + ".bias", Tensor::zeros({cout}));
  }

  // x: [N, Cin, H, W] -> [N, Cout, OH, OW]
  Tensor forward(const Tensor& x) const {
    Tensor y = ad::conv2d(x, w_, stride_, pad_);
    Tensor bias = ad::broadcast(ad::reshape(b_, {1, cout_, 1, 1}), y.shape());
    return ad::add(y, bias);
  }

 private:
  int64_t cout_, stride_, pad_;
  Tensor w_, b_;
};

class Deconv2d {
 public:
  Deconv2d(ParameterRegistry& reg, const std::string& prefix, int64_t cin, int64_t cout,
           int64_t ksize, int64_t stride, int64_t pad, util::Rng& rng)
      : cout_(cout), stride_(stride), pad_(pad) {
    // fan-in per output element of the transposed conv
    const int64_t fan_in = cin * ksize * ksize;
    w_ = reg.add(prefix + ".weight", init::he_uniform({cin, cout, ksize, ksize}, fan_in, rng));
    b_ = reg.add(prefix + ".bias", Tensor::zeros({cout}));
  }

  Tensor forward(const Tensor& x) const {
    Tensor y = ad::deconv2d(x, w_, stride_, pad_);
    Tensor bias = ad::broadcast(ad::reshape(b_, {1, cout_, 1, 1}), y.shape());
    return ad::add(y, bias);
  }

 private:
  int64_t cout_, stride_, pad_;
  Tensor w_, b_;
};

// --- LayerNorm (affine) ---------------------------------------------------------

class LayerNorm {
 public:
  LayerNorm(ParameterRegistry& reg, const std::string& prefix, int64_t dim, util::Rng&)
      : dim_(dim) {
    gamma_ = reg.add(prefix + ".gamma", Tensor::full({dim}, 1.0));
    beta_ = reg.add(prefix + ".beta", Tensor::zeros({dim}));
  }

  // x: [N, dim], normalized along axis 1 then scaled/shifted
  Tensor forward(const Tensor& x) const {
    Tensor y = ad::layer_norm(x, 1);
    Tensor g = ad::broadcast(ad::reshape(gamma_, {1, dim_}), y.shape());
    Tensor b = ad::broadcast(ad::reshape(beta_, {1, dim_}), y.shape());
    return ad::add(ad::mul(y, g), b);
  }

 private:
  int64_t dim_;
  Tensor gamma_, beta_;
};

// --- Embedding ---------------------------------------------------------------------

// Fixed-size learned table; rows are selected with slice so lookups stay on
// the tape.
class Embedding {
 public:
  Embedding(ParameterRegistry& reg, const std::string& prefix, int64_t num, int64_t dim,
            util::Rng& rng)
      : num_(num), dim_(dim) {
    table_ = reg.add(prefix + ".table", init::gaussian({num, dim}, 0.02, rng));
  }

  // -> [1, dim]
  Tensor row(int64_t idx) const {
    if (idx < 0 || idx >= num_) {
      throw ad::ShapeError("embedding: index " + std::to_string(idx) + " out of range [0, " +
                           std::to_string(num_) + ")");
    }
    return ad::slice(table_, 0, idx, idx + 1);
  }

  // -> [stop-start, dim]
  Tensor rows(int64_t start, int64_t stop) const { return ad::slice(table_, 0, start, stop); }

  const Tensor& table() const { return table_; }
  int64_t num() const { return num_; }

 private:
  int64_t num_, dim_;
  Tensor table_;
};

// --- Multi-head attention -------------------------------------------------------------

class MultiHeadAttention {
 public:
  MultiHeadAttention(ParameterRegistry& reg, const std::string& prefix, int64_t dim,
                     int64_t heads, util::Rng& rng)
      : dim_(dim),
        heads_(heads),
        wq_(reg, prefix + ".wq", dim, dim, rng),
        wk_(reg, prefix + ".wk", dim, dim, rng),
        wv_(reg, prefix + ".wv", dim, dim, rng),
        wo_(reg, prefix + ".wo", dim, dim, rng) {
    if (dim % heads != 0) {
      throw ad::ShapeError("attention: dim " + std::to_string(dim) + " not divisible by " +
                           std::to_string(heads) + " heads");
    }
  }

  // x: [N, dim] token matrix. If `attn` is non-null, the per-head softmaxed
  // attention matrices [N, N] are appended to it.
  Tensor forward(const Tensor& x, std::vector<Tensor>* attn = nullptr) const {
    const int64_t dh = dim_ / heads_;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    Tensor q = wq_.forward(x);
    Tensor k = wk_.forward(x);
    Tensor v = wv_.forward(x);
    std::vector<Tensor> head_outs;
    head_outs.reserve(static_cast<size_t>(heads_));
    for (int64_t h = 0; h < heads_; ++h) {
      Tensor qh = ad::slice(q, 1, h * dh, (h + 1) * dh);
      Tensor kh = ad::slice(k, 1, h * dh, (h + 1) * dh);
      Tensor vh = ad::slice(v, 1, h * dh, (h + 1) * dh);
      Tensor scores = ad::scale(ad::matmul(qh, ad::permute(kh, {1, 0})), inv_sqrt_dh);
      Tensor a = ad::softmax(scores, 1);
      if (attn != nullptr) attn->push_back(a);
      head_outs.push_back(ad::matmul(a, vh));
    }
    Tensor merged = heads_ == 1 ? head_outs[0] : ad::concat(head_outs, 1);
    return wo_.forward(merged);
  }

 private:
  int64_t dim_, heads_;
  Linear wq_, wk_, wv_, wo_;
};

// --- Transformer encoder layer (pre-norm) ------------------------------------------------

class EncoderLayer {
 public:
  EncoderLayer(ParameterRegistry& reg, const std::string& prefix, int64_t dim, int64_t heads,
               int64_t ffn_dim, util::Rng& rng)
      : ln1_(reg, prefix + ".ln1", dim, rng),
        attn_(reg, prefix + ".attn", dim, heads, rng),
        ln2_(reg, prefix + ".ln2", dim, rng),
        ffn1_(reg, prefix + ".ffn1", dim, ffn_dim, rng),
        ffn2_(reg, prefix + ".ffn2", ffn_dim, dim, rng) {}

  Tensor forward(const Tensor& x, std::vector<Tensor>* attn = nullptr) const {
    Tensor h = ad::add(x, attn_.forward(ln1_.forward(x), attn));
    Tensor f = ffn2_.forward(ad::gelu(ffn1_.forward(ln2_.forward(h))));
    return ad::add(h, f);
  }

 private:
  LayerNorm ln1_;
  MultiHeadAttention attn_;
  LayerNorm ln2_;
  Linear ffn1_, ffn2_;
};

// --- Residual conv block ----------------------------------------------------------------------

// relu(x + conv2(relu(conv1(x)))), 3x3 stride-1 convs preserving channels.
class ResidualBlock {
 public:
  ResidualBlock(ParameterRegistry& reg, const std::string& prefix, int64_t channels,
                util::Rng& rng)
      : conv1_(reg, prefix + ".conv1", channels, channels, 3, 1, 1, rng),
        conv2_(reg, prefix + ".conv2", channels, channels, 3, 1, 1, rng) {}

  Tensor forward(const Tensor& x) const {
    Tensor h = conv2_.forward(ad::relu(conv1_.forward(x)));
    return ad::relu(ad::add(x, h));
  }

 private:
  Conv2d conv1_, conv2_;
};

}  // namespace egostan::nn
