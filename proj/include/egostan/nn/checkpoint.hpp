#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "egostan/nn/registry.hpp"

// Binary checkpoint: magic "EGOCKPT1", u32 version, u64 entry count, then per
// entry {u32 name_len, name, u32 ndim, i64 dims..., f64 values...}. All
// integers and doubles little-endian.

namespace egostan::nn {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace ckpt_detail {

inline constexpr char kMagic[8] = {'E', 'G', 'O', 'C', 'K', 'P', 'T', '1'};
inline constexpr uint32_t kVersion = 1;

inline void put_u32(std::string& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& b, uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_i64(std::string& b, int64_t v) { put_u64(b, static_cast<uint64_t>(v)); }
inline void put_f64(std::string& b, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(b, bits);
}

class Reader {
 public:
  Reader(const uint8_t* p, size_t n) : p_(p), n_(n) {}
  void need(size_t k) const {
    if (pos_ + k > n_) throw CheckpointError("checkpoint truncated");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  int64_t i64() { return static_cast<int64_t>(u64()); }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str(size_t k) {
    need(k);
    std::string s(reinterpret_cast<const char*>(p_ + pos_), k);
    pos_ += k;
    return s;
  }
  bool done() const { return pos_ == n_; }

 private:
  const uint8_t* p_;
  size_t n_;
  size_t pos_ = 0;
};

}  // namespace ckpt_detail

// Serializes every registered parameter in registration order. The byte
// stream is a pure function of the registry contents.
inline std::string checkpoint_bytes(const ParameterRegistry& reg) {
  using namespace ckpt_detail;
  std::string b;
  b.append(kMagic, 8);
  put_u32(b, kVersion);
  put_u64(b, static_cast<uint64_t>(reg.size()));
  for (const auto& [name, t] : reg.entries()) {
    put_u32(b, static_cast<uint32_t>(name.size()));
    b.append(name);
    put_u32(b, static_cast<uint32_t>(t.shape().size()));
    for (int64_t d : t.shape()) put_i64(b, d);
    for (double v : t.values()) put_f64(b, v);
  }
  return b;
}

inline void save_checkpoint(const ParameterRegistry& reg, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot open checkpoint for writing: " + path);
  const std::string b = checkpoint_bytes(reg);
  f.write(b.data(), static_cast<std::streamsize>(b.size()));
  if (!f) throw CheckpointError("short write to checkpoint: " + path);
}

// Loads values by name into an already-built registry. Every file entry must
// match a registered parameter of the same shape, and every parameter must be
// covered.
inline void load_checkpoint(ParameterRegistry& reg, const std::string& path) {
  using namespace ckpt_detail;
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint: " + path);
  std::vector<uint8_t> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(raw.data(), raw.size());
  if (r.str(8) != std::string(kMagic, 8)) throw CheckpointError("bad checkpoint magic: " + path);
  const uint32_t version = r.u32();
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const uint64_t count = r.u64();
  if (count != reg.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(count) + " parameters, model has " +
                          std::to_string(reg.size()));
  }
  for (uint64_t i = 0; i < count; ++i) {
    const uint32_t nlen = r.u32();
    const std::string name = r.str(nlen);
    if (!reg.has(name)) throw CheckpointError("checkpoint names unknown parameter '" + name + "'");
    const ad::Tensor& t = reg.get(name);
    const uint32_t ndim = r.u32();
    ad::Shape shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[d] = r.i64();
    if (shape != t.shape()) {
      throw CheckpointError("shape mismatch for '" + name + "': file " + ad::shape_str(shape) +
                            " vs model " + ad::shape_str(t.shape()));
    }
    auto& vals = const_cast<ad::Tensor&>(t).mutable_values();
    for (auto& v : vals) v = r.f64();
  }
  if (!r.done()) throw CheckpointError("trailing bytes in checkpoint: " + path);
}

}  // namespace egostan::nn
