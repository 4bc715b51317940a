#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "egostan/ad/tensor.hpp"

namespace egostan::ad {

// Recorded application of a primitive. The backward rule reads
// output->grad and accumulates into each input's grad.
struct Node {
  const char* op;
  std::vector<std::shared_ptr<TensorData>> inputs;
  std::shared_ptr<TensorData> output;
  std::function<void()> backward;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  int record(const char* op, std::vector<std::shared_ptr<TensorData>> inputs,
             std::shared_ptr<TensorData> output, std::function<void()> backward) {
    nodes_.push_back(Node{op, std::move(inputs), std::move(output), std::move(backward)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  size_t size() const { return nodes_.size(); }
  const Node& node(size_t i) const { return nodes_[i]; }

  // Reverse traversal from the loss node. Every recorded node is visited at
  // most once; nodes whose output never received gradient are skipped, so
  // tensors off the loss path keep zero/absent grads.
  void backward(const Tensor& loss) {
    if (loss.size() != 1) {
      throw AutodiffError("backward: loss must be scalar, got " + shape_str(loss.shape()));
    }
    if (nodes_.empty()) {
      throw AutodiffError("backward: tape is empty");
    }
    const auto ld = loss.ptr();
    if (ld->producer != this || ld->producer_node < 0 ||
        ld->producer_node >= static_cast<int>(nodes_.size())) {
      throw AutodiffError("backward: loss was not produced by this tape");
    }
    ld->ensure_grad();
    ld->grad[0] += 1.0;
    for (int i = ld->producer_node; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (n.output->grad.empty()) continue;  // not reachable from loss
      n.backward();
    }
  }

  void clear() { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

namespace detail {
inline Tape*& active_tape_slot() {
  thread_local Tape* t = nullptr;
  return t;
}
}  // namespace detail

inline Tape* active_tape() { return detail::active_tape_slot(); }

// Scoped activation; a tape is confined to one execution context.
class TapeScope {
 public:
  explicit TapeScope(Tape& t) : prev_(detail::active_tape_slot()) {
    detail::active_tape_slot() = &t;
  }
  ~TapeScope() { detail::active_tape_slot() = prev_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* prev_;
};

}  // namespace egostan::ad
