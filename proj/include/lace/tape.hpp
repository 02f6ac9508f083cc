#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "lace/tensor.hpp"

namespace lace {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive and has not been reset.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  const Tensor& grad() const;
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records operations in execution order and runs reverse-mode
// differentiation over them. Node ids are assigned in order, so every
// node's inputs precede it and a reverse sweep is a valid topological
// order.
//
// backward() may be called once per recording. A second call without
// reset() throws ContractError rather than double-accumulating.
class Tape {
 public:
  // Propagates the node's output gradient into its inputs' gradients.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Owned leaf. requires_grad=false makes a constant.
  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  // Leaf that views an externally owned tensor (a model parameter) without
  // copying. The tensor must outlive the tape recording.
  Var external(const Tensor& value, bool requires_grad = true);

  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  void backward(const Var& loss);
  void reset();

  std::size_t size() const { return nodes_.size(); }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const Tensor& value(std::size_t id) const;
  // Zero tensor of the node's shape if the node was never reached.
  const Tensor& grad(std::size_t id) const;
  // Mutable gradient buffer, allocated on first touch.
  Tensor& grad_buffer(std::size_t id);

 private:
  struct Node {
    Tensor owned;
    const Tensor* view = nullptr;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  // deque: references returned by value()/grad() survive later records.
  mutable std::deque<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace lace
