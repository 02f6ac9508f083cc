#include "lace/tape.hpp"

#include "lace/errors.hpp"

namespace lace {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::external(const Tensor& value, bool requires_grad) {
  Node n;
  n.view = &value;
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (&v.tape() != this) throw ContractError("input recorded on a different tape");
    n.inputs.push_back(v.id());
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.view ? *n.view : n.owned;
}

const Tensor& Tape::grad(std::size_t id) const {
  Node& n = nodes_.at(id);
  if (n.grad.shape() != value(id).shape()) n.grad = Tensor::zeros_like(value(id));
  return n.grad;
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.grad.shape() != value(id).shape()) n.grad = Tensor::zeros_like(value(id));
  return n.grad;
}

void Tape::backward(const Var& loss) {
  if (&loss.tape() != this) throw ContractError("loss recorded on a different tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward seed must be scalar, got shape " +
                        shape_str(loss.shape()));
  }
  if (backward_done_) {
    throw ContractError("backward already ran on this tape; reset() before reuse");
  }
  backward_done_ = true;
  grad_buffer(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

}  // namespace lace
