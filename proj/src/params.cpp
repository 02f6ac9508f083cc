#include "lace/params.hpp"

#include "lace/errors.hpp"

namespace lace {

Tensor& ParamStore::add(const std::string& name, Tensor value) {
  if (contains(name)) throw ContractError("duplicate parameter '" + name + "'");
  index_.emplace(name, params_.size());
  params_.push_back({name, std::move(value)});
  return params_.back().value;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no parameter named '" + name + "'");
  return params_[it->second].value;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no parameter named '" + name + "'");
  return params_[it->second].value;
}

std::size_t ParamStore::num_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

BoundParams::BoundParams(Tape& tape, const ParamStore& store, bool requires_grad)
    : store_(&store) {
  leaves_.reserve(store.size());
  for (const auto& p : store.items()) leaves_.push_back(tape.external(p.value, requires_grad));
}

BoundParams::BoundParams(const ParamStore& store, std::vector<Var> leaves)
    : store_(&store), leaves_(std::move(leaves)) {
  if (leaves_.size() != store.size()) {
    throw ContractError("bound " + std::to_string(leaves_.size()) + " leaves to a store of " +
                        std::to_string(store.size()) + " parameters");
  }
}

Var BoundParams::operator[](const std::string& name) const {
  const auto& items = store_->items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].name == name) return leaves_[i];
  }
  throw ContractError("no parameter named '" + name + "'");
}

}  // namespace lace
