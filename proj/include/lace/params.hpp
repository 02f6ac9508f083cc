#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "lace/tape.hpp"
#include "lace/tensor.hpp"

namespace lace {

struct Parameter {
  std::string name;
  Tensor value;
};

// Named parameters in insertion order. Insertion order is the
// serialization order, so it must be deterministic for a given config.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  std::vector<Parameter>& items() { return params_; }
  const std::vector<Parameter>& items() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t num_values() const;

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    if (a.params_.size() != b.params_.size()) return false;
    for (std::size_t i = 0; i < a.params_.size(); ++i) {
      if (a.params_[i].name != b.params_[i].name || a.params_[i].value != b.params_[i].value)
        return false;
    }
    return true;
  }

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

// Every parameter of a store viewed as a leaf on one tape.
class BoundParams {
 public:
  // requires_grad=false binds constants (inference).
  BoundParams(Tape& tape, const ParamStore& store, bool requires_grad = true);
  // Caller-supplied leaves, one per store entry in store order.
  BoundParams(const ParamStore& store, std::vector<Var> leaves);

  Var operator[](const std::string& name) const;
  // Leaves in store order.
  const std::vector<Var>& leaves() const { return leaves_; }

 private:
  const ParamStore* store_;
  std::vector<Var> leaves_;
};

}  // namespace lace
