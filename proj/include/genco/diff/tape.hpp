// Copyright 2026 The genco Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "genco/diff/kernels.hpp"

namespace genco::diff {

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  /// Batch-norm running statistics are stored here too, with trainable=false.
  bool trainable = true;
};

/// Named parameters with stable addresses. Iteration is in name order.
template <typename Scalar>
class ParameterStore {
 public:
  using Map = std::map<std::string, Parameter<Scalar>, std::less<>>;

  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Parameter<Scalar>& add(const std::string& name, Tensor<Scalar> init, bool trainable = true) {
    if (params_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
    Parameter<Scalar> p{name, std::move(init), {}, trainable};
    p.grad = Tensor<Scalar>::Zero(p.value.rows(), p.value.cols());
    return params_.emplace(name, std::move(p)).first->second;
  }

  Parameter<Scalar>& at(std::string_view name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("no parameter '" + std::string(name) + "'");
    return it->second;
  }
  const Parameter<Scalar>& at(std::string_view name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("no parameter '" + std::string(name) + "'");
    return it->second;
  }
  bool contains(std::string_view name) const { return params_.find(name) != params_.end(); }
  std::size_t size() const { return params_.size(); }

  void zero_grad() {
    for (auto& [_, p] : params_) p.grad.setZero();
  }

  /// L2 norm over trainable values.
  double norm() const {
    double acc = 0.0;
    for (const auto& [_, p] : params_)
      if (p.trainable) acc += static_cast<double>(p.value.squaredNorm());
    return std::sqrt(acc);
  }

  typename Map::iterator begin() { return params_.begin(); }
  typename Map::iterator end() { return params_.end(); }
  typename Map::const_iterator begin() const { return params_.begin(); }
  typename Map::const_iterator end() const { return params_.end(); }

 private:
  Map params_;
};

/// p <- p - lr * g for every trainable parameter, then zero every gradient
/// slot.
template <typename Scalar>
void sgd_step(ParameterStore<Scalar>& store, Scalar lr) {
  for (auto& [_, p] : store) {
    if (p.trainable) p.value.noalias() -= lr * p.grad;
    p.grad.setZero();
  }
}

template <typename Scalar>
void sgd_step(Parameter<Scalar>& param, Scalar lr) {
  if (param.grad.rows() != param.value.rows() || param.grad.cols() != param.value.cols())
    throw std::invalid_argument("sgd_step: gradient shape mismatch for '" + param.name + "'");
  param.value.noalias() -= lr * param.grad;
  param.grad.setZero();
}

/// Handle to a tape node.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

enum class Mode { kTrain, kInference };

#ifdef NDEBUG
inline constexpr bool kCheckFiniteDefault = false;
#else
inline constexpr bool kCheckFiniteDefault = true;
#endif

/// Records one forward pass. Nodes are appended in evaluation order, so a
/// reverse sweep over node ids is a reverse topological order.
template <typename Scalar>
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  explicit Tape(bool check_finite = kCheckFiniteDefault) : check_finite_(check_finite) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor<Scalar> value) { return push(std::move(value), false, {}, "constant"); }

  /// Leaf bound to a parameter. Reusing the same parameter in one pass
  /// returns the same node, so gradients from every use accumulate.
  Var param(Parameter<Scalar>& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return Var{it->second};
    Parameter<Scalar>* ptr = &p;
    Var v = push(p.value, p.trainable,
                 [ptr](Tape& t, int self) { ptr->grad += t.grad(self); }, "param");
    param_nodes_.emplace(ptr, v.id);
    used_.push_back(ptr);
    return v;
  }

  /// Appends an op result. `backward` is called once during the reverse
  /// sweep when the node has received gradient.
  Var record(Tensor<Scalar> value, std::initializer_list<Var> inputs, Backward backward,
             const char* op) {
    bool needs = false;
    for (Var in : inputs) needs = needs || nodes_.at(in.id).needs_grad;
    return push(std::move(value), needs, needs ? std::move(backward) : Backward{}, op);
  }

  /// For ops whose gradient flows to a parameter outside the tape (embedding
  /// scatter-add).
  Var record_external(Tensor<Scalar> value, bool needs_grad, Backward backward, const char* op) {
    return push(std::move(value), needs_grad, needs_grad ? std::move(backward) : Backward{}, op);
  }

  void note_parameter(const Parameter<Scalar>& p) {
    for (auto* u : used_)
      if (u == &p) return;
    used_.push_back(&p);
  }

  const Tensor<Scalar>& value(Var v) const { return nodes_.at(v.id).value; }
  Scalar scalar(Var v) const {
    const auto& t = value(v);
    if (t.size() != 1) throw std::invalid_argument("tape: value is not a scalar");
    return t(0, 0);
  }
  bool needs_grad(Var v) const { return nodes_.at(v.id).needs_grad; }
  bool has_grad(Var v) const { return nodes_.at(v.id).grad.size() > 0; }

  /// Gradient slot, zero-initialized on first access.
  Tensor<Scalar>& grad(Var v) { return grad(v.id); }
  Tensor<Scalar>& grad(int id) {
    auto& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Tensor<Scalar>::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  /// Reverse sweep from a scalar loss. Parameter gradients are accumulated
  /// into their stores.
  void backward(Var loss) {
    if (value(loss).size() != 1) throw std::invalid_argument("backward: loss must be a scalar");
    if (!needs_grad(loss)) return;
    grad(loss).setConstant(Scalar(1));
    for (int id = loss.id; id >= 0; --id) {
      auto& n = nodes_[id];
      if (!n.needs_grad || n.grad.size() == 0 || !n.backward) continue;
      n.backward(*this, id);
    }
  }

  std::size_t size() const { return nodes_.size(); }
  /// Every parameter read during this pass, in first-use order.
  const std::vector<const Parameter<Scalar>*>& parameters() const { return used_; }

 private:
  struct Node {
    Tensor<Scalar> value;
    Tensor<Scalar> grad;
    Backward backward;
    bool needs_grad = false;
    const char* op = "";
  };

  Var push(Tensor<Scalar> value, bool needs_grad, Backward backward, const char* op) {
    if (check_finite_ && !value.allFinite())
      throw NonFiniteError(std::string("non-finite value produced by ") + op);
    nodes_.push_back(Node{std::move(value), {}, std::move(backward), needs_grad, op});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<Scalar>*, int> param_nodes_;
  std::vector<const Parameter<Scalar>*> used_;
  bool check_finite_;
};

}  // namespace genco::diff
