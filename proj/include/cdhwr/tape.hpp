// Copyright 2026 The cdhwr Authors.
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

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cdhwr/tensor.hpp"

namespace cdhwr {

/// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const { return id != npos; }
};

/// Reverse-mode autodiff record. Each node owns its forward value and,
/// lazily, its gradient. A tape belongs to one thread.
template <class T>
class Tape {
 public:
  /// Backward rule: reads grad(self) and accumulates into its inputs.
  using BackwardFn = std::function<void(Tape&, Var self)>;

  Var leaf(Tensor<T> value, bool requires_grad = true, std::string name = {}) {
    nodes_.push_back(Node{std::move(value), Tensor<T>{}, nullptr,
                          requires_grad, std::move(name), "leaf", 0});
    return Var{nodes_.size() - 1};
  }

  Var constant(Tensor<T> value) { return leaf(std::move(value), false); }

  /// Records an operation output. `inputs` determine whether gradients flow.
  Var record(Tensor<T> value, std::initializer_list<Var> inputs,
             BackwardFn backward, std::string op) {
    require_finite(value, op + " output");
    bool needs = false;
    for (const Var& in : inputs) needs = needs || requires_grad(in);
    nodes_.push_back(Node{std::move(value), Tensor<T>{},
                          needs ? std::move(backward) : nullptr, needs, {},
                          std::move(op), 0});
    return Var{nodes_.size() - 1};
  }

  const Tensor<T>& value(Var v) const { return node(v).value; }
  const Shape& shape(Var v) const { return node(v).value.shape(); }
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  const std::string& name(Var v) const { return node(v).name; }
  const std::string& op(Var v) const { return node(v).op; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradient accumulator for v, allocated as zeros on first use.
  Tensor<T>& grad_mut(Var v) {
    Node& n = node(v);
    if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape(), T{0});
    return n.grad;
  }

  bool has_grad(Var v) const { return !node(v).grad.empty(); }

  /// Gradient of the last backward() target with respect to v; zeros when v
  /// was not reachable.
  Tensor<T> grad(Var v) const {
    const Node& n = node(v);
    if (n.grad.empty()) return Tensor<T>(n.value.shape(), T{0});
    return n.grad;
  }

  /// Seeds d(loss)/d(loss) = 1 and replays backward rules in reverse
  /// execution order. Returns the number of nodes visited.
  std::size_t backward(Var loss) {
    if (node(loss).value.size() != 1) {
      throw ShapeError("backward target must be a scalar, got shape " +
                       shape_str(node(loss).value.shape()));
    }
    for (auto& n : nodes_) {
      n.grad = Tensor<T>{};
      n.visits = 0;
    }
    grad_mut(loss)[0] = T{1};
    std::size_t visited = 0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      ++n.visits;
      ++visited;
      if (n.backward && !n.grad.empty()) {
        n.backward(*this, Var{i});
        require_finite(nodes_[i].grad, nodes_[i].op + " gradient");
      }
    }
    return visited;
  }

  /// Visits of node v during the most recent backward().
  std::size_t visits(Var v) const { return node(v).visits; }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    BackwardFn backward;
    bool requires_grad = false;
    std::string name;
    std::string op;
    std::size_t visits = 0;
  };

  Node& node(Var v) {
    if (v.id >= nodes_.size()) throw std::out_of_range("invalid tape handle");
    return nodes_[v.id];
  }
  const Node& node(Var v) const {
    if (v.id >= nodes_.size()) throw std::out_of_range("invalid tape handle");
    return nodes_[v.id];
  }

  std::deque<Node> nodes_;  // stable references across record()
};

}  // namespace cdhwr
