//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "hbgsa/nn/param_store.hpp"
#include "hbgsa/nn/tensor.hpp"

namespace hbgsa::nn {

// Handle to a node of a Graph. Only meaningful for the graph that made it.
struct Var {
  std::int32_t id = -1;
  bool valid() const noexcept { return id >= 0; }
};

// Reverse-mode tape. Nodes are appended in evaluation order, which is a
// topological order, so backward() replays them in reverse.
//
// A graph built with record = false keeps values only; no closures are
// stored and nothing requires a gradient.
template <class T>
class Graph {
public:
  // Called during backward with the node's own handle; reads g.grad(self)
  // and accumulates into the parents that require a gradient.
  using Backprop = std::function<void(Graph &g, Var self)>;

  explicit Graph(bool record = true): record_(record) { }

  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  bool recording() const noexcept { return record_; }

  Var input(Tensor<T> value, bool requires_grad = false);
  Var constant(Tensor<T> value) { return input(std::move(value), false); }
  // Leaf bound to a parameter; gradients accumulate into param.grad.
  Var param(Parameter<T> &param);

  // Appends an op node. requires_grad is inherited from the parents.
  Var emplace(Tensor<T> value, std::initializer_list<Var> parents,
              Backprop backprop) {
    return emplace(std::move(value),
                   std::span<const Var>(parents.begin(), parents.size()),
                   std::move(backprop));
  }
  Var emplace(Tensor<T> value, std::span<const Var> parents,
              Backprop backprop);

  const Tensor<T> &value(Var v) const;
  const Shape &shape(Var v) const { return value(v).shape(); }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  // Gradient buffer of v, zero-initialized on first access.
  Tensor<T> &grad(Var v);
  bool has_grad(Var v) const;

  // Seeds d(root)/d(root) = 1; root must hold a single element. Interior
  // node values other than the root are released afterwards, so read them
  // first.
  void backward(Var root);
  // Seeds the root gradient with an explicit tensor of the root's shape.
  void backward(Var root, const Tensor<T> &seed);

  std::size_t node_count() const noexcept { return nodes_.size(); }

private:
  struct Node {
    Tensor<T> value;
    Parameter<T> *param = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    bool leaf = true;
    Backprop backprop;
  };

  void replay(Var root);

  bool record_;
  std::vector<Node> nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace hbgsa::nn
