//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "hbgsa/nn/graph.hpp"

#include <sstream>

namespace hbgsa::nn {

std::string shape_str(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0)
      os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <class T>
Var Graph<T>::input(Tensor<T> value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = record_ && requires_grad;
  nodes_.push_back(std::move(node));
  return Var { static_cast<std::int32_t>(nodes_.size() - 1) };
}

template <class T>
Var Graph<T>::param(Parameter<T> &param) {
  Node node;
  node.param = &param;
  node.requires_grad = record_;
  nodes_.push_back(std::move(node));
  return Var { static_cast<std::int32_t>(nodes_.size() - 1) };
}

template <class T>
Var Graph<T>::emplace(Tensor<T> value, std::span<const Var> parents,
                      Backprop backprop) {
  Node node;
  node.value = std::move(value);
  node.leaf = false;
  if (record_) {
    for (Var p: parents) {
      if (p.valid() && nodes_.at(p.id).requires_grad) {
        node.requires_grad = true;
        break;
      }
    }
    if (node.requires_grad)
      node.backprop = std::move(backprop);
  }
  nodes_.push_back(std::move(node));
  return Var { static_cast<std::int32_t>(nodes_.size() - 1) };
}

template <class T>
const Tensor<T> &Graph<T>::value(Var v) const {
  const Node &node = nodes_.at(v.id);
  if (node.param != nullptr)
    return node.param->value;
  if (node.value.empty())
    throw ShapeError("value of node " + std::to_string(v.id)
                     + " was released by backward()");
  return node.value;
}

template <class T>
Tensor<T> &Graph<T>::grad(Var v) {
  Node &node = nodes_.at(v.id);
  if (node.param != nullptr) {
    Parameter<T> &p = *node.param;
    if (p.grad.shape() != p.value.shape())
      p.grad = Tensor<T>(p.value.shape());
    p.touched = true;
    return p.grad;
  }
  if (node.grad.empty())
    node.grad = Tensor<T>(node.value.shape());
  return node.grad;
}

template <class T>
bool Graph<T>::has_grad(Var v) const {
  const Node &node = nodes_.at(v.id);
  if (node.param != nullptr)
    return node.param->touched;
  return !node.grad.empty();
}

template <class T>
void Graph<T>::backward(Var root) {
  if (value(root).size() != 1)
    throw ShapeError("backward() without a seed needs a single-element root, "
                     "got "
                     + shape_str(shape(root)));
  backward(root, Tensor<T>(shape(root), T(1)));
}

template <class T>
void Graph<T>::backward(Var root, const Tensor<T> &seed) {
  if (seed.shape() != shape(root))
    throw ShapeError("seed shape " + shape_str(seed.shape())
                     + " does not match root shape " + shape_str(shape(root)));
  if (!requires_grad(root))
    return;
  Tensor<T> &g = grad(root);
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] += seed[i];
  replay(root);
}

template <class T>
void Graph<T>::replay(Var root) {
  for (std::int32_t id = root.id; id >= 0; --id) {
    Node &node = nodes_[id];
    if (node.leaf || !node.requires_grad || node.grad.empty())
      continue;
    node.backprop(*this, Var { id });
    // Interior buffers are dead once propagated. Leaves keep theirs so that
    // callers can read input gradients.
    node.grad = Tensor<T>();
    node.backprop = nullptr;
    if (id != root.id)
      node.value = Tensor<T>();
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace hbgsa::nn
