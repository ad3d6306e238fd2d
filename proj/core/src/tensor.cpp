// core/src/tensor.cpp

// Copyright 2026  The mmcap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "mmcap/tensor.hpp"

#include <algorithm>
#include <unordered_set>

#include "mmcap/error.hpp"

namespace mmcap {

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T fill, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value.assign(shape_numel(shape), fill);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  if (shape_numel(shape) != values.size())
    throw DimensionError("tensor of shape " + shape_str(shape) + " given " +
                         std::to_string(values.size()) + " elements");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T v) {
  return from({}, {v});
}

template <typename T>
Tensor<T> Tensor<T>::make_result(Shape shape, std::vector<T> values,
                                 std::vector<Tensor> parents,
                                 std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  if (g_grad_enabled) {
    bool any = std::any_of(parents.begin(), parents.end(),
                           [](const Tensor& p) { return p.requires_grad(); });
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(parents.size());
      for (auto& p : parents) node->parents.push_back(p.node_);
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return node_->shape;
}

template <typename T>
std::size_t Tensor<T>::numel() const {
  return node_ ? node_->value.size() : 0;
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size())
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  return s[axis];
}

template <typename T>
std::size_t Tensor<T>::rows() const {
  const auto& s = shape();
  if (s.empty()) return 1;
  return s.back() == 0 ? shape_numel(Shape(s.begin(), s.end() - 1)) : numel() / s.back();
}

template <typename T>
std::size_t Tensor<T>::cols() const {
  const auto& s = shape();
  return s.empty() ? 1 : s.back();
}

template <typename T>
std::span<const T> Tensor<T>::data() const {
  if (!node_) return {};
  return node_->value;
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
  if (!node_) throw ContractError("use of an undefined tensor");
  return node_->value;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1)
    throw DimensionError("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

template <typename T>
bool Tensor<T>::requires_grad() const {
  return node_ && node_->requires_grad;
}

template <typename T>
void Tensor<T>::set_requires_grad(bool on) {
  if (!node_) throw ContractError("use of an undefined tensor");
  if (!node_->parents.empty())
    throw ContractError("requires-grad can only be toggled on leaf tensors");
  node_->requires_grad = on;
}

template <typename T>
bool Tensor<T>::has_grad() const {
  return node_ && node_->grad.size() == node_->value.size() && !node_->value.empty();
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  if (!node_) return {};
  return node_->grad;
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
  if (!node_) throw ContractError("use of an undefined tensor");
  node_->ensure_grad();
  return node_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (node_ && !node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
void Tensor<T>::clear_grad() {
  if (node_) {
    node_->grad.clear();
    node_->grad.shrink_to_fit();
  }
}

template <typename T>
void Tensor<T>::backward() const {
  if (!node_) throw ContractError("backward() on an undefined tensor");
  if (node_->value.size() != 1)
    throw ContractError("backward() needs a scalar loss, got shape " + shape_str(node_->shape));
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order of the graph.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  // Intermediate gradients are scratch; leaves accumulate.
  for (Node* n : order)
    if (n->backward) n->grad.assign(n->value.size(), T(0));
  node_->ensure_grad();
  node_->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backward) continue;
    for (auto& p : n->parents)
      if (p->requires_grad) p->ensure_grad();
    n->backward(*n);
  }
  for (Node* n : order)
    if (n->backward) {
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  if (!node_) return {};
  return from(node_->shape, node_->value, false);
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  if (!node_) return {};
  return from(node_->shape, node_->value, node_->requires_grad && node_->parents.empty());
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace mmcap
