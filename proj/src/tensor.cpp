/* Copyright 2026 The scseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "scseg/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "scseg/errors.hpp"
#include "scseg/parallel.hpp"

namespace scseg {

namespace parallel {
namespace {
std::atomic<bool> g_deterministic{true};
}  // namespace

void set_deterministic(bool on) { g_deterministic = on; }
bool deterministic() { return g_deterministic; }

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}
}  // namespace parallel

Shape::Shape(std::initializer_list<std::int64_t> dims) : Shape(std::vector<std::int64_t>(dims)) {}

Shape::Shape(std::vector<std::int64_t> dims) : dims_(std::move(dims)) {
  for (auto d : dims_) {
    if (d <= 0) throw ShapeError("shape extents must be positive, got " + str());
  }
}

std::int64_t Shape::numel() const {
  std::int64_t n = 1;
  for (auto d : dims_) n *= d;
  return n;
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < dims_.size(); ++i) os << (i ? "," : "") << dims_[i];
  os << ')';
  return os.str();
}

namespace {
thread_local bool t_grad_enabled = true;
}  // namespace

bool grad_enabled() { return t_grad_enabled; }
NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

namespace detail {

template <typename T>
std::span<T> Node<T>::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), T(0));
  return grad;
}

template <typename T>
void Node<T>::accumulate(std::span<const T> g) {
  auto dst = ensure_grad();
  const auto n = static_cast<std::int64_t>(dst.size());
  parallel::parallel_for(n, [&](std::int64_t i) { dst[i] += g[i]; });
}

}  // namespace detail

template <typename T>
void check_finite(std::span<const T> values, const char* what) {
  bool ok = true;
  for (T v : values) ok &= std::isfinite(v);
  if (!ok) throw NumericError(std::string("non-finite value produced by ") + what);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : node_(std::make_shared<detail::Node<T>>()) {
  if (shape.numel() != static_cast<std::int64_t>(values.size())) {
    throw ShapeError("shape " + shape.str() + " does not match " + std::to_string(values.size()) +
                     " values");
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const auto n = shape.numel();
  return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{1}, {value}, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape().str());
  return node_->value[0];
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::detach(bool requires_grad) const {
  return Tensor(node_->shape, node_->value, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_node(NodePtr node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> values,
                      std::vector<Tensor<T>> inputs,
                      std::function<void(detail::Node<T>&)> backward_fn) {
  check_finite<T>(values, op);
  auto node = std::make_shared<detail::Node<T>>();
  if (shape.numel() != static_cast<std::int64_t>(values.size())) {
    throw ShapeError(std::string(op) + ": result shape " + shape.str() + " mismatches storage");
  }
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->op = op;
  const bool track =
      grad_enabled() && std::any_of(inputs.begin(), inputs.end(), [](const Tensor<T>& t) {
        return t.defined() && t.requires_grad();
      });
  if (track) {
    node->requires_grad = true;
    node->leaf = false;
    node->backward = std::move(backward_fn);
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node());
  }
  return Tensor<T>::from_node(std::move(node));
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward() needs a scalar loss, got " +
                     (loss.defined() ? loss.shape().str() : std::string("undefined")));
  }
  using NodeT = detail::Node<T>;
  // Holding shared pointers keeps every node alive while parents release
  // their input lists during the sweep.
  const std::shared_ptr<NodeT> root = loss.node();
  if (!root->requires_grad) throw NumericError("backward(): loss is not connected to any tape");
  if (root->released) throw NumericError("backward(): tape of this loss was already consumed");

  // Iterative post-order DFS gives a topological order (inputs before users).
  std::vector<std::shared_ptr<NodeT>> order;
  std::unordered_set<NodeT*> visited;
  std::vector<std::pair<std::shared_ptr<NodeT>, std::size_t>> stack{{root, 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      std::shared_ptr<NodeT> child = node->inputs[next++];
      if (child->requires_grad && visited.insert(child.get()).second) {
        if (child->released) {
          throw NumericError(std::string("backward(): broken tape at op '") + child->op + "'");
        }
        stack.emplace_back(std::move(child), 0);
      }
      continue;
    }
    order.push_back(std::move(node));
    stack.pop_back();
  }

  root->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* node = it->get();
    if (node->leaf) continue;
    if (!node->backward) {
      throw NumericError(std::string("backward(): op '") + node->op + "' has no backward");
    }
    if (!node->grad.empty()) node->backward(*node);
    node->backward = nullptr;
    node->inputs.clear();
    node->released = true;
    std::vector<T>().swap(node->grad);
  }
}

#define SCSEG_INSTANTIATE(T)                                                               \
  template struct detail::Node<T>;                                                         \
  template class Tensor<T>;                                                                \
  template Tensor<T> make_result<T>(const char*, Shape, std::vector<T>,                    \
                                    std::vector<Tensor<T>>,                                \
                                    std::function<void(detail::Node<T>&)>);                \
  template void backward<T>(const Tensor<T>&);                                             \
  template void check_finite<T>(std::span<const T>, const char*);

SCSEG_INSTANTIATE(float)
SCSEG_INSTANTIATE(double)
#undef SCSEG_INSTANTIATE

}  // namespace scseg
