// Copyright 2026 The amalgam Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "amalgam/tensor.h"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "amalgam/error.h"
#include "op_builder.h"

namespace amalgam {

std::size_t NumElements(const Shape &shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

std::string ShapeToString(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

std::shared_ptr<internal::Node> NewLeaf(Shape shape, std::vector<double> values,
                                        bool requires_grad) {
  for (std::size_t extent : shape) {
    if (extent == 0)
      throw DimensionError("tensor extents must be positive, got " +
                           ShapeToString(shape));
  }
  if (NumElements(shape) != values.size()) {
    throw DimensionError("shape " + ShapeToString(shape) + " holds " +
                         std::to_string(NumElements(shape)) +
                         " elements but " + std::to_string(values.size()) +
                         " values were given");
  }
  auto node = std::make_shared<internal::Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

const internal::Node &Deref(const std::shared_ptr<internal::Node> &node) {
  if (!node) throw ContractError("use of an undefined tensor");
  return *node;
}

}  // namespace

Tensor Tensor::Zeros(Shape shape, bool requires_grad) {
  return Full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::Full(Shape shape, double value, bool requires_grad) {
  std::vector<double> values(NumElements(shape), value);
  return Tensor(NewLeaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::FromData(Shape shape, std::vector<double> values,
                        bool requires_grad) {
  return Tensor(NewLeaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::Scalar(double value, bool requires_grad) {
  return Tensor(NewLeaf({}, {value}, requires_grad));
}

Tensor Tensor::Identity(std::size_t n, bool requires_grad) {
  std::vector<double> values(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) values[i * n + i] = 1.0;
  return FromData({n, n}, std::move(values), requires_grad);
}

const Shape &Tensor::shape() const { return Deref(node_).shape; }
std::size_t Tensor::size() const { return Deref(node_).values.size(); }

std::size_t Tensor::rows() const {
  if (rank() != 2)
    throw DimensionError("expected a matrix, got shape " +
                         ShapeToString(shape()));
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2)
    throw DimensionError("expected a matrix, got shape " +
                         ShapeToString(shape()));
  return node_->shape[1];
}

std::span<const double> Tensor::values() const { return Deref(node_).values; }

std::span<double> Tensor::mutable_values() {
  Deref(node_);
  return node_->values;
}

double Tensor::item() const {
  if (size() != 1)
    throw ContractError("item() on a tensor of shape " +
                        ShapeToString(shape()));
  return node_->values[0];
}

bool Tensor::requires_grad() const { return Deref(node_).requires_grad; }

bool Tensor::has_grad() const {
  return Deref(node_).grad.size() == node_->values.size();
}

std::vector<double> Tensor::grad() const {
  if (!has_grad()) return std::vector<double>(size(), 0.0);
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  Deref(node_);
  node_->EnsureGrad();
  return node_->grad;
}

void Tensor::ZeroGrad() {
  Deref(node_);
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::Detach() const {
  const internal::Node &n = Deref(node_);
  return FromData(n.shape, n.values, false);
}

Tensor Tensor::Clone(bool requires_grad) const {
  const internal::Node &n = Deref(node_);
  return FromData(n.shape, n.values, requires_grad);
}

const char *Tensor::op() const { return Deref(node_).op; }

void Tensor::Backward() const {
  const internal::Node &root = Deref(node_);
  if (root.values.size() != 1) {
    throw ContractError("backward() needs a scalar root, got shape " +
                        ShapeToString(root.shape));
  }
  if (!root.requires_grad) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<internal::Node *> order;
  std::unordered_set<internal::Node *> visited;
  std::vector<std::pair<internal::Node *, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto &[node, next] = stack.back();
    if (next < node->parents.size()) {
      internal::Node *parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second)
        stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior gradients are per-pass scratch; leaf gradients accumulate.
  for (internal::Node *node : order) {
    if (node->backward) node->grad.assign(node->values.size(), 0.0);
  }
  node_->EnsureGrad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    internal::Node *node = *it;
    if (node->backward) node->backward(*node);
  }
}

void Backward(const Tensor &root) { root.Backward(); }

namespace internal {

namespace {

Tensor MakeOpImpl(Shape shape, std::vector<double> values, const char *op,
                  const Tensor *inputs, std::size_t count,
                  std::function<void(Node &)> backward) {
  for (double v : values) {
    if (!std::isfinite(v))
      throw NumericError(std::string("non-finite value produced by ") + op);
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->op = op;
  bool any = false;
  for (std::size_t i = 0; i < count; ++i) any = any || inputs[i].requires_grad();
  if (any) {
    node->requires_grad = true;
    node->parents.reserve(count);
    for (std::size_t i = 0; i < count; ++i) node->parents.push_back(inputs[i].node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

}  // namespace

Tensor MakeOp(Shape shape, std::vector<double> values, const char *op,
              std::initializer_list<Tensor> inputs,
              std::function<void(Node &)> backward) {
  return MakeOpImpl(std::move(shape), std::move(values), op, inputs.begin(),
                    inputs.size(), std::move(backward));
}

Tensor MakeOp(Shape shape, std::vector<double> values, const char *op,
              const std::vector<Tensor> &inputs,
              std::function<void(Node &)> backward) {
  return MakeOpImpl(std::move(shape), std::move(values), op, inputs.data(),
                    inputs.size(), std::move(backward));
}

void RequireMatrix(const Tensor &t, const char *what) {
  if (!t.defined()) throw ContractError(std::string(what) + " is undefined");
  if (t.rank() != 2)
    throw DimensionError(std::string(what) + " must be a matrix, got " +
                         ShapeToString(t.shape()));
}

}  // namespace internal

}  // namespace amalgam
