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

#ifndef AMALGAM_TENSOR_H_
#define AMALGAM_TENSOR_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace amalgam {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape &shape);
std::string ShapeToString(const Shape &shape);

class Tensor;

namespace internal {

// One vertex of the computation graph. Leaves have no parents and no
// backward rule; interior nodes keep their parents alive until the root
// they feed is released.
struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until a backward pass touches the node
  bool requires_grad = false;
  const char *op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(Node &)> backward;

  void EnsureGrad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
};

}  // namespace internal

// Dense row-major array of doubles that may participate in reverse-mode
// differentiation. Tensor is a cheap handle: copies share the same storage,
// so a parameter tensor held by a layer and by the optimizer is one object.
class Tensor {
 public:
  Tensor() = default;

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Full(Shape shape, double value, bool requires_grad = false);
  static Tensor FromData(Shape shape, std::vector<double> values,
                         bool requires_grad = false);
  static Tensor Scalar(double value, bool requires_grad = false);
  static Tensor Identity(std::size_t n, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape &shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  // Matrix helpers; valid only for rank-2 tensors.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  // Direct write access, reserved for optimizers and checkpoint loading.
  std::span<double> mutable_values();
  double at(std::size_t i) const { return values()[i]; }
  double at(std::size_t r, std::size_t c) const { return values()[r * cols() + c]; }
  double item() const;

  bool requires_grad() const;
  bool has_grad() const;
  // Gradient after backward(); zeros if the node was never reached.
  std::vector<double> grad() const;
  std::span<double> mutable_grad();
  void ZeroGrad();

  // Same values, cut from the graph.
  Tensor Detach() const;
  Tensor Clone(bool requires_grad) const;

  // Accumulates d(this)/d(leaf) into every reachable requires_grad tensor.
  // This tensor must hold exactly one element.
  void Backward() const;

  const char *op() const;

  // Used by op implementations only.
  explicit Tensor(std::shared_ptr<internal::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<internal::Node> &node() const { return node_; }

 private:
  std::shared_ptr<internal::Node> node_;
};

// Free-function form of Tensor::Backward.
void Backward(const Tensor &root);

}  // namespace amalgam

#endif  // AMALGAM_TENSOR_H_
