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

#ifndef AMALGAM_SRC_OP_BUILDER_H_
#define AMALGAM_SRC_OP_BUILDER_H_

#include <functional>
#include <initializer_list>
#include <vector>

#include "amalgam/tensor.h"

namespace amalgam::internal {

// Wraps freshly computed values in a graph node. The backward rule and the
// parent links are kept only when some input requires a gradient, so pure
// inference (frozen teachers) builds no graph at all. Throws NumericError if
// the forward values are not finite.
Tensor MakeOp(Shape shape, std::vector<double> values, const char *op,
              std::initializer_list<Tensor> inputs,
              std::function<void(Node &)> backward);

Tensor MakeOp(Shape shape, std::vector<double> values, const char *op,
              const std::vector<Tensor> &inputs,
              std::function<void(Node &)> backward);

// Parent i's gradient buffer, allocated on first use; nullptr when that
// parent does not require a gradient.
inline double *ParentGrad(Node &self, std::size_t i) {
  Node &parent = *self.parents[i];
  if (!parent.requires_grad) return nullptr;
  parent.EnsureGrad();
  return parent.grad.data();
}

void RequireMatrix(const Tensor &t, const char *what);

}  // namespace amalgam::internal

#endif  // AMALGAM_SRC_OP_BUILDER_H_
