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

#ifndef AMALGAM_GRADIENT_CHECK_H_
#define AMALGAM_GRADIENT_CHECK_H_

#include <functional>
#include <span>
#include <vector>

#include "amalgam/tensor.h"

namespace amalgam {

// Worst relative error between backward() and central differences
// (f(x + h e_i) - f(x - h e_i)) / 2h over all coordinates, where the
// relative error uses the denominator max(|analytic|, |numeric|, 1e-8).
struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// f receives a leaf tensor holding theta and must return a scalar.
GradientCheckResult FiniteDiffCheck(
    const std::function<Tensor(const Tensor &)> &f,
    const Tensor &theta, double h);

// Checks a loss over a set of existing parameter tensors, perturbing them in
// place (they are restored afterwards). The loss is rebuilt on every call.
GradientCheckResult FiniteDiffCheck(const std::function<Tensor()> &loss,
                                    std::span<Tensor> params, double h);

}  // namespace amalgam

#endif  // AMALGAM_GRADIENT_CHECK_H_
