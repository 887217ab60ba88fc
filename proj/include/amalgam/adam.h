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

#ifndef AMALGAM_ADAM_H_
#define AMALGAM_ADAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "amalgam/tensor.h"

namespace amalgam {

struct AdamHyperParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment estimates for one parameter array.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  AdamHyperParams hyper;

  AdamState() = default;
  explicit AdamState(std::size_t size, AdamHyperParams h = {})
      : m(size, 0.0), v(size, 0.0), hyper(h) {}
};

// One bias-corrected Adam update of params in place; increments state.step.
// Throws ContractError if params, grads and the moments differ in length.
void AdamStep(std::span<double> params, std::span<const double> grads,
              AdamState &state, double lr);

// Adam over a fixed list of parameter tensors, one state per tensor.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Tensor> params, double lr, AdamHyperParams hyper = {});

  // Applies one step using each parameter's accumulated gradient.
  void Step();
  void ZeroGrad();

  double lr() const { return lr_; }
  const std::vector<AdamState> &states() const { return states_; }

 private:
  std::vector<Tensor> params_;
  std::vector<AdamState> states_;
  double lr_;
};

}  // namespace amalgam

#endif  // AMALGAM_ADAM_H_
