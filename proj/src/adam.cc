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

#include "amalgam/adam.h"

#include <cmath>

#include "amalgam/error.h"

namespace amalgam {

void AdamStep(std::span<double> params, std::span<const double> grads,
              AdamState &state, double lr) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n) {
    throw ContractError("adam: params=" + std::to_string(n) +
                        " grads=" + std::to_string(grads.size()) +
                        " m=" + std::to_string(state.m.size()) +
                        " v=" + std::to_string(state.v.size()));
  }
  const AdamHyperParams &h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g * g;
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + h.epsilon);
  }
}

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double lr,
                             AdamHyperParams hyper)
    : params_(std::move(params)), lr_(lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  states_.reserve(params_.size());
  for (const Tensor &p : params_) {
    if (!p.requires_grad())
      throw ContractError("adam: parameter does not require a gradient");
    states_.emplace_back(p.size(), hyper);
  }
}

void AdamOptimizer::Step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    std::vector<double> g = params_[i].grad();
    AdamStep(params_[i].mutable_values(), g, states_[i], lr_);
  }
}

void AdamOptimizer::ZeroGrad() {
  for (Tensor &p : params_) p.ZeroGrad();
}

}  // namespace amalgam
