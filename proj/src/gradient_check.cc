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

#include "amalgam/gradient_check.h"

#include <algorithm>
#include <cmath>

#include "amalgam/error.h"

namespace amalgam {

namespace {

void Record(double analytic, double numeric, std::size_t index,
            GradientCheckResult &result) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  const double err = std::abs(analytic - numeric) / denom;
  if (index == 0 || err > result.max_relative_error) {
    result.max_relative_error = err;
    result.worst_index = index;
    result.analytic = analytic;
    result.numeric = numeric;
  }
}

}  // namespace

GradientCheckResult FiniteDiffCheck(
    const std::function<Tensor(const Tensor &)> &f, const Tensor &theta,
    double h) {
  Tensor leaf = theta.Clone(true);
  std::vector<Tensor> params{leaf};
  return FiniteDiffCheck([&] { return f(leaf); }, params, h);
}

GradientCheckResult FiniteDiffCheck(const std::function<Tensor()> &loss,
                                    std::span<Tensor> params, double h) {
  if (!(h > 0.0)) throw ContractError("finite-difference step must be positive");
  for (Tensor &p : params) p.ZeroGrad();
  loss().Backward();
  std::vector<std::vector<double>> analytic;
  for (const Tensor &p : params) analytic.push_back(p.grad());

  GradientCheckResult result;
  std::size_t flat = 0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::span<double> values = params[p].mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i, ++flat) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss().item();
      values[i] = saved - h;
      const double down = loss().item();
      values[i] = saved;
      Record(analytic[p][i], (up - down) / (2.0 * h), flat, result);
    }
  }
  return result;
}

}  // namespace amalgam
