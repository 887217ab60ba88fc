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

#ifndef AMALGAM_MMD_H_
#define AMALGAM_MMD_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amalgam/tensor.h"

namespace amalgam {

enum class KernelKind { kRbf, kLinear };

// k(x, y) = exp(-||x - y||^2 / (2 * bandwidth_sq)) for rbf, <x, y> for
// linear. An rbf kernel without a bandwidth uses the median heuristic,
// resolved per call from the sets being compared.
struct KernelSpec {
  KernelKind kind = KernelKind::kRbf;
  std::optional<double> bandwidth_sq;

  static KernelSpec Rbf(double bandwidth_sq) { return {KernelKind::kRbf, bandwidth_sq}; }
  static KernelSpec RbfMedian() { return {KernelKind::kRbf, std::nullopt}; }
  static KernelSpec Linear() { return {KernelKind::kLinear, std::nullopt}; }

  bool uses_median() const { return kind == KernelKind::kRbf && !bandwidth_sq; }
  void Validate() const;
  std::string ToString() const;
  static KernelSpec Parse(const std::string &text);
};

// A set of feature vectors, one per row.
class FeatureSet {
 public:
  // L2-normalizes every row; this is how the training path builds sets.
  static FeatureSet Normalized(const Tensor &raw);
  // Takes rows as they are (oracles, bandwidth tests).
  static FeatureSet Wrap(Tensor rows);

  const Tensor &features() const { return features_; }
  std::size_t count() const { return features_.rows(); }
  std::size_t dim() const { return features_.cols(); }

 private:
  explicit FeatureSet(Tensor rows);
  Tensor features_;
};

double KernelEval(const KernelSpec &spec, std::span<const double> x,
                  std::span<const double> y);

// Median of squared distances over all unordered pairs of distinct rows in
// the pooled sets, clamped below at 1e-8.
double MedianBandwidth(std::span<const FeatureSet> sets);
inline constexpr double kMinBandwidthSq = 1e-8;

// Fills in the median bandwidth when spec asks for it.
KernelSpec ResolveKernel(const KernelSpec &spec, std::span<const FeatureSet> sets);

// Biased MMD^2 between teacher set X and student set Y, self-pairs included:
//   sum K(x,x')/Ct^2 - 2 sum K(x,y)/(Ct Cs) + sum K(y,y')/Cs^2.
// Differentiable in both sets; the bandwidth is a constant.
Tensor MmdLoss(const FeatureSet &teacher, const FeatureSet &student,
               const KernelSpec &spec);

// Sum of MmdLoss(teacher_i, student) over all teachers, with one bandwidth
// resolved over the pooled teacher and student sets.
Tensor AggregateMmd(std::span<const FeatureSet> teachers,
                    const FeatureSet &student, const KernelSpec &spec);

}  // namespace amalgam

#endif  // AMALGAM_MMD_H_
