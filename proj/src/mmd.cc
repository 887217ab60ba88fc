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

#include "amalgam/mmd.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "amalgam/error.h"
#include "amalgam/ops.h"
#include "op_builder.h"

namespace amalgam {

using internal::MakeOp;
using internal::Node;
using internal::ParentGrad;

void KernelSpec::Validate() const {
  if (bandwidth_sq && !(*bandwidth_sq > 0.0 && std::isfinite(*bandwidth_sq)))
    throw ConfigError("kernel bandwidth_sq must be positive and finite");
  if (kind == KernelKind::kLinear && bandwidth_sq)
    throw ConfigError("linear kernel takes no bandwidth");
}

std::string KernelSpec::ToString() const {
  if (kind == KernelKind::kLinear) return "linear";
  if (!bandwidth_sq) return "rbf:median";
  std::ostringstream os;
  os.precision(17);
  os << "rbf:" << *bandwidth_sq;
  return os.str();
}

KernelSpec KernelSpec::Parse(const std::string &text) {
  if (text == "linear") return Linear();
  if (text == "rbf" || text == "rbf:median") return RbfMedian();
  if (text.rfind("rbf:", 0) == 0) {
    std::size_t used = 0;
    double bw = 0.0;
    try {
      bw = std::stod(text.substr(4), &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used == 0 || used != text.size() - 4)
      throw ConfigError("bad kernel bandwidth in '" + text + "'");
    KernelSpec spec = Rbf(bw);
    spec.Validate();
    return spec;
  }
  throw ConfigError("unknown kernel '" + text +
                    "' (expected linear, rbf, rbf:median or rbf:<bandwidth_sq>)");
}

FeatureSet::FeatureSet(Tensor rows) : features_(std::move(rows)) {
  internal::RequireMatrix(features_, "feature set");
}

FeatureSet FeatureSet::Normalized(const Tensor &raw) {
  return FeatureSet(L2NormalizeRows(raw));
}

FeatureSet FeatureSet::Wrap(Tensor rows) { return FeatureSet(std::move(rows)); }

namespace {

double SquaredDistance(const double *a, const double *b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

double Dot(const double *a, const double *b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t k = 0; k < d; ++k) acc += a[k] * b[k];
  return acc;
}

// Evaluator with a resolved bandwidth.
struct Kernel {
  KernelKind kind;
  double bandwidth_sq;

  double operator()(const double *a, const double *b, std::size_t d) const {
    if (kind == KernelKind::kLinear) return Dot(a, b, d);
    return std::exp(-SquaredDistance(a, b, d) / (2.0 * bandwidth_sq));
  }

  // out += scale * d k(a, b) / d a, given kab = k(a, b).
  void AccumulateGradA(const double *a, const double *b, std::size_t d,
                       double kab, double scale, double *out) const {
    if (kind == KernelKind::kLinear) {
      for (std::size_t k = 0; k < d; ++k) out[k] += scale * b[k];
      return;
    }
    const double coeff = -scale * kab / bandwidth_sq;
    for (std::size_t k = 0; k < d; ++k) out[k] += coeff * (a[k] - b[k]);
  }
};

Kernel MakeKernel(const KernelSpec &spec) {
  spec.Validate();
  if (spec.uses_median())
    throw ContractError("kernel bandwidth must be resolved before evaluation");
  return Kernel{spec.kind, spec.bandwidth_sq.value_or(1.0)};
}

// Full kernel matrix between row sets a [n x d] and b [m x d].
std::vector<double> KernelMatrix(const Kernel &kernel, std::span<const double> a,
                                 std::size_t n, std::span<const double> b,
                                 std::size_t m, std::size_t d) {
  std::vector<double> k(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      k[i * m + j] = kernel(&a[i * d], &b[j * d], d);
  return k;
}

// Sum of a kernel matrix. Square matrices are summed as the diagonal plus
// k[i][j] + k[j][i] for i < j, which makes the result invariant under
// transposition, i.e. under swapping the two sets.
double KernelSum(const std::vector<double> &k, std::size_t n, std::size_t m) {
  double acc = 0.0;
  if (n == m) {
    for (std::size_t i = 0; i < n; ++i) acc += k[i * n + i];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) acc += k[i * n + j] + k[j * n + i];
    return acc;
  }
  for (double v : k) acc += v;
  return acc;
}

}  // namespace

double KernelEval(const KernelSpec &spec, std::span<const double> x,
                  std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ContractError("kernel arguments differ in dimension: " +
                         std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()));
  }
  return MakeKernel(spec)(x.data(), y.data(), x.size());
}

double MedianBandwidth(std::span<const FeatureSet> sets) {
  std::size_t total = 0, d = 0;
  for (const FeatureSet &s : sets) {
    if (total > 0 && s.dim() != d)
      throw ContractError("median bandwidth: feature sets differ in dimension (" +
                           std::to_string(d) + " vs " + std::to_string(s.dim()) + ")");
    d = s.dim();
    total += s.count();
  }
  if (total < 2)
    throw ContractError("median bandwidth needs at least 2 vectors, got " +
                        std::to_string(total));
  std::vector<const double *> rows;
  rows.reserve(total);
  for (const FeatureSet &s : sets) {
    auto v = s.features().values();
    for (std::size_t i = 0; i < s.count(); ++i) rows.push_back(&v[i * d]);
  }
  std::vector<double> dist;
  dist.reserve(total * (total - 1) / 2);
  for (std::size_t i = 0; i < total; ++i)
    for (std::size_t j = i + 1; j < total; ++j)
      dist.push_back(SquaredDistance(rows[i], rows[j], d));

  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + mid, dist.end());
  double median = dist[mid];
  if (dist.size() % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + mid);
    median = 0.5 * (lower + median);
  }
  return std::max(median, kMinBandwidthSq);
}

KernelSpec ResolveKernel(const KernelSpec &spec, std::span<const FeatureSet> sets) {
  spec.Validate();
  if (!spec.uses_median()) return spec;
  return KernelSpec::Rbf(MedianBandwidth(sets));
}

Tensor MmdLoss(const FeatureSet &teacher, const FeatureSet &student,
               const KernelSpec &spec) {
  const std::size_t ct = teacher.count(), cs = student.count(), d = teacher.dim();
  if (student.dim() != d) {
    throw ContractError("mmd: teacher features " +
                         ShapeToString(teacher.features().shape()) +
                         " vs student features " +
                         ShapeToString(student.features().shape()));
  }
  const FeatureSet pair[] = {teacher, student};
  const Kernel kernel = MakeKernel(ResolveKernel(spec, pair));

  const Tensor &x = teacher.features();
  const Tensor &y = student.features();
  auto X = x.values();
  auto Y = y.values();
  std::vector<double> kxx = KernelMatrix(kernel, X, ct, X, ct, d);
  std::vector<double> kyy = KernelMatrix(kernel, Y, cs, Y, cs, d);
  std::vector<double> kxy = KernelMatrix(kernel, X, ct, Y, cs, d);

  const double nt = static_cast<double>(ct), ns = static_cast<double>(cs);
  const double loss = (KernelSum(kxx, ct, ct) / (nt * nt) +
                       KernelSum(kyy, cs, cs) / (ns * ns)) -
                      2.0 * KernelSum(kxy, ct, cs) / (nt * ns);

  return MakeOp(
      {}, {loss}, "mmd", {x, y},
      [=, kxx = std::move(kxx), kyy = std::move(kyy),
       kxy = std::move(kxy)](Node &self) {
        const double g = self.grad[0];
        const auto &Xv = self.parents[0]->values;
        const auto &Yv = self.parents[1]->values;
        const double self_x = 2.0 * g / (nt * nt);
        const double self_y = 2.0 * g / (ns * ns);
        const double cross = -2.0 * g / (nt * ns);
        if (double *gx = ParentGrad(self, 0)) {
          for (std::size_t p = 0; p < ct; ++p) {
            const double *xp = &Xv[p * d];
            for (std::size_t j = 0; j < ct; ++j)
              kernel.AccumulateGradA(xp, &Xv[j * d], d, kxx[p * ct + j], self_x,
                                     &gx[p * d]);
            for (std::size_t j = 0; j < cs; ++j)
              kernel.AccumulateGradA(xp, &Yv[j * d], d, kxy[p * cs + j], cross,
                                     &gx[p * d]);
          }
        }
        if (double *gy = ParentGrad(self, 1)) {
          for (std::size_t q = 0; q < cs; ++q) {
            const double *yq = &Yv[q * d];
            for (std::size_t j = 0; j < cs; ++j)
              kernel.AccumulateGradA(yq, &Yv[j * d], d, kyy[q * cs + j], self_y,
                                     &gy[q * d]);
            for (std::size_t i = 0; i < ct; ++i)
              kernel.AccumulateGradA(yq, &Xv[i * d], d, kxy[i * cs + q], cross,
                                     &gy[q * d]);
          }
        }
      });
}

Tensor AggregateMmd(std::span<const FeatureSet> teachers,
                    const FeatureSet &student, const KernelSpec &spec) {
  if (teachers.empty()) throw ContractError("aggregate mmd: no teacher feature sets");
  std::vector<FeatureSet> pooled(teachers.begin(), teachers.end());
  pooled.push_back(student);
  const KernelSpec resolved = ResolveKernel(spec, pooled);
  Tensor total = MmdLoss(teachers[0], student, resolved);
  for (std::size_t i = 1; i < teachers.size(); ++i)
    total = Add(total, MmdLoss(teachers[i], student, resolved));
  return total;
}

}  // namespace amalgam
