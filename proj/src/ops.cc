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

#include "amalgam/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "amalgam/error.h"
#include "op_builder.h"

namespace amalgam {

using internal::MakeOp;
using internal::Node;
using internal::ParentGrad;
using internal::RequireMatrix;

namespace {

void RequireSameShape(const Tensor &a, const Tensor &b, const char *op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         ShapeToString(a.shape()) + " vs " +
                         ShapeToString(b.shape()));
  }
}

}  // namespace

Tensor Affine(const Tensor &weight, const Tensor &bias, const Tensor &x) {
  RequireMatrix(weight, "affine weight");
  RequireMatrix(x, "affine input");
  const std::size_t out = weight.rows(), in = weight.cols(), batch = x.rows();
  if (x.cols() != in) {
    throw DimensionError("affine: weight " + ShapeToString(weight.shape()) +
                         " cannot act on input " + ShapeToString(x.shape()));
  }
  if (bias.rank() != 1 || bias.size() != out) {
    throw DimensionError("affine: bias " + ShapeToString(bias.shape()) +
                         " does not match weight " +
                         ShapeToString(weight.shape()));
  }
  auto W = weight.values();
  auto b = bias.values();
  auto X = x.values();
  // Row-at-a-time axpy over a transposed weight keeps the inner loop free of
  // reductions.
  std::vector<double> wt(in * out);
  for (std::size_t j = 0; j < out; ++j)
    for (std::size_t k = 0; k < in; ++k) wt[k * out + j] = W[j * in + k];
  std::vector<double> y(batch * out);
  for (std::size_t i = 0; i < batch; ++i) {
    double *yi = &y[i * out];
    for (std::size_t j = 0; j < out; ++j) yi[j] = b[j];
    for (std::size_t k = 0; k < in; ++k) {
      const double xik = X[i * in + k];
      const double *wk = &wt[k * out];
      for (std::size_t j = 0; j < out; ++j) yi[j] += xik * wk[j];
    }
  }
  return MakeOp({batch, out}, std::move(y), "affine", {weight, bias, x},
                [batch, out, in](Node &self) {
                  const double *gy = self.grad.data();
                  const auto &W = self.parents[0]->values;
                  const auto &X = self.parents[2]->values;
                  if (double *gw = ParentGrad(self, 0)) {
                    for (std::size_t i = 0; i < batch; ++i)
                      for (std::size_t j = 0; j < out; ++j) {
                        const double g = gy[i * out + j];
                        if (g == 0.0) continue;
                        for (std::size_t k = 0; k < in; ++k)
                          gw[j * in + k] += g * X[i * in + k];
                      }
                  }
                  if (double *gb = ParentGrad(self, 1)) {
                    for (std::size_t i = 0; i < batch; ++i)
                      for (std::size_t j = 0; j < out; ++j)
                        gb[j] += gy[i * out + j];
                  }
                  if (double *gx = ParentGrad(self, 2)) {
                    for (std::size_t i = 0; i < batch; ++i)
                      for (std::size_t j = 0; j < out; ++j) {
                        const double g = gy[i * out + j];
                        if (g == 0.0) continue;
                        for (std::size_t k = 0; k < in; ++k)
                          gx[i * in + k] += g * W[j * in + k];
                      }
                  }
                });
}

Tensor Relu(const Tensor &x) {
  auto X = x.values();
  std::vector<double> y(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) y[i] = X[i] > 0.0 ? X[i] : 0.0;
  return MakeOp(x.shape(), std::move(y), "relu", {x}, [](Node &self) {
    const auto &X = self.parents[0]->values;
    double *gx = ParentGrad(self, 0);
    for (std::size_t i = 0; i < X.size(); ++i)
      if (X[i] > 0.0) gx[i] += self.grad[i];
  });
}

Tensor Add(const Tensor &a, const Tensor &b) {
  RequireSameShape(a, b, "add");
  auto A = a.values(), B = b.values();
  std::vector<double> y(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) y[i] = A[i] + B[i];
  return MakeOp(a.shape(), std::move(y), "add", {a, b}, [](Node &self) {
    for (std::size_t p = 0; p < 2; ++p)
      if (double *g = ParentGrad(self, p))
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor Sub(const Tensor &a, const Tensor &b) {
  RequireSameShape(a, b, "sub");
  auto A = a.values(), B = b.values();
  std::vector<double> y(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) y[i] = A[i] - B[i];
  return MakeOp(a.shape(), std::move(y), "sub", {a, b}, [](Node &self) {
    if (double *g = ParentGrad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    if (double *g = ParentGrad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
  });
}

Tensor Mul(const Tensor &a, const Tensor &b) {
  RequireSameShape(a, b, "mul");
  auto A = a.values(), B = b.values();
  std::vector<double> y(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) y[i] = A[i] * B[i];
  return MakeOp(a.shape(), std::move(y), "mul", {a, b}, [](Node &self) {
    const auto &A = self.parents[0]->values;
    const auto &B = self.parents[1]->values;
    if (double *g = ParentGrad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * B[i];
    if (double *g = ParentGrad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * A[i];
  });
}

Tensor Scale(const Tensor &a, double factor) {
  auto A = a.values();
  std::vector<double> y(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) y[i] = A[i] * factor;
  return MakeOp(a.shape(), std::move(y), "scale", {a}, [factor](Node &self) {
    double *g = ParentGrad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

Tensor Sum(const Tensor &a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return MakeOp({}, {acc}, "sum", {a}, [](Node &self) {
    double *g = ParentGrad(self, 0);
    const double gy = self.grad[0];
    for (std::size_t i = 0; i < self.parents[0]->values.size(); ++i) g[i] += gy;
  });
}

Tensor Mean(const Tensor &a) {
  return Scale(Sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor L2NormalizeRows(const Tensor &x) {
  RequireMatrix(x, "l2_normalize input");
  const std::size_t n = x.rows(), d = x.cols();
  auto X = x.values();
  std::vector<double> y(n * d);
  std::vector<double> denom(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) sq += X[i * d + k] * X[i * d + k];
    denom[i] = std::max(std::sqrt(sq), kNormalizeEpsilon);
    for (std::size_t k = 0; k < d; ++k) y[i * d + k] = X[i * d + k] / denom[i];
  }
  return MakeOp({n, d}, std::move(y), "l2_normalize", {x},
                [n, d, denom = std::move(denom)](Node &self) {
                  double *gx = ParentGrad(self, 0);
                  const auto &Y = self.values;
                  for (std::size_t i = 0; i < n; ++i) {
                    const double *gy = &self.grad[i * d];
                    const double *yi = &Y[i * d];
                    if (denom[i] <= kNormalizeEpsilon) {
                      // Inside the guard the map is x / eps, a linear scaling.
                      for (std::size_t k = 0; k < d; ++k) gx[i * d + k] += gy[k] / denom[i];
                      continue;
                    }
                    double dot = 0.0;
                    for (std::size_t k = 0; k < d; ++k) dot += gy[k] * yi[k];
                    for (std::size_t k = 0; k < d; ++k)
                      gx[i * d + k] += (gy[k] - yi[k] * dot) / denom[i];
                  }
                });
}

Tensor RowNorms(const Tensor &x) {
  RequireMatrix(x, "row_norms input");
  const std::size_t n = x.rows(), d = x.cols();
  auto X = x.values();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) sq += X[i * d + k] * X[i * d + k];
    y[i] = std::sqrt(sq);
  }
  return MakeOp({n}, std::move(y), "row_norms", {x}, [n, d](Node &self) {
    double *gx = ParentGrad(self, 0);
    const auto &X = self.parents[0]->values;
    for (std::size_t i = 0; i < n; ++i) {
      const double norm = self.values[i];
      if (norm == 0.0) continue;
      const double scale = self.grad[i] / norm;
      for (std::size_t k = 0; k < d; ++k) gx[i * d + k] += scale * X[i * d + k];
    }
  });
}

Tensor ConcatColumns(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_columns: no inputs");
  for (const Tensor &p : parts) RequireMatrix(p, "concat_columns input");
  const std::size_t n = parts[0].rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Tensor &p : parts) {
    if (p.rows() != n) {
      throw DimensionError("concat_columns: row mismatch " +
                           ShapeToString(parts[0].shape()) + " vs " +
                           ShapeToString(p.shape()));
    }
    offsets.push_back(total);
    total += p.cols();
  }
  std::vector<double> y(n * total);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    auto P = parts[p].values();
    const std::size_t w = parts[p].cols();
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(&P[i * w], w, &y[i * total + offsets[p]]);
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return MakeOp({n, total}, std::move(y), "concat_columns", inputs,
                [n, total, offsets](Node &self) {
                  for (std::size_t p = 0; p < self.parents.size(); ++p) {
                    double *g = ParentGrad(self, p);
                    if (!g) continue;
                    const std::size_t w = self.parents[p]->shape[1];
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t k = 0; k < w; ++k)
                        g[i * w + k] += self.grad[i * total + offsets[p] + k];
                  }
                });
}

Tensor SoftmaxCrossEntropy(const Tensor &logits, std::span<const int> labels) {
  RequireMatrix(logits, "cross-entropy logits");
  const std::size_t n = logits.rows(), c = logits.cols();
  if (labels.size() != n) {
    throw DimensionError("cross-entropy: " + std::to_string(labels.size()) +
                         " labels for logits " + ShapeToString(logits.shape()));
  }
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= c)
      throw DataError("label " + std::to_string(label) + " outside [0, " +
                      std::to_string(c) + ")");
  }
  auto Z = logits.values();
  std::vector<double> probs(n * c);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double *zi = &Z[i * c];
    const double zmax = *std::max_element(zi, zi + c);
    double norm = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      probs[i * c + k] = std::exp(zi[k] - zmax);
      norm += probs[i * c + k];
    }
    for (std::size_t k = 0; k < c; ++k) probs[i * c + k] /= norm;
    loss += zmax + std::log(norm) - zi[labels[i]];
  }
  loss /= static_cast<double>(n);
  std::vector<int> targets(labels.begin(), labels.end());
  return MakeOp({}, {loss}, "softmax_cross_entropy", {logits},
                [n, c, probs = std::move(probs),
                 targets = std::move(targets)](Node &self) {
                  double *g = ParentGrad(self, 0);
                  const double scale = self.grad[0] / static_cast<double>(n);
                  for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t k = 0; k < c; ++k) {
                      const double indicator =
                          static_cast<int>(k) == targets[i] ? 1.0 : 0.0;
                      g[i * c + k] += scale * (probs[i * c + k] - indicator);
                    }
                });
}

Tensor GatherRows(const Tensor &x, std::span<const std::size_t> rows) {
  RequireMatrix(x, "gather_rows input");
  const std::size_t d = x.cols();
  auto X = x.values();
  std::vector<double> y;
  y.reserve(rows.size() * d);
  for (std::size_t r : rows) {
    if (r >= x.rows())
      throw ContractError("gather_rows: row " + std::to_string(r) +
                          " out of range for " + ShapeToString(x.shape()));
    y.insert(y.end(), X.begin() + r * d, X.begin() + (r + 1) * d);
  }
  return Tensor::FromData({rows.size(), d}, std::move(y));
}

}  // namespace amalgam
