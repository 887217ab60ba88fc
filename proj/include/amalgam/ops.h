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

#ifndef AMALGAM_OPS_H_
#define AMALGAM_OPS_H_

#include <span>
#include <vector>

#include "amalgam/tensor.h"

namespace amalgam {

// Differentiable operations. Matrix inputs are [rows x cols]; a batch of
// feature vectors is one row per sample.

// y[i,j] = sum_k x[i,k] * weight[j,k] + bias[j]. A 1x1 convolution over a
// 1x1 spatial map is exactly this map.
Tensor Affine(const Tensor &weight, const Tensor &bias, const Tensor &x);

// max(0, x); the subgradient at 0 is 0.
Tensor Relu(const Tensor &x);

Tensor Add(const Tensor &a, const Tensor &b);
Tensor Sub(const Tensor &a, const Tensor &b);
Tensor Mul(const Tensor &a, const Tensor &b);
Tensor Scale(const Tensor &a, double factor);

Tensor Sum(const Tensor &a);
Tensor Mean(const Tensor &a);

// Divides each row by max(||row||_2, 1e-12).
Tensor L2NormalizeRows(const Tensor &x);
inline constexpr double kNormalizeEpsilon = 1e-12;

// Euclidean norm of every row, shape [rows]. The gradient at a zero row is 0.
Tensor RowNorms(const Tensor &x);

// Side-by-side concatenation of matrices with equal row counts.
Tensor ConcatColumns(std::span<const Tensor> parts);

// Mean softmax cross-entropy of logits [batch x classes] against integer
// labels in [0, classes).
Tensor SoftmaxCrossEntropy(const Tensor &logits, std::span<const int> labels);

// Constant (no-grad) selection of rows, used to form mini-batches.
Tensor GatherRows(const Tensor &x, std::span<const std::size_t> rows);

}  // namespace amalgam

#endif  // AMALGAM_OPS_H_
