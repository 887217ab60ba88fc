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

#ifndef AMALGAM_LAYERS_H_
#define AMALGAM_LAYERS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "amalgam/tensor.h"

namespace amalgam {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParameterList = std::vector<NamedTensor>;

// y = x W^T + b with W [out x in].
class AffineLayer {
 public:
  AffineLayer() = default;
  AffineLayer(Tensor weight, Tensor bias);

  // W ~ U(-sqrt(6/(in+out)), +sqrt(6/(in+out))), b = 0. The draw depends
  // only on (seed, name).
  static AffineLayer Glorot(std::size_t in, std::size_t out, std::uint64_t seed,
                            const std::string &name, bool trainable = true);
  static AffineLayer Zeros(std::size_t in, std::size_t out, bool trainable = true);
  static AffineLayer Identity(std::size_t n, bool trainable = true);

  Tensor Forward(const Tensor &x) const;

  std::size_t in_dim() const { return weight_.cols(); }
  std::size_t out_dim() const { return weight_.rows(); }
  const Tensor &weight() const { return weight_; }
  const Tensor &bias() const { return bias_; }
  Tensor &weight() { return weight_; }
  Tensor &bias() { return bias_; }

  void Collect(const std::string &prefix, ParameterList &out) const;
  // Copy with requires_grad turned off and no shared storage.
  AffineLayer Frozen() const;

 private:
  Tensor weight_;
  Tensor bias_;
};

// Stack of affine + relu layers; the output of the last relu is the
// feature vector F.
class MlpBackbone {
 public:
  MlpBackbone() = default;
  MlpBackbone(std::size_t input_dim, const std::vector<std::size_t> &widths,
              std::uint64_t seed, const std::string &name, bool trainable = true);
  explicit MlpBackbone(std::vector<AffineLayer> layers) : layers_(std::move(layers)) {}

  Tensor Forward(const Tensor &x) const;

  std::size_t input_dim() const;
  std::size_t feature_dim() const;
  const std::vector<AffineLayer> &layers() const { return layers_; }
  std::vector<AffineLayer> &layers() { return layers_; }

  void Collect(const std::string &prefix, ParameterList &out) const;
  MlpBackbone Frozen() const;

 private:
  std::vector<AffineLayer> layers_;
};

// y = relu(skip(x) + outer(relu(inner(x)))), where skip is the identity
// unless the block changes width, in which case it is a learned projection.
class ResidualBlock {
 public:
  ResidualBlock() = default;
  ResidualBlock(std::size_t in, std::size_t out, std::uint64_t seed,
                const std::string &name);

  Tensor Forward(const Tensor &x) const;

  std::size_t in_dim() const { return inner_.in_dim(); }
  std::size_t out_dim() const { return outer_.out_dim(); }
  AffineLayer &inner() { return inner_; }
  AffineLayer &outer() { return outer_; }
  bool has_projection() const { return skip_.has_value(); }

  void Collect(const std::string &prefix, ParameterList &out) const;

 private:
  AffineLayer inner_;
  AffineLayer outer_;
  std::optional<AffineLayer> skip_;
};

// Three residual blocks mapping aligned features [batch x d_align] into the
// common space [batch x d_common]. A single instance serves every stream.
class SharedExtractor {
 public:
  SharedExtractor() = default;
  SharedExtractor(std::size_t d_align, std::size_t d_common, std::uint64_t seed,
                  const std::string &name);

  Tensor Forward(const Tensor &aligned) const;

  std::size_t in_dim() const { return blocks_[0].in_dim(); }
  std::size_t out_dim() const { return blocks_[2].out_dim(); }
  ResidualBlock &block(std::size_t i) { return blocks_.at(i); }

  void Collect(const std::string &prefix, ParameterList &out) const;

 private:
  std::array<ResidualBlock, 3> blocks_;
};

std::vector<Tensor> TensorsOf(const ParameterList &params);

}  // namespace amalgam

#endif  // AMALGAM_LAYERS_H_
