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

#include "amalgam/layers.h"

#include <cmath>

#include "amalgam/error.h"
#include "amalgam/ops.h"
#include "amalgam/random.h"

namespace amalgam {

AffineLayer::AffineLayer(Tensor weight, Tensor bias)
    : weight_(std::move(weight)), bias_(std::move(bias)) {
  if (weight_.rank() != 2 || bias_.rank() != 1 || bias_.size() != weight_.rows()) {
    throw DimensionError("affine layer: weight " + ShapeToString(weight_.shape()) +
                         " and bias " + ShapeToString(bias_.shape()) +
                         " are inconsistent");
  }
}

AffineLayer AffineLayer::Glorot(std::size_t in, std::size_t out,
                                std::uint64_t seed, const std::string &name,
                                bool trainable) {
  Rng rng = MakeRng(seed, name);
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> w(in * out);
  for (double &v : w) v = dist(rng);
  return AffineLayer(Tensor::FromData({out, in}, std::move(w), trainable),
                     Tensor::Zeros({out}, trainable));
}

AffineLayer AffineLayer::Zeros(std::size_t in, std::size_t out, bool trainable) {
  return AffineLayer(Tensor::Zeros({out, in}, trainable),
                     Tensor::Zeros({out}, trainable));
}

AffineLayer AffineLayer::Identity(std::size_t n, bool trainable) {
  return AffineLayer(Tensor::Identity(n, trainable), Tensor::Zeros({n}, trainable));
}

Tensor AffineLayer::Forward(const Tensor &x) const {
  return Affine(weight_, bias_, x);
}

void AffineLayer::Collect(const std::string &prefix, ParameterList &out) const {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

AffineLayer AffineLayer::Frozen() const {
  return AffineLayer(weight_.Clone(false), bias_.Clone(false));
}

MlpBackbone::MlpBackbone(std::size_t input_dim,
                         const std::vector<std::size_t> &widths,
                         std::uint64_t seed, const std::string &name,
                         bool trainable) {
  if (widths.empty()) throw ConfigError("backbone needs at least one hidden layer");
  std::size_t in = input_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    layers_.push_back(AffineLayer::Glorot(
        in, widths[i], seed, name + ".layer" + std::to_string(i) + ".weight",
        trainable));
    in = widths[i];
  }
}

Tensor MlpBackbone::Forward(const Tensor &x) const {
  if (x.rank() != 2 || x.cols() != input_dim()) {
    throw ContractError("backbone expects inputs of width " +
                         std::to_string(input_dim()) + ", got " +
                         ShapeToString(x.shape()));
  }
  Tensor h = x;
  for (const AffineLayer &layer : layers_) h = Relu(layer.Forward(h));
  return h;
}

std::size_t MlpBackbone::input_dim() const { return layers_.front().in_dim(); }
std::size_t MlpBackbone::feature_dim() const { return layers_.back().out_dim(); }

void MlpBackbone::Collect(const std::string &prefix, ParameterList &out) const {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i].Collect(prefix + ".layer" + std::to_string(i), out);
}

MlpBackbone MlpBackbone::Frozen() const {
  std::vector<AffineLayer> frozen;
  for (const AffineLayer &layer : layers_) frozen.push_back(layer.Frozen());
  return MlpBackbone(std::move(frozen));
}

ResidualBlock::ResidualBlock(std::size_t in, std::size_t out,
                             std::uint64_t seed, const std::string &name)
    : inner_(AffineLayer::Glorot(in, out, seed, name + ".inner.weight")),
      outer_(AffineLayer::Glorot(out, out, seed, name + ".outer.weight")) {
  if (in != out) skip_ = AffineLayer::Glorot(in, out, seed, name + ".skip.weight");
}

Tensor ResidualBlock::Forward(const Tensor &x) const {
  Tensor branch = outer_.Forward(Relu(inner_.Forward(x)));
  Tensor shortcut = skip_ ? skip_->Forward(x) : x;
  return Relu(Add(shortcut, branch));
}

void ResidualBlock::Collect(const std::string &prefix, ParameterList &out) const {
  inner_.Collect(prefix + ".inner", out);
  outer_.Collect(prefix + ".outer", out);
  if (skip_) skip_->Collect(prefix + ".skip", out);
}

SharedExtractor::SharedExtractor(std::size_t d_align, std::size_t d_common,
                                 std::uint64_t seed, const std::string &name)
    : blocks_{ResidualBlock(d_align, d_common, seed, name + ".block0"),
              ResidualBlock(d_common, d_common, seed, name + ".block1"),
              ResidualBlock(d_common, d_common, seed, name + ".block2")} {}

Tensor SharedExtractor::Forward(const Tensor &aligned) const {
  if (aligned.rank() != 2 || aligned.cols() != in_dim()) {
    throw ContractError("shared extractor expects width " +
                         std::to_string(in_dim()) + ", got " +
                         ShapeToString(aligned.shape()));
  }
  Tensor h = aligned;
  for (const ResidualBlock &block : blocks_) h = block.Forward(h);
  return h;
}

void SharedExtractor::Collect(const std::string &prefix, ParameterList &out) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    blocks_[i].Collect(prefix + ".block" + std::to_string(i), out);
}

std::vector<Tensor> TensorsOf(const ParameterList &params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const NamedTensor &p : params) out.push_back(p.tensor);
  return out;
}

}  // namespace amalgam
