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

#ifndef AMALGAM_MODELS_H_
#define AMALGAM_MODELS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amalgam/layers.h"
#include "amalgam/tensor.h"

namespace amalgam {

// Shape of an MLP classifier. The feature vector F is the output of the last
// hidden layer, so feature_dim always equals hidden_widths.back().
struct ArchSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_widths;
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;

  void Validate() const;
  // e.g. "mlp16[32-24]x8"
  std::string ToString() const;
  bool operator==(const ArchSpec &) const = default;
};

struct ModelOutput {
  Tensor features;  // F, [batch x feature_dim]
  Tensor scores;    // raw logits, [batch x num_classes]
};

// Backbone plus linear score head.
class Classifier {
 public:
  Classifier() = default;
  Classifier(const ArchSpec &arch, std::uint64_t seed,
             const std::string &name = "classifier", bool trainable = true);
  Classifier(ArchSpec arch, MlpBackbone backbone, AffineLayer head);

  ModelOutput Forward(const Tensor &x) const;

  const ArchSpec &arch() const { return arch_; }
  MlpBackbone &backbone() { return backbone_; }
  const MlpBackbone &backbone() const { return backbone_; }
  AffineLayer &head() { return head_; }
  const AffineLayer &head() const { return head_; }
  ParameterList Parameters() const;
  Classifier Frozen() const;

 private:
  ArchSpec arch_;
  MlpBackbone backbone_;
  AffineLayer head_;
};

// A pre-trained classifier over an ordered subset of the global classes.
// Its parameters never require gradients.
class TeacherModel {
 public:
  TeacherModel() = default;
  TeacherModel(const Classifier &trained, std::vector<int> class_subset);

  // Deterministic; builds no graph.
  ModelOutput Forward(const Tensor &x) const { return model_.Forward(x); }

  const ArchSpec &arch() const { return model_.arch(); }
  const std::vector<int> &class_subset() const { return class_subset_; }
  ParameterList Parameters() const { return model_.Parameters(); }

 private:
  Classifier model_;
  std::vector<int> class_subset_;
};

// Identifies one feature stream: a teacher by index, or the student.
struct StreamId {
  bool student = true;
  std::size_t teacher = 0;

  static StreamId Student() { return {true, 0}; }
  static StreamId Teacher(std::size_t index) { return {false, index}; }
  std::string ToString() const;
};

// Everything needed to lay out an AmalgamNet.
struct AmalgamLayout {
  ArchSpec student;
  std::vector<std::size_t> teacher_feature_dims;
  std::vector<std::size_t> teacher_class_counts;
  std::size_t d_align = 32;
  std::size_t d_common = 16;
  bool shared_extractor = true;
  // Ablation: replaces the common-space match by an autoencoder over the
  // concatenated aligned teacher features.
  bool autoencoder = false;

  void Validate() const;
  std::size_t num_teachers() const { return teacher_feature_dims.size(); }
  std::size_t total_classes() const;
  // Bottleneck width of the autoencoder ablation, N * d_align / 2.
  std::size_t code_dim() const { return num_teachers() * d_align / 2; }

  static AmalgamLayout ForTeachers(const ArchSpec &student,
                                   std::span<const TeacherModel> teachers,
                                   std::size_t d_align, std::size_t d_common,
                                   bool shared_extractor = true,
                                   bool autoencoder = false);
};

// Trainable side of amalgamation: the student classifier, one adaption layer
// per stream, the shared extractor, per-teacher decoders back to the teacher
// feature spaces, and (ablation only) the autoencoder.
class AmalgamNet {
 public:
  AmalgamNet() = default;
  AmalgamNet(const AmalgamLayout &layout, std::uint64_t seed);

  // Scores are laid out teacher by teacher, each in its class_subset order.
  ModelOutput StudentForward(const Tensor &x) const;
  // f = adaption layer of the stream applied to F.
  Tensor Adapt(StreamId stream, const Tensor &features) const;
  // f-hat in the common space; the identity when the extractor is bypassed.
  Tensor Extract(const Tensor &aligned) const;
  // F' for teacher i.
  Tensor Decode(std::size_t teacher, const Tensor &common) const;
  Tensor Encode(const Tensor &concatenated) const;
  Tensor Reconstruct(const Tensor &code) const;

  const AmalgamLayout &layout() const { return layout_; }

  Classifier &student() { return student_; }
  const Classifier &student() const { return student_; }
  AffineLayer &adapter(StreamId stream);
  SharedExtractor &extractor() { return extractor_; }
  AffineLayer &decoder(std::size_t teacher);

  // Every trainable tensor, named by role ("student.head.weight",
  // "adapter.teacher0.bias", "extractor.block1.outer.weight", ...).
  ParameterList Parameters() const;

 private:
  const AffineLayer &AdapterFor(StreamId stream) const;

  AmalgamLayout layout_;
  Classifier student_;
  std::vector<AffineLayer> teacher_adapters_;
  AffineLayer student_adapter_;
  SharedExtractor extractor_;
  std::vector<AffineLayer> decoders_;
  AffineLayer ae_encoder_;
  AffineLayer ae_decoder_;
};

}  // namespace amalgam

#endif  // AMALGAM_MODELS_H_
