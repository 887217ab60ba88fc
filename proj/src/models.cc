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

#include "amalgam/models.h"

#include <sstream>

#include "amalgam/error.h"
#include "amalgam/random.h"

namespace amalgam {

void ArchSpec::Validate() const {
  if (input_dim == 0) throw ConfigError("arch: input_dim must be positive");
  if (hidden_widths.empty()) throw ConfigError("arch: hidden_widths must be non-empty");
  for (std::size_t w : hidden_widths)
    if (w == 0) throw ConfigError("arch: hidden widths must be positive");
  if (feature_dim != hidden_widths.back()) {
    throw ConfigError("arch: feature_dim " + std::to_string(feature_dim) +
                      " must equal the last hidden width " +
                      std::to_string(hidden_widths.back()));
  }
  if (num_classes == 0) throw ConfigError("arch: num_classes must be positive");
}

std::string ArchSpec::ToString() const {
  std::ostringstream os;
  os << "mlp" << input_dim << '[';
  for (std::size_t i = 0; i < hidden_widths.size(); ++i)
    os << (i ? "-" : "") << hidden_widths[i];
  os << "]x" << num_classes;
  return os.str();
}

Classifier::Classifier(const ArchSpec &arch, std::uint64_t seed,
                       const std::string &name, bool trainable)
    : arch_(arch) {
  arch_.Validate();
  backbone_ = MlpBackbone(arch.input_dim, arch.hidden_widths, seed,
                          name + ".backbone", trainable);
  head_ = AffineLayer::Glorot(arch.feature_dim, arch.num_classes, seed,
                              name + ".head.weight", trainable);
}

Classifier::Classifier(ArchSpec arch, MlpBackbone backbone, AffineLayer head)
    : arch_(std::move(arch)), backbone_(std::move(backbone)), head_(std::move(head)) {
  arch_.Validate();
  if (backbone_.input_dim() != arch_.input_dim ||
      backbone_.feature_dim() != arch_.feature_dim ||
      head_.in_dim() != arch_.feature_dim || head_.out_dim() != arch_.num_classes)
    throw DimensionError("classifier parameters do not match " + arch_.ToString());
}

ModelOutput Classifier::Forward(const Tensor &x) const {
  Tensor features = backbone_.Forward(x);
  Tensor scores = head_.Forward(features);
  return {features, scores};
}

ParameterList Classifier::Parameters() const {
  ParameterList out;
  backbone_.Collect("backbone", out);
  head_.Collect("head", out);
  return out;
}

Classifier Classifier::Frozen() const {
  return Classifier(arch_, backbone_.Frozen(), head_.Frozen());
}

TeacherModel::TeacherModel(const Classifier &trained, std::vector<int> class_subset)
    : model_(trained.Frozen()), class_subset_(std::move(class_subset)) {
  if (class_subset_.size() != model_.arch().num_classes) {
    throw ContractError("teacher knows " + std::to_string(model_.arch().num_classes) +
                        " classes but its class subset lists " +
                        std::to_string(class_subset_.size()));
  }
}

std::string StreamId::ToString() const {
  return student ? "student" : "teacher" + std::to_string(teacher);
}

void AmalgamLayout::Validate() const {
  student.Validate();
  if (teacher_feature_dims.empty()) throw ConfigError("amalgamation needs at least one teacher");
  if (teacher_class_counts.size() != teacher_feature_dims.size())
    throw ContractError("teacher feature dims and class counts differ in length");
  if (d_align == 0 || d_common == 0) throw ConfigError("d_align and d_common must be positive");
  if (!shared_extractor && d_common != d_align) {
    throw ConfigError("bypassing the shared extractor requires d_common == d_align (" +
                      std::to_string(d_common) + " vs " + std::to_string(d_align) + ")");
  }
  if (autoencoder && (num_teachers() * d_align) % 2 != 0)
    throw ConfigError("autoencoder ablation needs N * d_align to be even");
  if (student.num_classes != total_classes()) {
    throw ConfigError("student has " + std::to_string(student.num_classes) +
                      " score slots but the teachers provide " +
                      std::to_string(total_classes()));
  }
}

std::size_t AmalgamLayout::total_classes() const {
  std::size_t total = 0;
  for (std::size_t c : teacher_class_counts) total += c;
  return total;
}

AmalgamLayout AmalgamLayout::ForTeachers(const ArchSpec &student,
                                         std::span<const TeacherModel> teachers,
                                         std::size_t d_align, std::size_t d_common,
                                         bool shared_extractor, bool autoencoder) {
  AmalgamLayout layout;
  layout.student = student;
  for (const TeacherModel &t : teachers) {
    if (t.arch().input_dim != student.input_dim) {
      throw DimensionError("teacher input width " + std::to_string(t.arch().input_dim) +
                           " differs from student input width " +
                           std::to_string(student.input_dim));
    }
    layout.teacher_feature_dims.push_back(t.arch().feature_dim);
    layout.teacher_class_counts.push_back(t.arch().num_classes);
  }
  layout.d_align = d_align;
  layout.d_common = d_common;
  layout.shared_extractor = shared_extractor;
  layout.autoencoder = autoencoder;
  return layout;
}

AmalgamNet::AmalgamNet(const AmalgamLayout &layout, std::uint64_t seed)
    : layout_(layout) {
  layout_.Validate();
  student_ = Classifier(layout_.student, seed, "student");
  for (std::size_t i = 0; i < layout_.num_teachers(); ++i) {
    const std::string t = std::to_string(i);
    teacher_adapters_.push_back(AffineLayer::Glorot(
        layout_.teacher_feature_dims[i], layout_.d_align, seed,
        "adapter.teacher" + t + ".weight"));
    decoders_.push_back(AffineLayer::Glorot(layout_.d_common,
                                            layout_.teacher_feature_dims[i], seed,
                                            "decoder.teacher" + t + ".weight"));
  }
  const std::size_t student_aligned =
      layout_.autoencoder ? layout_.code_dim() : layout_.d_align;
  student_adapter_ = AffineLayer::Glorot(layout_.student.feature_dim,
                                         student_aligned, seed,
                                         "adapter.student.weight");
  if (layout_.shared_extractor)
    extractor_ = SharedExtractor(layout_.d_align, layout_.d_common, seed, "extractor");
  if (layout_.autoencoder) {
    const std::size_t wide = layout_.num_teachers() * layout_.d_align;
    ae_encoder_ = AffineLayer::Glorot(wide, layout_.code_dim(), seed,
                                      "autoencoder.encoder.weight");
    ae_decoder_ = AffineLayer::Glorot(layout_.code_dim(), wide, seed,
                                      "autoencoder.decoder.weight");
  }
}

ModelOutput AmalgamNet::StudentForward(const Tensor &x) const {
  return student_.Forward(x);
}

const AffineLayer &AmalgamNet::AdapterFor(StreamId stream) const {
  if (stream.student) return student_adapter_;
  if (stream.teacher >= teacher_adapters_.size())
    throw ContractError("unknown stream " + stream.ToString());
  return teacher_adapters_[stream.teacher];
}

AffineLayer &AmalgamNet::adapter(StreamId stream) {
  return const_cast<AffineLayer &>(AdapterFor(stream));
}

Tensor AmalgamNet::Adapt(StreamId stream, const Tensor &features) const {
  const AffineLayer &layer = AdapterFor(stream);
  if (features.rank() != 2 || features.cols() != layer.in_dim()) {
    throw ContractError("stream " + stream.ToString() + " expects features of width " +
                         std::to_string(layer.in_dim()) + ", got " +
                         ShapeToString(features.shape()));
  }
  return layer.Forward(features);
}

Tensor AmalgamNet::Extract(const Tensor &aligned) const {
  if (aligned.rank() != 2 || aligned.cols() != layout_.d_align) {
    throw ContractError("extractor expects width " + std::to_string(layout_.d_align) +
                         ", got " + ShapeToString(aligned.shape()));
  }
  if (!layout_.shared_extractor) return aligned;
  return extractor_.Forward(aligned);
}

AffineLayer &AmalgamNet::decoder(std::size_t teacher) {
  if (teacher >= decoders_.size())
    throw ContractError("unknown teacher " + std::to_string(teacher));
  return decoders_[teacher];
}

Tensor AmalgamNet::Decode(std::size_t teacher, const Tensor &common) const {
  if (teacher >= decoders_.size())
    throw ContractError("unknown teacher " + std::to_string(teacher));
  if (common.rank() != 2 || common.cols() != layout_.d_common) {
    throw ContractError("decoder expects width " + std::to_string(layout_.d_common) +
                         ", got " + ShapeToString(common.shape()));
  }
  return decoders_[teacher].Forward(common);
}

Tensor AmalgamNet::Encode(const Tensor &concatenated) const {
  if (!layout_.autoencoder) throw ContractError("net has no autoencoder");
  return ae_encoder_.Forward(concatenated);
}

Tensor AmalgamNet::Reconstruct(const Tensor &code) const {
  if (!layout_.autoencoder) throw ContractError("net has no autoencoder");
  return ae_decoder_.Forward(code);
}

ParameterList AmalgamNet::Parameters() const {
  ParameterList out;
  student_.backbone().Collect("student.backbone", out);
  student_.head().Collect("student.head", out);
  for (std::size_t i = 0; i < teacher_adapters_.size(); ++i)
    teacher_adapters_[i].Collect("adapter.teacher" + std::to_string(i), out);
  student_adapter_.Collect("adapter.student", out);
  if (layout_.shared_extractor) extractor_.Collect("extractor", out);
  for (std::size_t i = 0; i < decoders_.size(); ++i)
    decoders_[i].Collect("decoder.teacher" + std::to_string(i), out);
  if (layout_.autoencoder) {
    ae_encoder_.Collect("autoencoder.encoder", out);
    ae_decoder_.Collect("autoencoder.decoder", out);
  }
  return out;
}

}  // namespace amalgam
