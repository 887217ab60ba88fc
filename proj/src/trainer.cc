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

#include "amalgam/trainer.h"

#include <algorithm>
#include <numeric>

#include "amalgam/adam.h"
#include "amalgam/error.h"
#include "amalgam/ops.h"
#include "amalgam/random.h"

namespace amalgam {

std::string MethodName(Method method) {
  switch (method) {
    case Method::kOurs: return "ours";
    case Method::kKd: return "kd";
    case Method::kAblationAe: return "ablation_ae";
    case Method::kAblationNoExtractor: return "ablation_noext";
  }
  return "unknown";
}

Method ParseMethod(const std::string &name) {
  for (Method m : {Method::kOurs, Method::kKd, Method::kAblationAe,
                   Method::kAblationNoExtractor})
    if (MethodName(m) == name) return m;
  throw ConfigError("unknown training method '" + name + "'");
}

void TrainConfig::Validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ConfigError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  kernel.Validate();
  if (d_align == 0 || d_common == 0) throw ConfigError("d_align and d_common must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
}

TeacherBatch RunTeachers(std::span<const TeacherModel> teachers, const Tensor &x) {
  TeacherBatch out;
  for (const TeacherModel &t : teachers) {
    ModelOutput o = t.Forward(x);
    out.features.push_back(o.features);
    out.scores.push_back(o.scores);
  }
  return out;
}

Tensor ReconstructionLoss(const AmalgamNet &net,
                          std::span<const Tensor> teacher_features,
                          std::span<const Tensor> common_features) {
  if (teacher_features.size() != common_features.size() ||
      teacher_features.size() != net.layout().num_teachers()) {
    throw ContractError("reconstruction loss: " + std::to_string(teacher_features.size()) +
                        " teacher features, " + std::to_string(common_features.size()) +
                        " common features, " + std::to_string(net.layout().num_teachers()) +
                        " decoders");
  }
  Tensor total;
  for (std::size_t i = 0; i < teacher_features.size(); ++i) {
    Tensor diff = Sub(net.Decode(i, common_features[i]), teacher_features[i]);
    Tensor term = Mean(RowNorms(diff));
    total = total.defined() ? Add(total, term) : term;
  }
  return total;
}

Tensor SoftTargetLoss(const Tensor &student_scores,
                      std::span<const Tensor> teacher_scores) {
  if (teacher_scores.empty()) throw ContractError("soft-target loss: no teacher scores");
  std::size_t width = 0;
  std::vector<Tensor> targets;
  for (const Tensor &s : teacher_scores) {
    width += s.cols();
    targets.push_back(s.Detach());
  }
  if (student_scores.rank() != 2 || student_scores.cols() != width) {
    throw ContractError("soft-target loss: student scores " +
                        ShapeToString(student_scores.shape()) +
                        " vs concatenated teacher width " + std::to_string(width));
  }
  Tensor target = targets.size() == 1 ? targets[0] : ConcatColumns(targets);
  return Mean(RowNorms(Sub(student_scores, target)));
}

LossTerms AmalgamationObjective(const AmalgamNet &net, const TeacherBatch &teachers,
                                const Tensor &x, double alpha,
                                const KernelSpec &kernel, Method method) {
  const std::size_t n = net.layout().num_teachers();
  if (teachers.features.size() != n || teachers.scores.size() != n)
    throw ContractError("objective: teacher batch does not match the net's teacher count");
  ModelOutput student = net.StudentForward(x);
  LossTerms terms;
  terms.l_c = SoftTargetLoss(student.scores, teachers.scores);
  if (method == Method::kKd) {
    terms.alpha = 1.0;
    terms.l_m = Tensor::Scalar(0.0);
    terms.l_r = Tensor::Scalar(0.0);
    terms.total = terms.l_c;
    return terms;
  }

  std::vector<Tensor> aligned, common;
  for (std::size_t i = 0; i < n; ++i) {
    aligned.push_back(net.Adapt(StreamId::Teacher(i), teachers.features[i]));
    common.push_back(net.Extract(aligned.back()));
  }
  Tensor student_aligned = net.Adapt(StreamId::Student(), student.features);

  if (method == Method::kAblationAe) {
    Tensor concat = aligned.size() == 1 ? aligned[0] : ConcatColumns(aligned);
    Tensor code = net.Encode(concat);
    Tensor ae_loss = Mean(RowNorms(Sub(net.Reconstruct(code), concat)));
    Tensor gap = Sub(student_aligned, code.Detach());
    Tensor match = Scale(Sum(Mul(gap, gap)), 1.0 / static_cast<double>(x.rows()));
    terms.l_m = Add(ae_loss, match);
  } else {
    std::vector<FeatureSet> teacher_sets;
    for (const Tensor &c : common) teacher_sets.push_back(FeatureSet::Normalized(c));
    FeatureSet student_set = FeatureSet::Normalized(net.Extract(student_aligned));
    terms.l_m = AggregateMmd(teacher_sets, student_set, kernel);
  }
  terms.l_r = ReconstructionLoss(net, teachers.features, common);
  terms.alpha = alpha;
  terms.total = Add(Scale(terms.l_c, alpha), Scale(Add(terms.l_m, terms.l_r), 1.0 - alpha));
  return terms;
}

AmalgamLayout LayoutFor(std::span<const TeacherModel> teachers, const ArchSpec &student,
                        const TrainConfig &config, Method method) {
  return AmalgamLayout::ForTeachers(
      student, teachers, config.d_align, config.d_common,
      config.shared_extractor && method != Method::kAblationNoExtractor,
      method == Method::kAblationAe);
}

namespace {

std::vector<std::vector<std::size_t>> EpochBatches(std::size_t n, std::size_t batch_size,
                                                   Rng &rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size)
    batches.emplace_back(order.begin() + start,
                         order.begin() + std::min(n, start + batch_size));
  return batches;
}

}  // namespace

AmalgamationResult Amalgamate(std::span<const TeacherModel> teachers,
                              const ArchSpec &student, const UnlabeledInputs &inputs,
                              const TrainConfig &config, Method method,
                              const EpochEvaluator &evaluate) {
  if (teachers.empty()) throw ConfigError("amalgamation needs at least one teacher");
  config.Validate();
  const AmalgamLayout layout = LayoutFor(teachers, student, config, method);
  if (inputs.inputs.rank() != 2 || inputs.inputs.cols() != student.input_dim) {
    throw DimensionError("amalgamation inputs " + ShapeToString(inputs.inputs.shape()) +
                         " do not match input width " + std::to_string(student.input_dim));
  }

  AmalgamationResult result;
  result.method = method;
  result.net = AmalgamNet(layout, config.seed);
  AdamOptimizer optimizer(TensorsOf(result.net.Parameters()), config.lr);

  // Teachers are frozen and row-independent, so their outputs are computed
  // once and sliced per batch.
  const TeacherBatch all = RunTeachers(teachers, inputs.inputs);
  Rng rng = MakeRng(config.seed, "amalgamate/shuffle");
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    MetricsRecord record;
    record.epoch = epoch;
    const auto batches = EpochBatches(inputs.size(), config.batch_size, rng);
    for (const auto &rows : batches) {
      TeacherBatch batch;
      for (std::size_t i = 0; i < teachers.size(); ++i) {
        batch.features.push_back(GatherRows(all.features[i], rows));
        batch.scores.push_back(GatherRows(all.scores[i], rows));
      }
      const Tensor x = GatherRows(inputs.inputs, rows);
      LossTerms terms =
          AmalgamationObjective(result.net, batch, x, config.alpha, config.kernel, method);
      optimizer.ZeroGrad();
      terms.total.Backward();
      optimizer.Step();
      record.alpha = terms.alpha;
      record.l_c += terms.l_c.item();
      record.l_m += terms.l_m.item();
      record.l_r += terms.l_r.item();
      record.total += terms.total.item();
    }
    const double count = static_cast<double>(batches.size());
    record.l_c /= count;
    record.l_m /= count;
    record.l_r /= count;
    record.total /= count;
    if (evaluate) record.eval_acc = evaluate(result.net);
    result.metrics.push_back(record);
  }
  return result;
}

Classifier TrainClassifier(const ArchSpec &arch, const Dataset &data,
                           const TrainConfig &config, const std::string &name,
                           std::vector<SupervisedRecord> *history) {
  arch.Validate();
  if (!(config.lr > 0.0) || config.batch_size == 0)
    throw ConfigError("lr and batch_size must be positive");
  if (data.input_dim != arch.input_dim) {
    throw DimensionError("training data width " + std::to_string(data.input_dim) +
                         " does not match " + arch.ToString());
  }
  for (int label : data.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= arch.num_classes)
      throw DataError("label " + std::to_string(label) + " outside [0, " +
                      std::to_string(arch.num_classes) + ") for " + name);
  }
  Classifier model(arch, config.seed, name);
  if (config.epochs == 0 || data.size() == 0) return model;

  AdamOptimizer optimizer(TensorsOf(model.Parameters()), config.lr);
  const Tensor inputs = data.InputTensor();
  Rng rng = MakeRng(config.seed, name + "/shuffle");
  std::vector<int> labels;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    const auto batches = EpochBatches(data.size(), config.batch_size, rng);
    for (const auto &rows : batches) {
      labels.clear();
      for (std::size_t r : rows) labels.push_back(data.labels[r]);
      Tensor loss = SoftmaxCrossEntropy(model.Forward(GatherRows(inputs, rows)).scores, labels);
      optimizer.ZeroGrad();
      loss.Backward();
      optimizer.Step();
      loss_sum += loss.item();
    }
    if (history)
      history->push_back({epoch, loss_sum / static_cast<double>(batches.size())});
  }
  return model;
}

TeacherModel TrainTeacher(const ArchSpec &arch, const Dataset &view,
                          std::vector<int> class_subset, const TrainConfig &config) {
  if (class_subset.size() != arch.num_classes) {
    throw ConfigError("teacher arch has " + std::to_string(arch.num_classes) +
                      " classes but its part lists " + std::to_string(class_subset.size()));
  }
  return TeacherModel(TrainClassifier(arch, view, config, "teacher"), std::move(class_subset));
}

}  // namespace amalgam
