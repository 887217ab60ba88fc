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

#ifndef AMALGAM_TRAINER_H_
#define AMALGAM_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amalgam/mmd.h"
#include "amalgam/models.h"
#include "amalgam/synthetic_data.h"

namespace amalgam {

// How the student is trained from the teachers.
//   kOurs                 soft targets + MMD in the common space + reconstruction
//   kKd                   soft targets only
//   kAblationAe           MMD replaced by matching an autoencoder code of the
//                         concatenated aligned teacher features
//   kAblationNoExtractor  shared extractor bypassed (f-hat = f)
enum class Method { kOurs, kKd, kAblationAe, kAblationNoExtractor };

std::string MethodName(Method method);
Method ParseMethod(const std::string &name);

struct TrainConfig {
  double alpha = 0.5;
  KernelSpec kernel = KernelSpec::RbfMedian();
  std::size_t d_align = 32;
  std::size_t d_common = 16;
  double lr = 1e-4;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  bool shared_extractor = true;

  void Validate() const;
};

// Batch-averaged loss terms of one epoch. alpha is the weight actually
// applied, so total == alpha * l_c + (1 - alpha) * (l_m + l_r).
struct MetricsRecord {
  std::size_t epoch = 0;
  double alpha = 0.0;
  double l_c = 0.0;
  double l_m = 0.0;
  double l_r = 0.0;
  double total = 0.0;
  std::optional<double> eval_acc;
};

// Frozen teacher outputs for one batch, in teacher order.
struct TeacherBatch {
  std::vector<Tensor> features;
  std::vector<Tensor> scores;
};

TeacherBatch RunTeachers(std::span<const TeacherModel> teachers, const Tensor &x);

// Sum over teachers of the batch mean of ||Decode(i, common_i) - F_Ti||_2.
Tensor ReconstructionLoss(const AmalgamNet &net,
                          std::span<const Tensor> teacher_features,
                          std::span<const Tensor> common_features);

// Batch mean of ||student_scores - [scores_1, ..., scores_N]||_2. Teacher
// scores are constants.
Tensor SoftTargetLoss(const Tensor &student_scores,
                      std::span<const Tensor> teacher_scores);

struct LossTerms {
  Tensor l_c;
  Tensor l_m;
  Tensor l_r;
  Tensor total;
  double alpha = 0.0;  // weight applied to l_c
};

// Builds the full objective for one batch. For kKd, l_m and l_r are zero
// constants and alpha is 1.
LossTerms AmalgamationObjective(const AmalgamNet &net, const TeacherBatch &teachers,
                                const Tensor &x, double alpha,
                                const KernelSpec &kernel, Method method);

struct AmalgamationResult {
  Method method = Method::kOurs;
  AmalgamNet net;
  std::vector<MetricsRecord> metrics;
};

// Called after every epoch; the value lands in MetricsRecord::eval_acc.
using EpochEvaluator = std::function<double(const AmalgamNet &)>;

// Trains a student without labels: one Adam instance over every trainable
// parameter, teachers frozen, shuffled mini-batches drawn from the seed.
AmalgamationResult Amalgamate(std::span<const TeacherModel> teachers,
                              const ArchSpec &student,
                              const UnlabeledInputs &inputs,
                              const TrainConfig &config,
                              Method method = Method::kOurs,
                              const EpochEvaluator &evaluate = {});

inline AmalgamationResult TrainKdBaseline(std::span<const TeacherModel> teachers,
                                          const ArchSpec &student,
                                          const UnlabeledInputs &inputs,
                                          const TrainConfig &config) {
  return Amalgamate(teachers, student, inputs, config, Method::kKd);
}

inline AmalgamationResult TrainAblationAe(std::span<const TeacherModel> teachers,
                                          const ArchSpec &student,
                                          const UnlabeledInputs &inputs,
                                          const TrainConfig &config) {
  return Amalgamate(teachers, student, inputs, config, Method::kAblationAe);
}

// Layout implied by a config and method.
AmalgamLayout LayoutFor(std::span<const TeacherModel> teachers, const ArchSpec &student,
                        const TrainConfig &config, Method method);

struct SupervisedRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
};

// Softmax cross-entropy training with Adam. Labels must lie in
// [0, arch.num_classes); anything else is a DataError.
Classifier TrainClassifier(const ArchSpec &arch, const Dataset &data,
                           const TrainConfig &config, const std::string &name,
                           std::vector<SupervisedRecord> *history = nullptr);

// Trains on a teacher view (local labels) and freezes the result.
TeacherModel TrainTeacher(const ArchSpec &arch, const Dataset &view,
                          std::vector<int> class_subset, const TrainConfig &config);

}  // namespace amalgam

#endif  // AMALGAM_TRAINER_H_
