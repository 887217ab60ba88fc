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

#ifndef AMALGAM_EVALUATION_H_
#define AMALGAM_EVALUATION_H_

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "amalgam/models.h"
#include "amalgam/synthetic_data.h"
#include "amalgam/trainer.h"

namespace amalgam {

// How scores of duplicate slots (overlapping classes) combine into one
// class score at evaluation time.
enum class MergeRule { kMax, kMean, kSum };

std::string MergeRuleName(MergeRule rule);
MergeRule ParseMergeRule(const std::string &name);

using ScoresFn = std::function<Tensor(const Tensor &inputs)>;

// Per-sample predicted global class: slot scores are reduced onto classes
// through merge_map, then argmax (ties go to the lowest class id). Classes
// without any slot are never predicted.
std::vector<int> MergedPredictions(const Tensor &scores, std::span<const int> merge_map,
                                   MergeRule rule = MergeRule::kMax);

double AccuracyFromScores(const Tensor &scores, std::span<const int> labels,
                          std::span<const int> merge_map, MergeRule rule = MergeRule::kMax);

double Accuracy(const ScoresFn &scores_fn, const Dataset &data,
                std::span<const int> merge_map, MergeRule rule = MergeRule::kMax);

// Accuracy on the samples whose class belongs to part, predicting only
// among the score slots [slot_offset, slot_offset + part.size()).
double SubtaskAccuracy(const Tensor &scores, const Dataset &data,
                       std::span<const int> part, std::size_t slot_offset);

// Raw teacher scores concatenated in teacher order, merged, argmax.
double EnsembleAccuracy(std::span<const TeacherModel> teachers, const Dataset &data,
                        const TaskSplit &split, MergeRule rule = MergeRule::kMax);

// Teacher evaluated on the whole task; it can only ever name its own classes.
double TeacherCombinedAccuracy(const TeacherModel &teacher, const Dataset &data);

struct GtReference {
  Classifier model;
  double accuracy = 0.0;
};

// Student architecture trained from scratch on the labeled combined task.
GtReference TrainGtReference(const ArchSpec &arch, const Dataset &train,
                             const Dataset &test, const TrainConfig &config);

// CSV rows "stream,sample_id,class,v0..v{d_common-1}" holding f-hat for the
// student and then every teacher, (N + 1) * samples rows in total.
void ExportCommonFeatures(const AmalgamNet &net, std::span<const TeacherModel> teachers,
                          const Dataset &data, const std::filesystem::path &path,
                          const std::string &comment = "");

}  // namespace amalgam

#endif  // AMALGAM_EVALUATION_H_
