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

#ifndef AMALGAM_EXPERIMENT_H_
#define AMALGAM_EXPERIMENT_H_

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "amalgam/checkpoint.h"
#include "amalgam/config.h"
#include "amalgam/evaluation.h"
#include "json.hpp"

namespace amalgam {

// Data, split and trained teachers for one (config, seed).
struct PreparedTask {
  TaskData data;
  TaskSplit split;
  std::vector<TeacherModel> teachers;
};

PreparedTask PrepareTask(const ExperimentConfig &config);

// Split whose parts are the given teacher class subsets, in order.
TaskSplit SplitFromParts(std::size_t num_classes, std::vector<std::vector<int>> parts);

// Config actually used to train a given method (the no-extractor ablation
// forces d_common = d_align).
TrainConfig MethodTrainConfig(const ExperimentConfig &config, const std::string &method);

struct TrainedStudent {
  StudentCheckpoint checkpoint;
  std::vector<MetricsRecord> metrics;        // amalgamation methods
  std::vector<SupervisedRecord> supervised;  // gt only
};

// Trains one student for `method` (ours, kd, ablation_ae, ablation_noext or
// gt). Only gt sees labels.
TrainedStudent TrainStudent(const ExperimentConfig &config, const Dataset &train,
                            std::span<const TeacherModel> teachers,
                            const TaskSplit &split, const std::string &method,
                            const EpochEvaluator &evaluate = {});

// One report line. seed is a number or "mean".
struct ReportRow {
  std::string method;
  std::string arch;
  std::size_t n_teachers = 0;
  double alpha = 0.0;
  std::string seed;
  double combined_acc = 0.0;
  std::vector<double> subtask_accs;
  std::size_t overlap_count = 0;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  nlohmann::json config;  // resolved config the rows came from
  std::vector<std::uint64_t> seeds;
};

ReportRow EvaluateStudent(const StudentCheckpoint &student, const Dataset &test,
                          const TaskSplit &split, MergeRule rule);

// Teacher rows ("teacher0", ...) and the ensemble row for one prepared task.
std::vector<ReportRow> EvaluateTeachers(std::span<const TeacherModel> teachers,
                                        const Dataset &test, const TaskSplit &split,
                                        MergeRule rule);

// Runs every cell of config.matrix (or the single configured cell when
// absent) and appends per-cell mean rows. Progress lines go to `log` if set.
EvalReport RunExperimentMatrix(const ExperimentConfig &config, std::ostream *log = nullptr);

// Mean rows over the numeric-seed rows of each (method, arch, n_teachers,
// alpha, overlap) group, in first-appearance order.
std::vector<ReportRow> MeanRows(std::span<const ReportRow> rows);

// CSV "method,arch,n_teachers,alpha,seed,combined_acc,subtask_accs" plus a
// companion JSON next to it (same stem, .json).
void WriteReport(const EvalReport &report, const std::filesystem::path &csv_path);

void WriteMetricsCsv(std::span<const MetricsRecord> metrics,
                     const std::filesystem::path &path, const std::string &comment);
// Same columns; cross-entropy goes in total, the loss terms stay empty.
void WriteMetricsCsv(std::span<const SupervisedRecord> history,
                     const std::filesystem::path &path, const std::string &comment);

}  // namespace amalgam

#endif  // AMALGAM_EXPERIMENT_H_
