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

#ifndef AMALGAM_CONFIG_H_
#define AMALGAM_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "amalgam/evaluation.h"
#include "amalgam/models.h"
#include "amalgam/synthetic_data.h"
#include "amalgam/trainer.h"
#include "json.hpp"

namespace amalgam {

// Grid for `evaluate --matrix`. Every combination of teacher count, overlap
// and alpha is one cell; every cell runs every method for every seed.
struct MatrixSpec {
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<std::string> methods{"ours", "kd", "ensemble", "gt"};
  std::vector<double> alphas;                  // empty: train.alpha
  std::vector<std::size_t> overlap_counts;     // empty: split.overlap_count
  std::vector<std::size_t> teacher_counts;     // empty: split.n_parts
};

// Architecture entry as written in a config. Only hidden_widths is
// required; the other fields are derived from the task and checked when
// present.
struct ArchEntry {
  std::vector<std::size_t> hidden_widths;
  std::optional<std::size_t> input_dim;
  std::optional<std::size_t> feature_dim;
  std::optional<std::size_t> num_classes;

  ArchSpec Resolve(std::size_t input_dim, std::size_t num_classes,
                   const std::string &where) const;
};

// Experiment description read from a JSON file. Unknown keys anywhere are
// rejected with a SchemaError naming the key.
struct ExperimentConfig {
  TaskSpec data;
  std::size_t n_parts = 2;
  std::size_t overlap_count = 0;
  std::vector<ArchEntry> teachers;
  ArchEntry student;
  TrainConfig train;
  // Teacher pre-training; keys missing from "teacher_train" fall back to
  // the values in "train".
  TrainConfig teacher_train;
  std::string method = "ours";
  MergeRule merge_rule = MergeRule::kMax;
  std::string data_dir = "data";
  std::optional<MatrixSpec> matrix;

  static ExperimentConfig FromJson(const nlohmann::json &doc);
  static ExperimentConfig Load(const std::filesystem::path &path);
  nlohmann::json ToJson() const;

  // Replaces the data, training and teacher-training seeds.
  void OverrideSeed(std::uint64_t seed);

  TaskSplit Split() const;
  ArchSpec TeacherArch(std::size_t index, const TaskSplit &split) const;
  ArchSpec StudentArch(const TaskSplit &split) const;
  // Seeded config for pre-training teacher `index`.
  TrainConfig TeacherTrainConfig(std::size_t index) const;
};

// FNV-1a over the canonical JSON dump, as 16 hex digits.
std::string ConfigDigest(const nlohmann::json &doc);

}  // namespace amalgam

#endif  // AMALGAM_CONFIG_H_
