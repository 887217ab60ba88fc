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

#ifndef AMALGAM_SYNTHETIC_DATA_H_
#define AMALGAM_SYNTHETIC_DATA_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "amalgam/tensor.h"

namespace amalgam {

// Gaussian-mixture classification task. Class means are drawn uniformly
// from [-center_scale, center_scale]^input_dim; samples are
// N(mean, noise_sigma^2 I).
struct TaskSpec {
  std::size_t num_classes = 16;
  std::size_t input_dim = 16;
  std::size_t samples_per_class = 200;
  double center_scale = 8.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Inputs with the label column removed. Amalgamation only ever sees this.
struct UnlabeledInputs {
  Tensor inputs;  // [samples x input_dim]
  std::size_t size() const { return inputs.rows(); }
};

struct Dataset {
  std::size_t input_dim = 0;
  std::vector<double> inputs;  // row-major, size() * input_dim
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {inputs.data() + i * input_dim, input_dim};
  }
  Tensor InputTensor() const;
  UnlabeledInputs StripLabels() const { return {InputTensor()}; }
};

struct TaskData {
  Dataset train;
  Dataset test;
  std::vector<std::vector<double>> class_means;
};

// Per class, samples_per_class / 5 samples go to test and the rest to train.
TaskData Generate(const TaskSpec &spec);

// Assignment of global classes to teachers. merge_map[slot] is the global
// class behind each slot of the concatenated teacher score vector.
struct TaskSplit {
  std::size_t num_classes = 0;
  std::vector<std::vector<int>> parts;
  std::vector<int> merge_map;
};

// Seeded random permutation of the classes cut into n_parts equal chunks.
// With overlap_count > 0, the first overlap_count classes of chunk i are also
// appended to chunk i+1 (cyclically). Throws ConfigError if n_parts does not
// divide num_classes or overlap_count >= num_classes / n_parts.
TaskSplit SplitClasses(std::size_t num_classes, std::size_t n_parts,
                       std::size_t overlap_count, std::uint64_t seed);
// Same, with the permutation given explicitly.
TaskSplit SplitClassesWithPermutation(std::span<const int> permutation,
                                      std::size_t n_parts,
                                      std::size_t overlap_count);

// Samples whose class is in part, relabeled to their position in part.
Dataset TeacherView(const Dataset &data, std::span<const int> part);

// CSV with header x0,...,x{d-1},y. Leading lines starting with '#' are
// comments (written from comment, skipped on read). Values use 17
// significant digits.
void WriteDatasetCsv(const Dataset &data, const std::filesystem::path &path,
                     const std::string &comment = "");
Dataset ReadDatasetCsv(const std::filesystem::path &path);

}  // namespace amalgam

#endif  // AMALGAM_SYNTHETIC_DATA_H_
