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

#include "amalgam/evaluation.h"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>

#include "amalgam/error.h"

namespace amalgam {

std::string MergeRuleName(MergeRule rule) {
  switch (rule) {
    case MergeRule::kMax: return "max";
    case MergeRule::kMean: return "mean";
    case MergeRule::kSum: return "sum";
  }
  return "unknown";
}

MergeRule ParseMergeRule(const std::string &name) {
  for (MergeRule r : {MergeRule::kMax, MergeRule::kMean, MergeRule::kSum})
    if (MergeRuleName(r) == name) return r;
  throw ConfigError("unknown merge rule '" + name + "' (expected max, mean or sum)");
}

std::vector<int> MergedPredictions(const Tensor &scores, std::span<const int> merge_map,
                                   MergeRule rule) {
  if (scores.rank() != 2 || scores.cols() != merge_map.size()) {
    throw ContractError("scores " + ShapeToString(scores.shape()) + " vs merge map of " +
                        std::to_string(merge_map.size()) + " slots");
  }
  int num_classes = 0;
  for (int c : merge_map) {
    if (c < 0) throw ContractError("merge map holds a negative class id");
    num_classes = std::max(num_classes, c + 1);
  }
  std::vector<int> slots_per_class(num_classes, 0);
  for (int c : merge_map) ++slots_per_class[c];

  const std::size_t n = scores.rows(), width = scores.cols();
  auto s = scores.values();
  std::vector<int> predictions(n);
  std::vector<double> merged(num_classes);
  for (std::size_t i = 0; i < n; ++i) {
    const double init =
        rule == MergeRule::kMax ? -std::numeric_limits<double>::infinity() : 0.0;
    std::fill(merged.begin(), merged.end(), init);
    for (std::size_t slot = 0; slot < width; ++slot) {
      const double v = s[i * width + slot];
      double &m = merged[merge_map[slot]];
      m = rule == MergeRule::kMax ? std::max(m, v) : m + v;
    }
    int best = -1;
    for (int c = 0; c < num_classes; ++c) {
      if (slots_per_class[c] == 0) continue;
      if (rule == MergeRule::kMean) merged[c] /= slots_per_class[c];
      if (best < 0 || merged[c] > merged[best]) best = c;
    }
    predictions[i] = best;
  }
  return predictions;
}

double AccuracyFromScores(const Tensor &scores, std::span<const int> labels,
                          std::span<const int> merge_map, MergeRule rule) {
  const std::vector<int> predicted = MergedPredictions(scores, merge_map, rule);
  if (predicted.size() != labels.size())
    throw ContractError("accuracy: prediction and label counts differ");
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double Accuracy(const ScoresFn &scores_fn, const Dataset &data,
                std::span<const int> merge_map, MergeRule rule) {
  return AccuracyFromScores(scores_fn(data.InputTensor()), data.labels, merge_map, rule);
}

double SubtaskAccuracy(const Tensor &scores, const Dataset &data,
                       std::span<const int> part, std::size_t slot_offset) {
  if (scores.rank() != 2 || scores.rows() != data.size() ||
      slot_offset + part.size() > scores.cols())
    throw ContractError("subtask accuracy: scores " + ShapeToString(scores.shape()) +
                        " cannot hold the requested slots");
  const std::size_t width = scores.cols();
  auto s = scores.values();
  std::size_t seen = 0, correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto it = std::find(part.begin(), part.end(), data.labels[i]);
    if (it == part.end()) continue;
    ++seen;
    const double *row = &s[i * width + slot_offset];
    const std::size_t best = std::max_element(row, row + part.size()) - row;
    // Overlapping splits may list a class twice within one part.
    correct += part[best] == data.labels[i];
  }
  return seen ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0;
}

double EnsembleAccuracy(std::span<const TeacherModel> teachers, const Dataset &data,
                        const TaskSplit &split, MergeRule rule) {
  if (teachers.size() != split.parts.size())
    throw ContractError("ensemble: " + std::to_string(teachers.size()) + " teachers for " +
                        std::to_string(split.parts.size()) + " parts");
  for (std::size_t i = 0; i < teachers.size(); ++i)
    if (teachers[i].class_subset() != split.parts[i])
      throw ContractError("ensemble: teacher " + std::to_string(i) +
                          " is not aligned with split part " + std::to_string(i));
  const Tensor x = data.InputTensor();
  std::vector<Tensor> scores;
  for (const TeacherModel &t : teachers) scores.push_back(t.Forward(x).scores);
  std::size_t width = 0;
  for (const Tensor &s : scores) width += s.cols();
  std::vector<double> concat(data.size() * width);
  std::size_t offset = 0;
  for (const Tensor &s : scores) {
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t k = 0; k < s.cols(); ++k) concat[i * width + offset + k] = s.at(i, k);
    offset += s.cols();
  }
  return AccuracyFromScores(Tensor::FromData({data.size(), width}, std::move(concat)),
                            data.labels, split.merge_map, rule);
}

double TeacherCombinedAccuracy(const TeacherModel &teacher, const Dataset &data) {
  return AccuracyFromScores(teacher.Forward(data.InputTensor()).scores, data.labels,
                            teacher.class_subset());
}

GtReference TrainGtReference(const ArchSpec &arch, const Dataset &train,
                             const Dataset &test, const TrainConfig &config) {
  GtReference ref;
  ref.model = TrainClassifier(arch, train, config, "gt");
  std::vector<int> identity(arch.num_classes);
  for (std::size_t c = 0; c < identity.size(); ++c) identity[c] = static_cast<int>(c);
  ref.accuracy = AccuracyFromScores(ref.model.Forward(test.InputTensor()).scores,
                                    test.labels, identity);
  return ref;
}

void ExportCommonFeatures(const AmalgamNet &net, std::span<const TeacherModel> teachers,
                          const Dataset &data, const std::filesystem::path &path,
                          const std::string &comment) {
  const AmalgamLayout &layout = net.layout();
  if (layout.autoencoder)
    throw ContractError("the autoencoder ablation has no common feature space to export");
  if (teachers.size() != layout.num_teachers())
    throw ContractError("export: net expects " + std::to_string(layout.num_teachers()) +
                        " teachers, got " + std::to_string(teachers.size()));
  const Tensor x = data.InputTensor();
  std::vector<std::pair<std::string, Tensor>> streams;
  streams.emplace_back(
      "student", net.Extract(net.Adapt(StreamId::Student(), net.StudentForward(x).features)));
  for (std::size_t i = 0; i < teachers.size(); ++i)
    streams.emplace_back("teacher_" + std::to_string(i),
                         net.Extract(net.Adapt(StreamId::Teacher(i),
                                               teachers[i].Forward(x).features)));

  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "stream,sample_id,class";
  for (std::size_t k = 0; k < layout.d_common; ++k) out << ",v" << k;
  out << '\n' << std::setprecision(17);
  for (const auto &[name, common] : streams) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      out << name << ',' << i << ',' << data.labels[i];
      for (std::size_t k = 0; k < common.cols(); ++k) out << ',' << common.at(i, k);
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace amalgam
