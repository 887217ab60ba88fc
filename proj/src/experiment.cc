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

#include "amalgam/experiment.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "amalgam/error.h"
#include "amalgam/ops.h"

namespace amalgam {

using nlohmann::json;

PreparedTask PrepareTask(const ExperimentConfig &config) {
  PreparedTask task;
  task.data = Generate(config.data);
  task.split = config.Split();
  for (std::size_t i = 0; i < task.split.parts.size(); ++i) {
    const std::vector<int> &part = task.split.parts[i];
    task.teachers.push_back(TrainTeacher(config.TeacherArch(i, task.split),
                                         TeacherView(task.data.train, part), part,
                                         config.TeacherTrainConfig(i)));
  }
  return task;
}

TaskSplit SplitFromParts(std::size_t num_classes, std::vector<std::vector<int>> parts) {
  TaskSplit split;
  split.num_classes = num_classes;
  for (const auto &part : parts) {
    if (part.empty()) throw ContractError("empty teacher class subset");
    for (int c : part) {
      if (c < 0 || static_cast<std::size_t>(c) >= num_classes)
        throw ContractError("class " + std::to_string(c) + " outside [0, " +
                            std::to_string(num_classes) + ")");
      split.merge_map.push_back(c);
    }
  }
  split.parts = std::move(parts);
  return split;
}

TrainConfig MethodTrainConfig(const ExperimentConfig &config, const std::string &method) {
  TrainConfig train = config.train;
  if (method == "ablation_noext") {
    train.d_common = train.d_align;
    train.shared_extractor = false;
  }
  return train;
}

TrainedStudent TrainStudent(const ExperimentConfig &config, const Dataset &train,
                            std::span<const TeacherModel> teachers,
                            const TaskSplit &split, const std::string &method,
                            const EpochEvaluator &evaluate) {
  TrainedStudent out;
  StudentCheckpoint &ckpt = out.checkpoint;
  ckpt.method = method;
  ckpt.seed = config.train.seed;
  const ArchSpec arch = config.StudentArch(split);

  if (method == "gt") {
    ArchSpec gt_arch = arch;
    gt_arch.num_classes = split.num_classes;
    ckpt.classifier = TrainClassifier(gt_arch, train, config.train, "gt", &out.supervised);
    std::vector<int> classes(split.num_classes);
    for (std::size_t c = 0; c < classes.size(); ++c) classes[c] = static_cast<int>(c);
    ckpt.teacher_parts = {classes};
    return out;
  }
  if (method == "ensemble")
    throw ConfigError("the ensemble baseline has no trainable student");

  const Method m = ParseMethod(method);
  if (teachers.size() != split.parts.size())
    throw ContractError(std::to_string(teachers.size()) + " teachers for a split of " +
                        std::to_string(split.parts.size()) + " parts");
  const TrainConfig train_config = MethodTrainConfig(config, method);
  AmalgamationResult result =
      Amalgamate(teachers, arch, train.StripLabels(), train_config, m, evaluate);
  ckpt.alpha = m == Method::kKd ? 1.0 : train_config.alpha;
  ckpt.teacher_parts = split.parts;
  ckpt.has_net = true;
  ckpt.net = std::move(result.net);
  out.metrics = std::move(result.metrics);
  return out;
}

namespace {

// Score columns of `scores` rearranged into the split's slot order.
Tensor SlotScores(const Tensor &scores, std::span<const int> model_map,
                  std::span<const int> split_map) {
  if (std::equal(model_map.begin(), model_map.end(), split_map.begin(), split_map.end()))
    return scores;
  // A model with one slot per class (gt) can be read in any slot order.
  std::vector<int> column_of;
  for (std::size_t slot = 0; slot < model_map.size(); ++slot) {
    const int c = model_map[slot];
    if (c < 0) throw ContractError("negative class id in merge map");
    if (column_of.size() <= static_cast<std::size_t>(c)) column_of.resize(c + 1, -1);
    if (column_of[c] >= 0)
      throw ContractError("model and split disagree on the score slot layout");
    column_of[c] = static_cast<int>(slot);
  }
  const std::size_t n = scores.rows(), width = split_map.size();
  std::vector<double> out(n * width);
  for (std::size_t k = 0; k < width; ++k) {
    const int c = split_map[k];
    if (static_cast<std::size_t>(c) >= column_of.size() || column_of[c] < 0)
      throw ContractError("model has no score for class " + std::to_string(c));
    for (std::size_t i = 0; i < n; ++i) out[i * width + k] = scores.at(i, column_of[c]);
  }
  return Tensor::FromData({n, width}, std::move(out));
}

std::vector<double> SubtaskAccs(const Tensor &slot_scores, const Dataset &test,
                                const TaskSplit &split) {
  std::vector<double> accs;
  std::size_t offset = 0;
  for (const auto &part : split.parts) {
    accs.push_back(SubtaskAccuracy(slot_scores, test, part, offset));
    offset += part.size();
  }
  return accs;
}

std::string JoinArchs(std::span<const TeacherModel> teachers) {
  std::string out;
  for (const TeacherModel &t : teachers) out += (out.empty() ? "" : "+") + t.arch().ToString();
  return out;
}

}  // namespace

ReportRow EvaluateStudent(const StudentCheckpoint &student, const Dataset &test,
                          const TaskSplit &split, MergeRule rule) {
  ReportRow row;
  row.method = student.method;
  row.arch = student.student().arch().ToString();
  row.n_teachers = split.parts.size();
  row.alpha = student.alpha;
  row.seed = std::to_string(student.seed);
  const std::vector<int> merge_map = student.MergeMap();
  const Tensor scores = student.student().Forward(test.InputTensor()).scores;
  row.combined_acc = AccuracyFromScores(scores, test.labels, merge_map, rule);
  row.subtask_accs = SubtaskAccs(SlotScores(scores, merge_map, split.merge_map), test, split);
  return row;
}

std::vector<ReportRow> EvaluateTeachers(std::span<const TeacherModel> teachers,
                                        const Dataset &test, const TaskSplit &split,
                                        MergeRule rule) {
  std::vector<ReportRow> rows;
  const Tensor x = test.InputTensor();
  std::vector<Tensor> all_scores;
  for (std::size_t i = 0; i < teachers.size(); ++i) {
    ReportRow row;
    row.method = "teacher" + std::to_string(i);
    row.arch = teachers[i].arch().ToString();
    row.n_teachers = teachers.size();
    const Tensor scores = teachers[i].Forward(x).scores;
    all_scores.push_back(scores);
    row.combined_acc = AccuracyFromScores(scores, test.labels, teachers[i].class_subset());
    row.subtask_accs = {SubtaskAccuracy(scores, test, teachers[i].class_subset(), 0)};
    rows.push_back(row);
  }
  ReportRow ensemble;
  ensemble.method = "ensemble";
  ensemble.arch = JoinArchs(teachers);
  ensemble.n_teachers = teachers.size();
  ensemble.combined_acc = EnsembleAccuracy(teachers, test, split, rule);
  ensemble.subtask_accs = SubtaskAccs(ConcatColumns(all_scores), test, split);
  rows.push_back(ensemble);
  return rows;
}

std::vector<ReportRow> MeanRows(std::span<const ReportRow> rows) {
  struct Group {
    ReportRow mean;
    std::size_t count = 0;
  };
  std::vector<Group> groups;
  for (const ReportRow &row : rows) {
    if (row.seed == "mean") continue;
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group &g) {
      return g.mean.method == row.method && g.mean.arch == row.arch &&
             g.mean.n_teachers == row.n_teachers && g.mean.alpha == row.alpha &&
             g.mean.overlap_count == row.overlap_count;
    });
    if (it == groups.end()) {
      Group g;
      g.mean = row;
      g.mean.seed = "mean";
      g.mean.combined_acc = 0.0;
      std::fill(g.mean.subtask_accs.begin(), g.mean.subtask_accs.end(), 0.0);
      groups.push_back(g);
      it = groups.end() - 1;
    }
    it->mean.combined_acc += row.combined_acc;
    for (std::size_t k = 0; k < row.subtask_accs.size() && k < it->mean.subtask_accs.size(); ++k)
      it->mean.subtask_accs[k] += row.subtask_accs[k];
    ++it->count;
  }
  std::vector<ReportRow> out;
  for (Group &g : groups) {
    const double n = static_cast<double>(g.count);
    g.mean.combined_acc /= n;
    for (double &a : g.mean.subtask_accs) a /= n;
    out.push_back(g.mean);
  }
  return out;
}

EvalReport RunExperimentMatrix(const ExperimentConfig &config, std::ostream *log) {
  const MatrixSpec spec = config.matrix.value_or(MatrixSpec{});
  const std::vector<std::uint64_t> seeds =
      config.matrix ? spec.seeds : std::vector<std::uint64_t>{config.train.seed};
  const std::vector<std::string> methods =
      config.matrix ? spec.methods : std::vector<std::string>{config.method};
  const std::vector<double> alphas =
      spec.alphas.empty() ? std::vector<double>{config.train.alpha} : spec.alphas;
  const std::vector<std::size_t> overlaps =
      spec.overlap_counts.empty() ? std::vector<std::size_t>{config.overlap_count}
                                  : spec.overlap_counts;
  const std::vector<std::size_t> counts =
      spec.teacher_counts.empty() ? std::vector<std::size_t>{config.n_parts}
                                  : spec.teacher_counts;

  EvalReport report;
  report.config = config.ToJson();
  report.seeds = seeds;
  for (std::size_t n : counts) {
    for (std::size_t overlap : overlaps) {
      for (std::uint64_t seed : seeds) {
        ExperimentConfig cell = config;
        cell.n_parts = n;
        cell.overlap_count = overlap;
        cell.OverrideSeed(seed);
        std::ostringstream where;
        where << "cell n_teachers=" << n << " overlap_count=" << overlap << " seed=" << seed;
        std::string stage = "teachers";
        try {
          const PreparedTask task = PrepareTask(cell);
          const Dataset &test = task.data.test;
          std::optional<ReportRow> gt_row;
          for (double alpha : alphas) {
            cell.train.alpha = alpha;
            auto stamp = [&](ReportRow row) {
              row.alpha = alpha;
              row.seed = std::to_string(seed);
              row.overlap_count = overlap;
              report.rows.push_back(std::move(row));
            };
            for (const std::string &method : methods) {
              stage = "alpha=" + std::to_string(alpha) + " method=" + method;
              if (log) *log << where.str() << ' ' << stage << '\n' << std::flush;
              if (method == "ensemble") {
                for (ReportRow &row : EvaluateTeachers(task.teachers, test, task.split,
                                                       config.merge_rule))
                  stamp(row);
              } else if (method == "gt") {
                // Labeled training ignores alpha, so it is trained once per seed.
                if (!gt_row) {
                  TrainedStudent gt =
                      TrainStudent(cell, task.data.train, task.teachers, task.split, "gt");
                  gt_row = EvaluateStudent(gt.checkpoint, test, task.split, config.merge_rule);
                }
                stamp(*gt_row);
              } else {
                TrainedStudent s =
                    TrainStudent(cell, task.data.train, task.teachers, task.split, method);
                stamp(EvaluateStudent(s.checkpoint, test, task.split, config.merge_rule));
              }
            }
          }
        } catch (const Error &e) {
          throw Error(e.category(), where.str() + " " + stage + ": " + e.what());
        }
      }
    }
  }
  const std::vector<ReportRow> means = MeanRows(report.rows);
  report.rows.insert(report.rows.end(), means.begin(), means.end());
  return report;
}

namespace {

std::string FormatDouble(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

json RowToJson(const ReportRow &row) {
  return json{{"method", row.method},       {"arch", row.arch},
              {"n_teachers", row.n_teachers}, {"alpha", row.alpha},
              {"seed", row.seed},           {"combined_acc", row.combined_acc},
              {"subtask_accs", row.subtask_accs}, {"overlap_count", row.overlap_count}};
}

}  // namespace

void WriteReport(const EvalReport &report, const std::filesystem::path &csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot open " + csv_path.string() + " for writing");
  out << "method,arch,n_teachers,alpha,seed,combined_acc,subtask_accs\n";
  for (const ReportRow &row : report.rows) {
    out << row.method << ',' << row.arch << ',' << row.n_teachers << ','
        << FormatDouble(row.alpha) << ',' << row.seed << ',' << FormatDouble(row.combined_acc)
        << ",\"" << json(row.subtask_accs).dump() << "\"\n";
  }
  if (!out) throw IoError("failed writing " + csv_path.string());

  json rows = json::array();
  for (const ReportRow &row : report.rows) rows.push_back(RowToJson(row));
  json doc{{"config", report.config},
           {"config_digest", ConfigDigest(report.config)},
           {"seeds", report.seeds},
           {"rows", rows}};
  std::filesystem::path json_path = csv_path;
  json_path.replace_extension(".json");
  WriteJsonFile(doc, json_path);
}

void WriteMetricsCsv(std::span<const MetricsRecord> metrics,
                     const std::filesystem::path &path, const std::string &comment) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "epoch,l_c,l_m,l_r,total,eval_acc\n";
  for (const MetricsRecord &r : metrics) {
    out << r.epoch << ',' << FormatDouble(r.l_c) << ',' << FormatDouble(r.l_m) << ','
        << FormatDouble(r.l_r) << ',' << FormatDouble(r.total) << ',';
    if (r.eval_acc) out << FormatDouble(*r.eval_acc);
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void WriteMetricsCsv(std::span<const SupervisedRecord> history,
                     const std::filesystem::path &path, const std::string &comment) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "epoch,l_c,l_m,l_r,total,eval_acc\n";
  for (const SupervisedRecord &r : history)
    out << r.epoch << ",,,," << FormatDouble(r.loss) << ",\n";
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace amalgam
