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

#include "cli.h"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "amalgam/checkpoint.h"
#include "amalgam/config.h"
#include "amalgam/error.h"
#include "amalgam/evaluation.h"
#include "amalgam/experiment.h"
#include "amalgam/synthetic_data.h"

namespace amalgam {
namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string data;
};

ExperimentConfig LoadConfig(const CommonArgs &args) {
  ExperimentConfig config = ExperimentConfig::Load(args.config);
  if (args.seed) config.OverrideSeed(*args.seed);
  return config;
}

fs::path DataDir(const CommonArgs &args, const ExperimentConfig &config) {
  if (!args.data.empty()) return args.data;
  fs::path dir = config.data_dir;
  // Relative data_dir values are read next to the config file.
  if (dir.is_relative()) dir = fs::path(args.config).parent_path() / dir;
  return dir;
}

Dataset ReadSplitFile(const fs::path &dir, const std::string &name) {
  const fs::path path = dir / name;
  if (!fs::exists(path)) throw IoError("missing data file " + path.string());
  return ReadDatasetCsv(path);
}

std::string Stamp(const std::string &method, std::uint64_t seed, const ExperimentConfig &config) {
  return "method=" + method + " seed=" + std::to_string(seed) +
         " config=" + ConfigDigest(config.ToJson());
}

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void PrintRow(std::ostream &out, const ReportRow &row) {
  out << row.method << " arch=" << row.arch << " seed=" << row.seed
      << " combined_acc=" << Fixed(row.combined_acc) << " subtask_accs=[";
  for (std::size_t k = 0; k < row.subtask_accs.size(); ++k)
    out << (k ? "," : "") << Fixed(row.subtask_accs[k]);
  out << "]\n";
}

std::vector<TeacherModel> LoadTeachers(const std::vector<std::string> &paths) {
  std::vector<TeacherModel> teachers;
  for (const std::string &p : paths) teachers.push_back(LoadTeacher(p));
  return teachers;
}

std::vector<std::vector<int>> PartsOf(std::span<const TeacherModel> teachers) {
  std::vector<std::vector<int>> parts;
  for (const TeacherModel &t : teachers) parts.push_back(t.class_subset());
  return parts;
}

void GenData(const CommonArgs &args, const std::string &out_dir, std::ostream &out) {
  const ExperimentConfig config = LoadConfig(args);
  const TaskData task = Generate(config.data);
  fs::create_directories(out_dir);
  const std::string comment = Stamp("gen-data", config.data.seed, config);
  WriteDatasetCsv(task.train, fs::path(out_dir) / "train.csv", comment);
  WriteDatasetCsv(task.test, fs::path(out_dir) / "test.csv", comment);
  out << "wrote " << task.train.size() << " train and " << task.test.size()
      << " test samples to " << out_dir << '\n';
}

void TrainTeacherCmd(const CommonArgs &args, std::size_t part, const std::string &out_path,
                     std::ostream &out) {
  const ExperimentConfig config = LoadConfig(args);
  const fs::path dir = DataDir(args, config);
  const Dataset train = ReadSplitFile(dir, "train.csv");
  const Dataset test = ReadSplitFile(dir, "test.csv");
  const TaskSplit split = config.Split();
  if (part >= split.parts.size())
    throw ConfigError("--part " + std::to_string(part) + " but the split has " +
                      std::to_string(split.parts.size()) + " parts");
  const std::vector<int> &classes = split.parts[part];
  const TeacherModel teacher =
      TrainTeacher(config.TeacherArch(part, split), TeacherView(train, classes), classes,
                   config.TeacherTrainConfig(part));
  SaveTeacher(teacher, config.teacher_train.seed, out_path);
  const double train_acc = SubtaskAccuracy(teacher.Forward(train.InputTensor()).scores,
                                           train, classes, 0);
  const double test_acc =
      SubtaskAccuracy(teacher.Forward(test.InputTensor()).scores, test, classes, 0);
  out << "teacher " << part << ' ' << teacher.arch().ToString()
      << " train_acc=" << Fixed(train_acc) << " test_acc=" << Fixed(test_acc) << '\n';
}

void AmalgamateCmd(const CommonArgs &args, const std::vector<std::string> &teacher_paths,
                   const std::string &out_path, const std::string &metrics_path,
                   std::ostream &out) {
  const ExperimentConfig config = LoadConfig(args);
  config.train.Validate();
  const fs::path dir = DataDir(args, config);
  const Dataset train = ReadSplitFile(dir, "train.csv");
  const Dataset test = ReadSplitFile(dir, "test.csv");
  const std::vector<TeacherModel> teachers = LoadTeachers(teacher_paths);
  const TaskSplit split = config.method == "gt"
                              ? config.Split()
                              : SplitFromParts(config.data.num_classes, PartsOf(teachers));
  const std::vector<int> merge_map = split.merge_map;
  EpochEvaluator evaluate = [&](const AmalgamNet &net) {
    const Tensor scores = net.StudentForward(test.InputTensor()).scores;
    return AccuracyFromScores(scores, test.labels, merge_map, config.merge_rule);
  };
  const TrainedStudent student =
      TrainStudent(config, train, teachers, split, config.method, evaluate);
  for (const MetricsRecord &r : student.metrics) {
    out << "epoch " << r.epoch << " total=" << r.total << " l_c=" << r.l_c
        << " l_m=" << r.l_m << " l_r=" << r.l_r;
    if (r.eval_acc) out << " eval_acc=" << Fixed(*r.eval_acc);
    out << '\n';
  }
  for (const SupervisedRecord &r : student.supervised)
    out << "epoch " << r.epoch << " loss=" << r.loss << '\n';
  SaveStudent(student.checkpoint, out_path);
  const std::string comment = Stamp(config.method, config.train.seed, config);
  if (student.checkpoint.has_net)
    WriteMetricsCsv(std::span<const MetricsRecord>(student.metrics), metrics_path, comment);
  else
    WriteMetricsCsv(std::span<const SupervisedRecord>(student.supervised), metrics_path,
                    comment);
  PrintRow(out, EvaluateStudent(student.checkpoint, test, split, config.merge_rule));
}

void EvaluateCmd(const CommonArgs &args, const std::string &model_path, bool matrix,
                 const std::string &report_path, std::ostream &out) {
  const ExperimentConfig config = LoadConfig(args);
  EvalReport report;
  if (matrix) {
    ExperimentConfig grid = config;
    if (args.seed) {
      if (!grid.matrix) grid.matrix = MatrixSpec{};
      grid.matrix->seeds = {*args.seed};
    }
    report = RunExperimentMatrix(grid, &out);
  } else {
    if (model_path.empty()) throw ConfigError("evaluate needs --model unless --matrix is given");
    const StudentCheckpoint student = LoadStudent(model_path);
    const Dataset test = ReadSplitFile(DataDir(args, config), "test.csv");
    const TaskSplit split =
        student.has_net ? SplitFromParts(config.data.num_classes, student.teacher_parts)
                        : config.Split();
    report.config = config.ToJson();
    report.seeds = {student.seed};
    ReportRow row = EvaluateStudent(student, test, split, config.merge_rule);
    row.overlap_count = config.overlap_count;
    report.rows.push_back(row);
  }
  for (const ReportRow &row : report.rows) PrintRow(out, row);
  WriteReport(report, report_path);
}

void ExportCmd(const std::string &model_path, const std::vector<std::string> &teacher_paths,
               const std::string &data, const std::string &out_path,
               std::optional<std::uint64_t> seed, std::ostream &out) {
  const StudentCheckpoint student = LoadStudent(model_path);
  if (!student.has_net)
    throw ContractError(model_path + " holds a plain classifier with no common feature space");
  const std::vector<TeacherModel> teachers = LoadTeachers(teacher_paths);
  const fs::path data_path = fs::is_directory(data) ? fs::path(data) / "test.csv" : fs::path(data);
  if (!fs::exists(data_path)) throw IoError("missing data file " + data_path.string());
  const Dataset dataset = ReadDatasetCsv(data_path);
  const std::string comment =
      "method=" + student.method + " seed=" + std::to_string(seed.value_or(student.seed));
  ExportCommonFeatures(student.net, teachers, dataset, out_path, comment);
  out << "wrote " << (teachers.size() + 1) * dataset.size() << " feature rows to " << out_path
      << '\n';
}

}  // namespace

int RunCli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Knowledge amalgamation of heterogeneous teachers into one student", "amalgam"};
  app.require_subcommand(1);

  CommonArgs common;
  auto add_common = [&](CLI::App *cmd, bool with_data) {
    cmd->add_option("--config", common.config, "experiment config (JSON)")->required();
    cmd->add_option("--seed", common.seed, "override every seed in the config");
    if (with_data)
      cmd->add_option("--data", common.data, "directory holding train.csv and test.csv");
  };

  std::string out_path, metrics_path, model_path, report_path, data_arg;
  std::size_t part = 0;
  bool matrix = false;
  std::vector<std::string> teacher_paths;
  std::optional<std::uint64_t> export_seed;

  CLI::App *gen = app.add_subcommand("gen-data", "write train.csv and test.csv");
  add_common(gen, false);
  gen->add_option("--out", out_path, "output directory")->required();

  CLI::App *teach = app.add_subcommand("train-teacher", "train one teacher on its class part");
  add_common(teach, true);
  teach->add_option("--part", part, "teacher index")->required();
  teach->add_option("--out", out_path, "checkpoint path")->required();

  CLI::App *amal = app.add_subcommand("amalgamate", "train a student from teacher checkpoints");
  add_common(amal, true);
  amal->add_option("--teachers", teacher_paths, "teacher checkpoints in order")->required();
  amal->add_option("--out", out_path, "student checkpoint path")->required();
  amal->add_option("--metrics", metrics_path, "per-epoch metrics CSV")->required();

  CLI::App *eval = app.add_subcommand("evaluate", "evaluate a student or run the matrix");
  add_common(eval, true);
  eval->add_option("--model", model_path, "student checkpoint");
  eval->add_flag("--matrix", matrix, "run the experiment matrix from the config");
  eval->add_option("--report", report_path, "report CSV (a .json twin is written too)")
      ->required();

  CLI::App *exp = app.add_subcommand("export-features", "dump common-space features as CSV");
  exp->add_option("--model", model_path, "student checkpoint")->required();
  exp->add_option("--teachers", teacher_paths, "teacher checkpoints in order")->required();
  exp->add_option("--data", data_arg, "data CSV, or a directory holding test.csv")->required();
  exp->add_option("--out", out_path, "output CSV")->required();
  exp->add_option("--seed", export_seed, "seed recorded in the output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError &e) {
    err << "ERROR usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (gen->parsed()) GenData(common, out_path, out);
    else if (teach->parsed()) TrainTeacherCmd(common, part, out_path, out);
    else if (amal->parsed()) AmalgamateCmd(common, teacher_paths, out_path, metrics_path, out);
    else if (eval->parsed()) EvaluateCmd(common, model_path, matrix, report_path, out);
    else if (exp->parsed()) ExportCmd(model_path, teacher_paths, data_arg, out_path, export_seed, out);
  } catch (const Error &e) {
    err << "ERROR " << e.category() << ": " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error &e) {
    err << "ERROR io: " << e.what() << '\n';
    return 1;
  } catch (const std::exception &e) {
    err << "ERROR internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace amalgam
