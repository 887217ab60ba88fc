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

#include <cmath>
#include <map>
#include <numeric>

#include "amalgam/config.h"
#include "amalgam/error.h"
#include "amalgam/evaluation.h"
#include "amalgam/experiment.h"
#include "micro_fixture.h"
#include "test_util.h"

namespace amalgam {
namespace {

using testing::MakeArch;
using testing::MicroFixture;
using testing::TempDir;

// One-unit identity backbone followed by a 1x1 head of the given gain, so
// the score is gain * x for positive inputs.
TeacherModel GainTeacher(double gain, int cls) {
  MlpBackbone backbone(std::vector<AffineLayer>{AffineLayer::Identity(1, false)});
  AffineLayer head(Tensor::FromData({1, 1}, {gain}), Tensor::Zeros({1}));
  return TeacherModel(Classifier(MakeArch(1, {1}, 1), backbone, head), {cls});
}

Dataset OneSample(double x, int label) {
  Dataset d;
  d.input_dim = 1;
  d.inputs = {x};
  d.labels = {label};
  return d;
}

TEST(MergeTest, MaxRuleHandExample) {
  // Slots 0 and 2 both name class 0; class 1 sits in slot 1.
  const int map[] = {0, 1, 0};
  Tensor s = Tensor::FromData({1, 3}, {0.2, 0.6, 0.9});
  EXPECT_EQ(MergedPredictions(s, map, MergeRule::kMax), std::vector<int>{0});
  // mean(0.2, 0.9) = 0.55 < 0.6
  EXPECT_EQ(MergedPredictions(s, map, MergeRule::kMean), std::vector<int>{1});
  EXPECT_EQ(MergedPredictions(s, map, MergeRule::kSum), std::vector<int>{0});
}

TEST(MergeTest, TiesGoToLowestClass) {
  const int map[] = {2, 0, 1};
  EXPECT_EQ(MergedPredictions(Tensor::FromData({1, 3}, {1, 1, 1}), map), std::vector<int>{0});
}

TEST(MergeTest, BijectiveMapIsPlainArgmax) {
  Rng rng = MakeRng(3, "scores");
  Tensor s = testing::RandomTensor({50, 6}, rng, false, -3, 3);
  const int map[] = {4, 0, 5, 1, 3, 2};
  const std::vector<int> got = MergedPredictions(s, map);
  for (std::size_t i = 0; i < 50; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < 6; ++k)
      if (s.at(i, k) > s.at(i, best)) best = k;
    EXPECT_EQ(got[i], map[best]);
  }
}

TEST(MergeTest, AccuracyCountsMatches) {
  const int map[] = {0, 1};
  Tensor s = Tensor::FromData({4, 2}, {1, 0, 0, 1, 1, 0, 0, 1});
  const int labels[] = {0, 1, 1, 1};
  EXPECT_EQ(AccuracyFromScores(s, labels, map), 0.75);
  const int right[] = {0, 1, 0, 1};
  EXPECT_EQ(AccuracyFromScores(s, right, map), 1.0);
}

TEST(MergeTest, WidthMismatchIsContractError) {
  const int map[] = {0, 1, 2};
  EXPECT_THROW(MergedPredictions(Tensor::Zeros({1, 2}), map), ContractError);
}

TEST(SubtaskAccuracyTest, OnlyScoresOwnSlots) {
  Dataset d;
  d.input_dim = 1;
  d.inputs = {0, 0, 0};
  d.labels = {2, 3, 0};
  // Slots 0..1 belong to another teacher; slots 2..3 hold classes {2, 3}.
  Tensor s = Tensor::FromData({3, 4}, {9, 9, 1, 0, 9, 9, 1, 0, 9, 9, 0, 1});
  const int part[] = {2, 3};
  EXPECT_EQ(SubtaskAccuracy(s, d, part, 2), 0.5);
}

TEST(EnsembleTest, SingleTeacherMatchesItsOwnAccuracy) {
  MicroFixture fx;
  TaskSpec spec;
  spec.num_classes = 3;
  spec.input_dim = 6;
  spec.samples_per_class = 10;
  TaskData data = Generate(spec);
  const TeacherModel &t = fx.teachers[0];
  TaskSplit split = SplitFromParts(3, {t.class_subset()});
  const double direct = AccuracyFromScores(t.Forward(data.test.InputTensor()).scores,
                                           data.test.labels, t.class_subset());
  EXPECT_EQ(EnsembleAccuracy(std::span(&t, 1), data.test, split), direct);
  EXPECT_EQ(TeacherCombinedAccuracy(t, data.test), direct);
}

TEST(EnsembleTest, MiscalibratedTeacherWinsTheMerge) {
  // Each teacher is perfect on its own one-class subtask, but teacher 0's
  // logit is ten times larger, so the merged argmax always says class 0.
  std::vector<TeacherModel> teachers{GainTeacher(10.0, 0), GainTeacher(1.0, 1)};
  TaskSplit split = SplitFromParts(2, {{0}, {1}});
  Dataset d = OneSample(1.0, 1);
  EXPECT_EQ(EnsembleAccuracy(teachers, d, split), 0.0);
  const int part[] = {1};
  EXPECT_EQ(SubtaskAccuracy(teachers[1].Forward(d.InputTensor()).scores, d, part, 0), 1.0);
}

TEST(EnsembleTest, MisalignedTeachersAreContractError) {
  std::vector<TeacherModel> teachers{GainTeacher(1.0, 0), GainTeacher(1.0, 1)};
  Dataset d = OneSample(1.0, 1);
  EXPECT_THROW(EnsembleAccuracy(teachers, d, SplitFromParts(2, {{1}, {0}})), ContractError);
  EXPECT_THROW(EnsembleAccuracy(teachers, d, SplitFromParts(2, {{0, 1}})), ContractError);
}

TEST(TeacherRowsTest, TeacherCannotNameForeignClasses) {
  // Half the test samples belong to the other teacher.
  std::vector<TeacherModel> teachers{GainTeacher(1.0, 0), GainTeacher(1.0, 1)};
  Dataset d;
  d.input_dim = 1;
  d.inputs = {1, 1};
  d.labels = {0, 1};
  std::vector<ReportRow> rows = EvaluateTeachers(teachers, d, SplitFromParts(2, {{0}, {1}}),
                                                 MergeRule::kMax);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].method, "teacher0");
  EXPECT_EQ(rows[0].combined_acc, 0.5);
  EXPECT_EQ(rows[0].subtask_accs, std::vector<double>{1.0});
  EXPECT_EQ(rows[2].method, "ensemble");
  EXPECT_EQ(rows[2].combined_acc, 0.5);
}

TEST(GtReferenceTest, TrainsOnLabelsAndScoresIdentityMap) {
  TaskSpec spec;
  spec.num_classes = 4;
  spec.input_dim = 4;
  spec.samples_per_class = 50;
  spec.seed = 6;
  TaskData data = Generate(spec);
  TrainConfig c;
  c.lr = 1e-2;
  c.batch_size = 32;
  c.seed = 2;
  c.epochs = 0;
  const ArchSpec arch = MakeArch(4, {16}, 4);
  GtReference untrained = TrainGtReference(arch, data.train, data.test, c);
  const int identity[] = {0, 1, 2, 3};
  EXPECT_EQ(untrained.accuracy,
            AccuracyFromScores(Classifier(arch, 2, "gt").Forward(data.test.InputTensor()).scores,
                               data.test.labels, identity));
  c.epochs = 30;
  EXPECT_GE(TrainGtReference(arch, data.train, data.test, c).accuracy, 0.95);
}

class ExportTest : public ::testing::Test {
 protected:
  MicroFixture fx_;
  Dataset data_;
  TempDir dir_{"export"};

  void SetUp() override {
    TaskSpec spec;
    spec.num_classes = 7;
    spec.input_dim = 6;
    spec.samples_per_class = 5;
    data_ = Generate(spec).train;
  }
};

TEST_F(ExportTest, RowsWidthAndDeterminism) {
  AmalgamNet net = fx_.Net();
  ExportCommonFeatures(net, fx_.teachers, data_, dir_ / "a.csv", "seed=1");
  ExportCommonFeatures(net, fx_.teachers, data_, dir_ / "b.csv", "seed=1");
  const auto lines = testing::ReadLines(dir_ / "a.csv");
  ASSERT_EQ(lines.size(), 2 + 3 * data_.size());
  EXPECT_EQ(lines[0], "# seed=1");
  EXPECT_EQ(lines[1], "stream,sample_id,class,v0,v1,v2,v3");
  for (std::size_t i = 2; i < lines.size(); ++i)
    EXPECT_EQ(std::count(lines[i].begin(), lines[i].end(), ','), 3 + 3);
  EXPECT_EQ(lines[2].substr(0, 10), "student,0,");
  EXPECT_EQ(lines[2 + data_.size()].substr(0, 12), "teacher_0,0,");
  EXPECT_EQ(testing::ReadFile(dir_ / "a.csv"), testing::ReadFile(dir_ / "b.csv"));
}

TEST_F(ExportTest, AutoencoderAndTeacherCountAreContractErrors) {
  EXPECT_THROW(ExportCommonFeatures(fx_.Net(Method::kAblationAe), fx_.teachers, data_,
                                    dir_ / "x.csv"),
               ContractError);
  EXPECT_THROW(ExportCommonFeatures(fx_.Net(), std::span(fx_.teachers.data(), 1), data_,
                                    dir_ / "x.csv"),
               ContractError);
}

ReportRow Row(const std::string &method, const std::string &seed, double acc,
              std::vector<double> subtasks) {
  ReportRow r;
  r.method = method;
  r.arch = "a";
  r.n_teachers = 2;
  r.alpha = 0.5;
  r.seed = seed;
  r.combined_acc = acc;
  r.subtask_accs = std::move(subtasks);
  return r;
}

TEST(MeanRowsTest, AveragesPerGroupInOrder) {
  const std::vector<ReportRow> rows{Row("kd", "1", 0.5, {1.0, 0.0}),
                                    Row("ours", "1", 0.25, {0.5, 0.5}),
                                    Row("kd", "2", 1.0, {0.0, 0.5}),
                                    Row("ours", "2", 0.75, {1.0, 1.0})};
  std::vector<ReportRow> means = MeanRows(rows);
  ASSERT_EQ(means.size(), 2u);
  EXPECT_EQ(means[0].method, "kd");
  EXPECT_EQ(means[0].seed, "mean");
  EXPECT_EQ(means[0].combined_acc, 0.75);
  EXPECT_EQ(means[0].subtask_accs, (std::vector<double>{0.5, 0.25}));
  EXPECT_EQ(means[1].combined_acc, 0.5);
  EXPECT_EQ(means[1].subtask_accs, (std::vector<double>{0.75, 0.75}));
}

TEST(MeanRowsTest, OverlapSeparatesGroups) {
  ReportRow a = Row("ours", "1", 0.5, {}), b = Row("ours", "1", 1.0, {});
  b.overlap_count = 1;
  const ReportRow rows[] = {a, b};
  EXPECT_EQ(MeanRows(rows).size(), 2u);
}

nlohmann::json TinyConfig() {
  return nlohmann::json::parse(R"({
    "data": {"num_classes": 4, "input_dim": 4, "samples_per_class": 20, "seed": 3},
    "split": {"n_parts": 2, "overlap_count": 0},
    "teachers": [{"hidden_widths": [6]}, {"hidden_widths": [5, 5]}],
    "student": {"hidden_widths": [8]},
    "train": {"d_align": 4, "d_common": 2, "lr": 0.01, "batch_size": 16, "epochs": 2, "seed": 3},
    "matrix": {"seeds": [5], "methods": ["ours", "kd", "ensemble", "gt"]}
  })");
}

TEST(MatrixTest, OneCellOneSeedGivesOneRowPerMethod) {
  EvalReport report = RunExperimentMatrix(ExperimentConfig::FromJson(TinyConfig()));
  std::map<std::string, int> numeric, mean;
  for (const ReportRow &r : report.rows) ++(r.seed == "mean" ? mean : numeric)[r.method];
  for (const char *m : {"ours", "kd", "ensemble", "gt"}) {
    EXPECT_EQ(numeric[m], 1) << m;
    EXPECT_EQ(mean[m], 1) << m;
  }
  EXPECT_EQ(report.seeds, std::vector<std::uint64_t>{5});
  // Teacher rows carry only their own subtask.
  for (const ReportRow &r : report.rows) {
    const std::size_t expected = r.method.rfind("teacher", 0) == 0 ? 1u : 2u;
    EXPECT_EQ(r.subtask_accs.size(), expected) << r.method;
  }
}

TEST(MatrixTest, ReportCsvAndJson) {
  TempDir dir("report");
  EvalReport report;
  report.rows = {Row("ours", "1", 0.5, {1.0, 0.25})};
  report.config = TinyConfig();
  report.seeds = {1};
  WriteReport(report, dir / "r.csv");
  const auto lines = testing::ReadLines(dir / "r.csv");
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "method,arch,n_teachers,alpha,seed,combined_acc,subtask_accs");
  EXPECT_EQ(lines[1], "ours,a,2,0.5,1,0.5,\"[1.0,0.25]\"");
  nlohmann::json doc = nlohmann::json::parse(testing::ReadFile(dir / "r.json"));
  EXPECT_EQ(doc["config"], TinyConfig());
  EXPECT_EQ(doc["rows"].size(), 1u);
}

}  // namespace
}  // namespace amalgam
