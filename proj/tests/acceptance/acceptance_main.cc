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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Criteria 1-6 are property checks on small fixtures;
// 7-10 run the 16-class directional fixture from configs/fixture.json.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "amalgam/config.h"
#include "amalgam/error.h"
#include "amalgam/evaluation.h"
#include "amalgam/experiment.h"
#include "amalgam/gradient_check.h"
#include "amalgam/mmd.h"
#include "amalgam/ops.h"
#include "amalgam/trainer.h"
#include "cli.h"
#include "micro_fixture.h"

namespace amalgam {
namespace {

namespace fs = std::filesystem;
using testing::BlobInputs;
using testing::MicroFixture;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

Tensor Random(const Shape &shape, Rng &rng, bool grad = false, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  std::vector<double> v(n);
  for (double &e : v) e = u(rng);
  return Tensor::FromData(shape, std::move(v), grad);
}

std::size_t Pick(Rng &rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::vector<std::vector<double>> Snapshot(const ParameterList &params) {
  std::vector<std::vector<double>> out;
  for (const NamedTensor &p : params) {
    auto v = p.tensor.values();
    out.emplace_back(v.begin(), v.end());
  }
  return out;
}

bool StartsWith(const std::string &s, const std::string &prefix) {
  return s.rfind(prefix, 0) == 0;
}

// ---- 1: MMD axioms ---------------------------------------------------------

double OracleKernel(const KernelSpec &spec, const double *a, const double *b, std::size_t d) {
  double dot = 0.0, sq = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    dot += a[k] * b[k];
    sq += (a[k] - b[k]) * (a[k] - b[k]);
  }
  return spec.kind == KernelKind::kLinear ? dot : std::exp(-sq / (2.0 * *spec.bandwidth_sq));
}

// Biased estimator written as three explicit double sums.
double OracleMmd(const Tensor &x, const Tensor &y, const KernelSpec &spec) {
  const std::size_t n = x.rows(), m = y.rows(), d = x.cols();
  const double *X = x.values().data(), *Y = y.values().data();
  double xx = 0, xy = 0, yy = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) xx += OracleKernel(spec, X + i * d, X + j * d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) xy += OracleKernel(spec, X + i * d, Y + j * d, d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) yy += OracleKernel(spec, Y + i * d, Y + j * d, d);
  return xx / double(n * n) - 2.0 * xy / double(n * m) + yy / double(m * m);
}

Outcome MmdAxioms() {
  Rng rng = MakeRng(1, "acceptance/mmd");
  double min_value = 0.0, worst_sym = 0.0, worst_self = 0.0, worst_oracle = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = Pick(rng, 1, 5);
    FeatureSet x = FeatureSet::Normalized(Random({Pick(rng, 2, 8), d}, rng));
    FeatureSet y = FeatureSet::Normalized(Random({Pick(rng, 2, 8), d}, rng));
    for (const KernelSpec &spec :
         {KernelSpec::RbfMedian(), KernelSpec::Rbf(0.3), KernelSpec::Linear()}) {
      const double xy = MmdLoss(x, y, spec).item();
      min_value = std::min(min_value, xy);
      worst_sym = std::max(worst_sym, std::abs(xy - MmdLoss(y, x, spec).item()));
      worst_self = std::max(worst_self, std::abs(MmdLoss(x, x, spec).item()));
    }
  }
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = Pick(rng, 1, 3);
    Tensor x = Random({Pick(rng, 1, 4), d}, rng, false, -2, 2);
    Tensor y = Random({Pick(rng, 1, 4), d}, rng, false, -2, 2);
    const FeatureSet fx = FeatureSet::Wrap(x), fy = FeatureSet::Wrap(y);
    std::vector<KernelSpec> specs{KernelSpec::Rbf(0.7), KernelSpec::Linear()};
    if (x.rows() + y.rows() >= 2) {
      const FeatureSet pooled[] = {fx, fy};
      specs.push_back(ResolveKernel(KernelSpec::RbfMedian(), pooled));
    }
    for (const KernelSpec &spec : specs)
      worst_oracle =
          std::max(worst_oracle, std::abs(MmdLoss(fx, fy, spec).item() - OracleMmd(x, y, spec)));
  }
  Outcome o;
  o.pass = min_value >= -1e-10 && worst_sym <= 1e-12 && worst_self <= 1e-12 &&
           worst_oracle <= 1e-12;
  o.detail = "min=" + Num(min_value) + " sym=" + Num(worst_sym) + " self=" + Num(worst_self) +
             " oracle=" + Num(worst_oracle);
  return o;
}

// ---- 2: gradients -----------------------------------------------------------

Outcome Gradients() {
  double worst_op = 0.0;
  std::string worst_name;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng = MakeRng(seed, "acceptance/ops");
    auto dim = [&] { return Pick(rng, 1, 8); };
    auto check = [&](const std::string &name, const std::function<Tensor(std::vector<Tensor> &)> &f,
                     std::vector<Tensor> inputs) {
      Rng prng = MakeRng(seed, "acceptance/project/" + name);
      std::optional<Tensor> probe;
      auto loss = [&] {
        Tensor y = f(inputs);
        if (!probe) {
          // Probe weights of magnitude 0.5..1.5 keep every gradient entry
          // well above the round-off floor of the central difference.
          probe = Random(y.shape(), prng, false, 0.5, 1.5);
          for (double &w : probe->mutable_values())
            if (std::bernoulli_distribution(0.5)(prng)) w = -w;
        }
        return Sum(Mul(y, *probe));
      };
      // h near cbrt(machine eps) balances truncation against round-off.
      const double err = FiniteDiffCheck(loss, inputs, 1e-5).max_relative_error;
      if (err > worst_op) {
        worst_op = err;
        worst_name = name;
      }
    };
    const std::size_t b = dim(), in = dim(), out = dim();
    check("affine", [](auto &p) { return Affine(p[0], p[1], p[2]); },
          {Random({out, in}, rng, true), Random({out}, rng, true), Random({b, in}, rng, true)});
    Tensor r = Random({dim(), dim()}, rng, true);
    for (double &v : r.mutable_values()) v += v >= 0 ? 0.1 : -0.1;
    check("relu", [](auto &p) { return Relu(p[0]); }, {r});
    const Shape s{dim(), dim()};
    check("add_sub_mul", [](auto &p) { return Mul(Sub(p[0], p[1]), Add(p[0], p[2])); },
          {Random(s, rng, true), Random(s, rng, true), Random(s, rng, true)});
    check("scale_sum_mean",
          [](auto &p) { return Add(Scale(Sum(Mul(p[0], p[0])), -0.7), Mean(p[0])); },
          {Random({dim(), dim()}, rng, true)});
    check("l2_normalize", [](auto &p) { return L2NormalizeRows(p[0]); },
          {Random({dim(), std::max<std::size_t>(2, dim())}, rng, true, 0.2, 1.0)});
    check("row_norms", [](auto &p) { return RowNorms(p[0]); },
          {Random({dim(), dim()}, rng, true, 0.2, 1.0)});
    const std::size_t rows = dim();
    check("concat", [](auto &p) { return ConcatColumns(p); },
          {Random({rows, dim()}, rng, true), Random({rows, dim()}, rng, true)});
    const std::size_t classes = std::max<std::size_t>(2, dim());
    std::vector<int> labels(b);
    for (int &l : labels) l = static_cast<int>(Pick(rng, 0, classes - 1));
    check("softmax_ce", [&](auto &p) { return SoftmaxCrossEntropy(p[0], labels); },
          {Random({b, classes}, rng, true, -3, 3)});
  }

  // Full objective on the micro fixture, biases lifted off the normalization
  // kink, bandwidth fixed so the stencil sees the backward kernel.
  double worst_full = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (Method method : {Method::kOurs, Method::kAblationNoExtractor}) {
      MicroFixture fx(seed);
      if (method == Method::kAblationNoExtractor) fx.config.d_common = fx.config.d_align;
      AmalgamNet net = fx.SmoothNet(method);
      TeacherBatch tb = RunTeachers(fx.teachers, fx.x);
      std::vector<Tensor> params = TensorsOf(net.Parameters());
      auto loss = [&] {
        return AmalgamationObjective(net, tb, fx.x, 0.5, KernelSpec::Rbf(0.8), method).total;
      };
      worst_full = std::max(worst_full, FiniteDiffCheck(loss, params, 1e-6).max_relative_error);
    }
  }
  Outcome o;
  o.pass = worst_op <= 1e-6 && worst_full <= 1e-4;
  o.detail = "ops=" + Num(worst_op) + " (" + worst_name + ") objective=" + Num(worst_full);
  return o;
}

// ---- 3-5: trainer properties ------------------------------------------------

TrainConfig ShortRun(const MicroFixture &fx, double alpha, Method method) {
  TrainConfig c = fx.config;
  c.alpha = alpha;
  c.epochs = 6;
  c.batch_size = 16;
  if (method == Method::kAblationNoExtractor) c.d_common = c.d_align;
  return c;
}

const Method kMethods[] = {Method::kOurs, Method::kKd, Method::kAblationAe,
                           Method::kAblationNoExtractor};

Outcome Decomposition() {
  double worst = 0.0;
  std::size_t records = 0;
  for (std::uint64_t seed : {1, 2}) {
    MicroFixture fx(seed);
    const UnlabeledInputs inputs = BlobInputs(40, 6, seed);
    for (Method m : kMethods) {
      for (double alpha : {0.0, 0.3, 0.5, 1.0}) {
        for (const MetricsRecord &r :
             Amalgamate(fx.teachers, fx.student, inputs, ShortRun(fx, alpha, m), m).metrics) {
          worst = std::max(worst, std::abs(r.total - (r.alpha * r.l_c +
                                                      (1 - r.alpha) * (r.l_m + r.l_r))));
          ++records;
        }
      }
    }
  }
  return {worst <= 1e-12, std::to_string(records) + " records, worst=" + Num(worst)};
}

nlohmann::json TinyConfig() {
  return nlohmann::json::parse(R"({
    "data": {"num_classes": 4, "input_dim": 4, "samples_per_class": 20, "seed": 3},
    "split": {"n_parts": 2},
    "teachers": [{"hidden_widths": [6]}, {"hidden_widths": [5, 5]}],
    "student": {"hidden_widths": [8]},
    "train": {"d_align": 4, "d_common": 2, "lr": 0.01, "batch_size": 16, "epochs": 4, "seed": 3},
    "teacher_train": {"epochs": 5},
    "data_dir": "data",
    "matrix": {"seeds": [3], "methods": ["ours", "kd", "ensemble", "gt"]}
  })");
}

Outcome FrozenAndLabelBlind() {
  bool frozen = true;
  for (Method m : kMethods) {
    MicroFixture fx(5);
    std::vector<std::vector<std::vector<double>>> before;
    for (const TeacherModel &t : fx.teachers) before.push_back(Snapshot(t.Parameters()));
    Amalgamate(fx.teachers, fx.student, BlobInputs(40, 6, 5), ShortRun(fx, 0.5, m), m);
    for (std::size_t i = 0; i < fx.teachers.size(); ++i)
      frozen = frozen && Snapshot(fx.teachers[i].Parameters()) == before[i];
  }

  // Labels are available to the trainer entry point but must not matter.
  const ExperimentConfig config = ExperimentConfig::FromJson(TinyConfig());
  PreparedTask task = PrepareTask(config);
  Dataset permuted = task.data.train;
  Rng rng = MakeRng(9, "acceptance/labels");
  std::shuffle(permuted.labels.begin(), permuted.labels.end(), rng);
  for (int &y : permuted.labels) y = (y + 1) % 4;
  bool blind = true;
  for (const char *method : {"ours", "kd", "ablation_ae", "ablation_noext"}) {
    TrainedStudent a = TrainStudent(config, task.data.train, task.teachers, task.split, method);
    TrainedStudent b = TrainStudent(config, permuted, task.teachers, task.split, method);
    blind = blind && Snapshot(a.checkpoint.net.Parameters()) ==
                         Snapshot(b.checkpoint.net.Parameters());
    for (std::size_t e = 0; e < a.metrics.size(); ++e)
      blind = blind && a.metrics[e].total == b.metrics[e].total;
  }
  return {frozen && blind, std::string("teachers ") + (frozen ? "unchanged" : "CHANGED") +
                               ", label permutation " + (blind ? "bit-identical" : "DIFFERS")};
}

bool AllZero(const std::vector<double> &g) {
  return std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; });
}

Outcome AlphaRouting() {
  std::size_t arrays = 0;
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    MicroFixture fx(seed);
    TeacherBatch tb = RunTeachers(fx.teachers, fx.x);
    {
      AmalgamNet net = fx.Net();
      AmalgamationObjective(net, tb, fx.x, 1.0, KernelSpec::RbfMedian(), Method::kOurs)
          .total.Backward();
      for (const NamedTensor &p : net.Parameters()) {
        if (StartsWith(p.name, "decoder.") || StartsWith(p.name, "extractor.")) {
          ok = ok && AllZero(p.tensor.grad());
          ++arrays;
        }
      }
    }
    {
      AmalgamNet net = fx.Net();
      AmalgamationObjective(net, tb, fx.x, 0.0, KernelSpec::RbfMedian(), Method::kOurs)
          .total.Backward();
      ok = ok && AllZero(net.student().head().weight().grad()) &&
           AllZero(net.student().head().bias().grad());
      arrays += 2;
      // The other terms must still be live, or the check above is vacuous.
      ok = ok && !AllZero(net.extractor().block(0).inner().weight().grad());
    }
  }
  return {ok, std::to_string(arrays) + " gradient arrays checked"};
}

// ---- 6: determinism through the command line --------------------------------

int Tool(std::vector<std::string> args, std::string *err_text = nullptr) {
  args.insert(args.begin(), "amalgam");
  std::vector<const char *> argv;
  for (const std::string &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

void RunPipeline(const fs::path &dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto p = [&](const std::string &leaf) { return (dir / leaf).string(); };
  std::ofstream(dir / "cfg.json") << TinyConfig().dump(2);
  std::vector<std::vector<std::string>> commands{
      {"gen-data", "--config", p("cfg.json"), "--out", p("data")},
      {"train-teacher", "--config", p("cfg.json"), "--part", "0", "--out", p("t0.json")},
      {"train-teacher", "--config", p("cfg.json"), "--part", "1", "--out", p("t1.json")}};
  for (const char *method : {"ours", "kd", "ablation_ae", "ablation_noext", "gt"}) {
    nlohmann::json doc = TinyConfig();
    doc["method"] = method;
    const std::string cfg = p(std::string("cfg_") + method + ".json");
    std::ofstream(cfg) << doc.dump(2);
    commands.push_back({"amalgamate", "--config", cfg, "--teachers", p("t0.json"), p("t1.json"),
                        "--out", p(std::string("s_") + method + ".json"), "--metrics",
                        p(std::string("m_") + method + ".csv")});
    commands.push_back({"evaluate", "--config", cfg, "--model",
                        p(std::string("s_") + method + ".json"), "--report",
                        p(std::string("r_") + method + ".csv")});
  }
  commands.push_back({"export-features", "--model", p("s_ours.json"), "--teachers", p("t0.json"),
                      p("t1.json"), "--data", p("data"), "--out", p("features.csv")});
  commands.push_back(
      {"evaluate", "--config", p("cfg.json"), "--matrix", "--report", p("matrix.csv")});
  for (const auto &c : commands) {
    std::string err;
    if (Tool(c, &err) != 0) throw Error("internal", c[0] + " failed: " + err);
  }
}

std::map<std::string, std::string> Artifacts(const fs::path &dir) {
  std::map<std::string, std::string> files;
  for (const auto &entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    files[fs::relative(entry.path(), dir).string()] = text.str();
  }
  return files;
}

Outcome Determinism() {
  const fs::path root = fs::temp_directory_path() / "amalgam_acceptance_determinism";
  RunPipeline(root / "a");
  RunPipeline(root / "b");
  const auto a = Artifacts(root / "a"), b = Artifacts(root / "b");
  std::size_t differing = 0;
  for (const auto &[name, bytes] : a) {
    auto it = b.find(name);
    if (it == b.end() || it->second != bytes) ++differing;
  }
  fs::remove_all(root);
  return {differing == 0 && a.size() == b.size(),
          std::to_string(a.size()) + " artifacts, " + std::to_string(differing) + " differ"};
}

// ---- 7-10: directional fixture ----------------------------------------------

struct FixtureResults {
  std::map<std::string, double> mean;  // method -> mean combined accuracy
  double overlap_ours = 0.0;
  double seconds = 0.0;
};

double MeanOf(const EvalReport &report, const std::string &method) {
  for (const ReportRow &r : report.rows)
    if (r.seed == "mean" && r.method == method) return r.combined_acc;
  throw Error("internal", "no mean row for " + method);
}

FixtureResults RunFixture() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig config = ExperimentConfig::Load(AMALGAM_SOURCE_DIR "/configs/fixture.json");
  MatrixSpec spec;
  spec.seeds = {1, 2, 3};
  spec.methods = {"ours", "kd", "ablation_ae", "ablation_noext", "ensemble"};
  spec.overlap_counts = {0};
  config.matrix = spec;
  const EvalReport base = RunExperimentMatrix(config);

  config.matrix->methods = {"ours"};
  config.matrix->overlap_counts = {2};
  const EvalReport overlap = RunExperimentMatrix(config);

  FixtureResults out;
  for (const ReportRow &r : base.rows) {
    if (r.seed != "mean") {
      std::cout << "  seed " << r.seed << ' ' << r.method << " combined_acc=" << Num(r.combined_acc)
                << '\n';
    } else {
      out.mean[r.method] = r.combined_acc;
    }
  }
  for (const ReportRow &r : overlap.rows)
    if (r.seed != "mean")
      std::cout << "  seed " << r.seed << " ours overlap=2 combined_acc=" << Num(r.combined_acc)
                << '\n';
  out.overlap_ours = MeanOf(overlap, "ours");
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

int failures = 0;

void Report(int id, const std::string &name, const std::function<Outcome()> &run) {
  Outcome o;
  try {
    o = run();
  } catch (const std::exception &e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ' ' << name << ": "
            << o.detail << std::endl;
}

int Main() {
  const auto start = std::chrono::steady_clock::now();
  Report(1, "mmd-axioms", MmdAxioms);
  Report(2, "gradient-correctness", Gradients);
  Report(3, "loss-decomposition", Decomposition);
  Report(4, "teacher-frozen-label-blind", FrozenAndLabelBlind);
  Report(5, "alpha-routing", AlphaRouting);
  Report(6, "determinism", Determinism);
  const double property_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "property suite time " << Num(property_seconds) << " s" << std::endl;

  FixtureResults fx;
  std::string fixture_error;
  try {
    fx = RunFixture();
    std::cout << "fixture time " << Num(fx.seconds) << " s" << std::endl;
  } catch (const std::exception &e) {
    fixture_error = std::string("fixture failed: ") + e.what();
  }
  auto fixture = [&](const std::function<Outcome()> &f) {
    return [&, f] { return fixture_error.empty() ? f() : Outcome{false, fixture_error}; };
  };
  auto mean = [&](const std::string &m) { return fx.mean.at(m); };

  Report(7, "student-beats-teachers-and-ensemble", fixture([&] {
           const double s = mean("ours");
           const double t0 = mean("teacher0"), t1 = mean("teacher1"), e = mean("ensemble");
           return Outcome{s > t0 && s > t1 && s > e,
                          "ours=" + Num(s) + " teacher0=" + Num(t0) + " teacher1=" + Num(t1) +
                              " ensemble=" + Num(e)};
         }));
  Report(8, "ours-vs-kd", fixture([&] {
           return Outcome{mean("ours") >= mean("kd"),
                          "ours=" + Num(mean("ours")) + " kd=" + Num(mean("kd"))};
         }));
  Report(9, "ours-vs-ablations", fixture([&] {
           const double s = mean("ours"), ae = mean("ablation_ae"), ne = mean("ablation_noext");
           return Outcome{s >= ae && s >= ne, "ours=" + Num(s) + " ablation_ae=" + Num(ae) +
                                                  " ablation_noext=" + Num(ne)};
         }));
  Report(10, "overlap-sanity", fixture([&] {
           const double gap = std::abs(fx.overlap_ours - mean("ours"));
           return Outcome{gap <= 0.05, "overlap2=" + Num(fx.overlap_ours) +
                                           " disjoint=" + Num(mean("ours")) + " gap=" + Num(gap)};
         }));

  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed")
            << std::endl;
  return failures ? 1 : 0;
}

}  // namespace
}  // namespace amalgam

int main() { return amalgam::Main(); }
