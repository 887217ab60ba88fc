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

#include "amalgam/config.h"

#include <cstdio>
#include <set>

#include "amalgam/checkpoint.h"
#include "amalgam/error.h"
#include "amalgam/random.h"

namespace amalgam {

using nlohmann::json;

namespace {

// Rejects keys outside `allowed`.
void CheckKeys(const json &j, const std::set<std::string> &allowed,
               const std::string &where) {
  if (!j.is_object()) throw SchemaError(where + " must be a JSON object");
  for (const auto &[key, _] : j.items()) {
    if (!allowed.count(key))
      throw SchemaError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <typename T>
void Read(const json &j, const char *key, T &out, const std::string &where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception &) {
    throw SchemaError("key '" + where + "." + key + "' has the wrong type");
  }
}

template <typename T>
void ReadOptional(const json &j, const char *key, std::optional<T> &out,
                  const std::string &where) {
  if (!j.contains(key)) return;
  T value{};
  Read(j, key, value, where);
  out = value;
}

const json &Section(const json &doc, const char *key) {
  if (!doc.contains(key)) throw SchemaError(std::string("missing section '") + key + "'");
  return doc.at(key);
}

ArchEntry ParseArch(const json &j, const std::string &where) {
  CheckKeys(j, {"input_dim", "hidden_widths", "feature_dim", "num_classes"}, where);
  ArchEntry entry;
  if (!j.contains("hidden_widths")) throw SchemaError("missing key '" + where + ".hidden_widths'");
  Read(j, "hidden_widths", entry.hidden_widths, where);
  ReadOptional(j, "input_dim", entry.input_dim, where);
  ReadOptional(j, "feature_dim", entry.feature_dim, where);
  ReadOptional(j, "num_classes", entry.num_classes, where);
  return entry;
}

json ArchEntryToJson(const ArchEntry &entry) {
  json j{{"hidden_widths", entry.hidden_widths}};
  if (entry.input_dim) j["input_dim"] = *entry.input_dim;
  if (entry.feature_dim) j["feature_dim"] = *entry.feature_dim;
  if (entry.num_classes) j["num_classes"] = *entry.num_classes;
  return j;
}

void ParseTrain(const json &j, TrainConfig &cfg, const std::string &where) {
  CheckKeys(j, {"alpha", "kernel", "d_align", "d_common", "lr", "batch_size", "epochs",
                "seed", "shared_extractor"},
            where);
  Read(j, "alpha", cfg.alpha, where);
  if (j.contains("kernel")) {
    std::string kernel;
    Read(j, "kernel", kernel, where);
    cfg.kernel = KernelSpec::Parse(kernel);
  }
  Read(j, "d_align", cfg.d_align, where);
  Read(j, "d_common", cfg.d_common, where);
  Read(j, "lr", cfg.lr, where);
  Read(j, "batch_size", cfg.batch_size, where);
  Read(j, "epochs", cfg.epochs, where);
  Read(j, "seed", cfg.seed, where);
  Read(j, "shared_extractor", cfg.shared_extractor, where);
}

json TrainToJson(const TrainConfig &cfg) {
  return json{{"alpha", cfg.alpha},
              {"kernel", cfg.kernel.ToString()},
              {"d_align", cfg.d_align},
              {"d_common", cfg.d_common},
              {"lr", cfg.lr},
              {"batch_size", cfg.batch_size},
              {"epochs", cfg.epochs},
              {"seed", cfg.seed},
              {"shared_extractor", cfg.shared_extractor}};
}

}  // namespace

ArchSpec ArchEntry::Resolve(std::size_t input, std::size_t classes,
                            const std::string &where) const {
  ArchSpec arch;
  arch.input_dim = input;
  arch.hidden_widths = hidden_widths;
  if (hidden_widths.empty()) throw ConfigError(where + ": hidden_widths must be non-empty");
  arch.feature_dim = hidden_widths.back();
  arch.num_classes = classes;
  if (input_dim && *input_dim != input)
    throw ConfigError(where + ": input_dim " + std::to_string(*input_dim) +
                      " disagrees with the data width " + std::to_string(input));
  if (feature_dim && *feature_dim != arch.feature_dim)
    throw ConfigError(where + ": feature_dim must equal the last hidden width");
  if (num_classes && *num_classes != classes)
    throw ConfigError(where + ": num_classes " + std::to_string(*num_classes) +
                      " disagrees with the " + std::to_string(classes) +
                      " classes it is assigned");
  arch.Validate();
  return arch;
}

ExperimentConfig ExperimentConfig::FromJson(const json &doc) {
  CheckKeys(doc, {"data", "split", "teachers", "student", "train", "teacher_train",
                  "method", "merge_rule", "data_dir", "matrix"},
            "");
  ExperimentConfig cfg;

  const json &data = Section(doc, "data");
  CheckKeys(data, {"num_classes", "input_dim", "samples_per_class", "center_scale",
                   "noise_sigma", "seed"},
            "data");
  Read(data, "num_classes", cfg.data.num_classes, "data");
  Read(data, "input_dim", cfg.data.input_dim, "data");
  Read(data, "samples_per_class", cfg.data.samples_per_class, "data");
  Read(data, "center_scale", cfg.data.center_scale, "data");
  Read(data, "noise_sigma", cfg.data.noise_sigma, "data");
  Read(data, "seed", cfg.data.seed, "data");

  const json &split = Section(doc, "split");
  CheckKeys(split, {"n_parts", "overlap_count"}, "split");
  Read(split, "n_parts", cfg.n_parts, "split");
  Read(split, "overlap_count", cfg.overlap_count, "split");

  const json &teachers = Section(doc, "teachers");
  if (!teachers.is_array() || teachers.empty())
    throw SchemaError("'teachers' must be a non-empty array");
  for (std::size_t i = 0; i < teachers.size(); ++i)
    cfg.teachers.push_back(ParseArch(teachers[i], "teachers[" + std::to_string(i) + "]"));
  cfg.student = ParseArch(Section(doc, "student"), "student");

  ParseTrain(Section(doc, "train"), cfg.train, "train");
  cfg.teacher_train = cfg.train;
  if (doc.contains("teacher_train")) ParseTrain(doc.at("teacher_train"), cfg.teacher_train, "teacher_train");

  Read(doc, "method", cfg.method, "");
  if (doc.contains("merge_rule")) {
    std::string rule;
    Read(doc, "merge_rule", rule, "");
    cfg.merge_rule = ParseMergeRule(rule);
  }
  Read(doc, "data_dir", cfg.data_dir, "");

  if (doc.contains("matrix")) {
    const json &m = doc.at("matrix");
    CheckKeys(m, {"seeds", "methods", "alphas", "overlap_counts", "teacher_counts"}, "matrix");
    MatrixSpec spec;
    Read(m, "seeds", spec.seeds, "matrix");
    Read(m, "methods", spec.methods, "matrix");
    Read(m, "alphas", spec.alphas, "matrix");
    Read(m, "overlap_counts", spec.overlap_counts, "matrix");
    Read(m, "teacher_counts", spec.teacher_counts, "matrix");
    cfg.matrix = spec;
  }

  // Semantic checks.
  cfg.data.Validate();
  cfg.train.Validate();
  cfg.teacher_train.Validate();
  static const std::set<std::string> kMethods{"ours", "kd", "ensemble", "gt",
                                              "ablation_ae", "ablation_noext"};
  if (!kMethods.count(cfg.method)) throw ConfigError("unknown method '" + cfg.method + "'");
  if (cfg.n_parts == 0 || cfg.teachers.size() < cfg.n_parts)
    throw ConfigError("split.n_parts must be positive and at most the number of teachers");
  if (cfg.matrix) {
    for (const std::string &m : cfg.matrix->methods)
      if (!kMethods.count(m)) throw ConfigError("unknown matrix method '" + m + "'");
    for (std::size_t n : cfg.matrix->teacher_counts)
      if (n == 0 || n > cfg.teachers.size())
        throw ConfigError("matrix.teacher_counts entry " + std::to_string(n) +
                          " exceeds the configured teachers");
    if (cfg.matrix->seeds.empty()) throw ConfigError("matrix.seeds must be non-empty");
  }
  cfg.Split();  // surfaces divisibility/overlap errors early
  return cfg;
}

ExperimentConfig ExperimentConfig::Load(const std::filesystem::path &path) {
  const json doc = ReadJsonFile(path);
  try {
    return FromJson(doc);
  } catch (const SchemaError &e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const ConfigError &e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json ExperimentConfig::ToJson() const {
  json teachers_json = json::array();
  for (const ArchEntry &t : teachers) teachers_json.push_back(ArchEntryToJson(t));
  json doc{{"data",
            {{"num_classes", data.num_classes},
             {"input_dim", data.input_dim},
             {"samples_per_class", data.samples_per_class},
             {"center_scale", data.center_scale},
             {"noise_sigma", data.noise_sigma},
             {"seed", data.seed}}},
           {"split", {{"n_parts", n_parts}, {"overlap_count", overlap_count}}},
           {"teachers", teachers_json},
           {"student", ArchEntryToJson(student)},
           {"train", TrainToJson(train)},
           {"teacher_train", TrainToJson(teacher_train)},
           {"method", method},
           {"merge_rule", MergeRuleName(merge_rule)},
           {"data_dir", data_dir}};
  if (matrix) {
    doc["matrix"] = json{{"seeds", matrix->seeds},
                         {"methods", matrix->methods},
                         {"alphas", matrix->alphas},
                         {"overlap_counts", matrix->overlap_counts},
                         {"teacher_counts", matrix->teacher_counts}};
  }
  return doc;
}

void ExperimentConfig::OverrideSeed(std::uint64_t seed) {
  data.seed = seed;
  train.seed = seed;
  teacher_train.seed = seed;
}

TaskSplit ExperimentConfig::Split() const {
  return SplitClasses(data.num_classes, n_parts, overlap_count, data.seed);
}

ArchSpec ExperimentConfig::TeacherArch(std::size_t index, const TaskSplit &split) const {
  if (index >= split.parts.size() || index >= teachers.size())
    throw ConfigError("no teacher " + std::to_string(index) + " in this split");
  return teachers[index].Resolve(data.input_dim, split.parts[index].size(),
                                 "teachers[" + std::to_string(index) + "]");
}

ArchSpec ExperimentConfig::StudentArch(const TaskSplit &split) const {
  return student.Resolve(data.input_dim, split.merge_map.size(), "student");
}

TrainConfig ExperimentConfig::TeacherTrainConfig(std::size_t index) const {
  TrainConfig cfg = teacher_train;
  cfg.seed = DeriveSeed(teacher_train.seed, "teacher/" + std::to_string(index));
  return cfg;
}

std::string ConfigDigest(const json &doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace amalgam
