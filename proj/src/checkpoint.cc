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

#include "amalgam/checkpoint.h"

#include <fstream>
#include <set>

#include "amalgam/error.h"

namespace amalgam {

using nlohmann::json;

namespace {

// nlohmann's typed getters throw their own exceptions; fold them into ours.
template <typename T>
T Get(const json &j, const char *key, const std::string &where) {
  if (!j.is_object() || !j.contains(key))
    throw ParseError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &e) {
    throw ParseError(where + ": bad field '" + key + "': " + e.what());
  }
}

void RequireKind(const json &doc, const std::string &kind, const std::string &where) {
  const int version = Get<int>(doc, "format_version", where);
  if (version != kCheckpointFormatVersion)
    throw ParseError(where + ": unsupported format_version " + std::to_string(version));
  const std::string actual = Get<std::string>(doc, "kind", where);
  if (actual != kind)
    throw ParseError(where + ": expected a '" + kind + "' checkpoint, found '" + actual + "'");
}

AmalgamLayout LayoutFromJson(const json &j) {
  AmalgamLayout layout;
  layout.student = ArchFromJson(j.at("student_arch"));
  layout.teacher_feature_dims = Get<std::vector<std::size_t>>(j, "teacher_feature_dims", "checkpoint");
  layout.teacher_class_counts = Get<std::vector<std::size_t>>(j, "teacher_class_counts", "checkpoint");
  layout.d_align = Get<std::size_t>(j, "d_align", "checkpoint");
  layout.d_common = Get<std::size_t>(j, "d_common", "checkpoint");
  layout.shared_extractor = Get<bool>(j, "shared_extractor", "checkpoint");
  layout.autoencoder = Get<bool>(j, "autoencoder", "checkpoint");
  return layout;
}

}  // namespace

json ArchToJson(const ArchSpec &arch) {
  return json{{"input_dim", arch.input_dim},
              {"hidden_widths", arch.hidden_widths},
              {"feature_dim", arch.feature_dim},
              {"num_classes", arch.num_classes}};
}

ArchSpec ArchFromJson(const json &j) {
  ArchSpec arch;
  arch.input_dim = Get<std::size_t>(j, "input_dim", "arch");
  arch.hidden_widths = Get<std::vector<std::size_t>>(j, "hidden_widths", "arch");
  arch.feature_dim = Get<std::size_t>(j, "feature_dim", "arch");
  arch.num_classes = Get<std::size_t>(j, "num_classes", "arch");
  try {
    arch.Validate();
  } catch (const ConfigError &e) {
    throw ParseError(std::string("invalid stored arch: ") + e.what());
  }
  return arch;
}

json ParametersToJson(const ParameterList &params) {
  json out = json::object();
  for (const NamedTensor &p : params) {
    auto values = p.tensor.values();
    out[p.name] = json{{"shape", p.tensor.shape()},
                       {"data", std::vector<double>(values.begin(), values.end())}};
  }
  return out;
}

void LoadParameters(const json &stored, const ParameterList &target) {
  if (!stored.is_object()) throw ParseError("parameters must be an object");
  std::set<std::string> expected;
  for (const NamedTensor &p : target) {
    expected.insert(p.name);
    if (!stored.contains(p.name)) throw ParseError("missing parameter '" + p.name + "'");
    const json &entry = stored.at(p.name);
    const Shape shape = Get<Shape>(entry, "shape", p.name);
    const std::vector<double> data = Get<std::vector<double>>(entry, "data", p.name);
    if (shape != p.tensor.shape() || data.size() != p.tensor.size()) {
      throw ParseError("parameter '" + p.name + "' has shape " + ShapeToString(shape) +
                       ", expected " + ShapeToString(p.tensor.shape()));
    }
    Tensor t = p.tensor;
    std::copy(data.begin(), data.end(), t.mutable_values().begin());
  }
  for (const auto &[name, _] : stored.items())
    if (!expected.count(name)) throw ParseError("unexpected parameter '" + name + "'");
}

void WriteJsonFile(const json &doc, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

json ReadJsonFile(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void SaveTeacher(const TeacherModel &teacher, std::uint64_t seed,
                 const std::filesystem::path &path) {
  json doc{{"format_version", kCheckpointFormatVersion},
           {"kind", "teacher"},
           {"seed", seed},
           {"arch", ArchToJson(teacher.arch())},
           {"class_subset", teacher.class_subset()},
           {"parameters", ParametersToJson(teacher.Parameters())}};
  WriteJsonFile(doc, path);
}

TeacherModel LoadTeacher(const std::filesystem::path &path) {
  const json doc = ReadJsonFile(path);
  const std::string where = path.string();
  RequireKind(doc, "teacher", where);
  try {
    Classifier model(ArchFromJson(doc.at("arch")), 0, "teacher", false);
    LoadParameters(doc.at("parameters"), model.Parameters());
    return TeacherModel(model, Get<std::vector<int>>(doc, "class_subset", where));
  } catch (const ParseError &e) {
    throw ParseError(where + ": " + e.what());
  } catch (const json::exception &e) {
    throw ParseError(where + ": " + e.what());
  }
}

std::vector<int> StudentCheckpoint::MergeMap() const {
  std::vector<int> merge;
  for (const auto &part : teacher_parts) merge.insert(merge.end(), part.begin(), part.end());
  return merge;
}

void SaveStudent(const StudentCheckpoint &ckpt, const std::filesystem::path &path) {
  json doc{{"format_version", kCheckpointFormatVersion},
           {"method", ckpt.method},
           {"alpha", ckpt.alpha},
           {"seed", ckpt.seed},
           {"teacher_parts", ckpt.teacher_parts}};
  if (ckpt.has_net) {
    const AmalgamLayout &layout = ckpt.net.layout();
    doc["kind"] = "amalgam_net";
    doc["student_arch"] = ArchToJson(layout.student);
    doc["teacher_feature_dims"] = layout.teacher_feature_dims;
    doc["teacher_class_counts"] = layout.teacher_class_counts;
    doc["d_align"] = layout.d_align;
    doc["d_common"] = layout.d_common;
    doc["shared_extractor"] = layout.shared_extractor;
    doc["autoencoder"] = layout.autoencoder;
    doc["parameters"] = ParametersToJson(ckpt.net.Parameters());
  } else {
    doc["kind"] = "classifier";
    doc["student_arch"] = ArchToJson(ckpt.classifier.arch());
    doc["parameters"] = ParametersToJson(ckpt.classifier.Parameters());
  }
  WriteJsonFile(doc, path);
}

StudentCheckpoint LoadStudent(const std::filesystem::path &path) {
  const json doc = ReadJsonFile(path);
  const std::string where = path.string();
  StudentCheckpoint ckpt;
  try {
    const std::string kind = Get<std::string>(doc, "kind", where);
    RequireKind(doc, kind == "classifier" ? "classifier" : "amalgam_net", where);
    ckpt.method = Get<std::string>(doc, "method", where);
    ckpt.alpha = Get<double>(doc, "alpha", where);
    ckpt.seed = Get<std::uint64_t>(doc, "seed", where);
    ckpt.teacher_parts = Get<std::vector<std::vector<int>>>(doc, "teacher_parts", where);
    if (kind == "amalgam_net") {
      ckpt.has_net = true;
      ckpt.net = AmalgamNet(LayoutFromJson(doc), 0);
      LoadParameters(doc.at("parameters"), ckpt.net.Parameters());
    } else {
      ckpt.classifier = Classifier(ArchFromJson(doc.at("student_arch")), 0, "student");
      LoadParameters(doc.at("parameters"), ckpt.classifier.Parameters());
    }
  } catch (const ParseError &e) {
    throw ParseError(where + ": " + e.what());
  } catch (const ConfigError &e) {
    throw ParseError(where + ": " + e.what());
  } catch (const json::exception &e) {
    throw ParseError(where + ": " + e.what());
  }
  std::size_t slots = 0;
  for (const auto &part : ckpt.teacher_parts) slots += part.size();
  if (slots != ckpt.student().arch().num_classes)
    throw ParseError(where + ": teacher_parts do not cover the student's score slots");
  return ckpt;
}

}  // namespace amalgam
