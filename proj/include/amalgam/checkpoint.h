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

#ifndef AMALGAM_CHECKPOINT_H_
#define AMALGAM_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "amalgam/models.h"
#include "json.hpp"

namespace amalgam {

// Checkpoints are single JSON documents:
//   {"format_version": 1, "kind": ..., <arch fields>,
//    "parameters": {"<name>": {"shape": [...], "data": [...]}, ...}}
// Doubles are written in shortest round-trip form, so save -> load is
// bit-exact.
inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json ArchToJson(const ArchSpec &arch);
ArchSpec ArchFromJson(const nlohmann::json &j);

nlohmann::json ParametersToJson(const ParameterList &params);
// Copies stored values into existing tensors by name. Missing, extra or
// mis-shaped entries raise ParseError.
void LoadParameters(const nlohmann::json &stored, const ParameterList &target);

void WriteJsonFile(const nlohmann::json &doc, const std::filesystem::path &path);
nlohmann::json ReadJsonFile(const std::filesystem::path &path);

void SaveTeacher(const TeacherModel &teacher, std::uint64_t seed,
                 const std::filesystem::path &path);
TeacherModel LoadTeacher(const std::filesystem::path &path);

// A trained student: either a full AmalgamNet (ours, kd, ablations) or a
// plain classifier trained with labels (gt).
struct StudentCheckpoint {
  std::string method;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  // Class subset of every teacher, in score-slot order. A gt classifier has
  // a single part listing the classes in order.
  std::vector<std::vector<int>> teacher_parts;
  bool has_net = false;
  AmalgamNet net;
  Classifier classifier;

  const Classifier &student() const { return has_net ? net.student() : classifier; }
  std::vector<int> MergeMap() const;
};

void SaveStudent(const StudentCheckpoint &checkpoint, const std::filesystem::path &path);
StudentCheckpoint LoadStudent(const std::filesystem::path &path);

}  // namespace amalgam

#endif  // AMALGAM_CHECKPOINT_H_
