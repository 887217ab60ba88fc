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

#ifndef AMALGAM_ERROR_H_
#define AMALGAM_ERROR_H_

#include <stdexcept>
#include <string>

namespace amalgam {

// All library failures derive from Error. The category is a short stable
// token ("dimension", "config", ...) that the CLI prints as
// "ERROR <category>: <message>".
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string &message)
      : std::runtime_error(message), category_(std::move(category)) {}
  const std::string &category() const { return category_; }

 private:
  std::string category_;
};

#define AMALGAM_DEFINE_ERROR(Name, token)                          \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string &message) : Error(token, message) {} \
  };

AMALGAM_DEFINE_ERROR(DimensionError, "dimension")
AMALGAM_DEFINE_ERROR(ContractError, "contract")
AMALGAM_DEFINE_ERROR(NumericError, "numeric")
AMALGAM_DEFINE_ERROR(ConfigError, "config")
AMALGAM_DEFINE_ERROR(DataError, "data")
AMALGAM_DEFINE_ERROR(IoError, "io")
AMALGAM_DEFINE_ERROR(ParseError, "parse")
AMALGAM_DEFINE_ERROR(SchemaError, "schema")

#undef AMALGAM_DEFINE_ERROR

}  // namespace amalgam

#endif  // AMALGAM_ERROR_H_
