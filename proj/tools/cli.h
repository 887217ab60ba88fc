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

#ifndef AMALGAM_TOOLS_CLI_H_
#define AMALGAM_TOOLS_CLI_H_

#include <ostream>

namespace amalgam {

// Entry point of the `amalgam` tool. Returns the process exit code:
// 0 on success, 1 on a library error, 2 on a usage error. Errors are
// written to `err` as one line "ERROR <category>: <message>".
int RunCli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace amalgam

#endif  // AMALGAM_TOOLS_CLI_H_
