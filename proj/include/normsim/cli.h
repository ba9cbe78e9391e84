// Copyright 2026 The normsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NORMSIM_CLI_H_
#define NORMSIM_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace normsim {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // a run failed or a verification did not pass
inline constexpr int kExitUsage = 2;    // bad flags, files or configs

// Entry point of the normsim tool. `args` excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace normsim

#endif  // NORMSIM_CLI_H_
