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

#ifndef NORMSIM_ERROR_H_
#define NORMSIM_ERROR_H_

#include <stdexcept>
#include <string>

namespace normsim {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files (JSON syntax, missing profiles, unknown names).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Configuration rejected by validation. The message lists every violation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An agent or oracle produced something the environment cannot accept.
class OracleError : public Error {
 public:
  using Error::Error;
};

}  // namespace normsim

#endif  // NORMSIM_ERROR_H_
