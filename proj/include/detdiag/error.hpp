// Copyright 2026 The detdiag Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace detdiag {

// Bad user input: unreadable or malformed files, dangling references,
// out-of-range values, invalid flags. The CLI maps these to exit status 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed document. `where` is a JSON pointer into the offending file.
class ParseError : public InputError {
 public:
  ParseError(const std::string& path, const std::string& where,
             const std::string& what)
      : InputError(path + ": " + (where.empty() ? "" : where + ": ") + what),
        path_(path),
        where_(where),
        detail_(what) {}

  const std::string& path() const { return path_; }
  const std::string& where() const { return where_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string path_;
  std::string where_;
  std::string detail_;
};

// Well-formed input that violates a data-model invariant. Carries every
// offender, not just the first.
class ValidationError : public InputError {
 public:
  ValidationError(const std::string& what, std::vector<std::string> offenders)
      : InputError(Format(what, offenders)), offenders_(std::move(offenders)) {}

  const std::vector<std::string>& offenders() const { return offenders_; }

 private:
  static std::string Format(const std::string& what,
                            const std::vector<std::string>& offenders) {
    std::string msg = what;
    if (!offenders.empty()) {
      msg += " (" + std::to_string(offenders.size()) + " offender" +
             (offenders.size() == 1 ? "" : "s") + ": ";
      const std::size_t shown = std::min<std::size_t>(offenders.size(), 5);
      for (std::size_t i = 0; i < shown; ++i) {
        if (i) msg += ", ";
        msg += offenders[i];
      }
      if (shown < offenders.size()) msg += ", ...";
      msg += ")";
    }
    return msg;
  }

  std::vector<std::string> offenders_;
};

}  // namespace detdiag
