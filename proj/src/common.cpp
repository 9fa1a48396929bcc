// Copyright 2026 The ctk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctk/common.hpp"

namespace ctk {

FormatError::FormatError(const std::string& file, std::size_t line,
                         const std::string& field, const std::string& what)
    : Error(file + ":" + std::to_string(line) + ": field '" + field + "': " +
            what),
      file_(file),
      line_(line),
      field_(field) {}

LangPair LangPair::parse(const std::string& tag) {
  const auto dash = tag.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == tag.size() ||
      tag.find('-', dash + 1) != std::string::npos) {
    throw Error("malformed language pair '" + tag + "', expected src-tgt");
  }
  return LangPair{tag.substr(0, dash), tag.substr(dash + 1)};
}

}  // namespace ctk
