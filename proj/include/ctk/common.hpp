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

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctk {

using TokenId = std::uint32_t;

// Token ids are opaque sub-word ids; nothing in the toolkit normalizes them.
using TokenSequence = std::vector<TokenId>;

// Base class for every error the toolkit raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed on-disk record. The message carries "<file>:<line>: field '<name>': ...".
class FormatError : public Error {
 public:
  FormatError(const std::string& file, std::size_t line,
              const std::string& field, const std::string& what);

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::string file_;
  std::size_t line_;
  std::string field_;
};

struct LangPair {
  std::string source;
  std::string target;

  // "de-en"
  std::string str() const { return source + "-" + target; }

  // Accepts "de-en"; throws Error otherwise.
  static LangPair parse(const std::string& tag);

  friend bool operator==(const LangPair&, const LangPair&) = default;
  friend auto operator<=>(const LangPair&, const LangPair&) = default;
};

}  // namespace ctk
