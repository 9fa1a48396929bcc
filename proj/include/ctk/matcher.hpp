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

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ctk/corpus_io.hpp"
#include "ctk/ngram_index.hpp"
#include "json.hpp"

namespace ctk {

// A maximal region where a test field and one corpus document agree token
// for token. Spans grown from seeds have length >= ngram_order; a field
// shorter than ngram_order can only produce a whole-field span.
struct MatchSpan {
  DocRef doc = 0;
  std::size_t corpus_start = 0;
  std::size_t example_start = 0;
  std::size_t length = 0;

  friend bool operator==(const MatchSpan&, const MatchSpan&) = default;
};

// Overlap of one field with the corpus: the longest span over the field's own
// token count.
struct FieldScore {
  std::size_t matched = 0;
  std::size_t field_len = 0;
  std::optional<MatchSpan> longest;

  double fraction() const {
    return field_len == 0 ? 0.0
                          : static_cast<double>(matched) / static_cast<double>(field_len);
  }
};

struct ContaminationScore {
  FieldScore source;
  FieldScore target;

  double s_source() const { return source.fraction(); }
  double s_target() const { return target.fraction(); }
  double combined() const { return std::max(s_source(), s_target()); }
};

// All maximal spans of length >= ngram_order shared between `field` and any
// single corpus document, sorted by (doc, corpus_start, example_start). Each
// maximal span is reported once however many seeds fall inside it.
// Fields shorter than ngram_order are searched whole, by linear scan.
std::vector<MatchSpan> find_spans(std::span<const TokenId> field,
                                  const NGramIndex& index, const ScanConfig& config);

// Longest span; ties go to the smallest (doc, corpus_start, example_start).
std::optional<MatchSpan> longest_match(std::span<const MatchSpan> spans);

FieldScore score_field(std::span<const TokenId> field, const NGramIndex& index,
                       const ScanConfig& config);

ContaminationScore score_example(const TestExample& example, const NGramIndex& index,
                                 const ScanConfig& config);

// Scores examples on up to `threads` workers (0 = hardware concurrency);
// output order matches input order.
std::vector<ContaminationScore> score_examples(const std::vector<TestExample>& examples,
                                               const NGramIndex& index,
                                               const ScanConfig& config,
                                               std::size_t threads = 0);

// {"example_id", "s_source", "s_target", "longest_source": {...}|null,
//  "longest_target": {...}|null}
nlohmann::json score_to_json(const std::string& example_id,
                             const ContaminationScore& score, const NGramIndex& index);

void write_scores(const std::filesystem::path& path,
                  const std::vector<TestExample>& examples,
                  const std::vector<ContaminationScore>& scores,
                  const NGramIndex& index);

}  // namespace ctk
