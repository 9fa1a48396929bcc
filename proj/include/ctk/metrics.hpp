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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctk/corpus_io.hpp"

namespace ctk {

enum class Smoothing { none, add_one };

std::string_view to_string(Smoothing s);
Smoothing parse_smoothing(std::string_view name);

struct BleuConfig {
  std::size_t max_order = 4;
  // add_one adds 1 to matches and totals for orders >= 2.
  Smoothing smoothing = Smoothing::none;

  // "order=4 smoothing=none"
  std::string str() const;
};

// Corpus-level sufficient statistics: clipped matches and hypothesis n-gram
// totals per order, summed over segments.
struct BleuStats {
  std::vector<std::uint64_t> matches;
  std::vector<std::uint64_t> hyp_totals;
  std::vector<std::uint64_t> ref_totals;
  std::uint64_t hyp_len = 0;
  std::uint64_t ref_len = 0;

  explicit BleuStats(std::size_t max_order = 4);
  void add(const TokenSequence& hypothesis, const TokenSequence& reference);
};

struct BleuResult {
  double score = 0.0;  // [0, 100]
  std::vector<double> precisions;
  double brevity_penalty = 1.0;
  std::uint64_t hyp_len = 0;
  std::uint64_t ref_len = 0;
  std::string config;
};

BleuResult bleu_from_stats(const BleuStats& stats, const BleuConfig& config);

// Single-reference corpus BLEU over token ids. Orders for which neither the
// hypotheses nor the references contain any n-gram are left out of the
// geometric mean, so BLEU(h, h) is 100 even for segments shorter than
// max_order.
BleuResult corpus_bleu_detailed(const std::vector<TokenSequence>& hypotheses,
                                const std::vector<TokenSequence>& references,
                                const BleuConfig& config = {});

double corpus_bleu(const std::vector<TokenSequence>& hypotheses,
                   const std::vector<TokenSequence>& references, std::size_t max_order = 4,
                   Smoothing smoothing = Smoothing::none);

// Interns whitespace-separated words as token ids, for plain-text fixtures.
class WhitespaceVocab {
 public:
  TokenSequence encode(std::string_view line);

 private:
  std::unordered_map<std::string, TokenId> ids_;
};

struct EvalRecord {
  std::string system_id;
  LangPair lang_pair;
  std::string testset_id;
  double bleu = 0.0;
  std::size_t segment_count = 0;

  void validate() const;
  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

// One record per language pair of `testset`, sorted by pair. Throws Error
// listing every example id without a hypothesis.
std::vector<EvalRecord> score_system(const std::map<std::string, TokenSequence>& outputs,
                                     const std::vector<TestExample>& testset,
                                     const std::string& system_id,
                                     const std::string& testset_id,
                                     const BleuConfig& config = {});

// JSON lines {"system_id", "src_lang", "tgt_lang", "testset_id", "bleu",
// "segment_count"}.
std::vector<EvalRecord> read_eval_records(const std::filesystem::path& path);
void write_eval_records(const std::filesystem::path& path,
                        const std::vector<EvalRecord>& records);

}  // namespace ctk
