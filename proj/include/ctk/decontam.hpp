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

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ctk/corpus_io.hpp"
#include "ctk/matcher.hpp"
#include "ctk/ngram_index.hpp"
#include "json.hpp"

namespace ctk {

enum class Label { clean, source_only, target_only, both };

std::string_view to_string(Label label);
Label parse_label(std::string_view name);

// A field is contaminated iff its overlap fraction is strictly greater than
// config.threshold.
Label classify(const ContaminationScore& score, const ScanConfig& config);
Label classify(double s_source, double s_target, double threshold);

struct LabelCounts {
  std::array<std::size_t, 4> by_label{};

  std::size_t& operator[](Label l) { return by_label[static_cast<std::size_t>(l)]; }
  std::size_t operator[](Label l) const { return by_label[static_cast<std::size_t>(l)]; }
  std::size_t total() const;

  friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

struct DecontamReport {
  double threshold = 0.7;
  double bin_width = 0.05;
  std::size_t total = 0;
  LabelCounts counts;
  std::map<std::string, LabelCounts> by_lang_pair;
  // Bins of max(s_source, s_target): [k*w, (k+1)*w), last bin closed at 1.
  std::vector<std::size_t> histogram;
  std::vector<std::string> removed_ids;

  std::size_t removed() const { return removed_ids.size(); }
  std::size_t kept() const { return total - removed_ids.size(); }
  double removed_fraction() const;

  // Throws Error if counts, histogram and removed ids disagree.
  void check() const;

  friend bool operator==(const DecontamReport&, const DecontamReport&) = default;
};

std::size_t histogram_bins(double bin_width);
std::size_t histogram_bin(double score, std::size_t bins);

DecontamReport build_report(const std::vector<TestExample>& examples,
                            const std::vector<ContaminationScore>& scores,
                            const ScanConfig& config, double bin_width = 0.05);

struct DecontamResult {
  std::vector<TestExample> kept;
  DecontamReport report;
  std::vector<ContaminationScore> scores;
};

// Removes every example with any field above threshold. Kept examples keep
// their input order.
DecontamResult decontaminate(const std::vector<TestExample>& testset,
                             const NGramIndex& index, const ScanConfig& config,
                             double bin_width = 0.05, std::size_t threads = 0);

enum class ReportFormat { text, json };
ReportFormat parse_report_format(std::string_view name);

nlohmann::json report_to_json(const DecontamReport& report);
DecontamReport report_from_json(const nlohmann::json& j);
std::string render_report(const DecontamReport& report, ReportFormat format);

}  // namespace ctk
