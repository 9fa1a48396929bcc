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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctk/corpus_io.hpp"
#include "json.hpp"

namespace ctk {

enum class ContaminationMode { full_prompted, source_only, target_only, split_pair, batched_pair };
enum class Temporal { early, middle, late, uniform };
enum class Part { whole, source_half, target_half };

std::string_view to_string(ContaminationMode m);
std::string_view to_string(Temporal t);
std::string_view to_string(Part p);
ContaminationMode parse_mode(std::string_view name);
Temporal parse_temporal(std::string_view name);
Part parse_part(std::string_view name);

// Documents rendered per example copy: 1 for full/source/target, 2 for the
// unpaired split and batched modes.
std::size_t mode_arity(ContaminationMode m);

struct ContaminationCondition {
  ContaminationMode mode = ContaminationMode::full_prompted;
  Temporal temporal = Temporal::late;
  std::size_t copies = 1;

  void validate() const;
  // "full_prompted/late/1"
  std::string str() const;
  static ContaminationCondition parse(const std::string& text);

  friend bool operator==(const ContaminationCondition&, const ContaminationCondition&) = default;
  friend auto operator<=>(const ContaminationCondition&, const ContaminationCondition&) = default;
};

struct TrainingConfig {
  std::uint64_t total_steps = 1;
  std::size_t batch_size = 1;
  double max_replace_frac = 0.05;
  // Minimum width of early/middle/late windows as a fraction of total_steps.
  double window_frac = 0.02;
  // true: strictly fewer than max_replace_frac * batch_size per batch.
  bool strict_cap = false;
  std::uint64_t seed = 0;

  void validate() const;
  // Most contamination documents a single batch may receive.
  std::size_t cap_per_batch() const;

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

// Language tag -> English name table plus the prompt format used for
// full_prompted documents.
class PromptTemplate {
 public:
  static constexpr std::string_view kDefaultFormat = "{src_name}: {source}\n{tgt_name}: {target}";

  PromptTemplate();
  PromptTemplate(std::map<std::string, std::string> names, std::string format);

  // Throws Error for a tag with no English name.
  const std::string& name(const std::string& tag) const;
  std::string render_full(const TestExample& example) const;

  const std::string& format() const { return format_; }
  const std::map<std::string, std::string>& names() const { return names_; }

 private:
  std::map<std::string, std::string> names_;
  std::string format_;
};

struct RenderedDocument {
  Part part = Part::whole;
  std::string text;
  // Empty when no tokenization is available; the consumer tokenizes.
  TokenSequence tokens;
  std::string lang;

  friend bool operator==(const RenderedDocument&, const RenderedDocument&) = default;
};

// Maps rendered text to token ids when the caller has a tokenizer.
using Tokenizer = std::function<std::optional<TokenSequence>(std::string_view)>;

// Table-backed Tokenizer over JSON lines {"text": str, "tokens": [int,...]}.
Tokenizer load_tokenization_table(const std::filesystem::path& path);

// Bare halves carry the example's own field tokens; full_prompted text is
// tokenized through `tokenizer` when one is given.
std::vector<RenderedDocument> render(const TestExample& example, ContaminationMode mode,
                                     const PromptTemplate& tmpl,
                                     const Tokenizer& tokenizer = {});

struct ScheduleEntry {
  std::uint64_t step = 0;
  std::size_t slot = 0;
  std::string example_id;
  std::size_t copy_index = 0;
  Part part = Part::whole;
  std::string lang;
  std::string text;
  TokenSequence tokens;

  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

struct ScheduleHeader {
  static constexpr std::string_view kGeneratorVersion = "ctk-schedule/1";
  static constexpr std::string_view kRng = "splitmix64-counter/lemire";

  ContaminationCondition condition;
  TrainingConfig training;
  std::string prompt_template;
  std::string generator_version{kGeneratorVersion};
  std::size_t example_count = 0;
  std::size_t cap_per_batch = 0;
  // Entries fall in [window_start, window_end). window_start is the step a
  // contaminated branch would fork from the baseline checkpoint.
  std::uint64_t window_start = 0;
  std::uint64_t window_end = 0;
  bool parallel_slots_only = false;

  friend bool operator==(const ScheduleHeader&, const ScheduleHeader&) = default;
};

struct InjectionSchedule {
  ScheduleHeader header;
  std::vector<ScheduleEntry> entries;

  friend bool operator==(const InjectionSchedule&, const InjectionSchedule&) = default;
};

// Steps eligible for placement: first step of the window and the end of the
// uniform range, both as fractions of total_steps.
struct WindowBounds {
  std::uint64_t start = 0;
  std::uint64_t end = 0;  // exclusive
};
// Fixed range for `uniform`; the minimum-width window for the others.
WindowBounds nominal_window(Temporal t, const TrainingConfig& config);

struct PlanOptions {
  PromptTemplate prompt;
  Tokenizer tokenizer;
  // When set, slots are drawn only among each batch's parallel-category
  // documents, so contamination takes over the parallel budget.
  const BatchStream* stream = nullptr;
};

// Deterministic in (examples, condition, config, options). Throws Error with
// required vs available slots when the plan cannot fit.
InjectionSchedule plan_schedule(const std::vector<TestExample>& examples,
                                const ContaminationCondition& condition,
                                const TrainingConfig& config,
                                const PlanOptions& options = {});

struct ApplyOptions {
  // Reject entries that would overwrite a non-parallel document.
  bool require_parallel_slots = true;
};

// Replaces each scheduled slot with its contamination document. Everything
// else is copied unchanged.
BatchStream apply(const BatchStream& stream, const InjectionSchedule& schedule,
                  const ApplyOptions& options = {});

// Parallel plus contamination documents in one batch.
std::size_t parallel_budget(const std::vector<CorpusDocument>& batch);

struct Violation {
  std::string kind;  // bounds, collision, cap, window, count, pairing, config
  std::string detail;
};

struct VerifyReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::size_t count(std::string_view kind) const;
  std::string render() const;
};

VerifyReport verify_schedule(const InjectionSchedule& schedule, const TrainingConfig& config);

// First line is the header object, then one entry per line.
std::string serialize_schedule(const InjectionSchedule& schedule);
void write_schedule(const InjectionSchedule& schedule, const std::filesystem::path& path);
InjectionSchedule read_schedule(const std::filesystem::path& path);

nlohmann::json training_to_json(const TrainingConfig& config);
TrainingConfig training_from_json(const nlohmann::json& j);

}  // namespace ctk
