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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctk/common.hpp"
#include "ctk/injector.hpp"
#include "ctk/metrics.hpp"
#include "json.hpp"

namespace ctk {

// Translation direction relative to English ("en").
enum class Direction { en_to_x, x_to_en, x_to_y };

std::string_view to_string(Direction d);  // "En->X", "X->En", "X->Y"
Direction direction_of(const LangPair& pair);

struct ImpactCell {
  ContaminationCondition condition;
  LangPair lang_pair;
  std::string testset_id;
  double baseline_bleu = 0.0;
  double contaminated_bleu = 0.0;
  double delta = 0.0;         // contaminated - baseline
  std::optional<double> pct;  // 100 * delta / baseline; unset when baseline == 0
};

struct ImpactTable {
  std::vector<ImpactCell> cells;
  // Keys present on one side only, as "<testset>:<pair> (<side> only)".
  std::vector<std::string> missing;
};

ImpactCell make_cell(const ContaminationCondition& condition, const LangPair& pair,
                     const std::string& testset_id, double baseline, double contaminated);

// One cell per (lang_pair, testset_id) present in both inputs, sorted by key.
// Throws Error when the inputs share no key or repeat a key.
ImpactTable impact_table(const std::vector<EvalRecord>& baseline,
                         const std::vector<EvalRecord>& contaminated,
                         const ContaminationCondition& condition);

struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

// Linear interpolation between order statistics: for sorted x of size n the
// p-quantile is x[h] interpolated at h = (n - 1) * p.
double quantile(std::span<const double> sorted, double p);
BoxStats box_stats(std::span<const double> values);

struct DirectionMean {
  Direction direction = Direction::en_to_x;
  double mean_pct = 0.0;
  std::size_t cells = 0;      // cells with a defined pct
  std::size_t undefined = 0;  // cells skipped for a zero baseline
};

// Mean percent improvement per direction. Directions without cells are
// absent from the result.
std::vector<DirectionMean> direction_group(std::span<const ImpactCell> cells);

struct GapCell {
  ContaminationCondition condition;
  LangPair lang_pair;
  double delta_contaminated_set = 0.0;
  double delta_clean_set = 0.0;
  double gap = 0.0;  // > 0: gain on the contaminated set beyond the clean one
};

std::vector<GapCell> testset_gap(std::span<const ImpactCell> on_contaminated_set,
                                 std::span<const ImpactCell> on_clean_set);

struct TimeseriesSummary {
  double peak_delta = 0.0;
  double final_delta = 0.0;
};

// Deltas against the last score before `window_start`: the best score at or
// after the window, and the last score overall.
TimeseriesSummary timeseries_summary(std::span<const std::pair<std::uint64_t, double>> points,
                                     std::uint64_t window_start);

// Published score tables stored as tab-separated text. Lines starting with
// '#' are comments except "# key: value" metadata; the "columns" metadata
// names the fields of each row, which must include lang_pair and model.
struct FixtureRow {
  LangPair lang_pair;
  std::string model;
  std::map<std::string, double> values;
};

struct FixtureTable {
  std::map<std::string, std::string> meta;
  std::vector<std::string> value_columns;
  std::vector<FixtureRow> rows;

  const std::string& meta_value(const std::string& key) const;
};

FixtureTable load_fixture_table(const std::filesystem::path& path);

// Records for one model and one value column; system_id is "<model>/<column>"
// and testset_id comes from the "testset" metadata.
std::vector<EvalRecord> fixture_records(const FixtureTable& table, const std::string& model,
                                        const std::string& column);

enum class TableFormat { text, json, csv };
TableFormat parse_table_format(std::string_view name);

struct ImpactReport {
  ImpactTable table;
  std::vector<DirectionMean> directions;
  std::optional<BoxStats> delta_box;
  std::vector<GapCell> gaps;
};

ImpactReport build_impact_report(ImpactTable table, std::span<const ImpactCell> clean_cells = {});
nlohmann::json impact_report_to_json(const ImpactReport& report);
std::string render_impact_report(const ImpactReport& report, TableFormat format);

}  // namespace ctk
