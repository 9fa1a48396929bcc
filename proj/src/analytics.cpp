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

#include "ctk/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

namespace ctk {
namespace {

constexpr Direction kDirections[] = {Direction::en_to_x, Direction::x_to_en, Direction::x_to_y};

using RecordKey = std::pair<LangPair, std::string>;

std::map<RecordKey, const EvalRecord*> index_records(const std::vector<EvalRecord>& records,
                                                     const char* side) {
  std::map<RecordKey, const EvalRecord*> out;
  for (const auto& r : records) {
    if (!out.emplace(RecordKey{r.lang_pair, r.testset_id}, &r).second) {
      throw Error(std::string(side) + " records repeat " + r.testset_id + ":" + r.lang_pair.str());
    }
  }
  return out;
}

std::string num(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string rjust(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

std::string ljust(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, '\t')) {
    const auto b = cur.find_first_not_of(" \r");
    const auto e = cur.find_last_not_of(" \r");
    out.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
  }
  return out;
}

nlohmann::json box_json(const BoxStats& b) {
  return {{"min", b.min}, {"q1", b.q1}, {"median", b.median},
          {"q3", b.q3},   {"max", b.max}, {"mean", b.mean}};
}

}  // namespace

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::en_to_x: return "En->X";
    case Direction::x_to_en: return "X->En";
    case Direction::x_to_y: return "X->Y";
  }
  return "X->Y";
}

Direction direction_of(const LangPair& pair) {
  if (pair.source == "en") return Direction::en_to_x;
  if (pair.target == "en") return Direction::x_to_en;
  return Direction::x_to_y;
}

ImpactCell make_cell(const ContaminationCondition& condition, const LangPair& pair,
                     const std::string& testset_id, double baseline, double contaminated) {
  ImpactCell c{condition, pair, testset_id, baseline, contaminated, contaminated - baseline, {}};
  if (baseline != 0.0) c.pct = 100.0 * c.delta / baseline;
  return c;
}

ImpactTable impact_table(const std::vector<EvalRecord>& baseline,
                         const std::vector<EvalRecord>& contaminated,
                         const ContaminationCondition& condition) {
  const auto base = index_records(baseline, "baseline");
  const auto cont = index_records(contaminated, "contaminated");
  ImpactTable t;
  for (const auto& [key, rec] : base) {
    auto it = cont.find(key);
    if (it == cont.end()) {
      t.missing.push_back(key.second + ":" + key.first.str() + " (baseline only)");
      continue;
    }
    t.cells.push_back(make_cell(condition, key.first, key.second, rec->bleu, it->second->bleu));
  }
  for (const auto& [key, rec] : cont) {
    if (!base.contains(key)) {
      t.missing.push_back(key.second + ":" + key.first.str() + " (contaminated only)");
    }
  }
  if (t.cells.empty()) throw Error("baseline and contaminated records share no (lang_pair, testset)");
  return t;
}

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error("quantile of an empty list");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

BoxStats box_stats(std::span<const double> values) {
  if (values.empty()) throw Error("box_stats of an empty list");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  BoxStats b;
  b.min = v.front();
  b.max = v.back();
  b.q1 = quantile(v, 0.25);
  b.median = quantile(v, 0.5);
  b.q3 = quantile(v, 0.75);
  // Summation rounding can push the mean of near-equal values past an end.
  b.mean = std::clamp(std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()),
                      b.min, b.max);
  return b;
}

std::vector<DirectionMean> direction_group(std::span<const ImpactCell> cells) {
  std::vector<DirectionMean> out;
  for (Direction d : kDirections) {
    DirectionMean m{d, 0.0, 0, 0};
    double sum = 0.0;
    bool any = false;
    for (const auto& c : cells) {
      if (direction_of(c.lang_pair) != d) continue;
      any = true;
      if (!c.pct) {
        ++m.undefined;
        continue;
      }
      sum += *c.pct;
      ++m.cells;
    }
    if (!any) continue;
    if (m.cells > 0) m.mean_pct = sum / static_cast<double>(m.cells);
    out.push_back(m);
  }
  return out;
}

std::vector<GapCell> testset_gap(std::span<const ImpactCell> on_contaminated_set,
                                 std::span<const ImpactCell> on_clean_set) {
  using Key = std::pair<ContaminationCondition, LangPair>;
  std::map<Key, const ImpactCell*> clean;
  for (const auto& c : on_clean_set) {
    if (!clean.emplace(Key{c.condition, c.lang_pair}, &c).second) {
      throw Error("clean-set cells repeat " + c.condition.str() + " " + c.lang_pair.str());
    }
  }
  std::vector<GapCell> out;
  std::set<Key> seen;
  for (const auto& c : on_contaminated_set) {
    const Key key{c.condition, c.lang_pair};
    if (!seen.insert(key).second) {
      throw Error("contaminated-set cells repeat " + c.condition.str() + " " + c.lang_pair.str());
    }
    auto it = clean.find(key);
    if (it == clean.end()) continue;
    out.push_back(GapCell{c.condition, c.lang_pair, c.delta, it->second->delta,
                          c.delta - it->second->delta});
  }
  if (out.empty()) throw Error("contaminated-set and clean-set cells share no (condition, lang_pair)");
  return out;
}

TimeseriesSummary timeseries_summary(std::span<const std::pair<std::uint64_t, double>> points,
                                     std::uint64_t window_start) {
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].first <= points[i - 1].first) throw Error("time series steps must be strictly increasing");
  }
  std::optional<double> before;
  std::optional<double> peak;
  for (const auto& [step, bleu] : points) {
    if (step < window_start) {
      before = bleu;
    } else {
      peak = peak ? std::max(*peak, bleu) : bleu;
    }
  }
  if (!before) throw Error("time series has no point before step " + std::to_string(window_start));
  if (!peak) throw Error("time series has no point at or after step " + std::to_string(window_start));
  return TimeseriesSummary{*peak - *before, points.back().second - *before};
}

const std::string& FixtureTable::meta_value(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw Error("fixture has no '" + key + "' metadata");
  return it->second;
}

FixtureTable load_fixture_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  const std::string file = path.string();
  FixtureTable t;
  std::vector<std::string> columns;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      auto key = line.substr(1, colon - 1);
      auto value = line.substr(colon + 1);
      key.erase(0, key.find_first_not_of(' '));
      key.erase(key.find_last_not_of(' ') + 1);
      value.erase(0, value.find_first_not_of(' '));
      value.erase(value.find_last_not_of(" \r") + 1);
      if (key.find(' ') != std::string::npos) continue;  // prose comment
      if (key == "columns") {
        std::istringstream cs(value);
        std::string c;
        while (cs >> c) columns.push_back(c);
        for (const auto& col : columns) {
          if (col != "lang_pair" && col != "model" && col != "block") t.value_columns.push_back(col);
        }
      } else {
        t.meta[key] = value;
      }
      continue;
    }
    if (columns.empty()) throw FormatError(file, n, "columns", "row before '# columns:' metadata");
    const auto cells = split_tabs(line);
    if (cells.size() != columns.size()) {
      throw FormatError(file, n, "<row>", "expected " + std::to_string(columns.size()) + " tab-separated fields");
    }
    FixtureRow row;
    std::optional<std::string> block;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == "lang_pair") {
        try {
          row.lang_pair = LangPair::parse(cells[i]);
        } catch (const Error& e) {
          throw FormatError(file, n, "lang_pair", e.what());
        }
      } else if (columns[i] == "model") {
        row.model = cells[i];
      } else if (columns[i] == "block") {
        block = cells[i];
      } else {
        try {
          std::size_t used = 0;
          row.values[columns[i]] = std::stod(cells[i], &used);
          if (used != cells[i].size()) throw std::invalid_argument("trailing text");
        } catch (const std::exception&) {
          throw FormatError(file, n, columns[i], "not a number: '" + cells[i] + "'");
        }
      }
    }
    if (block && *block != to_string(direction_of(row.lang_pair))) {
      throw FormatError(file, n, "block", "'" + *block + "' does not match pair " + row.lang_pair.str());
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<EvalRecord> fixture_records(const FixtureTable& table, const std::string& model,
                                        const std::string& column) {
  const std::string& testset = table.meta_value("testset");
  std::vector<EvalRecord> out;
  for (const auto& row : table.rows) {
    if (row.model != model) continue;
    auto it = row.values.find(column);
    if (it == row.values.end()) throw Error("fixture has no column '" + column + "'");
    EvalRecord r{model + "/" + column, row.lang_pair, testset, it->second, 1};
    r.validate();
    out.push_back(std::move(r));
  }
  if (out.empty()) throw Error("fixture has no rows for model '" + model + "'");
  return out;
}

TableFormat parse_table_format(std::string_view name) {
  if (name == "text") return TableFormat::text;
  if (name == "json") return TableFormat::json;
  if (name == "csv") return TableFormat::csv;
  throw Error("unknown table format '" + std::string(name) + "' (expected text, json or csv)");
}

ImpactReport build_impact_report(ImpactTable table, std::span<const ImpactCell> clean_cells) {
  ImpactReport r;
  r.table = std::move(table);
  r.directions = direction_group(r.table.cells);
  std::vector<double> deltas;
  for (const auto& c : r.table.cells) deltas.push_back(c.delta);
  if (!deltas.empty()) r.delta_box = box_stats(deltas);
  if (!clean_cells.empty()) r.gaps = testset_gap(r.table.cells, clean_cells);
  return r;
}

nlohmann::json impact_report_to_json(const ImpactReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.table.cells) {
    cells.push_back({{"condition", c.condition.str()},
                     {"lang_pair", c.lang_pair.str()},
                     {"direction", to_string(direction_of(c.lang_pair))},
                     {"testset_id", c.testset_id},
                     {"baseline_bleu", c.baseline_bleu},
                     {"contaminated_bleu", c.contaminated_bleu},
                     {"delta", c.delta},
                     {"pct", c.pct ? nlohmann::json(*c.pct) : nlohmann::json(nullptr)}});
  }
  nlohmann::json dirs = nlohmann::json::array();
  for (const auto& d : report.directions) {
    dirs.push_back({{"direction", to_string(d.direction)},
                    {"mean_pct", d.mean_pct},
                    {"cells", d.cells},
                    {"undefined", d.undefined}});
  }
  nlohmann::json gaps = nlohmann::json::array();
  for (const auto& g : report.gaps) {
    gaps.push_back({{"condition", g.condition.str()},
                    {"lang_pair", g.lang_pair.str()},
                    {"delta_contaminated_set", g.delta_contaminated_set},
                    {"delta_clean_set", g.delta_clean_set},
                    {"gap", g.gap}});
  }
  return {{"cells", cells},
          {"missing", report.table.missing},
          {"directions", dirs},
          {"delta_box", report.delta_box ? box_json(*report.delta_box) : nlohmann::json(nullptr)},
          {"gaps", gaps}};
}

std::string render_impact_report(const ImpactReport& report, TableFormat format) {
  if (format == TableFormat::json) return impact_report_to_json(report).dump(2) + "\n";
  std::ostringstream out;
  if (format == TableFormat::csv) {
    out << "condition,testset_id,direction,lang_pair,baseline_bleu,contaminated_bleu,delta,pct\n";
    for (const auto& c : report.table.cells) {
      out << c.condition.str() << ',' << c.testset_id << ',' << to_string(direction_of(c.lang_pair))
          << ',' << c.lang_pair.str() << ',' << num(c.baseline_bleu, 4) << ','
          << num(c.contaminated_bleu, 4) << ',' << num(c.delta, 4) << ','
          << (c.pct ? num(*c.pct, 4) : "") << '\n';
    }
    return out.str();
  }

  for (Direction d : kDirections) {
    bool header = false;
    for (const auto& c : report.table.cells) {
      if (direction_of(c.lang_pair) != d) continue;
      if (!header) {
        out << to_string(d) << "\n"
            << "  " << ljust("lang_pair", 10) << ljust("testset", 10) << ljust("condition", 26)
            << rjust("baseline", 10) << rjust("contam", 10) << rjust("delta", 9) << rjust("pct", 9)
            << "\n";
        header = true;
      }
      out << "  " << ljust(c.lang_pair.str(), 10) << ljust(c.testset_id, 10)
          << ljust(c.condition.str(), 26) << rjust(num(c.baseline_bleu), 10)
          << rjust(num(c.contaminated_bleu), 10) << rjust(num(c.delta), 9)
          << rjust(c.pct ? num(*c.pct) : "n/a", 9) << "\n";
    }
  }
  if (!report.directions.empty()) {
    out << "\nmean pct by direction\n";
    for (const auto& m : report.directions) {
      out << "  " << ljust(std::string(to_string(m.direction)), 8)
          << rjust(m.cells ? num(m.mean_pct) : "n/a", 9) << "  (" << m.cells << " cells";
      if (m.undefined) out << ", " << m.undefined << " with zero baseline";
      out << ")\n";
    }
  }
  if (report.delta_box) {
    const auto& b = *report.delta_box;
    out << "\ndelta box: min " << num(b.min) << "  q1 " << num(b.q1) << "  median " << num(b.median)
        << "  q3 " << num(b.q3) << "  max " << num(b.max) << "  mean " << num(b.mean) << "\n";
  }
  if (!report.gaps.empty()) {
    out << "\ntest-set gap (contaminated-set delta - clean-set delta)\n";
    for (const auto& g : report.gaps) {
      out << "  " << ljust(g.lang_pair.str(), 10) << ljust(g.condition.str(), 26)
          << rjust(num(g.delta_contaminated_set), 9) << rjust(num(g.delta_clean_set), 9)
          << rjust(num(g.gap), 9) << "\n";
    }
  }
  if (!report.table.missing.empty()) {
    out << "\nunmatched keys\n";
    for (const auto& m : report.table.missing) out << "  " << m << "\n";
  }
  return out.str();
}

}  // namespace ctk
