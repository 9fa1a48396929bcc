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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "ctk/analytics.hpp"
#include "support/oracles.hpp"

using namespace ctk;
using ctk::testing::TempDir;

namespace {

const std::filesystem::path kData = CTK_DATA_FIXTURES;

ContaminationCondition cond(ContaminationMode m = ContaminationMode::full_prompted,
                            std::size_t copies = 1) {
  return {m, Temporal::late, copies};
}

EvalRecord rec(std::string pair, double bleu, std::string testset = "wmt23") {
  return {"sys", LangPair::parse(pair), std::move(testset), bleu, 1};
}

// Cells for one model and mode from a published-results fixture.
std::vector<ImpactCell> fixture_cells(const std::string& file, const std::string& model,
                                      const std::string& column) {
  const auto t = load_fixture_table(kData / file);
  const ContaminationCondition c{parse_mode(column), parse_temporal(t.meta_value("temporal")),
                                 std::stoul(t.meta_value("copies"))};
  return impact_table(fixture_records(t, model, "baseline"), fixture_records(t, model, column), c)
      .cells;
}

const DirectionMean* find(const std::vector<DirectionMean>& v, Direction d) {
  for (const auto& m : v) {
    if (m.direction == d) return &m;
  }
  return nullptr;
}

double mean_delta(const std::vector<ImpactCell>& cells) {
  double s = 0;
  for (const auto& c : cells) s += c.delta;
  return s / static_cast<double>(cells.size());
}

}  // namespace

TEST_CASE("directions") {
  CHECK(direction_of({"en", "de"}) == Direction::en_to_x);
  CHECK(direction_of({"de", "en"}) == Direction::x_to_en);
  CHECK(direction_of({"cs", "uk"}) == Direction::x_to_y);
  CHECK(to_string(Direction::en_to_x) == "En->X");
}

TEST_CASE("impact cells") {
  const auto c = make_cell(cond(), {"en", "de"}, "wmt23", 30.95, 34.34);
  CHECK(c.delta == doctest::Approx(3.39).epsilon(1e-12));
  CHECK(*c.pct == doctest::Approx(10.953).epsilon(1e-4));
  const auto same = make_cell(cond(), {"en", "de"}, "wmt23", 12.5, 12.5);
  CHECK(same.delta == 0.0);
  CHECK(*same.pct == 0.0);
  const auto zero = make_cell(cond(), {"ace", "en"}, "z", 0.0, 0.5);
  CHECK_FALSE(zero.pct.has_value());
}

TEST_CASE("impact table on the published en-de late/1 row") {
  const auto cells = fixture_cells("wmt23_late_1.tsv", "8B", "full_prompted");
  const auto it = std::find_if(cells.begin(), cells.end(),
                               [](const auto& c) { return c.lang_pair.str() == "en-de"; });
  REQUIRE(it != cells.end());
  CHECK(it->baseline_bleu == 30.95);
  CHECK(it->contaminated_bleu == 34.34);
  CHECK(std::abs(it->delta - 3.39) < 1e-9);
  CHECK(std::abs(*it->pct - 10.95) < 0.01);
  CHECK(it->condition.str() == "full_prompted/late/1");
  CHECK(cells.size() == 13);
}

TEST_CASE("zero-resource row") {
  const auto t = load_fixture_table(kData / "zero_resource_8b.tsv");
  const auto cells = impact_table(fixture_records(t, "8B", "baseline"),
                                  fixture_records(t, "8B", "copies_100"),
                                  {ContaminationMode::full_prompted, Temporal::late, 100})
                         .cells;
  const auto ace = std::find_if(cells.begin(), cells.end(),
                                [](const auto& c) { return c.lang_pair.str() == "ace-en"; });
  REQUIRE(ace != cells.end());
  CHECK(std::abs(ace->delta - 0.627) < 1e-9);
}

TEST_CASE("impact table keys, gaps and errors") {
  const std::vector<EvalRecord> base{rec("en-de", 20), rec("de-en", 25), rec("en-cs", 10)};
  const std::vector<EvalRecord> cont{rec("en-de", 22), rec("de-en", 24), rec("fr-en", 30)};
  const auto t = impact_table(base, cont, cond());
  CHECK(t.cells.size() == 2);
  REQUIRE(t.missing.size() == 2);
  CHECK(t.missing[0].find("en-cs") != std::string::npos);
  CHECK(t.missing[1].find("fr-en") != std::string::npos);

  CHECK_THROWS_AS(impact_table({rec("en-de", 1)}, {rec("de-en", 1)}, cond()), Error);
  CHECK_THROWS_AS(impact_table({rec("en-de", 1), rec("en-de", 2)}, {rec("en-de", 1)}, cond()), Error);
  // The same pair on two test sets is two keys.
  CHECK(impact_table({rec("en-de", 1, "a"), rec("en-de", 2, "b")},
                     {rec("en-de", 3, "a"), rec("en-de", 4, "b")}, cond())
            .cells.size() == 2);
}

TEST_CASE("antisymmetry and scale equivariance") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(0.5, 60.0);
  const char* pairs[] = {"en-de", "de-en", "en-ja", "ja-en", "cs-uk", "en-zh"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<EvalRecord> a, b, a2, b2;
    const double k = u(rng) / 10.0;
    for (const char* p : pairs) {
      const double x = u(rng), y = u(rng);
      a.push_back(rec(p, x));
      b.push_back(rec(p, y));
      a2.push_back(rec(p, k * x));
      b2.push_back(rec(p, k * y));
    }
    const auto fwd = impact_table(a, b, cond()).cells;
    const auto rev = impact_table(b, a, cond()).cells;
    const auto scaled = impact_table(a2, b2, cond()).cells;
    for (std::size_t i = 0; i < fwd.size(); ++i) {
      CHECK(fwd[i].delta == -rev[i].delta);
      CHECK(std::abs(scaled[i].delta - k * fwd[i].delta) < 1e-9);
      CHECK(std::abs(*scaled[i].pct - *fwd[i].pct) < 1e-9);
    }
  }
}

TEST_CASE("box statistics") {
  const std::vector<double> five{5, 5, 5};
  const auto c = box_stats(five);
  CHECK(c.min == 5);
  CHECK(c.q1 == 5);
  CHECK(c.median == 5);
  CHECK(c.q3 == 5);
  CHECK(c.max == 5);
  CHECK(c.mean == 5);

  const std::vector<double> four{4, 1, 3, 2};
  const auto b = box_stats(four);
  CHECK(b.min == 1);
  CHECK(b.q1 == 1.75);
  CHECK(b.median == 2.5);
  CHECK(b.q3 == 3.25);
  CHECK(b.max == 4);
  CHECK(b.mean == 2.5);

  CHECK_THROWS_AS(box_stats(std::vector<double>{}), Error);

  std::mt19937_64 rng(52);
  std::normal_distribution<double> n(2.0, 5.0);
  std::vector<double> v(1000);
  for (auto& x : v) x = n(rng);
  const auto s = box_stats(v);
  CHECK(s.min <= s.q1);
  CHECK(s.q1 <= s.median);
  CHECK(s.median <= s.q3);
  CHECK(s.q3 <= s.max);
  CHECK(s.mean >= s.min);
  CHECK(s.mean <= s.max);
  std::shuffle(v.begin(), v.end(), rng);
  const auto p = box_stats(v);
  CHECK(p.q1 == s.q1);
  CHECK(p.median == s.median);
  CHECK(p.q3 == s.q3);
}

TEST_CASE("direction grouping") {
  const std::vector<ImpactCell> cells{make_cell(cond(), {"en", "de"}, "t", 10, 11),
                                      make_cell(cond(), {"de", "en"}, "t", 25, 26)};
  const auto g = direction_group(cells);
  REQUIRE(g.size() == 2);
  CHECK(find(g, Direction::en_to_x)->mean_pct == doctest::Approx(10));
  CHECK(find(g, Direction::x_to_en)->mean_pct == doctest::Approx(4));
  CHECK(find(g, Direction::x_to_y) == nullptr);

  const std::vector<ImpactCell> with_zero{make_cell(cond(), {"ace", "en"}, "t", 0, 1),
                                          make_cell(cond(), {"yo", "en"}, "t", 2, 3)};
  const auto z = direction_group(with_zero);
  REQUIRE(z.size() == 1);
  CHECK(z[0].cells == 1);
  CHECK(z[0].undefined == 1);
  CHECK(z[0].mean_pct == doctest::Approx(50));
}

TEST_CASE("direction finding on the published late-contamination tables") {
  // Per model, 8B with one copy is the one slice where X->En edges out En->X.
  // Pooled over both models, En->X leads for every copy count.
  const auto one = fixture_cells("wmt23_late_1.tsv", "8B", "full_prompted");
  const auto g1 = direction_group(one);
  CHECK(find(g1, Direction::en_to_x)->mean_pct == doctest::Approx(8.485).epsilon(1e-3));
  CHECK(find(g1, Direction::x_to_en)->mean_pct == doctest::Approx(8.95).epsilon(1e-3));
  CHECK(find(g1, Direction::x_to_y)->cells == 1);

  for (const char* file : {"wmt23_late_1.tsv", "wmt23_late_10.tsv", "wmt23_late_100.tsv"}) {
    auto pooled = fixture_cells(file, "8B", "full_prompted");
    const auto small = fixture_cells(file, "1B", "full_prompted");
    pooled.insert(pooled.end(), small.begin(), small.end());
    const auto g = direction_group(pooled);
    CAPTURE(file);
    CHECK(find(g, Direction::en_to_x)->mean_pct > find(g, Direction::x_to_en)->mean_pct);
  }
}

TEST_CASE("full prompted contamination beats single-sided contamination") {
  for (const char* file : {"wmt23_late_1.tsv", "wmt23_late_10.tsv", "wmt23_late_100.tsv"}) {
    for (const char* model : {"8B", "1B"}) {
      CAPTURE(file);
      CAPTURE(model);
      const double full = mean_delta(fixture_cells(file, model, "full_prompted"));
      CHECK(full > mean_delta(fixture_cells(file, model, "source_only")));
      CHECK(full > mean_delta(fixture_cells(file, model, "target_only")));
    }
  }
}

TEST_CASE("test-set gap") {
  std::vector<ImpactCell> a{make_cell(cond(), {"en", "de"}, "wmt23", 0, 10)};
  std::vector<ImpactCell> b{make_cell(cond(), {"en", "de"}, "wmt24", 0, 2)};
  CHECK(testset_gap(a, b)[0].gap == 8);
  CHECK(testset_gap(a, a)[0].gap == 0);
  std::vector<ImpactCell> other{make_cell(cond(), {"de", "en"}, "wmt24", 0, 2)};
  CHECK_THROWS_AS(testset_gap(a, other), Error);

  const auto w23 = fixture_cells("wmt23_late_100.tsv", "8B", "full_prompted");
  const auto w24 = fixture_cells("wmt24_late_100.tsv", "8B", "full_prompted");
  const auto gaps = testset_gap(w23, w24);
  CHECK(gaps.size() == 5);  // en-zh appears only in the clean-set table
  const auto ende = std::find_if(gaps.begin(), gaps.end(),
                                 [](const auto& g) { return g.lang_pair.str() == "en-de"; });
  REQUIRE(ende != gaps.end());
  CHECK(std::abs(ende->delta_contaminated_set - 16.60) < 1e-9);
  CHECK(std::abs(ende->delta_clean_set - 2.13) < 1e-9);
  CHECK(std::abs(ende->gap - 14.47) < 1e-9);
}

TEST_CASE("time series summaries") {
  using P = std::pair<std::uint64_t, double>;
  const std::vector<P> flat{{0, 5}, {10, 5}, {20, 5}, {30, 5}};
  CHECK(timeseries_summary(flat, 15).peak_delta == 0);
  CHECK(timeseries_summary(flat, 15).final_delta == 0);

  const std::vector<P> shape{{0, 10}, {100, 10}, {200, 30}, {300, 22}, {400, 18}};
  const auto s = timeseries_summary(shape, 150);
  CHECK(s.peak_delta == 20);
  CHECK(s.final_delta == 8);

  // Spike of height h decaying exponentially to a plateau p.
  const double h = 12.0, p = 3.0, rate = 0.01, base = 20.0;
  std::vector<P> spike{{0, base}, {50, base}};
  for (std::uint64_t t = 100; t <= 1000; t += 50) {
    spike.emplace_back(t, base + p + (h - p) * std::exp(-rate * static_cast<double>(t - 100)));
  }
  const auto k = timeseries_summary(spike, 100);
  CHECK(k.peak_delta == doctest::Approx(h));
  CHECK(k.final_delta == doctest::Approx(p + (h - p) * std::exp(-rate * 900.0)));

  CHECK_THROWS_AS(timeseries_summary(shape, 0), Error);
  const std::vector<P> unsorted{{0, 1}, {0, 2}};
  CHECK_THROWS_AS(timeseries_summary(unsorted, 0), Error);
}

TEST_CASE("fixture loading errors") {
  TempDir dir;
  auto write = [&](const std::string& text) {
    std::ofstream out(dir / "f.tsv");
    out << text;
  };
  write("# columns: lang_pair model baseline\nen-de\t8B\tabc\n");
  CHECK_THROWS_WITH_AS(load_fixture_table(dir / "f.tsv"), doctest::Contains("field 'baseline'"), FormatError);
  write("en-de\t8B\t1\n");
  CHECK_THROWS_AS(load_fixture_table(dir / "f.tsv"), FormatError);
  write("# columns: block lang_pair model baseline\nX->En\ten-de\t8B\t1\n");
  CHECK_THROWS_WITH_AS(load_fixture_table(dir / "f.tsv"), doctest::Contains("field 'block'"), FormatError);
  write("# columns: lang_pair model baseline\nen-de\t8B\n");
  CHECK_THROWS_AS(load_fixture_table(dir / "f.tsv"), FormatError);

  const auto t = load_fixture_table(kData / "wmt24_late_10.tsv");
  CHECK(t.rows.size() == 12);
  CHECK(t.meta_value("testset") == "wmt24");
  CHECK_THROWS_AS(fixture_records(t, "70B", "baseline"), Error);
  CHECK_THROWS_AS(fixture_records(t, "8B", "nope"), Error);
  CHECK(fixture_records(t, "8B", "full_prompted")[0].system_id == "8B/full_prompted");
}

TEST_CASE("impact report rendering") {
  auto table = impact_table(fixture_records(load_fixture_table(kData / "wmt24_late_100.tsv"), "8B", "baseline"),
                            fixture_records(load_fixture_table(kData / "wmt24_late_100.tsv"), "8B", "full_prompted"),
                            cond(ContaminationMode::full_prompted, 100));
  const auto report = build_impact_report(std::move(table));
  const auto text = render_impact_report(report, TableFormat::text);
  const auto en_x = text.find("En->X\n");
  const auto x_y = text.find("X->Y\n");
  REQUIRE(en_x != std::string::npos);
  REQUIRE(x_y != std::string::npos);
  CHECK(en_x < x_y);
  CHECK(text.find("X->En\n") == std::string::npos);
  CHECK(text.find("delta box") != std::string::npos);

  const auto csv = render_impact_report(report, TableFormat::csv);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  const auto j = nlohmann::json::parse(render_impact_report(report, TableFormat::json));
  CHECK(j.at("cells").size() == 6);
  CHECK_THROWS_AS(parse_table_format("html"), Error);
}
