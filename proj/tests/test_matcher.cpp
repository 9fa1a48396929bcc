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

#include <random>

#include "ctk/matcher.hpp"
#include "support/oracles.hpp"

using namespace ctk;
using ctk::testing::OracleSpan;
using ctk::testing::uniform;

namespace {

CorpusDocument doc(std::string id, TokenSequence t) {
  return {std::move(id), std::move(t), Category::monolingual, ""};
}

TokenSequence iota_tokens(TokenId first, std::size_t n) {
  TokenSequence t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = first + static_cast<TokenId>(i);
  return t;
}

std::vector<OracleSpan> as_oracle(const std::vector<MatchSpan>& spans) {
  std::vector<OracleSpan> out;
  for (const auto& s : spans) out.push_back({s.doc, s.corpus_start, s.example_start, s.length});
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t dp_best(const TokenSequence& field, const std::vector<CorpusDocument>& docs) {
  std::size_t best = 0;
  for (const auto& d : docs) best = std::max(best, ctk::testing::dp_longest_common_substring(field, d.tokens));
  return best;
}

TestExample example(TokenSequence src, TokenSequence tgt) {
  return {"ex", {"de", "en"}, "s", "t", std::move(src), std::move(tgt)};
}

}  // namespace

TEST_CASE("contained field yields one span of its full length") {
  TokenSequence d = iota_tokens(100, 40);
  const TokenSequence field(d.begin() + 5, d.begin() + 17);
  const auto idx = build_index({doc("d0", d)}, ScanConfig{});
  const auto spans = find_spans(field, idx, ScanConfig{});
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == MatchSpan{0, 5, 0, 12});
}

TEST_CASE("field sharing no 8-gram gives no spans") {
  const auto idx = build_index({doc("d0", iota_tokens(0, 50))}, ScanConfig{});
  TokenSequence field = iota_tokens(0, 7);
  field.push_back(999);
  field.insert(field.end(), {10, 11, 12, 13, 14, 15, 16});
  CHECK(find_spans(field, idx, ScanConfig{}).empty());
}

TEST_CASE("planted substrings of length 9 and 14 match the DP oracle") {
  std::mt19937_64 rng(21);
  TokenSequence field = ctk::testing::random_tokens(rng, 30, 1u << 30);
  auto d0 = ctk::testing::random_tokens(rng, 60, 1u << 30);
  auto d1 = ctk::testing::random_tokens(rng, 60, 1u << 30);
  std::copy(field.begin() + 1, field.begin() + 10, d0.begin() + 20);
  std::copy(field.begin() + 14, field.begin() + 28, d1.begin() + 3);
  const std::vector<CorpusDocument> docs{doc("d0", d0), doc("d1", d1)};
  const auto idx = build_index(docs, ScanConfig{});
  const auto spans = find_spans(field, idx, ScanConfig{});
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == MatchSpan{0, 20, 1, 9});
  CHECK(spans[1] == MatchSpan{1, 3, 14, 14});
  CHECK(as_oracle(spans) == ctk::testing::dp_all_common_substrings(field, docs, 8));
  CHECK(longest_match(spans)->length == 14);
}

TEST_CASE("longest_match selection and tie rule") {
  CHECK_FALSE(longest_match(std::vector<MatchSpan>{}).has_value());
  const std::vector<MatchSpan> spans{{2, 0, 0, 10}, {1, 7, 3, 10}, {1, 7, 1, 10}, {0, 0, 0, 9}};
  CHECK(*longest_match(spans) == MatchSpan{1, 7, 1, 10});
  const std::vector<MatchSpan> two{{0, 0, 0, 9}, {3, 1, 2, 14}};
  CHECK(*longest_match(two) == MatchSpan{3, 1, 2, 14});
}

TEST_CASE("score_example") {
  const auto src = iota_tokens(1000, 20);
  const auto tgt = iota_tokens(2000, 15);

  SUBCASE("source present, target absent") {
    const auto idx = build_index({doc("d", src)}, ScanConfig{});
    const auto s = score_example(example(src, tgt), idx, ScanConfig{});
    CHECK(s.s_source() == 1.0);
    CHECK(s.s_target() == 0.0);
    CHECK(s.combined() == 1.0);
    CHECK_FALSE(s.target.longest.has_value());
  }
  SUBCASE("12 of 20 source tokens") {
    TokenSequence d = iota_tokens(1, 30);
    std::copy(src.begin() + 4, src.begin() + 16, d.begin() + 10);
    const auto idx = build_index({doc("d", d)}, ScanConfig{});
    const auto s = score_example(example(src, tgt), idx, ScanConfig{});
    CHECK(ctk::testing::dp_longest_common_substring(src, d) == 12);
    CHECK(s.s_source() == 0.6);
    CHECK(s.source.matched == 12);
    CHECK(s.source.field_len == 20);
  }
  SUBCASE("both fields contained") {
    const auto idx = build_index({doc("pair_src", src), doc("pair_tgt", tgt)}, ScanConfig{});
    const auto s = score_example(example(src, tgt), idx, ScanConfig{});
    CHECK(s.s_source() == 1.0);
    CHECK(s.s_target() == 1.0);
    CHECK(s.target.longest->doc == 1);
  }
}

TEST_CASE("fields shorter than n are searched whole") {
  const auto idx = build_index({doc("d", {1, 2, 3, 4, 5, 6, 7, 8, 9, 1, 2, 3})}, ScanConfig{});
  const TokenSequence hit{1, 2, 3};
  const auto spans = find_spans(hit, idx, ScanConfig{});
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == MatchSpan{0, 0, 0, 3});
  CHECK(spans[1] == MatchSpan{0, 9, 0, 3});
  CHECK(score_field(hit, idx, ScanConfig{}).fraction() == 1.0);
  // A partial overlap scores zero on the fallback path.
  CHECK(score_field(TokenSequence{8, 9, 7}, idx, ScanConfig{}).fraction() == 0.0);
  CHECK_THROWS_AS(find_spans(TokenSequence{}, idx, ScanConfig{}), Error);
}

TEST_CASE("sub-n fallback agrees with the DP oracle") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<CorpusDocument> docs;
    for (int d = 0; d < 5; ++d) {
      docs.push_back(doc("d" + std::to_string(d), ctk::testing::random_tokens(rng, uniform(rng, 0, 40), 3)));
    }
    const auto idx = build_index(docs, ScanConfig{});
    const auto field = ctk::testing::random_tokens(rng, uniform(rng, 1, 7), 3);
    const bool contained = dp_best(field, docs) == field.size();
    CHECK(score_field(field, idx, ScanConfig{}).fraction() == (contained ? 1.0 : 0.0));
  }
}

TEST_CASE("config order must match the index") {
  const auto idx = build_index({doc("d", iota_tokens(0, 20))}, ScanConfig{});
  CHECK_THROWS_AS(find_spans(iota_tokens(0, 10), idx, ScanConfig{4, 0.7}), Error);
}

TEST_CASE("randomized oracle equivalence, maximality and agreement") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = uniform(rng, 2, 8);
    const TokenId alphabet = static_cast<TokenId>(uniform(rng, 2, 6));
    std::vector<CorpusDocument> docs;
    for (int d = 0; d < 8; ++d) {
      docs.push_back(doc("d" + std::to_string(d), ctk::testing::random_tokens(rng, uniform(rng, 0, 120), alphabet)));
    }
    TokenSequence field = ctk::testing::random_tokens(rng, uniform(rng, n, 60), alphabet);
    const ScanConfig cfg{n, 0.7};
    const auto idx = build_index(docs, cfg);
    const auto spans = find_spans(field, idx, cfg);
    CHECK(as_oracle(spans) == ctk::testing::dp_all_common_substrings(field, docs, n));
    for (const auto& s : spans) {
      const auto& t = docs[s.doc].tokens;
      CHECK(s.length >= n);
      for (std::size_t i = 0; i < s.length; ++i) CHECK(t[s.corpus_start + i] == field[s.example_start + i]);
      const bool left = s.corpus_start > 0 && s.example_start > 0 &&
                        t[s.corpus_start - 1] == field[s.example_start - 1];
      const bool right = s.corpus_start + s.length < t.size() &&
                         s.example_start + s.length < field.size() &&
                         t[s.corpus_start + s.length] == field[s.example_start + s.length];
      CHECK_FALSE(left);
      CHECK_FALSE(right);
    }
    const auto best = dp_best(field, docs);
    const double expected = best >= n ? static_cast<double>(best) / field.size() : 0.0;
    CHECK(score_field(field, idx, cfg).fraction() == expected);
  }
}

TEST_CASE("swapping fields swaps scores") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<CorpusDocument> docs;
    for (int d = 0; d < 6; ++d) docs.push_back(doc("d" + std::to_string(d), ctk::testing::random_tokens(rng, 80, 3)));
    const auto idx = build_index(docs, ScanConfig{4, 0.7});
    const auto a = ctk::testing::random_tokens(rng, uniform(rng, 1, 30), 3);
    const auto b = ctk::testing::random_tokens(rng, uniform(rng, 1, 30), 3);
    const auto s1 = score_example(example(a, b), idx, ScanConfig{4, 0.7});
    const auto s2 = score_example(example(b, a), idx, ScanConfig{4, 0.7});
    CHECK(s1.s_source() == s2.s_target());
    CHECK(s1.s_target() == s2.s_source());
  }
}

TEST_CASE("appending corpus tokens never lowers a score") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<CorpusDocument> docs;
    for (int d = 0; d < 4; ++d) docs.push_back(doc("d" + std::to_string(d), ctk::testing::random_tokens(rng, uniform(rng, 0, 50), 3)));
    const ScanConfig cfg{3, 0.7};
    const auto field = ctk::testing::random_tokens(rng, 25, 3);
    double prev = score_field(field, build_index(docs, cfg), cfg).fraction();
    for (int step = 0; step < 5; ++step) {
      auto& t = docs[uniform(rng, 0, docs.size() - 1)].tokens;
      const auto extra = ctk::testing::random_tokens(rng, uniform(rng, 1, 10), 3);
      t.insert(t.end(), extra.begin(), extra.end());
      const double now = score_field(field, build_index(docs, cfg), cfg).fraction();
      CHECK(now >= prev);
      prev = now;
    }
  }
}

TEST_CASE("parallel scoring equals serial scoring and dumps JSON") {
  std::mt19937_64 rng(26);
  std::vector<CorpusDocument> docs;
  for (int d = 0; d < 20; ++d) docs.push_back(doc("d" + std::to_string(d), ctk::testing::random_tokens(rng, 100, 4)));
  const ScanConfig cfg{5, 0.7};
  const auto idx = build_index(docs, cfg);
  std::vector<TestExample> exs;
  for (int i = 0; i < 40; ++i) {
    exs.push_back(example(ctk::testing::random_tokens(rng, 20, 4), ctk::testing::random_tokens(rng, 20, 4)));
    exs.back().example_id = "e" + std::to_string(i);
  }
  const auto serial = score_examples(exs, idx, cfg, 1);
  const auto parallel = score_examples(exs, idx, cfg, 4);
  for (std::size_t i = 0; i < exs.size(); ++i) {
    CHECK(serial[i].s_source() == parallel[i].s_source());
    CHECK(serial[i].s_target() == parallel[i].s_target());
    CHECK(serial[i].source.longest == parallel[i].source.longest);
  }
  const auto j = score_to_json("e0", serial[0], idx);
  CHECK(j.at("example_id") == "e0");
  CHECK(j.at("s_source").get<double>() == serial[0].s_source());
  if (serial[0].source.longest) {
    CHECK(j.at("longest_source").at("doc_id") == idx.doc_id(serial[0].source.longest->doc));
  }
  const auto none = score_to_json("x", ContaminationScore{}, idx);
  CHECK(none.at("longest_target").is_null());
}
