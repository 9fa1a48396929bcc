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
#include <random>

#include "ctk/metrics.hpp"
#include "support/oracles.hpp"

using namespace ctk;
using ctk::testing::TempDir;
using ctk::testing::uniform;

namespace {

std::vector<TokenSequence> encode_all(WhitespaceVocab& v, const std::vector<std::string>& lines) {
  std::vector<TokenSequence> out;
  for (const auto& l : lines) out.push_back(v.encode(l));
  return out;
}

TestExample ex(std::string id, LangPair lp, TokenSequence tgt) {
  return {std::move(id), std::move(lp), "s", "t", {1}, std::move(tgt)};
}

}  // namespace

TEST_CASE("identical hypotheses score 100") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TokenSequence> h;
    for (std::size_t i = 0, n = uniform(rng, 1, 10); i < n; ++i) {
      h.push_back(ctk::testing::random_tokens(rng, uniform(rng, 1, 20), 10));
    }
    CHECK(corpus_bleu(h, h) == 100.0);
    CHECK(corpus_bleu(h, h, 4, Smoothing::add_one) == 100.0);
  }
}

TEST_CASE("clipping construction scores zero") {
  WhitespaceVocab v;
  const auto hyp = encode_all(v, {"the the the the the the the"});
  const auto ref = encode_all(v, {"the cat is on the mat"});
  const auto r = corpus_bleu_detailed(hyp, ref);
  REQUIRE(r.precisions.size() == 4);
  CHECK(r.precisions[0] == doctest::Approx(2.0 / 7.0));
  CHECK(r.precisions[1] == 0.0);
  CHECK(r.score == 0.0);
  CHECK(r.brevity_penalty == 1.0);
}

TEST_CASE("closed-form brevity penalty case") {
  const std::vector<TokenSequence> hyp{{1, 2, 3, 4}};
  const std::vector<TokenSequence> ref{{1, 2, 3, 4, 5}};
  const auto r = corpus_bleu_detailed(hyp, ref);
  CHECK(std::abs(r.score - 100.0 * std::exp(-0.25)) < 1e-9);
  CHECK(r.score == doctest::Approx(77.88).epsilon(1e-4));
  CHECK(r.brevity_penalty == doctest::Approx(std::exp(-0.25)));
  CHECK(std::abs(ctk::testing::brute_force_bleu(hyp, ref, 4, false) - r.score) < 1e-9);
  CHECK(r.config == "order=4 smoothing=none");
}

TEST_CASE("longer hypotheses have no brevity penalty") {
  const auto r = corpus_bleu_detailed({{1, 2, 3, 4, 5, 6}}, {{1, 2, 3, 4, 5}});
  CHECK(r.brevity_penalty == 1.0);
}

TEST_CASE("add_one smoothing rescues zero higher-order precision") {
  const std::vector<TokenSequence> hyp{{1, 2, 9, 3, 8}};
  const std::vector<TokenSequence> ref{{1, 2, 3, 4, 5}};
  CHECK(corpus_bleu(hyp, ref) == 0.0);
  const double smoothed = corpus_bleu(hyp, ref, 4, Smoothing::add_one);
  CHECK(smoothed > 0.0);
  CHECK(std::abs(smoothed - ctk::testing::brute_force_bleu(hyp, ref, 4, true)) < 1e-9);
  // Unigram precision is never smoothed.
  CHECK(corpus_bleu({{7, 7}}, {{1, 2}}, 4, Smoothing::add_one) == 0.0);
}

TEST_CASE("brute-force equivalence on random corpora") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<TokenSequence> hyp, ref;
    for (std::size_t i = 0, n = uniform(rng, 1, 6); i < n; ++i) {
      hyp.push_back(ctk::testing::random_tokens(rng, uniform(rng, 0, 12), 4));
      ref.push_back(ctk::testing::random_tokens(rng, uniform(rng, 1, 12), 4));
    }
    const std::size_t order = uniform(rng, 1, 4);
    for (bool add_one : {false, true}) {
      const double got = corpus_bleu(hyp, ref, order, add_one ? Smoothing::add_one : Smoothing::none);
      CHECK(std::abs(got - ctk::testing::brute_force_bleu(hyp, ref, order, add_one)) < 1e-9);
      CHECK(got >= 0.0);
      CHECK(got <= 100.0);
    }
  }
}

TEST_CASE("permutation invariance") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<TokenSequence, TokenSequence>> pairs;
    for (int i = 0; i < 8; ++i) {
      pairs.emplace_back(ctk::testing::random_tokens(rng, uniform(rng, 1, 15), 5),
                         ctk::testing::random_tokens(rng, uniform(rng, 1, 15), 5));
    }
    auto score = [](const auto& p) {
      std::vector<TokenSequence> h, r;
      for (const auto& [a, b] : p) {
        h.push_back(a);
        r.push_back(b);
      }
      return corpus_bleu(h, r, 4, Smoothing::add_one);
    };
    const double before = score(pairs);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    CHECK(score(pairs) == before);
  }
}

TEST_CASE("bleu errors") {
  CHECK_THROWS_AS(corpus_bleu({{1}}, {}), Error);
  CHECK_THROWS_AS(corpus_bleu({}, {}), Error);
  CHECK_THROWS_WITH_AS(corpus_bleu({{1}}, {{}}), doctest::Contains("empty reference"), Error);
  CHECK_THROWS_AS(corpus_bleu({{1}}, {{1}}, 0), Error);
  CHECK(parse_smoothing("add_one") == Smoothing::add_one);
  CHECK_THROWS_AS(parse_smoothing("exp"), Error);
  CHECK(corpus_bleu({{}}, {{1, 2}}) == 0.0);
}

TEST_CASE("whitespace vocabulary") {
  WhitespaceVocab v;
  const auto a = v.encode("a  b\tc a");
  CHECK(a.size() == 4);
  CHECK(a[0] == a[3]);
  CHECK(a[0] != a[1]);
  CHECK(v.encode("").empty());
}

TEST_CASE("score_system groups by language pair") {
  const std::vector<TestExample> testset{ex("a", {"de", "en"}, {1, 2, 3, 4}),
                                         ex("b", {"de", "en"}, {5, 6, 7, 8}),
                                         ex("c", {"en", "cs"}, {9, 10, 11, 12, 13})};
  std::map<std::string, TokenSequence> outputs;
  for (const auto& e : testset) outputs[e.example_id] = e.target_tokens;
  const auto recs = score_system(outputs, testset, "sys", "wmt23");
  REQUIRE(recs.size() == 2);
  for (const auto& r : recs) {
    CHECK(r.bleu == 100.0);
    CHECK(r.system_id == "sys");
    CHECK(r.testset_id == "wmt23");
  }
  std::size_t segs = 0;
  for (const auto& r : recs) segs += r.segment_count;
  CHECK(segs == 3);

  auto shuffled = testset;
  std::reverse(shuffled.begin(), shuffled.end());
  outputs["a"] = {1, 2, 3, 9};
  CHECK(score_system(outputs, shuffled, "sys", "wmt23") == score_system(outputs, testset, "sys", "wmt23"));

  outputs.erase("a");
  outputs.erase("c");
  CHECK_THROWS_WITH_AS(score_system(outputs, testset, "sys", "wmt23"), doctest::Contains("a, c"), Error);
}

TEST_CASE("eval records round trip") {
  TempDir dir;
  const std::vector<EvalRecord> recs{{"m/base", {"en", "de"}, "wmt23", 30.95, 557},
                                     {"m/full", {"cs", "uk"}, "wmt24", 0.0, 1}};
  write_eval_records(dir / "r.jsonl", recs);
  CHECK(read_eval_records(dir / "r.jsonl") == recs);
  EvalRecord bad{"x", {"en", "de"}, "t", 101.0, 1};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.bleu = 5;
  bad.segment_count = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
