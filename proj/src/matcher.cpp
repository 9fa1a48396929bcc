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

#include "ctk/matcher.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <thread>
#include <tuple>

namespace ctk {
namespace {

void check_order(const NGramIndex& index, const ScanConfig& config) {
  config.validate();
  if (config.ngram_order != index.ngram_order()) {
    throw Error("scan n-gram order " + std::to_string(config.ngram_order) +
                " does not match index order " + std::to_string(index.ngram_order()));
  }
}

auto span_key(const MatchSpan& s) {
  return std::tie(s.doc, s.corpus_start, s.example_start);
}

// Whole-field search for fields too short to seed from the index.
std::vector<MatchSpan> scan_short_field(std::span<const TokenId> field,
                                        const NGramIndex& index) {
  std::vector<MatchSpan> out;
  for (DocRef d = 0; d < index.doc_count(); ++d) {
    const auto doc = index.doc_tokens(d);
    auto it = doc.begin();
    while (true) {
      it = std::search(it, doc.end(), field.begin(), field.end());
      if (it == doc.end()) break;
      out.push_back(MatchSpan{d, static_cast<std::size_t>(it - doc.begin()), 0,
                              field.size()});
      ++it;
    }
  }
  return out;
}

nlohmann::json span_json(const std::optional<MatchSpan>& s, const NGramIndex& index) {
  if (!s) return nullptr;
  return nlohmann::json{{"doc_id", index.doc_id(s->doc)},
                        {"corpus_start", s->corpus_start},
                        {"example_start", s->example_start},
                        {"length", s->length}};
}

}  // namespace

std::vector<MatchSpan> find_spans(std::span<const TokenId> field,
                                  const NGramIndex& index, const ScanConfig& config) {
  check_order(index, config);
  if (field.empty()) throw Error("cannot match an empty field");
  const std::size_t n = config.ngram_order;
  if (field.size() < n) return scan_short_field(field, index);

  std::map<std::vector<TokenId>, std::vector<Location>> hits_by_gram;
  std::vector<MatchSpan> out;
  for (std::size_t i = 0; i + n <= field.size(); ++i) {
    std::vector<TokenId> gram(field.begin() + i, field.begin() + i + n);
    auto it = hits_by_gram.find(gram);
    if (it == hits_by_gram.end()) {
      auto hits = index.query(gram);
      it = hits_by_gram.emplace(std::move(gram), std::move(hits)).first;
    }
    for (const Location& loc : it->second) {
      const auto doc = index.doc_tokens(loc.doc);
      // A seed whose left neighbours also agree lies inside a span that is
      // reported from that span's first position.
      if (i > 0 && loc.offset > 0 && field[i - 1] == doc[loc.offset - 1]) continue;
      std::size_t len = n;
      while (i + len < field.size() && loc.offset + len < doc.size() &&
             field[i + len] == doc[loc.offset + len]) {
        ++len;
      }
      out.push_back(MatchSpan{loc.doc, loc.offset, i, len});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const MatchSpan& a, const MatchSpan& b) { return span_key(a) < span_key(b); });
  return out;
}

std::optional<MatchSpan> longest_match(std::span<const MatchSpan> spans) {
  std::optional<MatchSpan> best;
  for (const auto& s : spans) {
    if (!best || s.length > best->length ||
        (s.length == best->length && span_key(s) < span_key(*best))) {
      best = s;
    }
  }
  return best;
}

FieldScore score_field(std::span<const TokenId> field, const NGramIndex& index,
                       const ScanConfig& config) {
  FieldScore score;
  score.field_len = field.size();
  const auto spans = find_spans(field, index, config);
  score.longest = longest_match(spans);
  if (score.longest) score.matched = score.longest->length;
  return score;
}

ContaminationScore score_example(const TestExample& example, const NGramIndex& index,
                                 const ScanConfig& config) {
  return ContaminationScore{score_field(example.source_tokens, index, config),
                            score_field(example.target_tokens, index, config)};
}

std::vector<ContaminationScore> score_examples(const std::vector<TestExample>& examples,
                                               const NGramIndex& index,
                                               const ScanConfig& config,
                                               std::size_t threads) {
  check_order(index, config);
  std::vector<ContaminationScore> out(examples.size());
  std::vector<std::exception_ptr> errors(examples.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < examples.size(); i = next++) {
      try {
        out[i] = score_example(examples[i], index, config);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, examples.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

nlohmann::json score_to_json(const std::string& example_id,
                             const ContaminationScore& score, const NGramIndex& index) {
  return nlohmann::json{{"example_id", example_id},
                        {"s_source", score.s_source()},
                        {"s_target", score.s_target()},
                        {"longest_source", span_json(score.source.longest, index)},
                        {"longest_target", span_json(score.target.longest, index)}};
}

void write_scores(const std::filesystem::path& path,
                  const std::vector<TestExample>& examples,
                  const std::vector<ContaminationScore>& scores,
                  const NGramIndex& index) {
  if (examples.size() != scores.size()) throw Error("score count does not match examples");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out << score_to_json(examples[i].example_id, scores[i], index).dump() << '\n';
  }
  if (!out) throw Error("write failed on '" + path.string() + "'");
}

}  // namespace ctk
