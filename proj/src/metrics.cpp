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

#include "ctk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ctk {
namespace {

using NGramCounts = std::map<std::vector<TokenId>, std::uint64_t>;

NGramCounts count_ngrams(const TokenSequence& seq, std::size_t n) {
  NGramCounts counts;
  if (seq.size() < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    ++counts[std::vector<TokenId>(seq.begin() + i, seq.begin() + i + n)];
  }
  return counts;
}

}  // namespace

std::string_view to_string(Smoothing s) {
  return s == Smoothing::add_one ? "add_one" : "none";
}

Smoothing parse_smoothing(std::string_view name) {
  if (name == "none") return Smoothing::none;
  if (name == "add_one") return Smoothing::add_one;
  throw Error("unknown smoothing '" + std::string(name) + "' (expected none or add_one)");
}

std::string BleuConfig::str() const {
  return "order=" + std::to_string(max_order) + " smoothing=" + std::string(to_string(smoothing));
}

BleuStats::BleuStats(std::size_t max_order)
    : matches(max_order, 0), hyp_totals(max_order, 0), ref_totals(max_order, 0) {}

void BleuStats::add(const TokenSequence& hypothesis, const TokenSequence& reference) {
  hyp_len += hypothesis.size();
  ref_len += reference.size();
  for (std::size_t n = 1; n <= matches.size(); ++n) {
    const auto h = count_ngrams(hypothesis, n);
    const auto r = count_ngrams(reference, n);
    if (hypothesis.size() >= n) hyp_totals[n - 1] += hypothesis.size() - n + 1;
    if (reference.size() >= n) ref_totals[n - 1] += reference.size() - n + 1;
    for (const auto& [gram, count] : h) {
      auto it = r.find(gram);
      if (it != r.end()) matches[n - 1] += std::min(count, it->second);
    }
  }
}

BleuResult bleu_from_stats(const BleuStats& stats, const BleuConfig& config) {
  BleuResult result;
  result.config = config.str();
  result.hyp_len = stats.hyp_len;
  result.ref_len = stats.ref_len;
  if (stats.hyp_len == 0) {
    result.brevity_penalty = 0.0;
    return result;
  }
  result.brevity_penalty =
      stats.hyp_len >= stats.ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(stats.ref_len) / static_cast<double>(stats.hyp_len));

  double log_sum = 0.0;
  std::size_t orders = 0;
  bool zero = false;
  for (std::size_t n = 1; n <= stats.matches.size(); ++n) {
    std::uint64_t m = stats.matches[n - 1];
    std::uint64_t t = stats.hyp_totals[n - 1];
    if (t == 0 && stats.ref_totals[n - 1] == 0) continue;
    if (config.smoothing == Smoothing::add_one && n >= 2) {
      ++m;
      ++t;
    }
    const double p = t == 0 ? 0.0 : static_cast<double>(m) / static_cast<double>(t);
    result.precisions.push_back(p);
    ++orders;
    if (p == 0.0) {
      zero = true;
    } else {
      log_sum += std::log(p);
    }
  }
  if (zero || orders == 0) return result;
  result.score = 100.0 * result.brevity_penalty * std::exp(log_sum / static_cast<double>(orders));
  return result;
}

BleuResult corpus_bleu_detailed(const std::vector<TokenSequence>& hypotheses,
                                const std::vector<TokenSequence>& references,
                                const BleuConfig& config) {
  if (config.max_order < 1) throw Error("BLEU max_order must be >= 1");
  if (hypotheses.size() != references.size()) {
    throw Error("BLEU needs one reference per hypothesis (" + std::to_string(hypotheses.size()) +
                " hypotheses, " + std::to_string(references.size()) + " references)");
  }
  if (hypotheses.empty()) throw Error("BLEU needs at least one segment");
  BleuStats stats(config.max_order);
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    if (references[i].empty()) throw Error("empty reference segment " + std::to_string(i));
    stats.add(hypotheses[i], references[i]);
  }
  return bleu_from_stats(stats, config);
}

double corpus_bleu(const std::vector<TokenSequence>& hypotheses,
                   const std::vector<TokenSequence>& references, std::size_t max_order,
                   Smoothing smoothing) {
  return corpus_bleu_detailed(hypotheses, references, BleuConfig{max_order, smoothing}).score;
}

TokenSequence WhitespaceVocab::encode(std::string_view line) {
  TokenSequence out;
  std::istringstream in{std::string(line)};
  std::string word;
  while (in >> word) {
    auto [it, fresh] = ids_.try_emplace(word, static_cast<TokenId>(ids_.size()));
    out.push_back(it->second);
  }
  return out;
}

void EvalRecord::validate() const {
  if (!(bleu >= 0.0 && bleu <= 100.0)) throw Error("BLEU " + std::to_string(bleu) + " outside [0, 100]");
  if (segment_count < 1) throw Error("segment_count must be >= 1");
}

std::vector<EvalRecord> score_system(const std::map<std::string, TokenSequence>& outputs,
                                     const std::vector<TestExample>& testset,
                                     const std::string& system_id,
                                     const std::string& testset_id, const BleuConfig& config) {
  std::vector<std::string> missing;
  for (const auto& ex : testset) {
    if (!outputs.contains(ex.example_id)) missing.push_back(ex.example_id);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw Error("missing hypotheses for " + std::to_string(missing.size()) + " example(s): " + list);
  }
  std::vector<EvalRecord> records;
  for (const auto& [pair, indices] : group_by_lang_pair(testset)) {
    std::vector<TokenSequence> hyps, refs;
    for (auto i : indices) {
      hyps.push_back(outputs.at(testset[i].example_id));
      refs.push_back(testset[i].target_tokens);
    }
    EvalRecord r{system_id, pair, testset_id, corpus_bleu_detailed(hyps, refs, config).score,
                 indices.size()};
    r.validate();
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<EvalRecord> read_eval_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  std::vector<EvalRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      EvalRecord r;
      r.system_id = j.at("system_id").get<std::string>();
      r.lang_pair = LangPair{j.at("src_lang").get<std::string>(), j.at("tgt_lang").get<std::string>()};
      r.testset_id = j.at("testset_id").get<std::string>();
      r.bleu = j.at("bleu").get<double>();
      r.segment_count = j.at("segment_count").get<std::size_t>();
      r.validate();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string(), n, "<record>", e.what());
    } catch (const FormatError&) {
      throw;
    } catch (const Error& e) {
      throw FormatError(path.string(), n, "bleu", e.what());
    }
  }
  return out;
}

void write_eval_records(const std::filesystem::path& path,
                        const std::vector<EvalRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  for (const auto& r : records) {
    out << nlohmann::json{{"system_id", r.system_id},
                          {"src_lang", r.lang_pair.source},
                          {"tgt_lang", r.lang_pair.target},
                          {"testset_id", r.testset_id},
                          {"bleu", r.bleu},
                          {"segment_count", r.segment_count}}
               .dump()
        << '\n';
  }
  if (!out) throw Error("write failed on '" + path.string() + "'");
}

}  // namespace ctk
