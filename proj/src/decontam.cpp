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

#include "ctk/decontam.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace ctk {
namespace {

constexpr std::array<Label, 4> kLabels = {Label::clean, Label::source_only,
                                          Label::target_only, Label::both};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width, bool right = false) {
  if (s.size() >= width) return s;
  return right ? std::string(width - s.size(), ' ') + s : s + std::string(width - s.size(), ' ');
}

nlohmann::json counts_json(const LabelCounts& c) {
  nlohmann::json j = nlohmann::json::object();
  for (Label l : kLabels) j[std::string(to_string(l))] = c[l];
  return j;
}

LabelCounts counts_from_json(const nlohmann::json& j) {
  LabelCounts c;
  for (Label l : kLabels) c[l] = j.value(std::string(to_string(l)), std::size_t{0});
  return c;
}

}  // namespace

std::string_view to_string(Label label) {
  switch (label) {
    case Label::clean: return "clean";
    case Label::source_only: return "source_only";
    case Label::target_only: return "target_only";
    case Label::both: return "both";
  }
  return "clean";
}

Label parse_label(std::string_view name) {
  for (Label l : kLabels) {
    if (to_string(l) == name) return l;
  }
  throw Error("unknown label '" + std::string(name) + "'");
}

Label classify(double s_source, double s_target, double threshold) {
  const bool src = s_source > threshold;
  const bool tgt = s_target > threshold;
  if (src && tgt) return Label::both;
  if (src) return Label::source_only;
  if (tgt) return Label::target_only;
  return Label::clean;
}

Label classify(const ContaminationScore& score, const ScanConfig& config) {
  return classify(score.s_source(), score.s_target(), config.threshold);
}

std::size_t LabelCounts::total() const {
  std::size_t t = 0;
  for (auto c : by_label) t += c;
  return t;
}

double DecontamReport::removed_fraction() const {
  return total == 0 ? 0.0 : static_cast<double>(removed()) / static_cast<double>(total);
}

void DecontamReport::check() const {
  if (counts.total() != total) throw Error("label counts do not sum to total");
  if (total - counts[Label::clean] != removed_ids.size()) {
    throw Error("removed ids do not match non-clean label counts");
  }
  std::size_t pair_total = 0;
  for (const auto& [pair, c] : by_lang_pair) pair_total += c.total();
  if (pair_total != total) throw Error("per-pair counts do not sum to total");
  std::size_t hist_total = 0;
  for (auto h : histogram) hist_total += h;
  if (hist_total != total) throw Error("histogram does not sum to total");
}

std::size_t histogram_bins(double bin_width) {
  if (!(bin_width > 0.0 && bin_width <= 1.0)) throw Error("bin width must be in (0, 1]");
  return static_cast<std::size_t>(std::ceil(1.0 / bin_width - 1e-9));
}

std::size_t histogram_bin(double score, std::size_t bins) {
  // The epsilon keeps scores such as 0.15 out of the bin below when the
  // product rounds to 2.9999999999999996.
  const double scaled = std::floor(score * static_cast<double>(bins) + 1e-9);
  if (scaled <= 0.0) return 0;
  return std::min(bins - 1, static_cast<std::size_t>(scaled));
}

DecontamReport build_report(const std::vector<TestExample>& examples,
                            const std::vector<ContaminationScore>& scores,
                            const ScanConfig& config, double bin_width) {
  if (examples.size() != scores.size()) throw Error("score count does not match examples");
  DecontamReport r;
  r.threshold = config.threshold;
  r.bin_width = bin_width;
  r.histogram.assign(histogram_bins(bin_width), 0);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Label label = classify(scores[i], config);
    ++r.total;
    ++r.counts[label];
    ++r.by_lang_pair[examples[i].lang_pair.str()][label];
    ++r.histogram[histogram_bin(scores[i].combined(), r.histogram.size())];
    if (label != Label::clean) r.removed_ids.push_back(examples[i].example_id);
  }
  return r;
}

DecontamResult decontaminate(const std::vector<TestExample>& testset,
                             const NGramIndex& index, const ScanConfig& config,
                             double bin_width, std::size_t threads) {
  if (testset.empty()) throw Error("cannot decontaminate an empty test set");
  DecontamResult result;
  result.scores = score_examples(testset, index, config, threads);
  result.report = build_report(testset, result.scores, config, bin_width);
  for (std::size_t i = 0; i < testset.size(); ++i) {
    if (classify(result.scores[i], config) == Label::clean) result.kept.push_back(testset[i]);
  }
  return result;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "text") return ReportFormat::text;
  if (name == "json") return ReportFormat::json;
  throw Error("unknown report format '" + std::string(name) + "' (expected text or json)");
}

nlohmann::json report_to_json(const DecontamReport& report) {
  nlohmann::json breakdown = nlohmann::json::array();
  for (Label l : kLabels) {
    if (report.counts[l] > 0) {
      breakdown.push_back({{"label", to_string(l)}, {"count", report.counts[l]}});
    }
  }
  nlohmann::json pairs = nlohmann::json::object();
  for (const auto& [pair, c] : report.by_lang_pair) pairs[pair] = counts_json(c);
  return nlohmann::json{{"threshold", report.threshold},
                        {"bin_width", report.bin_width},
                        {"total", report.total},
                        {"removed", report.removed()},
                        {"kept", report.kept()},
                        {"removed_fraction", report.removed_fraction()},
                        {"counts", counts_json(report.counts)},
                        {"breakdown", breakdown},
                        {"by_lang_pair", pairs},
                        {"histogram", report.histogram},
                        {"removed_ids", report.removed_ids}};
}

DecontamReport report_from_json(const nlohmann::json& j) {
  try {
    DecontamReport r;
    r.threshold = j.at("threshold").get<double>();
    r.bin_width = j.at("bin_width").get<double>();
    r.total = j.at("total").get<std::size_t>();
    r.counts = counts_from_json(j.at("counts"));
    for (const auto& [pair, c] : j.at("by_lang_pair").items()) {
      r.by_lang_pair[pair] = counts_from_json(c);
    }
    r.histogram = j.at("histogram").get<std::vector<std::size_t>>();
    r.removed_ids = j.at("removed_ids").get<std::vector<std::string>>();
    r.check();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
}

std::string render_report(const DecontamReport& report, ReportFormat format) {
  if (format == ReportFormat::json) return report_to_json(report).dump(2) + "\n";

  std::ostringstream out;
  out << "contamination report\n";
  out << "threshold  " << fixed(report.threshold, 2)
      << " (fields strictly above are contaminated)\n";
  out << "total      " << report.total << "\n";
  out << "removed    " << report.removed() << " ("
      << fixed(100.0 * report.removed_fraction(), 1) << "% removed)\n";
  out << "kept       " << report.kept() << "\n\n";

  out << pad("label", 14) << pad("count", 8, true) << "\n";
  for (Label l : kLabels) {
    if (report.counts[l] == 0) continue;
    out << pad(std::string(to_string(l)), 14)
        << pad(std::to_string(report.counts[l]), 8, true) << "\n";
  }

  if (!report.by_lang_pair.empty()) {
    out << "\n" << pad("lang_pair", 12);
    for (Label l : kLabels) out << pad(std::string(to_string(l)), 13, true);
    out << pad("total", 8, true) << "\n";
    for (const auto& [pair, c] : report.by_lang_pair) {
      out << pad(pair, 12);
      for (Label l : kLabels) out << pad(std::to_string(c[l]), 13, true);
      out << pad(std::to_string(c.total()), 8, true) << "\n";
    }
  }

  if (report.total > 0) {
    out << "\nmax(s_source, s_target), bin width " << fixed(report.bin_width, 2) << "\n";
    const std::size_t bins = report.histogram.size();
    for (std::size_t k = 0; k < bins; ++k) {
      const double lo = static_cast<double>(k) * report.bin_width;
      const double hi = k + 1 == bins ? 1.0 : static_cast<double>(k + 1) * report.bin_width;
      out << "[" << fixed(lo, 2) << ", " << fixed(hi, 2) << (k + 1 == bins ? "]" : ")")
          << pad(std::to_string(report.histogram[k]), 8, true) << "\n";
    }
  }
  return out.str();
}

}  // namespace ctk
