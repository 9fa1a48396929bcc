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

// Command-line front end. Exit codes: 0 success, 1 usage or input error,
// 3 contamination found (decontam) or violations found (inject verify).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctk/analytics.hpp"
#include "ctk/corpus_io.hpp"
#include "ctk/decontam.hpp"
#include "ctk/injector.hpp"
#include "ctk/matcher.hpp"
#include "ctk/metrics.hpp"
#include "ctk/ngram_index.hpp"

namespace {

using namespace ctk;
namespace fs = std::filesystem;

constexpr int kFound = 3;

// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("write failed on '" + path + "'");
}

std::vector<fs::path> to_paths(const std::vector<std::string>& v) {
  return {v.begin(), v.end()};
}

std::vector<TokenSequence> read_lines(const std::string& path, WhitespaceVocab& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::vector<TokenSequence> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(vocab.encode(line));
  return out;
}

PromptTemplate load_template(const std::string& languages, const std::string& format) {
  if (languages.empty() && format.empty()) return PromptTemplate();
  std::map<std::string, std::string> names = PromptTemplate().names();
  if (!languages.empty()) {
    std::ifstream in(languages, std::ios::binary);
    if (!in) throw Error("cannot open '" + languages + "' for reading");
    try {
      for (const auto& [tag, name] : nlohmann::json::parse(in).items()) names[tag] = name.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error("malformed language table '" + languages + "': " + e.what());
    }
  }
  return PromptTemplate(std::move(names), format.empty() ? std::string(PromptTemplate::kDefaultFormat) : format);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctk: test-set contamination toolkit for machine translation"};
  app.require_subcommand(1);
  int status = 0;

  // corpus convert
  auto* corpus = app.add_subcommand("corpus", "Corpus shard utilities");
  corpus->require_subcommand(1);
  auto* convert = corpus->add_subcommand("convert", "Rewrite shards in another format");
  std::vector<std::string> conv_in;
  std::string conv_from = "jsonl", conv_to = "binary", conv_out;
  convert->add_option("--in", conv_in, "Input shards, read in order")->required();
  convert->add_option("--from", conv_from, "Input format: jsonl or binary");
  convert->add_option("--to", conv_to, "Output format: jsonl or binary");
  convert->add_option("--out", conv_out, "Output shard")->required();
  convert->callback([&] {
    CorpusReader reader(to_paths(conv_in), parse_corpus_format(conv_from));
    CorpusWriter writer(conv_out, parse_corpus_format(conv_to));
    std::size_t n = 0;
    while (auto doc = reader.next()) {
      writer.write(*doc);
      ++n;
    }
    writer.close();
    std::cerr << "wrote " << n << " documents to " << conv_out << "\n";
  });

  // index build
  auto* index = app.add_subcommand("index", "N-gram index");
  index->require_subcommand(1);
  auto* build = index->add_subcommand("build", "Index corpus shards");
  std::vector<std::string> idx_corpus;
  std::string idx_format = "jsonl", idx_out;
  ScanConfig idx_cfg;
  IndexOptions idx_opts;
  build->add_option("--corpus", idx_corpus, "Corpus shards")->required();
  build->add_option("--format", idx_format, "Shard format: jsonl or binary");
  build->add_option("--order", idx_cfg.ngram_order, "N-gram order")->capture_default_str();
  build->add_option("--bits", idx_opts.fingerprint_bits, "Fingerprint width in bits")->capture_default_str();
  build->add_option("--threads", idx_opts.threads, "Worker threads, 0 for all cores");
  build->add_option("--out", idx_out, "Index file")->required();
  build->callback([&] {
    const auto idx = build_index_from_shards(to_paths(idx_corpus), parse_corpus_format(idx_format),
                                             idx_cfg, idx_opts);
    idx.save(idx_out);
    std::cerr << "indexed " << idx.doc_count() << " documents, " << idx.token_count() << " tokens, "
              << idx.posting_count() << " postings (n=" << idx.ngram_order() << ")\n";
  });

  // decontam
  auto* decon = app.add_subcommand("decontam", "Score a test set against an index and drop contaminated examples");
  std::string dc_index, dc_testset, dc_scores, dc_kept, dc_report, dc_format = "text";
  double dc_threshold = 0.7, dc_bin = 0.05;
  std::size_t dc_threads = 0;
  decon->add_option("--index", dc_index, "Index file")->required();
  decon->add_option("--testset", dc_testset, "Test set JSONL")->required();
  decon->add_option("--threshold", dc_threshold, "Fields strictly above this overlap are contaminated")->capture_default_str();
  decon->add_option("--bin-width", dc_bin, "Histogram bin width")->capture_default_str();
  decon->add_option("--threads", dc_threads, "Worker threads, 0 for all cores");
  decon->add_option("--scores", dc_scores, "Write per-example scores (JSONL)");
  decon->add_option("--kept", dc_kept, "Write the clean examples (JSONL)");
  decon->add_option("--report", dc_report, "Write the report here instead of stdout");
  decon->add_option("--format", dc_format, "Report format: text or json");
  decon->callback([&] {
    const auto fmt = parse_report_format(dc_format);
    const auto idx = NGramIndex::load(dc_index);
    const ScanConfig cfg{idx.ngram_order(), dc_threshold};
    const auto testset = read_testset(dc_testset);
    const auto result = decontaminate(testset, idx, cfg, dc_bin, dc_threads);
    if (!dc_scores.empty()) write_scores(dc_scores, testset, result.scores, idx);
    if (!dc_kept.empty()) write_testset(dc_kept, result.kept);
    emit(dc_report, render_report(result.report, fmt));
    if (result.report.removed() > 0) status = kFound;
  });

  // inject plan | apply | verify
  auto* inject = app.add_subcommand("inject", "Plan, apply and verify contamination schedules");
  inject->require_subcommand(1);
  auto* plan = inject->add_subcommand("plan", "Plan where contamination documents go");
  std::string pl_testset, pl_mode = "full_prompted", pl_temporal = "late", pl_stream, pl_tokens,
                          pl_languages, pl_template, pl_out;
  std::size_t pl_copies = 1;
  TrainingConfig pl_train;
  plan->add_option("--testset", pl_testset, "Test examples to inject (JSONL)")->required();
  plan->add_option("--mode", pl_mode, "full_prompted, source_only, target_only, split_pair, batched_pair");
  plan->add_option("--temporal", pl_temporal, "early, middle, late or uniform");
  plan->add_option("--copies", pl_copies, "Copies per example")->capture_default_str();
  plan->add_option("--steps", pl_train.total_steps, "Total training steps")->required();
  plan->add_option("--batch-size", pl_train.batch_size, "Documents per batch")->required();
  plan->add_option("--seed", pl_train.seed, "Placement seed")->capture_default_str();
  plan->add_option("--window-frac", pl_train.window_frac, "Minimum window width as a fraction of training")->capture_default_str();
  plan->add_option("--cap", pl_train.max_replace_frac, "Largest fraction of a batch that may be replaced")->capture_default_str();
  plan->add_flag("--strict-cap", pl_train.strict_cap, "Keep strictly below the cap fraction");
  plan->add_option("--stream", pl_stream, "Plan against this stream's parallel slots");
  plan->add_option("--tokens", pl_tokens, "Text-to-token table (JSONL of {text, tokens})");
  plan->add_option("--languages", pl_languages, "JSON object mapping language tags to English names");
  plan->add_option("--template", pl_template, "Prompt format with {src_name} {source} {tgt_name} {target}");
  plan->add_option("--out", pl_out, "Schedule file")->required();
  plan->callback([&] {
    const ContaminationCondition cond{parse_mode(pl_mode), parse_temporal(pl_temporal), pl_copies};
    PlanOptions opts;
    opts.prompt = load_template(pl_languages, pl_template);
    if (!pl_tokens.empty()) opts.tokenizer = load_tokenization_table(pl_tokens);
    BatchStream stream;
    if (!pl_stream.empty()) {
      stream = read_stream(pl_stream);
      opts.stream = &stream;
    }
    const auto schedule = plan_schedule(read_testset(pl_testset), cond, pl_train, opts);
    write_schedule(schedule, pl_out);
    std::cerr << "planned " << schedule.entries.size() << " entries for " << cond.str() << " in steps ["
              << schedule.header.window_start << ", " << schedule.header.window_end << ")\n";
  });

  auto* apply_cmd = inject->add_subcommand("apply", "Substitute scheduled documents into a stream");
  std::string ap_stream, ap_schedule, ap_out;
  bool ap_any_slot = false;
  apply_cmd->add_option("--stream", ap_stream, "Batch stream (JSONL)")->required();
  apply_cmd->add_option("--schedule", ap_schedule, "Schedule file")->required();
  apply_cmd->add_option("--out", ap_out, "Contaminated stream")->required();
  apply_cmd->add_flag("--any-slot", ap_any_slot, "Allow overwriting non-parallel documents");
  apply_cmd->callback([&] {
    const auto out = apply(read_stream(ap_stream), read_schedule(ap_schedule), ApplyOptions{!ap_any_slot});
    write_stream(out, ap_out);
  });

  auto* verify = inject->add_subcommand("verify", "Re-check a schedule's invariants");
  std::string vf_schedule;
  verify->add_option("--schedule", vf_schedule, "Schedule file")->required();
  verify->callback([&] {
    const auto schedule = read_schedule(vf_schedule);
    const auto report = verify_schedule(schedule, schedule.header.training);
    std::cout << report.render();
    if (!report.ok()) status = kFound;
  });

  // bleu
  auto* bleu = app.add_subcommand("bleu", "Corpus BLEU over whitespace-tokenized line files");
  std::string bl_hyp, bl_ref, bl_smoothing = "none";
  BleuConfig bl_cfg;
  bleu->add_option("--hyp", bl_hyp, "Hypotheses, one segment per line")->required();
  bleu->add_option("--ref", bl_ref, "References, one segment per line")->required();
  bleu->add_option("--order", bl_cfg.max_order, "Maximum n-gram order")->capture_default_str();
  bleu->add_option("--smoothing", bl_smoothing, "none or add_one");
  bleu->callback([&] {
    bl_cfg.smoothing = parse_smoothing(bl_smoothing);
    WhitespaceVocab vocab;
    const auto hyps = read_lines(bl_hyp, vocab);
    const auto refs = read_lines(bl_ref, vocab);
    const auto r = corpus_bleu_detailed(hyps, refs, bl_cfg);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", r.score);
    std::cout << "BLEU " << buf << " (" << r.config << ")\n";
  });

  // fixture-records
  auto* fix = app.add_subcommand("fixture-records", "Turn one column of a results table into eval records");
  std::string fx_table, fx_model, fx_column, fx_out;
  fix->add_option("--table", fx_table, "Results table (TSV)")->required();
  fix->add_option("--model", fx_model, "Model column value, e.g. 8B")->required();
  fix->add_option("--column", fx_column, "Value column, e.g. baseline")->required();
  fix->add_option("--out", fx_out, "Eval records (JSONL)")->required();
  fix->callback([&] { write_eval_records(fx_out, fixture_records(load_fixture_table(fx_table), fx_model, fx_column)); });

  // report
  auto* report = app.add_subcommand("report", "Contamination impact tables");
  std::string rp_base, rp_contam, rp_condition = "full_prompted/late/1", rp_format = "text", rp_out;
  std::vector<std::string> rp_clean;
  report->add_option("--baseline", rp_base, "Baseline eval records (JSONL)")->required();
  report->add_option("--contaminated", rp_contam, "Contaminated eval records (JSONL)")->required();
  report->add_option("--clean-set", rp_clean, "Baseline and contaminated records on a clean test set")
      ->expected(2);
  report->add_option("--condition", rp_condition, "mode/temporal/copies")->capture_default_str();
  report->add_option("--format", rp_format, "text, json or csv");
  report->add_option("--out", rp_out, "Write here instead of stdout");
  report->callback([&] {
    const auto fmt = parse_table_format(rp_format);
    const auto cond = ContaminationCondition::parse(rp_condition);
    auto table = impact_table(read_eval_records(rp_base), read_eval_records(rp_contam), cond);
    std::vector<ImpactCell> clean;
    if (!rp_clean.empty()) {
      clean = impact_table(read_eval_records(rp_clean[0]), read_eval_records(rp_clean[1]), cond).cells;
    }
    emit(rp_out, render_impact_report(build_impact_report(std::move(table), clean), fmt));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "ctk: error: " << e.what() << "\n";
    return 1;
  }
  return status;
}
