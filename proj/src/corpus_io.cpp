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

#include "ctk/corpus_io.hpp"

#include <array>
#include <limits>
#include <set>
#include <utility>

namespace ctk {
namespace {

constexpr std::array<char, 4> kShardMagic = {'C', 'T', 'K', '1'};

const nlohmann::json& require(const nlohmann::json& j, const char* field,
                              const std::string& file, std::size_t line) {
  auto it = j.find(field);
  if (it == j.end()) throw FormatError(file, line, field, "missing");
  return *it;
}

std::string require_string(const nlohmann::json& j, const char* field,
                           const std::string& file, std::size_t line) {
  const auto& v = require(j, field, file, line);
  if (!v.is_string()) throw FormatError(file, line, field, "expected string");
  return v.get<std::string>();
}

TokenSequence parse_tokens(const nlohmann::json& v, const char* field,
                           const std::string& file, std::size_t line) {
  if (!v.is_array()) {
    throw FormatError(file, line, field, "expected array of token ids");
  }
  TokenSequence out;
  out.reserve(v.size());
  for (const auto& t : v) {
    if (!t.is_number_unsigned() ||
        t.get<std::uint64_t>() > std::numeric_limits<TokenId>::max()) {
      throw FormatError(file, line, field,
                        "token ids must be integers in [0, 2^32)");
    }
    out.push_back(static_cast<TokenId>(t.get<std::uint64_t>()));
  }
  return out;
}

nlohmann::json parse_line(const std::string& text, const std::string& file,
                          std::size_t line) {
  try {
    auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw FormatError(file, line, "<record>", "not an object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(file, line, "<record>", e.what());
  }
}

bool is_blank(const std::string& s) {
  return s.find_first_not_of(" \t\r") == std::string::npos;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

namespace le {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

bool get_u32(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) |
      (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

bool get_u64(std::istream& in, std::uint64_t& v) {
  std::uint32_t lo = 0, hi = 0;
  if (!get_u32(in, lo) || !get_u32(in, hi)) return false;
  v = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return true;
}

}  // namespace le

std::string_view to_string(Category c) {
  switch (c) {
    case Category::monolingual: return "monolingual";
    case Category::parallel: return "parallel";
    case Category::contamination: return "contamination";
  }
  return "monolingual";
}

Category parse_category(std::string_view name) {
  if (name == "monolingual") return Category::monolingual;
  if (name == "parallel") return Category::parallel;
  if (name == "contamination") return Category::contamination;
  throw Error("unknown category '" + std::string(name) + "'");
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "bin" || name == "binary") return CorpusFormat::binary;
  throw Error("unknown corpus format '" + std::string(name) +
              "' (expected jsonl or bin)");
}

void BatchStream::validate() const {
  for (std::size_t s = 0; s < steps.size(); ++s) {
    if (steps[s].size() != batch_size) {
      throw Error("step " + std::to_string(s) + " has " +
                  std::to_string(steps[s].size()) + " slots, batch_size is " +
                  std::to_string(batch_size));
    }
  }
}

nlohmann::json document_to_json(const CorpusDocument& doc) {
  return nlohmann::json{{"doc_id", doc.doc_id},
                        {"tokens", doc.tokens},
                        {"category", to_string(doc.category)},
                        {"lang", doc.lang}};
}

CorpusDocument document_from_json(const nlohmann::json& j,
                                  const std::string& file, std::size_t line) {
  CorpusDocument doc;
  doc.doc_id = require_string(j, "doc_id", file, line);
  if (doc.doc_id.empty()) throw FormatError(file, line, "doc_id", "empty");
  doc.tokens = parse_tokens(require(j, "tokens", file, line), "tokens", file, line);
  if (auto it = j.find("category"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw FormatError(file, line, "category", "expected string");
    try {
      doc.category = parse_category(it->get<std::string>());
    } catch (const Error& e) {
      throw FormatError(file, line, "category", e.what());
    }
  }
  if (auto it = j.find("lang"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw FormatError(file, line, "lang", "expected string");
    doc.lang = it->get<std::string>();
  }
  return doc;
}

CorpusReader::CorpusReader(std::vector<std::filesystem::path> shards,
                           CorpusFormat format)
    : shards_(std::move(shards)), format_(format) {}

const std::filesystem::path& CorpusReader::current_shard() const {
  static const std::filesystem::path empty;
  return shard_index_ < shards_.size() ? shards_[shard_index_] : empty;
}

bool CorpusReader::open_next_shard() {
  while (shard_index_ < shards_.size()) {
    if (!open_) {
      in_ = open_input(shards_[shard_index_]);
      open_ = true;
      record_ = 0;
      if (format_ == CorpusFormat::binary) {
        const std::string file = shards_[shard_index_].string();
        std::array<char, 4> magic{};
        if (!in_.read(magic.data(), 4)) {
          // A zero-byte shard is an empty shard.
          if (in_.gcount() == 0) {
            binary_remaining_ = 0;
            return true;
          }
          throw FormatError(file, 0, "magic", "truncated header");
        }
        if (magic != kShardMagic) throw FormatError(file, 0, "magic", "not a CTK1 shard");
        if (!le::get_u32(in_, binary_remaining_)) {
          throw FormatError(file, 0, "doc_count", "truncated header");
        }
      }
      return true;
    }
    return true;
  }
  return false;
}

std::optional<CorpusDocument> CorpusReader::next() {
  while (shard_index_ < shards_.size()) {
    open_next_shard();
    auto doc = format_ == CorpusFormat::jsonl ? next_jsonl() : next_binary();
    if (doc) {
      if (!seen_ids_.insert(doc->doc_id).second) {
        throw Error(shards_[shard_index_].string() + ":" + std::to_string(record_) +
                    ": duplicate doc_id '" + doc->doc_id + "'");
      }
      return doc;
    }
    in_.close();
    open_ = false;
    ++shard_index_;
  }
  return std::nullopt;
}

std::optional<CorpusDocument> CorpusReader::next_jsonl() {
  std::string text;
  while (std::getline(in_, text)) {
    ++record_;
    if (is_blank(text)) continue;
    const std::string file = shards_[shard_index_].string();
    return document_from_json(parse_line(text, file, record_), file, record_);
  }
  return std::nullopt;
}

std::optional<CorpusDocument> CorpusReader::next_binary() {
  if (binary_remaining_ == 0) {
    if (in_.peek() != std::char_traits<char>::eof() && in_.good()) {
      throw FormatError(shards_[shard_index_].string(), record_, "<record>",
                        "trailing bytes after last document");
    }
    return std::nullopt;
  }
  ++record_;
  const std::string file = shards_[shard_index_].string();
  CorpusDocument doc;
  std::uint32_t id_len = 0;
  if (!le::get_u32(in_, id_len)) throw FormatError(file, record_, "doc_id", "truncated");
  doc.doc_id.resize(id_len);
  if (!in_.read(doc.doc_id.data(), id_len)) {
    throw FormatError(file, record_, "doc_id", "truncated");
  }
  std::uint32_t count = 0;
  if (!le::get_u32(in_, count)) throw FormatError(file, record_, "tokens", "truncated");
  doc.tokens.resize(count);
  for (auto& t : doc.tokens) {
    if (!le::get_u32(in_, t)) throw FormatError(file, record_, "tokens", "truncated");
  }
  --binary_remaining_;
  return doc;
}

CorpusWriter::CorpusWriter(const std::filesystem::path& path, CorpusFormat format)
    : path_(path), format_(format), out_(open_output(path)) {
  if (format_ == CorpusFormat::binary) {
    out_.write(kShardMagic.data(), 4);
    le::put_u32(out_, 0);
  }
}

CorpusWriter::~CorpusWriter() {
  try {
    close();
  } catch (...) {
  }
}

void CorpusWriter::write(const CorpusDocument& doc) {
  if (closed_) throw Error("write to closed shard '" + path_.string() + "'");
  if (format_ == CorpusFormat::jsonl) {
    out_ << document_to_json(doc).dump() << '\n';
  } else {
    if (count_ == std::numeric_limits<std::uint32_t>::max() ||
        doc.doc_id.size() > std::numeric_limits<std::uint32_t>::max() ||
        doc.tokens.size() > std::numeric_limits<std::uint32_t>::max()) {
      throw Error("binary shard '" + path_.string() + "' overflow; split the shard");
    }
    le::put_u32(out_, static_cast<std::uint32_t>(doc.doc_id.size()));
    out_.write(doc.doc_id.data(), static_cast<std::streamsize>(doc.doc_id.size()));
    le::put_u32(out_, static_cast<std::uint32_t>(doc.tokens.size()));
    for (TokenId t : doc.tokens) le::put_u32(out_, t);
  }
  ++count_;
  if (!out_) throw Error("write failed on '" + path_.string() + "'");
}

void CorpusWriter::close() {
  if (closed_) return;
  closed_ = true;
  if (format_ == CorpusFormat::binary) {
    out_.seekp(4);
    le::put_u32(out_, count_);
  }
  out_.close();
  if (out_.fail()) throw Error("failed to finalize '" + path_.string() + "'");
}

std::vector<CorpusDocument> read_corpus(
    const std::vector<std::filesystem::path>& shards, CorpusFormat format) {
  CorpusReader reader(shards, format);
  std::vector<CorpusDocument> docs;
  while (auto doc = reader.next()) docs.push_back(std::move(*doc));
  return docs;
}

void write_corpus(const std::filesystem::path& path,
                  const std::vector<CorpusDocument>& docs, CorpusFormat format) {
  CorpusWriter writer(path, format);
  for (const auto& d : docs) writer.write(d);
  writer.close();
}

std::vector<TestExample> read_testset(const std::filesystem::path& path) {
  auto in = open_input(path);
  const std::string file = path.string();
  std::vector<TestExample> out;
  std::unordered_set<std::string> ids;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (is_blank(text)) continue;
    const auto j = parse_line(text, file, line);
    TestExample ex;
    ex.example_id = require_string(j, "example_id", file, line);
    ex.lang_pair.source = require_string(j, "src_lang", file, line);
    ex.lang_pair.target = require_string(j, "tgt_lang", file, line);
    ex.source_text = require_string(j, "source_text", file, line);
    ex.target_text = require_string(j, "target_text", file, line);
    ex.source_tokens = parse_tokens(require(j, "source_tokens", file, line),
                                    "source_tokens", file, line);
    ex.target_tokens = parse_tokens(require(j, "target_tokens", file, line),
                                    "target_tokens", file, line);
    if (ex.source_tokens.empty()) throw FormatError(file, line, "source_tokens", "empty");
    if (ex.target_tokens.empty()) throw FormatError(file, line, "target_tokens", "empty");
    if (ex.lang_pair.source == ex.lang_pair.target) {
      throw FormatError(file, line, "tgt_lang", "same as src_lang");
    }
    if (!ids.insert(ex.example_id).second) {
      throw FormatError(file, line, "example_id",
                        "duplicate example_id '" + ex.example_id + "'");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

void write_testset(const std::filesystem::path& path,
                   const std::vector<TestExample>& examples) {
  auto out = open_output(path);
  for (const auto& ex : examples) {
    nlohmann::json j{{"example_id", ex.example_id},
                     {"src_lang", ex.lang_pair.source},
                     {"tgt_lang", ex.lang_pair.target},
                     {"source_text", ex.source_text},
                     {"target_text", ex.target_text},
                     {"source_tokens", ex.source_tokens},
                     {"target_tokens", ex.target_tokens}};
    out << j.dump() << '\n';
  }
  if (!out) throw Error("write failed on '" + path.string() + "'");
}

std::map<LangPair, std::vector<std::size_t>> group_by_lang_pair(
    const std::vector<TestExample>& examples) {
  std::map<LangPair, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    groups[examples[i].lang_pair].push_back(i);
  }
  return groups;
}

void write_stream(const BatchStream& stream, const std::filesystem::path& path) {
  stream.validate();
  auto out = open_output(path);
  for (std::size_t s = 0; s < stream.steps.size(); ++s) {
    for (std::size_t k = 0; k < stream.batch_size; ++k) {
      nlohmann::json j{{"step", s}, {"slot", k},
                       {"doc", document_to_json(stream.steps[s][k])}};
      out << j.dump() << '\n';
    }
  }
  if (!out) throw Error("write failed on '" + path.string() + "'");
}

BatchStream read_stream(const std::filesystem::path& path) {
  auto in = open_input(path);
  const std::string file = path.string();
  std::map<std::pair<std::size_t, std::size_t>, CorpusDocument> slots;
  std::size_t max_step = 0, max_slot = 0;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (is_blank(text)) continue;
    const auto j = parse_line(text, file, line);
    const auto& step = require(j, "step", file, line);
    const auto& slot = require(j, "slot", file, line);
    if (!step.is_number_unsigned()) throw FormatError(file, line, "step", "expected non-negative integer");
    if (!slot.is_number_unsigned()) throw FormatError(file, line, "slot", "expected non-negative integer");
    const auto s = step.get<std::size_t>();
    const auto k = slot.get<std::size_t>();
    auto doc = document_from_json(require(j, "doc", file, line), file, line);
    if (!slots.emplace(std::make_pair(s, k), std::move(doc)).second) {
      throw FormatError(file, line, "slot",
                        "duplicate (step " + std::to_string(s) + ", slot " +
                            std::to_string(k) + ")");
    }
    max_step = std::max(max_step, s);
    max_slot = std::max(max_slot, k);
  }
  BatchStream stream;
  if (slots.empty()) return stream;
  stream.batch_size = max_slot + 1;
  stream.steps.resize(max_step + 1);
  for (auto& [key, doc] : slots) stream.steps[key.first].push_back(std::move(doc));
  for (std::size_t s = 0; s < stream.steps.size(); ++s) {
    if (stream.steps[s].size() != stream.batch_size) {
      throw Error(file + ": step " + std::to_string(s) + " has " +
                  std::to_string(stream.steps[s].size()) + " slots, expected " +
                  std::to_string(stream.batch_size));
    }
  }
  return stream;
}

}  // namespace ctk
