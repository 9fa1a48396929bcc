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
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ctk/common.hpp"
#include "json.hpp"

namespace ctk {

enum class Category { monolingual, parallel, contamination };

std::string_view to_string(Category c);
Category parse_category(std::string_view name);

struct CorpusDocument {
  std::string doc_id;
  TokenSequence tokens;
  Category category = Category::monolingual;
  std::string lang;

  friend bool operator==(const CorpusDocument&, const CorpusDocument&) = default;
};

// One evaluation example. Tokens are authoritative for matching; the text
// fields are carried verbatim for rendering contamination documents.
struct TestExample {
  std::string example_id;
  LangPair lang_pair;
  std::string source_text;
  std::string target_text;
  TokenSequence source_tokens;
  TokenSequence target_tokens;

  friend bool operator==(const TestExample&, const TestExample&) = default;
};

struct BatchStream {
  std::size_t batch_size = 0;
  std::vector<std::vector<CorpusDocument>> steps;

  // Throws Error naming the first step whose slot count != batch_size.
  void validate() const;

  friend bool operator==(const BatchStream&, const BatchStream&) = default;
};

// jsonl: one JSON record per line.
// binary: "CTK1", u32 doc count, then per doc u32 id length, id bytes,
// u32 token count, u32 tokens; all little-endian. The binary layout carries
// doc ids and tokens only, so category reads back as monolingual and lang
// as empty.
enum class CorpusFormat { jsonl, binary };

CorpusFormat parse_corpus_format(std::string_view name);

nlohmann::json document_to_json(const CorpusDocument& doc);
CorpusDocument document_from_json(const nlohmann::json& j,
                                  const std::string& file, std::size_t line);

// Streams documents shard by shard, in shard order then record order. Holds
// one open shard and the set of doc ids seen so far; never the documents.
class CorpusReader {
 public:
  CorpusReader(std::vector<std::filesystem::path> shards, CorpusFormat format);

  std::optional<CorpusDocument> next();

  const std::filesystem::path& current_shard() const;

 private:
  bool open_next_shard();
  std::optional<CorpusDocument> next_jsonl();
  std::optional<CorpusDocument> next_binary();

  std::vector<std::filesystem::path> shards_;
  CorpusFormat format_;
  std::size_t shard_index_ = 0;
  bool open_ = false;
  std::ifstream in_;
  std::size_t record_ = 0;
  std::uint32_t binary_remaining_ = 0;
  std::unordered_set<std::string> seen_ids_;
};

// Single-owner writer for one shard. The binary writer patches the document
// count into the header on close().
class CorpusWriter {
 public:
  CorpusWriter(const std::filesystem::path& path, CorpusFormat format);
  ~CorpusWriter();
  CorpusWriter(const CorpusWriter&) = delete;
  CorpusWriter& operator=(const CorpusWriter&) = delete;

  void write(const CorpusDocument& doc);
  void close();

 private:
  std::filesystem::path path_;
  CorpusFormat format_;
  std::ofstream out_;
  std::uint32_t count_ = 0;
  bool closed_ = false;
};

std::vector<CorpusDocument> read_corpus(
    const std::vector<std::filesystem::path>& shards, CorpusFormat format);
void write_corpus(const std::filesystem::path& path,
                  const std::vector<CorpusDocument>& docs, CorpusFormat format);

std::vector<TestExample> read_testset(const std::filesystem::path& path);
void write_testset(const std::filesystem::path& path,
                   const std::vector<TestExample>& examples);

// Indices into `examples`, grouped by language pair in input order.
std::map<LangPair, std::vector<std::size_t>> group_by_lang_pair(
    const std::vector<TestExample>& examples);

void write_stream(const BatchStream& stream, const std::filesystem::path& path);
BatchStream read_stream(const std::filesystem::path& path);

// Little-endian helpers shared by the binary shard and index formats.
namespace le {
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
bool get_u32(std::istream& in, std::uint32_t& v);
bool get_u64(std::istream& in, std::uint64_t& v);
}  // namespace le

}  // namespace ctk
