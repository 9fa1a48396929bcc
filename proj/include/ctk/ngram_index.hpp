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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctk/common.hpp"
#include "ctk/corpus_io.hpp"

namespace ctk {

// Seed order and contamination threshold shared by the index, the matcher
// and the classifier.
struct ScanConfig {
  std::size_t ngram_order = 8;
  double threshold = 0.7;

  // Requires ngram_order >= 1 and 0 < threshold <= 1.
  void validate() const;
};

using DocRef = std::uint32_t;

struct Location {
  DocRef doc = 0;
  std::uint32_t offset = 0;

  friend bool operator==(const Location&, const Location&) = default;
  friend auto operator<=>(const Location&, const Location&) = default;
};

// 64-bit rolling polynomial hash over token ids:
//
//   raw(g) = sum_i (g[i] + 1) * kBase^(n-1-i)   (mod 2^64)
//   fingerprint(g) = top `bits` bits of fmix64(raw(g))
//
// fmix64 is the MurmurHash3 finalizer, a bijection on 64-bit values, so the
// full-width fingerprint collides exactly when raw() does. Narrow widths are
// for exercising collision handling in tests.
class RollingHash {
 public:
  static constexpr std::uint64_t kBase = 0x100000001b3ULL;

  RollingHash(std::size_t order, unsigned bits);

  std::uint64_t fingerprint(std::span<const TokenId> gram) const;

  // Fingerprints of every length-`order` window of `tokens`, in offset order.
  std::vector<std::uint64_t> all_windows(std::span<const TokenId> tokens) const;

 private:
  std::uint64_t finish(std::uint64_t raw) const;

  std::size_t order_;
  unsigned bits_;
  std::uint64_t top_power_;  // kBase^(order-1)
};

struct IndexOptions {
  // Fingerprint width in bits, 1..64.
  unsigned fingerprint_bits = 64;
  // Build fails with a "split the corpus" error above this many postings.
  std::uint64_t max_postings = 0xffffffffULL;
  // Worker threads for shard-parallel builds; 0 means hardware concurrency.
  std::size_t threads = 0;
};

struct Posting {
  std::uint64_t fingerprint = 0;
  DocRef doc = 0;
  std::uint32_t offset = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
  friend auto operator<=>(const Posting&, const Posting&) = default;
};

// Immutable exact n-gram location index. Document tokens are stored
// alongside the postings so every fingerprint hit is verified token by token
// before it is returned.
class NGramIndex {
 public:
  std::size_t ngram_order() const { return order_; }
  unsigned fingerprint_bits() const { return bits_; }
  std::size_t doc_count() const { return ids_.size(); }
  std::size_t posting_count() const { return postings_.size(); }
  std::uint64_t token_count() const { return tokens_.size(); }

  // Every position where `gram` occurs, sorted by (doc, offset).
  // Throws Error if gram.size() != ngram_order().
  std::vector<Location> query(std::span<const TokenId> gram) const;

  // Throws Error on an out-of-range doc or offset.
  TokenId token_at(DocRef doc, std::size_t offset) const;
  std::size_t doc_len(DocRef doc) const;
  const std::string& doc_id(DocRef doc) const;
  std::span<const TokenId> doc_tokens(DocRef doc) const;
  std::optional<DocRef> find_doc(std::string_view doc_id) const;

  std::span<const Posting> postings() const { return postings_; }

  // File layout, all integers little-endian:
  //   "CTKX" u32 order u32 fingerprint_bits u32 doc_count u64 posting_count
  //   doc table: per doc u32 id_len, id bytes, u32 len, len x u32 tokens
  //   postings:  per distinct fingerprint in ascending order
  //              u64 fingerprint, u32 count, count x (u32 doc, u32 offset)
  void save(const std::filesystem::path& path) const;
  static NGramIndex load(const std::filesystem::path& path);

 private:
  friend class IndexBuilder;

  void check_doc(DocRef doc) const;
  void rebuild_id_map();

  std::size_t order_ = 8;
  unsigned bits_ = 64;
  std::vector<std::string> ids_;
  std::vector<std::uint64_t> starts_;  // doc_count + 1 offsets into tokens_
  std::vector<TokenId> tokens_;
  std::vector<Posting> postings_;  // sorted by (fingerprint, doc, offset)
  std::unordered_map<std::string, DocRef> id_map_;
};

// Accumulates documents and produces an NGramIndex. Builders for different
// shards can be built concurrently and then appended in shard order.
class IndexBuilder {
 public:
  explicit IndexBuilder(const ScanConfig& config, const IndexOptions& options = {});

  void add(const CorpusDocument& doc);
  void add(std::string doc_id, std::span<const TokenId> tokens);

  // Moves `other`'s documents after this builder's, renumbering doc refs.
  void append(IndexBuilder&& other);

  // Sorts postings and checks for duplicate ids and overflow.
  NGramIndex finish() &&;

 private:
  ScanConfig config_;
  IndexOptions options_;
  RollingHash hash_;
  NGramIndex index_;
};

NGramIndex build_index(const std::vector<CorpusDocument>& docs,
                       const ScanConfig& config, const IndexOptions& options = {});
NGramIndex build_index(CorpusReader& reader, const ScanConfig& config,
                       const IndexOptions& options = {});

// One builder per shard, run on up to options.threads workers, appended in
// shard order. The result does not depend on the thread count.
NGramIndex build_index_from_shards(const std::vector<std::filesystem::path>& shards,
                                   CorpusFormat format, const ScanConfig& config,
                                   const IndexOptions& options = {});

}  // namespace ctk
