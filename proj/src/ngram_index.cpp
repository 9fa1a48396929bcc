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

#include "ctk/ngram_index.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <fstream>
#include <limits>
#include <thread>
#include <utility>

namespace ctk {
namespace {

constexpr std::array<char, 4> kIndexMagic = {'C', 'T', 'K', 'X'};

std::uint64_t fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

[[noreturn]] void overflow(const std::string& what) {
  throw Error("fingerprint table overflow: " + what +
              "; split the corpus into smaller shards and index them separately");
}

}  // namespace

void ScanConfig::validate() const {
  if (ngram_order < 1) throw Error("ngram_order must be >= 1");
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error("threshold must be in (0, 1]");
  }
}

RollingHash::RollingHash(std::size_t order, unsigned bits)
    : order_(order), bits_(bits), top_power_(1) {
  if (order_ < 1) throw Error("ngram_order must be >= 1");
  if (bits_ < 1 || bits_ > 64) throw Error("fingerprint_bits must be in 1..64");
  for (std::size_t i = 1; i < order_; ++i) top_power_ *= kBase;
}

std::uint64_t RollingHash::finish(std::uint64_t raw) const {
  const std::uint64_t mixed = fmix64(raw);
  return bits_ == 64 ? mixed : mixed >> (64 - bits_);
}

std::uint64_t RollingHash::fingerprint(std::span<const TokenId> gram) const {
  std::uint64_t raw = 0;
  for (TokenId t : gram) raw = raw * kBase + (static_cast<std::uint64_t>(t) + 1);
  return finish(raw);
}

std::vector<std::uint64_t> RollingHash::all_windows(
    std::span<const TokenId> tokens) const {
  std::vector<std::uint64_t> out;
  if (tokens.size() < order_) return out;
  out.reserve(tokens.size() - order_ + 1);
  std::uint64_t raw = 0;
  for (std::size_t i = 0; i < order_; ++i) {
    raw = raw * kBase + (static_cast<std::uint64_t>(tokens[i]) + 1);
  }
  out.push_back(finish(raw));
  for (std::size_t i = order_; i < tokens.size(); ++i) {
    raw -= (static_cast<std::uint64_t>(tokens[i - order_]) + 1) * top_power_;
    raw = raw * kBase + (static_cast<std::uint64_t>(tokens[i]) + 1);
    out.push_back(finish(raw));
  }
  return out;
}

std::vector<Location> NGramIndex::query(std::span<const TokenId> gram) const {
  if (gram.size() != order_) {
    throw Error("query gram has " + std::to_string(gram.size()) +
                " tokens, index order is " + std::to_string(order_));
  }
  const RollingHash hash(order_, bits_);
  const std::uint64_t fp = hash.fingerprint(gram);
  auto lo = std::lower_bound(
      postings_.begin(), postings_.end(), fp,
      [](const Posting& p, std::uint64_t v) { return p.fingerprint < v; });
  std::vector<Location> out;
  for (auto it = lo; it != postings_.end() && it->fingerprint == fp; ++it) {
    const TokenId* at = tokens_.data() + starts_[it->doc] + it->offset;
    if (std::equal(gram.begin(), gram.end(), at)) {
      out.push_back(Location{it->doc, it->offset});
    }
  }
  return out;
}

void NGramIndex::check_doc(DocRef doc) const {
  if (doc >= ids_.size()) {
    throw Error("doc ref " + std::to_string(doc) + " out of range (" +
                std::to_string(ids_.size()) + " docs)");
  }
}

TokenId NGramIndex::token_at(DocRef doc, std::size_t offset) const {
  check_doc(doc);
  const std::size_t len = starts_[doc + 1] - starts_[doc];
  if (offset >= len) {
    throw Error("offset " + std::to_string(offset) + " out of range for doc '" +
                ids_[doc] + "' of length " + std::to_string(len));
  }
  return tokens_[starts_[doc] + offset];
}

std::size_t NGramIndex::doc_len(DocRef doc) const {
  check_doc(doc);
  return starts_[doc + 1] - starts_[doc];
}

const std::string& NGramIndex::doc_id(DocRef doc) const {
  check_doc(doc);
  return ids_[doc];
}

std::span<const TokenId> NGramIndex::doc_tokens(DocRef doc) const {
  check_doc(doc);
  return std::span<const TokenId>(tokens_.data() + starts_[doc],
                                  starts_[doc + 1] - starts_[doc]);
}

std::optional<DocRef> NGramIndex::find_doc(std::string_view doc_id) const {
  auto it = id_map_.find(std::string(doc_id));
  if (it == id_map_.end()) return std::nullopt;
  return it->second;
}

void NGramIndex::rebuild_id_map() {
  id_map_.clear();
  id_map_.reserve(ids_.size());
  for (DocRef i = 0; i < ids_.size(); ++i) {
    if (!id_map_.emplace(ids_[i], i).second) {
      throw Error("duplicate doc_id '" + ids_[i] + "'");
    }
  }
}

void NGramIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(kIndexMagic.data(), 4);
  le::put_u32(out, static_cast<std::uint32_t>(order_));
  le::put_u32(out, bits_);
  le::put_u32(out, static_cast<std::uint32_t>(ids_.size()));
  le::put_u64(out, postings_.size());
  for (std::size_t d = 0; d < ids_.size(); ++d) {
    le::put_u32(out, static_cast<std::uint32_t>(ids_[d].size()));
    out.write(ids_[d].data(), static_cast<std::streamsize>(ids_[d].size()));
    le::put_u32(out, static_cast<std::uint32_t>(starts_[d + 1] - starts_[d]));
    for (std::uint64_t i = starts_[d]; i < starts_[d + 1]; ++i) {
      le::put_u32(out, tokens_[i]);
    }
  }
  for (std::size_t i = 0; i < postings_.size();) {
    std::size_t j = i;
    while (j < postings_.size() && postings_[j].fingerprint == postings_[i].fingerprint) ++j;
    le::put_u64(out, postings_[i].fingerprint);
    le::put_u32(out, static_cast<std::uint32_t>(j - i));
    for (std::size_t k = i; k < j; ++k) {
      le::put_u32(out, postings_[k].doc);
      le::put_u32(out, postings_[k].offset);
    }
    i = j;
  }
  out.close();
  if (out.fail()) throw Error("write failed on '" + path.string() + "'");
}

NGramIndex NGramIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  const std::string file = path.string();
  auto truncated = [&](const char* field) {
    return FormatError(file, 0, field, "truncated index file");
  };
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kIndexMagic) {
    throw FormatError(file, 0, "magic", "not a CTKX index");
  }
  NGramIndex idx;
  std::uint32_t order = 0, bits = 0, docs = 0;
  std::uint64_t postings = 0;
  if (!le::get_u32(in, order) || !le::get_u32(in, bits) || !le::get_u32(in, docs) ||
      !le::get_u64(in, postings)) {
    throw truncated("header");
  }
  if (order < 1 || bits < 1 || bits > 64) {
    throw FormatError(file, 0, "header", "invalid order or fingerprint width");
  }
  idx.order_ = order;
  idx.bits_ = bits;
  idx.ids_.resize(docs);
  idx.starts_.assign(1, 0);
  for (std::uint32_t d = 0; d < docs; ++d) {
    std::uint32_t id_len = 0, len = 0;
    if (!le::get_u32(in, id_len)) throw truncated("doc_id");
    idx.ids_[d].resize(id_len);
    if (!in.read(idx.ids_[d].data(), id_len)) throw truncated("doc_id");
    if (!le::get_u32(in, len)) throw truncated("tokens");
    const std::size_t base = idx.tokens_.size();
    idx.tokens_.resize(base + len);
    for (std::uint32_t i = 0; i < len; ++i) {
      if (!le::get_u32(in, idx.tokens_[base + i])) throw truncated("tokens");
    }
    idx.starts_.push_back(idx.tokens_.size());
  }
  idx.postings_.reserve(postings);
  while (idx.postings_.size() < postings) {
    std::uint64_t fp = 0;
    std::uint32_t count = 0;
    if (!le::get_u64(in, fp) || !le::get_u32(in, count)) throw truncated("postings");
    for (std::uint32_t k = 0; k < count; ++k) {
      Posting p{fp, 0, 0};
      if (!le::get_u32(in, p.doc) || !le::get_u32(in, p.offset)) throw truncated("postings");
      if (p.doc >= docs || p.offset + static_cast<std::uint64_t>(order) >
                               idx.starts_[p.doc + 1] - idx.starts_[p.doc]) {
        throw FormatError(file, 0, "postings", "posting outside its document");
      }
      idx.postings_.push_back(p);
    }
  }
  if (idx.postings_.size() != postings ||
      !std::is_sorted(idx.postings_.begin(), idx.postings_.end())) {
    throw FormatError(file, 0, "postings", "posting blocks inconsistent with header");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(file, 0, "postings", "trailing bytes");
  }
  idx.rebuild_id_map();
  return idx;
}

IndexBuilder::IndexBuilder(const ScanConfig& config, const IndexOptions& options)
    : config_(config), options_(options), hash_(config.ngram_order, options.fingerprint_bits) {
  config_.validate();
  index_.order_ = config_.ngram_order;
  index_.bits_ = options_.fingerprint_bits;
  index_.starts_.assign(1, 0);
}

void IndexBuilder::add(const CorpusDocument& doc) { add(doc.doc_id, doc.tokens); }

void IndexBuilder::add(std::string doc_id, std::span<const TokenId> tokens) {
  if (index_.ids_.size() >= std::numeric_limits<DocRef>::max()) {
    overflow("more than 2^32-1 documents");
  }
  if (tokens.size() > std::numeric_limits<std::uint32_t>::max()) {
    overflow("document '" + doc_id + "' longer than 2^32-1 tokens");
  }
  const std::size_t n = config_.ngram_order;
  const std::size_t grams = tokens.size() >= n ? tokens.size() - n + 1 : 0;
  if (index_.postings_.size() + grams > options_.max_postings) {
    overflow(std::to_string(index_.postings_.size() + grams) +
             " postings exceed the limit of " + std::to_string(options_.max_postings));
  }
  const auto doc = static_cast<DocRef>(index_.ids_.size());
  const auto fps = hash_.all_windows(tokens);
  for (std::size_t off = 0; off < fps.size(); ++off) {
    index_.postings_.push_back(Posting{fps[off], doc, static_cast<std::uint32_t>(off)});
  }
  index_.ids_.push_back(std::move(doc_id));
  index_.tokens_.insert(index_.tokens_.end(), tokens.begin(), tokens.end());
  index_.starts_.push_back(index_.tokens_.size());
}

void IndexBuilder::append(IndexBuilder&& other) {
  if (other.config_.ngram_order != config_.ngram_order ||
      other.options_.fingerprint_bits != options_.fingerprint_bits) {
    throw Error("cannot merge index builders with different settings");
  }
  auto& src = other.index_;
  if (index_.ids_.size() + src.ids_.size() >= std::numeric_limits<DocRef>::max()) {
    overflow("more than 2^32-1 documents");
  }
  if (index_.postings_.size() + src.postings_.size() > options_.max_postings) {
    overflow(std::to_string(index_.postings_.size() + src.postings_.size()) +
             " postings exceed the limit of " + std::to_string(options_.max_postings));
  }
  const auto base_doc = static_cast<DocRef>(index_.ids_.size());
  const std::uint64_t base_tok = index_.tokens_.size();
  for (auto& p : src.postings_) {
    p.doc += base_doc;
    index_.postings_.push_back(p);
  }
  for (auto& id : src.ids_) index_.ids_.push_back(std::move(id));
  index_.tokens_.insert(index_.tokens_.end(), src.tokens_.begin(), src.tokens_.end());
  for (std::size_t i = 1; i < src.starts_.size(); ++i) {
    index_.starts_.push_back(base_tok + src.starts_[i]);
  }
  src = NGramIndex{};
  src.starts_.assign(1, 0);
}

NGramIndex IndexBuilder::finish() && {
  index_.rebuild_id_map();
  std::sort(index_.postings_.begin(), index_.postings_.end());
  index_.tokens_.shrink_to_fit();
  return std::move(index_);
}

NGramIndex build_index(const std::vector<CorpusDocument>& docs,
                       const ScanConfig& config, const IndexOptions& options) {
  IndexBuilder builder(config, options);
  for (const auto& d : docs) builder.add(d);
  return std::move(builder).finish();
}

NGramIndex build_index(CorpusReader& reader, const ScanConfig& config,
                       const IndexOptions& options) {
  IndexBuilder builder(config, options);
  while (auto doc = reader.next()) builder.add(*doc);
  return std::move(builder).finish();
}

NGramIndex build_index_from_shards(const std::vector<std::filesystem::path>& shards,
                                   CorpusFormat format, const ScanConfig& config,
                                   const IndexOptions& options) {
  std::vector<std::optional<IndexBuilder>> parts(shards.size());
  std::vector<std::exception_ptr> errors(shards.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < shards.size(); i = next++) {
      try {
        CorpusReader reader({shards[i]}, format);
        IndexBuilder b(config, options);
        while (auto doc = reader.next()) b.add(*doc);
        parts[i].emplace(std::move(b));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t threads = options.threads ? options.threads
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, shards.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  IndexBuilder merged(config, options);
  for (auto& p : parts) merged.append(std::move(*p));
  return std::move(merged).finish();
}

}  // namespace ctk
