// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "stoktok/error.hpp"
#include "stoktok/random.hpp"
#include "stoktok/trie.hpp"

namespace stoktok {

// Half-open byte range [begin, end) of the source string.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend auto operator<=>(const Span&, const Span&) = default;
};

// A tokenisation: token ids plus the byte spans they cover.
struct TokenSeq {
  std::vector<TokenId> ids;
  std::vector<Span> spans;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  std::size_t byte_length() const { return spans.empty() ? 0 : spans.back().end; }

  void push_back(TokenId id, Span span) {
    ids.push_back(id);
    spans.push_back(span);
  }

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

struct Merge {
  TokenId left;
  TokenId right;
  TokenId result;
};

class Vocabulary {
 public:
  Vocabulary() = default;

  // entries: (byte-string, id). Missing single-byte tokens are appended with
  // fresh ids. merges: (left, right) byte-strings in priority order.
  static Vocabulary build(const std::vector<std::pair<std::string, TokenId>>& entries,
                          const std::vector<std::pair<std::string, std::string>>& merges) {
    Vocabulary v;
    TokenId max_id = 0;
    bool any = false;
    for (const auto& [bytes, id] : entries) {
      if (bytes.empty()) throw InputError("vocabulary: empty token string for id " + std::to_string(id));
      if (v.tokens_.contains(id)) throw InputError("vocabulary: duplicate id " + std::to_string(id));
      if (v.trie_.find(bytes)) throw InputError("vocabulary: duplicate token string");
      v.add(bytes, id);
      max_id = any ? std::max(max_id, id) : id;
      any = true;
    }
    TokenId next = any ? max_id + 1 : 0;
    for (int b = 0; b < 256; ++b) {
      const std::string s(1, static_cast<char>(b));
      if (!v.trie_.find(s)) v.add(s, next++);
    }
    for (int b = 0; b < 256; ++b) {
      v.byte_tokens_[b] = *v.trie_.find(std::string(1, static_cast<char>(b)));
    }

    std::unordered_set<TokenId> derivable;
    for (TokenId t : v.byte_tokens_) derivable.insert(t);
    for (std::size_t rank = 0; rank < merges.size(); ++rank) {
      const auto& [l, r] = merges[rank];
      const std::string where = "merges line " + std::to_string(rank + 1) + ": ";
      auto lid = v.trie_.find(l);
      auto rid = v.trie_.find(r);
      if (!lid || !rid) throw InputError(where + "unknown token");
      auto res = v.trie_.find(l + r);
      if (!res) throw InputError(where + "concatenation '" + l + r + "' is not in the vocabulary");
      if (!derivable.contains(*lid) || !derivable.contains(*rid)) {
        throw InputError(where + "operand is neither a byte nor an earlier merge result");
      }
      const std::uint64_t key = pair_key(*lid, *rid);
      if (v.merge_index_.contains(key)) throw InputError(where + "duplicate merge");
      v.merge_index_.emplace(key, static_cast<std::uint32_t>(v.merges_.size()));
      v.merges_.push_back({*lid, *rid, *res});
      derivable.insert(*res);
    }
    return v;
  }

  // Convenience for fixtures: bytes take ids 0..255, listed strings follow.
  static Vocabulary from_strings(const std::vector<std::string>& tokens,
                                 const std::vector<std::pair<std::string, std::string>>& merges = {}) {
    std::vector<std::pair<std::string, TokenId>> entries;
    for (int b = 0; b < 256; ++b) entries.emplace_back(std::string(1, static_cast<char>(b)), b);
    TokenId next = 256;
    std::unordered_set<std::string> seen;
    for (const auto& t : tokens) {
      if (t.size() <= 1 || !seen.insert(t).second) continue;
      entries.emplace_back(t, next++);
    }
    return build(entries, merges);
  }

  std::size_t size() const { return tokens_.size(); }
  std::size_t max_token_length() const { return max_len_; }

  bool contains(TokenId id) const { return tokens_.contains(id); }

  const std::string& bytes(TokenId id) const {
    auto it = tokens_.find(id);
    if (it == tokens_.end()) throw InputError("unknown token id " + std::to_string(id));
    return it->second;
  }

  std::optional<TokenId> find(std::string_view s) const { return trie_.find(s); }

  TokenId byte_token(unsigned char b) const { return byte_tokens_[b]; }

  std::span<const Merge> merges() const { return merges_; }

  // Priority (0 = highest) and result of merging (left, right), if any.
  std::optional<std::pair<std::uint32_t, TokenId>> merge_for(TokenId left, TokenId right) const {
    auto it = merge_index_.find(pair_key(left, right));
    if (it == merge_index_.end()) return std::nullopt;
    return std::make_pair(it->second, merges_[it->second].result);
  }

  const PrefixTrie& trie() const { return trie_; }

  // All ids in ascending order.
  std::vector<TokenId> ids() const {
    std::vector<TokenId> out;
    out.reserve(tokens_.size());
    for (const auto& kv : tokens_) out.push_back(kv.first);
    std::sort(out.begin(), out.end());
    return out;
  }

  template <class F>
  void for_each_token_at(std::string_view text, std::size_t pos, std::size_t limit, F&& f) const {
    trie_.for_each_prefix(text.substr(pos), std::forward<F>(f), limit - pos);
  }

 private:
  static std::uint64_t pair_key(TokenId l, TokenId r) {
    return (static_cast<std::uint64_t>(l) << 32) | r;
  }

  void add(const std::string& bytes, TokenId id) {
    tokens_.emplace(id, bytes);
    trie_.insert(bytes, id);
    max_len_ = std::max(max_len_, bytes.size());
  }

  std::unordered_map<TokenId, std::string> tokens_;
  PrefixTrie trie_;
  std::array<TokenId, 256> byte_tokens_{};
  std::vector<Merge> merges_;
  std::unordered_map<std::uint64_t, std::uint32_t> merge_index_;
  std::size_t max_len_ = 0;
};

// How far a token starting at each position may extend. Without
// pretokenisation every limit is the string length; with it, tokens never
// cross a pretoken boundary.
class Boundaries {
 public:
  Boundaries() = default;

  static Boundaries none(std::size_t n) {
    Boundaries b;
    b.limit_.assign(n + 1, n);
    return b;
  }

  // Chunk starts must be ascending and begin with 0.
  static Boundaries from_chunk_starts(std::size_t n, const std::vector<std::size_t>& starts) {
    Boundaries b;
    b.limit_.assign(n + 1, n);
    std::size_t next = n;
    std::size_t k = starts.size();
    for (std::size_t pos = n + 1; pos-- > 0;) {
      while (k > 0 && starts[k - 1] > pos) next = starts[--k];
      b.limit_[pos] = next;
    }
    return b;
  }

  std::size_t limit(std::size_t pos) const { return limit_[pos]; }
  bool allows(Span s) const { return s.end <= limit_[s.begin]; }
  std::size_t length() const { return limit_.empty() ? 0 : limit_.size() - 1; }

 private:
  std::vector<std::size_t> limit_;
};

inline bool is_space_byte(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Whitespace pretokeniser: a new chunk starts at every whitespace byte that
// follows a non-whitespace byte, so words keep their leading spaces.
inline std::vector<Span> pretokenise(std::string_view text) {
  std::vector<Span> chunks;
  if (text.empty()) return chunks;
  std::size_t start = 0;
  for (std::size_t i = 1; i < text.size(); ++i) {
    if (is_space_byte(text[i]) && !is_space_byte(text[i - 1])) {
      chunks.push_back({start, i});
      start = i;
    }
  }
  chunks.push_back({start, text.size()});
  return chunks;
}

inline Boundaries make_boundaries(std::string_view text, bool pretokenise_text) {
  if (!pretokenise_text) return Boundaries::none(text.size());
  std::vector<std::size_t> starts;
  for (const Span& s : pretokenise(text)) starts.push_back(s.begin);
  return Boundaries::from_chunk_starts(text.size(), starts);
}

namespace detail {

// Priority-ordered BPE over one chunk. skip() is consulted once per
// applicable pair occurrence per step; returning true drops it for that step.
template <class Skip>
void bpe_chunk(std::string_view text, std::size_t offset, const Vocabulary& vocab, Skip&& skip,
               TokenSeq& out) {
  std::vector<TokenId> sym;
  std::vector<Span> span;
  sym.reserve(text.size());
  span.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    sym.push_back(vocab.byte_token(static_cast<unsigned char>(text[i])));
    span.push_back({offset + i, offset + i + 1});
  }
  for (;;) {
    std::uint32_t best_rank = std::numeric_limits<std::uint32_t>::max();
    std::size_t best = sym.size();
    TokenId best_result = 0;
    for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
      auto m = vocab.merge_for(sym[i], sym[i + 1]);
      if (!m) continue;
      if (skip()) continue;
      if (m->first < best_rank) {
        best_rank = m->first;
        best = i;
        best_result = m->second;
      }
    }
    if (best == sym.size()) break;
    sym[best] = best_result;
    span[best].end = span[best + 1].end;
    sym.erase(sym.begin() + static_cast<std::ptrdiff_t>(best) + 1);
    span.erase(span.begin() + static_cast<std::ptrdiff_t>(best) + 1);
  }
  for (std::size_t i = 0; i < sym.size(); ++i) out.push_back(sym[i], span[i]);
}

template <class Skip>
TokenSeq bpe_encode(std::string_view text, const Vocabulary& vocab, bool pretokenise_text, Skip&& skip) {
  TokenSeq out;
  if (pretokenise_text) {
    for (const Span& c : pretokenise(text)) {
      bpe_chunk(text.substr(c.begin, c.size()), c.begin, vocab, skip, out);
    }
  } else {
    bpe_chunk(text, 0, vocab, skip, out);
  }
  return out;
}

}  // namespace detail

// Canonical (deterministic) BPE encoding.
inline TokenSeq encode_canonical(std::string_view text, const Vocabulary& vocab,
                                 bool pretokenise_text = false) {
  return detail::bpe_encode(text, vocab, pretokenise_text, [] { return false; });
}

// BPE where every applicable merge is independently skipped with probability
// p_drop at each merge step. p_drop = 0 is encode_canonical; p_drop = 1 gives
// bytes.
inline TokenSeq bpe_dropout_encode(std::string_view text, double p_drop, Rng& rng,
                                   const Vocabulary& vocab, bool pretokenise_text = false) {
  if (!(p_drop >= 0.0 && p_drop <= 1.0)) throw InputError("p_drop must lie in [0, 1]");
  if (p_drop == 0.0) return encode_canonical(text, vocab, pretokenise_text);
  return detail::bpe_encode(text, vocab, pretokenise_text, [&] { return bernoulli(rng, p_drop); });
}

inline std::string decode_ids(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string out;
  for (TokenId id : ids) out += vocab.bytes(id);
  return out;
}

inline std::string decode(const TokenSeq& seq, const Vocabulary& vocab) {
  return decode_ids(seq.ids, vocab);
}

// Attaches spans to a bare id sequence, starting at byte `offset`.
inline TokenSeq make_token_seq(std::span<const TokenId> ids, const Vocabulary& vocab,
                               std::size_t offset = 0) {
  TokenSeq seq;
  std::size_t pos = offset;
  for (TokenId id : ids) {
    const std::size_t len = vocab.bytes(id).size();
    seq.push_back(id, {pos, pos + len});
    pos += len;
  }
  return seq;
}

// Checks the TokenSeq invariants against the source text: spans contiguous,
// covering [0, |text|), and each token's bytes equal to the covered slice.
inline bool is_valid_tokenisation(const TokenSeq& seq, std::string_view text, const Vocabulary& vocab) {
  if (seq.ids.size() != seq.spans.size()) return false;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Span s = seq.spans[i];
    if (s.begin != pos || s.end <= s.begin || s.end > text.size()) return false;
    if (!vocab.contains(seq.ids[i])) return false;
    if (vocab.bytes(seq.ids[i]) != text.substr(s.begin, s.size())) return false;
    pos = s.end;
  }
  return pos == text.size();
}

// Hyphen-joined decimal ids; the histogram key format.
inline std::string serialise_ids(std::span<const TokenId> ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(ids[i]);
  }
  return out;
}

}  // namespace stoktok
