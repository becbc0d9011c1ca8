// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "stoktok/error.hpp"
#include "stoktok/random.hpp"
#include "stoktok/split_map.hpp"
#include "stoktok/vocab.hpp"

namespace stoktok {

enum class TreeMode { all_segmentations, merge_reachable };

// Segmentations of a single token's byte-string, counted by number of
// segments.
//
// all_segmentations: every tokenisation of the token's bytes. Stored as a
// shared-subtree DP over byte positions (ways[pos][l] = segmentations of the
// suffix at pos into l pieces), which is the same tree with identical
// subtrees merged.
//
// merge_reachable: only the segmentations obtainable by recursively applying
// split-map decompositions starting from the token itself. Leaves are kept
// explicitly as cut-point bitmasks, so tokens are limited to 64 bytes.
class SegmentTree {
 public:
  static constexpr std::size_t kMaxReachableBytes = 64;

  SegmentTree(TokenId token, const Vocabulary& vocab, const SplitMap& split_map, TreeMode mode)
      : token_(token), mode_(mode) {
    const std::string& s = vocab.bytes(token);
    len_ = s.size();
    interval_id_.assign((len_ + 1) * (len_ + 1), kNone);
    for (std::size_t i = 0; i < len_; ++i) {
      vocab.for_each_token_at(s, i, len_, [&](std::size_t l, TokenId id) {
        interval_id_[i * (len_ + 1) + i + l] = id;
      });
    }
    if (mode == TreeMode::all_segmentations) {
      build_all();
    } else {
      if (len_ > kMaxReachableBytes) {
        throw InputError("merge-reachable tree: token longer than " + std::to_string(kMaxReachableBytes) +
                         " bytes");
      }
      build_reachable(split_map);
    }
  }

  TokenId token() const { return token_; }
  TreeMode mode() const { return mode_; }
  std::size_t byte_length() const { return len_; }

  // leaf_counts()[l] = number of leaves at depth l (l segments); index 0 is 0.
  const std::vector<BigInt>& leaf_counts() const { return counts_; }

  BigInt leaf_count(std::size_t segments) const {
    return segments < counts_.size() ? counts_[segments] : BigInt(0);
  }

  BigInt total_leaves() const {
    BigInt t = 0;
    for (const auto& c : counts_) t += c;
    return t;
  }

  std::size_t max_segments() const {
    for (std::size_t l = counts_.size(); l-- > 1;) {
      if (counts_[l] != 0) return l;
    }
    return 1;
  }

  bool has_segments(std::size_t segments) const { return leaf_count(segments) != 0; }

  // Uniform draw over leaves at depth `segments`. Spans start at `offset`.
  TokenSeq sample(std::size_t segments, Rng& rng, std::size_t offset = 0) const {
    if (!has_segments(segments)) {
      throw InfeasibleError("token has no segmentation into " + std::to_string(segments) + " segments");
    }
    if (mode_ == TreeMode::merge_reachable) {
      const auto& masks = masks_by_len_[segments];
      return from_mask(masks[uniform_index(rng, masks.size())], offset);
    }
    TokenSeq out;
    std::size_t pos = 0;
    std::size_t rem = segments;
    while (pos < len_) {
      BigInt r = uniform_below(rng, ways(pos, rem));
      for (std::size_t end = pos + 1; end <= len_; ++end) {
        const TokenId id = interval(pos, end);
        if (id == kNone) continue;
        const BigInt& w = ways(end, rem - 1);
        if (r < w) {
          out.push_back(id, {offset + pos, offset + end});
          pos = end;
          --rem;
          break;
        }
        r -= w;
      }
    }
    return out;
  }

  // Every leaf at depth `segments` (exponential; for tests and small tokens).
  std::vector<TokenSeq> leaves(std::size_t segments, std::size_t offset = 0) const {
    std::vector<TokenSeq> out;
    if (!has_segments(segments)) return out;
    if (mode_ == TreeMode::merge_reachable) {
      for (std::uint64_t m : masks_by_len_[segments]) out.push_back(from_mask(m, offset));
      return out;
    }
    TokenSeq cur;
    collect(0, segments, offset, cur, out);
    return out;
  }

 private:
  static constexpr TokenId kNone = 0xFFFFFFFFu;

  TokenId interval(std::size_t i, std::size_t j) const { return interval_id_[i * (len_ + 1) + j]; }
  BigInt& ways(std::size_t pos, std::size_t l) { return ways_[pos * (len_ + 1) + l]; }
  const BigInt& ways(std::size_t pos, std::size_t l) const { return ways_[pos * (len_ + 1) + l]; }

  void build_all() {
    ways_.assign((len_ + 1) * (len_ + 1), BigInt(0));
    ways(len_, 0) = 1;
    for (std::size_t pos = len_; pos-- > 0;) {
      for (std::size_t end = pos + 1; end <= len_; ++end) {
        if (interval(pos, end) == kNone) continue;
        for (std::size_t l = 1; l <= len_ - pos; ++l) ways(pos, l) += ways(end, l - 1);
      }
    }
    counts_.assign(len_ + 1, BigInt(0));
    for (std::size_t l = 1; l <= len_; ++l) counts_[l] = ways(0, l);
  }

  void build_reachable(const SplitMap& split_map) {
    std::unordered_map<std::size_t, std::vector<std::uint64_t>> memo;
    const std::vector<std::uint64_t>& all = reach(0, len_, split_map, memo);
    masks_by_len_.assign(len_ + 1, {});
    for (std::uint64_t m : all) masks_by_len_[std::popcount(m) + 1].push_back(m);
    counts_.assign(len_ + 1, BigInt(0));
    for (std::size_t l = 1; l <= len_; ++l) counts_[l] = masks_by_len_[l].size();
  }

  // Cut masks (bit p-1 set = cut before byte p) reachable from the token on
  // [i, j) by recursive decomposition.
  const std::vector<std::uint64_t>& reach(std::size_t i, std::size_t j, const SplitMap& split_map,
                                          std::unordered_map<std::size_t, std::vector<std::uint64_t>>& memo) {
    const std::size_t key = i * (len_ + 1) + j;
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::vector<std::uint64_t> out{0};
    for (const Decomposition& d : split_map.decompositions(interval(i, j))) {
      std::vector<std::uint64_t> acc{0};
      std::size_t pos = i;
      for (std::uint8_t p = 0; p < d.count; ++p) {
        const std::size_t end = pos + d.lengths[p];
        const std::vector<std::uint64_t> part = reach(pos, end, split_map, memo);
        const std::uint64_t cut = end < j ? (std::uint64_t{1} << (end - 1)) : 0;
        std::vector<std::uint64_t> next;
        next.reserve(acc.size() * part.size());
        for (std::uint64_t a : acc) {
          for (std::uint64_t b : part) next.push_back(a | b | cut);
        }
        acc = std::move(next);
        pos = end;
      }
      out.insert(out.end(), acc.begin(), acc.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return memo.emplace(key, std::move(out)).first->second;
  }

  TokenSeq from_mask(std::uint64_t mask, std::size_t offset) const {
    TokenSeq out;
    std::size_t start = 0;
    for (std::size_t p = 1; p <= len_; ++p) {
      if (p == len_ || (mask >> (p - 1)) & 1u) {
        out.push_back(interval(start, p), {offset + start, offset + p});
        start = p;
      }
    }
    return out;
  }

  void collect(std::size_t pos, std::size_t rem, std::size_t offset, TokenSeq& cur,
               std::vector<TokenSeq>& out) const {
    if (pos == len_) {
      if (rem == 0) out.push_back(cur);
      return;
    }
    if (rem == 0) return;
    for (std::size_t end = pos + 1; end <= len_; ++end) {
      const TokenId id = interval(pos, end);
      if (id == kNone || ways(end, rem - 1) == 0) continue;
      cur.push_back(id, {offset + pos, offset + end});
      collect(end, rem - 1, offset, cur, out);
      cur.ids.pop_back();
      cur.spans.pop_back();
    }
  }

  TokenId token_;
  TreeMode mode_;
  std::size_t len_ = 0;
  std::vector<TokenId> interval_id_;
  std::vector<BigInt> ways_;
  std::vector<std::vector<std::uint64_t>> masks_by_len_;
  std::vector<BigInt> counts_;
};

inline SegmentTree build_segment_tree(TokenId token, const SplitMap& split_map, const Vocabulary& vocab,
                                      TreeMode mode) {
  return SegmentTree(token, vocab, split_map, mode);
}

inline TokenSeq sample_uniform_segments(const SegmentTree& tree, std::size_t segments, Rng& rng,
                                        std::size_t offset = 0) {
  return tree.sample(segments, rng, offset);
}

}  // namespace stoktok
