// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace stoktok {

using TokenId = std::uint32_t;

// Byte trie over the vocabulary. Used for exact lookup and for enumerating
// every token that starts at a given position of a string.
class PrefixTrie {
 public:
  PrefixTrie() : nodes_(1) {}

  void insert(std::string_view key, TokenId id) {
    std::uint32_t node = 0;
    for (unsigned char c : key) {
      std::uint32_t next = child(node, c);
      if (next == kNone) {
        next = static_cast<std::uint32_t>(nodes_.size());
        auto& kids = nodes_[node].children;
        kids.insert(std::lower_bound(kids.begin(), kids.end(), Edge{c, 0}), Edge{c, next});
        nodes_.emplace_back();
      }
      node = next;
    }
    nodes_[node].token = id;
    nodes_[node].has_token = true;
  }

  std::optional<TokenId> find(std::string_view key) const {
    std::uint32_t node = 0;
    for (unsigned char c : key) {
      node = child(node, c);
      if (node == kNone) return std::nullopt;
    }
    if (!nodes_[node].has_token) return std::nullopt;
    return nodes_[node].token;
  }

  // Calls f(length, id) for every token that is a prefix of text, shortest
  // first. Stops after max_len bytes.
  template <class F>
  void for_each_prefix(std::string_view text, F&& f,
                       std::size_t max_len = std::string_view::npos) const {
    std::uint32_t node = 0;
    const std::size_t limit = std::min(text.size(), max_len);
    for (std::size_t i = 0; i < limit; ++i) {
      node = child(node, static_cast<unsigned char>(text[i]));
      if (node == kNone) return;
      if (nodes_[node].has_token) f(i + 1, nodes_[node].token);
    }
  }

 private:
  static constexpr std::uint32_t kNone = 0xFFFFFFFFu;

  struct Edge {
    unsigned char byte;
    std::uint32_t target;
    bool operator<(const Edge& o) const { return byte < o.byte; }
  };
  struct Node {
    std::vector<Edge> children;
    TokenId token = 0;
    bool has_token = false;
  };

  std::uint32_t child(std::uint32_t node, unsigned char c) const {
    const auto& kids = nodes_[node].children;
    auto it = std::lower_bound(kids.begin(), kids.end(), Edge{c, 0});
    if (it == kids.end() || it->byte != c) return kNone;
    return it->target;
  }

  std::vector<Node> nodes_;
};

}  // namespace stoktok
