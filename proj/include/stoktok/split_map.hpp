// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "stoktok/vocab.hpp"

namespace stoktok {

enum class SplitArity { two, two_and_three };

// Ordered decomposition of a token into 2 or 3 vocabulary tokens.
struct Decomposition {
  std::array<TokenId, 3> parts{};
  std::array<std::uint32_t, 3> lengths{};
  std::uint8_t count = 0;

  std::span<const TokenId> ids() const { return {parts.data(), count}; }
  friend bool operator==(const Decomposition& a, const Decomposition& b) {
    return a.count == b.count && a.parts == b.parts;
  }
};

// token id -> every decomposition of the configured arity, ordered by split
// point (then by second split point).
class SplitMap {
 public:
  SplitMap() = default;

  SplitMap(const Vocabulary& vocab, SplitArity arity) : arity_(arity) {
    for (TokenId id : vocab.ids()) {
      const std::string& s = vocab.bytes(id);
      const std::string_view sv = s;
      std::vector<Decomposition> out;
      for (std::size_t p = 1; p < s.size(); ++p) {
        auto head = vocab.find(sv.substr(0, p));
        if (!head) continue;
        if (auto tail = vocab.find(sv.substr(p))) {
          Decomposition d;
          d.parts = {*head, *tail, 0};
          d.lengths = {static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(s.size() - p), 0};
          d.count = 2;
          out.push_back(d);
        }
        if (arity == SplitArity::two_and_three) {
          for (std::size_t q = p + 1; q < s.size(); ++q) {
            auto mid = vocab.find(sv.substr(p, q - p));
            if (!mid) continue;
            auto tail = vocab.find(sv.substr(q));
            if (!tail) continue;
            Decomposition d;
            d.parts = {*head, *mid, *tail};
            d.lengths = {static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(q - p),
                         static_cast<std::uint32_t>(s.size() - q)};
            d.count = 3;
            out.push_back(d);
          }
        }
      }
      if (!out.empty()) table_.emplace(id, std::move(out));
    }
  }

  SplitArity arity() const { return arity_; }

  std::span<const Decomposition> decompositions(TokenId id) const {
    auto it = table_.find(id);
    if (it == table_.end()) return {};
    return it->second;
  }

  bool splittable(TokenId id) const { return table_.contains(id); }

 private:
  SplitArity arity_ = SplitArity::two;
  std::unordered_map<TokenId, std::vector<Decomposition>> table_;
};

inline SplitMap build_split_map(const Vocabulary& vocab, SplitArity arity) {
  return SplitMap(vocab, arity);
}

}  // namespace stoktok
