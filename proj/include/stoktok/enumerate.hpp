// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "stoktok/error.hpp"
#include "stoktok/random.hpp"
#include "stoktok/vocab.hpp"

namespace stoktok {

// Exhaustive enumeration beyond this many bytes needs an explicit override.
inline constexpr std::size_t kEnumerateGuardBytes = 24;

namespace detail {

inline const Boundaries& resolve_bounds(const Boundaries* bounds, Boundaries& storage, std::size_t n) {
  if (bounds) {
    if (bounds->length() != n) throw InputError("boundaries do not match text length");
    return *bounds;
  }
  storage = Boundaries::none(n);
  return storage;
}

template <class Emit>
bool enumerate_from(std::string_view text, const Vocabulary& vocab, const Boundaries& bounds,
                    std::size_t pos, TokenSeq& current, Emit& emit) {
  if (pos == text.size()) return emit(current);
  bool keep_going = true;
  vocab.for_each_token_at(text, pos, bounds.limit(pos), [&](std::size_t len, TokenId id) {
    if (!keep_going) return;
    current.push_back(id, {pos, pos + len});
    keep_going = enumerate_from(text, vocab, bounds, pos + len, current, emit);
    current.ids.pop_back();
    current.spans.pop_back();
  });
  return keep_going;
}

}  // namespace detail

// Depth-first enumeration of every valid tokenisation, in lexicographic order
// of (first token length, ...). Brute-force oracle for the DP structures.
inline std::vector<TokenSeq> enumerate_all(std::string_view text, const Vocabulary& vocab,
                                           std::size_t limit = std::numeric_limits<std::size_t>::max(),
                                           bool allow_long = false, const Boundaries* bounds = nullptr) {
  if (text.size() > kEnumerateGuardBytes && !allow_long) {
    throw InputError("enumerate_all: input longer than " + std::to_string(kEnumerateGuardBytes) +
                     " bytes; pass the override to proceed");
  }
  Boundaries storage;
  const Boundaries& b = detail::resolve_bounds(bounds, storage, text.size());
  std::vector<TokenSeq> out;
  if (limit == 0) return out;
  TokenSeq current;
  auto emit = [&](const TokenSeq& seq) {
    out.push_back(seq);
    return out.size() < limit;
  };
  detail::enumerate_from(text, vocab, b, 0, current, emit);
  return out;
}

// Position DAG whose root-to-terminal paths are exactly the valid
// tokenisations. paths_from(p) counts tokenisations of text[p:].
class SegmentationDag {
 public:
  struct Edge {
    TokenId token;
    std::uint32_t end;
  };

  SegmentationDag(std::string_view text, const Vocabulary& vocab, const Boundaries* bounds = nullptr)
      : n_(text.size()), edges_(text.size() + 1), paths_(text.size() + 1) {
    Boundaries storage;
    const Boundaries& b = detail::resolve_bounds(bounds, storage, n_);
    for (std::size_t pos = 0; pos < n_; ++pos) {
      vocab.for_each_token_at(text, pos, b.limit(pos), [&](std::size_t len, TokenId id) {
        edges_[pos].push_back({id, static_cast<std::uint32_t>(pos + len)});
      });
    }
    paths_[n_] = 1;
    for (std::size_t pos = n_; pos-- > 0;) {
      BigInt total = 0;
      for (const Edge& e : edges_[pos]) total += paths_[e.end];
      paths_[pos] = std::move(total);
    }
  }

  std::size_t length() const { return n_; }
  const BigInt& count() const { return paths_[0]; }
  const BigInt& paths_from(std::size_t pos) const { return paths_[pos]; }
  std::span<const Edge> edges(std::size_t pos) const { return edges_[pos]; }

  // Exact uniform draw: each edge is taken with probability proportional to
  // the number of completions below it.
  TokenSeq sample(Rng& rng) const {
    TokenSeq out;
    std::size_t pos = 0;
    while (pos < n_) {
      BigInt r = uniform_below(rng, paths_[pos]);
      for (const Edge& e : edges_[pos]) {
        if (r < paths_[e.end]) {
          out.push_back(e.token, {pos, e.end});
          pos = e.end;
          break;
        }
        r -= paths_[e.end];
      }
    }
    return out;
  }

 private:
  std::size_t n_;
  std::vector<std::vector<Edge>> edges_;
  std::vector<BigInt> paths_;
};

inline SegmentationDag build_dag(std::string_view text, const Vocabulary& vocab,
                                 const Boundaries* bounds = nullptr) {
  return SegmentationDag(text, vocab, bounds);
}

inline TokenSeq sample_uniform(const SegmentationDag& dag, Rng& rng) { return dag.sample(rng); }

inline BigInt count_tokenisations(std::string_view text, const Vocabulary& vocab,
                                  const Boundaries* bounds = nullptr) {
  return SegmentationDag(text, vocab, bounds).count();
}

// Segmentation DAG layered by distance to a reference tokenisation. A token
// costs 0 when its span is one of the reference spans and 1 otherwise, so a
// path's total cost is its token edit distance from the reference.
class DistanceDag {
 public:
  struct Edge {
    TokenId token;
    std::uint32_t end;
    std::uint8_t cost;
  };

  DistanceDag(std::string_view text, const TokenSeq& reference, std::size_t k_max,
              const Vocabulary& vocab, const Boundaries* bounds = nullptr)
      : n_(text.size()), k_max_(k_max), edges_(text.size() + 1) {
    if (!is_valid_tokenisation(reference, text, vocab)) {
      throw InputError("distance dag: reference is not a tokenisation of the text");
    }
    Boundaries storage;
    const Boundaries& b = detail::resolve_bounds(bounds, storage, n_);
    std::vector<std::size_t> ref_end(n_ + 1, kNoEnd);
    for (const Span& s : reference.spans) ref_end[s.begin] = s.end;
    for (std::size_t pos = 0; pos < n_; ++pos) {
      vocab.for_each_token_at(text, pos, b.limit(pos), [&](std::size_t len, TokenId id) {
        const std::uint8_t cost = ref_end[pos] == pos + len ? 0 : 1;
        edges_[pos].push_back({id, static_cast<std::uint32_t>(pos + len), cost});
      });
    }
    ways_.assign((n_ + 1) * (k_max_ + 1), BigInt(0));
    at(n_, 0) = 1;
    for (std::size_t pos = n_; pos-- > 0;) {
      for (const Edge& e : edges_[pos]) {
        for (std::size_t r = e.cost; r <= k_max_; ++r) at(pos, r) += at(e.end, r - e.cost);
      }
    }
  }

  std::size_t k_max() const { return k_max_; }
  std::size_t length() const { return n_; }

  BigInt count(std::size_t k) const { return k > k_max_ ? BigInt(0) : at(0, k); }

  std::vector<BigInt> counts() const {
    std::vector<BigInt> out;
    for (std::size_t k = 0; k <= k_max_; ++k) out.push_back(at(0, k));
    return out;
  }

  TokenSeq sample(std::size_t k, Rng& rng) const {
    if (count(k) == 0) {
      throw InfeasibleError("no tokenisation at distance " + std::to_string(k));
    }
    TokenSeq out;
    std::size_t pos = 0;
    std::size_t rem = k;
    while (pos < n_) {
      BigInt r = uniform_below(rng, at(pos, rem));
      for (const Edge& e : edges_[pos]) {
        if (e.cost > rem) continue;
        const BigInt& w = at(e.end, rem - e.cost);
        if (r < w) {
          out.push_back(e.token, {pos, e.end});
          pos = e.end;
          rem -= e.cost;
          break;
        }
        r -= w;
      }
    }
    return out;
  }

  // Every tokenisation at distance exactly k, up to limit.
  std::vector<TokenSeq> enumerate(std::size_t k,
                                  std::size_t limit = std::numeric_limits<std::size_t>::max()) const {
    std::vector<TokenSeq> out;
    if (count(k) == 0 || limit == 0) return out;
    TokenSeq current;
    enumerate_from(0, k, current, out, limit);
    return out;
  }

 private:
  static constexpr std::size_t kNoEnd = std::numeric_limits<std::size_t>::max();

  BigInt& at(std::size_t pos, std::size_t r) { return ways_[pos * (k_max_ + 1) + r]; }
  const BigInt& at(std::size_t pos, std::size_t r) const { return ways_[pos * (k_max_ + 1) + r]; }

  bool enumerate_from(std::size_t pos, std::size_t rem, TokenSeq& current, std::vector<TokenSeq>& out,
                      std::size_t limit) const {
    if (pos == n_) {
      out.push_back(current);
      return out.size() < limit;
    }
    for (const Edge& e : edges_[pos]) {
      if (e.cost > rem || at(e.end, rem - e.cost) == 0) continue;
      current.push_back(e.token, {pos, e.end});
      const bool more = enumerate_from(e.end, rem - e.cost, current, out, limit);
      current.ids.pop_back();
      current.spans.pop_back();
      if (!more) return false;
    }
    return true;
  }

  std::size_t n_;
  std::size_t k_max_;
  std::vector<std::vector<Edge>> edges_;
  std::vector<BigInt> ways_;
};

inline DistanceDag build_distance_dag(std::string_view text, const TokenSeq& reference, std::size_t k_max,
                                      const Vocabulary& vocab, const Boundaries* bounds = nullptr) {
  return DistanceDag(text, reference, k_max, vocab, bounds);
}

inline TokenSeq sample_uniform_distance(const DistanceDag& dag, std::size_t k, Rng& rng) {
  return dag.sample(k, rng);
}

}  // namespace stoktok
