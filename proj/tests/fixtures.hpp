// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

// Shared fixture vocabularies and brute-force oracles for the test suites.
// Oracles here deliberately avoid the library's DP code paths.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stoktok/stoktok.hpp"

namespace stoktok::testing {

// "revolution" with a merge chain that makes the whole word canonical.
// rev + olution is its only 2-way split; re, vol and ution are all tokens but
// revol and volution are not, so (re, vol, ution) cannot be reached by
// pairwise splits.
inline Vocabulary revolution_vocab() {
  return Vocabulary::from_strings(
      {"re", "rev", "ol", "vol", "ut", "uti", "utio", "ution", "olution", "revolution"},
      {{"r", "e"},
       {"re", "v"},
       {"o", "l"},
       {"v", "ol"},
       {"u", "t"},
       {"ut", "i"},
       {"uti", "o"},
       {"utio", "n"},
       {"ol", "ution"},
       {"rev", "olution"}});
}

// Single letters plus re, v, ol, ution,
// revolution, with no merges.
inline Vocabulary letters_vocab() {
  std::vector<std::pair<std::string, TokenId>> entries;
  TokenId id = 0;
  for (char c = 'a'; c <= 'z'; ++c) entries.emplace_back(std::string(1, c), id++);
  for (const char* t : {"re", "v", "ol", "ution", "revolution"}) {
    if (std::string(t).size() > 1) entries.emplace_back(t, id++);
  }
  return Vocabulary::build(entries, {});
}

inline Vocabulary ab_vocab() { return Vocabulary::from_strings({"ab"}, {{"a", "b"}}); }

inline Vocabulary byte_vocab() { return Vocabulary::from_strings({}); }

// Every substring of each word is a token; merges build each word left to
// right so the words are canonical. Words must use disjoint byte sets.
inline Vocabulary all_substrings_vocab(const std::vector<std::string>& words) {
  std::vector<std::string> tokens;
  std::vector<std::pair<std::string, std::string>> merges;
  for (const auto& w : words) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (std::size_t j = i + 2; j <= w.size(); ++j) tokens.push_back(w.substr(i, j - i));
    }
    for (std::size_t j = 2; j <= w.size(); ++j) merges.emplace_back(w.substr(0, j - 1), w.substr(j - 1, 1));
  }
  return Vocabulary::from_strings(tokens, merges);
}

inline TokenSeq seq_of(const std::vector<std::string>& pieces, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (const auto& p : pieces) ids.push_back(*vocab.find(p));
  return make_token_seq(ids, vocab);
}

inline std::string key_of(const std::vector<std::string>& pieces, const Vocabulary& vocab) {
  return serialise_ids(seq_of(pieces, vocab).ids);
}

// Exact distribution of stochastok outputs after `iterations` steps, by
// walking every (position, decomposition) choice sequence.
inline std::map<std::string, Rational> stochastok_trace_pmf(const TokenSeq& start, std::size_t iterations,
                                                            const SplitMap& split_map) {
  std::map<std::string, Rational> pmf;
  std::function<void(const std::vector<TokenId>&, std::size_t, Rational)> walk =
      [&](const std::vector<TokenId>& v, std::size_t left, Rational p) {
        if (left == 0) {
          pmf[serialise_ids(v)] += p;
          return;
        }
        const Rational pick = p / static_cast<long long>(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
          auto ds = split_map.decompositions(v[i]);
          if (ds.empty()) {
            walk(v, left - 1, pick);
            continue;
          }
          for (const auto& d : ds) {
            std::vector<TokenId> next(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(i));
            for (TokenId t : d.ids()) next.push_back(t);
            next.insert(next.end(), v.begin() + static_cast<std::ptrdiff_t>(i) + 1, v.end());
            walk(next, left - 1, pick / static_cast<long long>(ds.size()));
          }
        }
      };
  walk(start.ids, iterations, Rational(1));
  return pmf;
}

// Exact urn distribution by walking every draw sequence.
inline std::map<std::vector<std::size_t>, Rational> urn_trace_pmf(std::size_t n_splits, std::size_t m) {
  std::map<std::vector<std::size_t>, Rational> pmf;
  std::function<void(std::vector<std::size_t>&, std::size_t, Rational)> walk =
      [&](std::vector<std::size_t>& s, std::size_t left, Rational p) {
        if (left == 0) {
          pmf[s] += p;
          return;
        }
        std::size_t balls = m;
        for (auto c : s) balls += c;
        for (std::size_t i = 0; i < m; ++i) {
          const Rational q = p * Rational(static_cast<long long>(s[i] + 1), static_cast<long long>(balls));
          ++s[i];
          walk(s, left - 1, q);
          --s[i];
        }
      };
  std::vector<std::size_t> s(m, 0);
  walk(s, n_splits, Rational(1));
  return pmf;
}

// Brute-force count of tokenisations via plain recursion over a string set.
inline std::size_t brute_force_count(const std::string& text, const std::set<std::string>& tokens) {
  if (text.empty()) return 1;
  std::size_t total = 0;
  for (std::size_t l = 1; l <= text.size(); ++l) {
    if (tokens.contains(text.substr(0, l))) total += brute_force_count(text.substr(l), tokens);
  }
  return total;
}

inline Pmf to_double_pmf(const std::map<std::string, Rational>& exact) {
  Pmf p;
  for (const auto& [k, v] : exact) {
    if (v != 0) p[k] = v.convert_to<double>();
  }
  return p;
}


// Random merge list over a small alphabet: each merge joins two existing
// tokens into a new one, so the merge order is always a valid derivation.
inline Vocabulary random_bpe_vocab(std::uint64_t seed, const std::string& alphabet, std::size_t n_merges,
                                   std::size_t max_len = 6) {
  Rng rng(seed);
  std::vector<std::string> pool;
  for (char c : alphabet) pool.emplace_back(1, c);
  std::set<std::string> have(pool.begin(), pool.end());
  std::vector<std::string> tokens;
  std::vector<std::pair<std::string, std::string>> merges;
  for (std::size_t attempt = 0; merges.size() < n_merges && attempt < n_merges * 50; ++attempt) {
    const std::string& l = pool[uniform_index(rng, pool.size())];
    const std::string& r = pool[uniform_index(rng, pool.size())];
    std::string joined = l + r;
    if (joined.size() > max_len || have.contains(joined)) continue;
    merges.emplace_back(l, r);
    tokens.push_back(joined);
    have.insert(joined);
    pool.push_back(joined);
  }
  return Vocabulary::from_strings(tokens, merges);
}

inline std::string random_string(Rng& rng, const std::string& alphabet, std::size_t len) {
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += alphabet[uniform_index(rng, alphabet.size())];
  return s;
}

inline std::set<std::string> token_strings(const Vocabulary& vocab) {
  std::set<std::string> out;
  for (TokenId id : vocab.ids()) out.insert(vocab.bytes(id));
  return out;
}


// Largest |count - n p| / sqrt(n p (1 - p)) over the reference support, plus
// infinity for any observation outside it.
inline double max_sigma(const Histogram& h, const Pmf& ref) {
  double worst = 0.0;
  const double n = static_cast<double>(h.total);
  for (const auto& [k, c] : h.counts) {
    if (!ref.contains(k)) return std::numeric_limits<double>::infinity();
  }
  for (const auto& [k, p] : ref) {
    auto it = h.counts.find(k);
    const double o = it == h.counts.end() ? 0.0 : static_cast<double>(it->second);
    const double sd = std::sqrt(n * p * (1.0 - p));
    if (sd == 0.0) {
      if (o != n * p) return std::numeric_limits<double>::infinity();
      continue;
    }
    worst = std::max(worst, std::abs(o - n * p) / sd);
  }
  return worst;
}

inline std::vector<std::string> keys_of(const std::vector<TokenSeq>& seqs) {
  std::vector<std::string> out;
  for (const auto& s : seqs) out.push_back(serialise_ids(s.ids));
  return out;
}


// "ab" next to the revolution fixture: "ab" can absorb one split, "revolution"
// nine, so large split counts on "ab" are infeasible.
inline Vocabulary ab_revolution_vocab() {
  return Vocabulary::from_strings({"ab", "re", "rev", "ol", "vol", "ut", "uti", "utio", "ution", "olution",
                                   "revolution"},
                                  {{"a", "b"},
                                   {"r", "e"},
                                   {"re", "v"},
                                   {"o", "l"},
                                   {"v", "ol"},
                                   {"u", "t"},
                                   {"ut", "i"},
                                   {"uti", "o"},
                                   {"utio", "n"},
                                   {"ol", "ution"},
                                   {"rev", "olution"}});
}

}  // namespace stoktok::testing
