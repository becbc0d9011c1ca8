// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stoktok/enumerate.hpp"
#include "stoktok/error.hpp"
#include "stoktok/random.hpp"
#include "stoktok/segment_tree.hpp"
#include "stoktok/split_map.hpp"
#include "stoktok/vocab.hpp"

namespace stoktok {

enum class Scheme { canonical, stochastok, stochastok_uni, uniform_k, uniform, bpe_dropout };

inline std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::canonical: return "canonical";
    case Scheme::stochastok: return "stochastok";
    case Scheme::stochastok_uni: return "stochastok-uni";
    case Scheme::uniform_k: return "uniform-k";
    case Scheme::uniform: return "uniform";
    case Scheme::bpe_dropout: return "bpe-dropout";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view name) {
  for (Scheme s : {Scheme::canonical, Scheme::stochastok, Scheme::stochastok_uni, Scheme::uniform_k,
                   Scheme::uniform, Scheme::bpe_dropout}) {
    if (scheme_name(s) == name) return s;
  }
  throw InputError("unknown scheme '" + std::string(name) + "'");
}

struct SamplerSpec {
  Scheme scheme = Scheme::canonical;
  double alpha = 0.0;                     // stochastok, stochastok-uni
  std::size_t k = 0;                      // uniform-k
  double p_drop = 0.0;                    // bpe-dropout
  std::optional<std::size_t> k_max;       // stochastok; unbounded when empty
  TreeMode tree_mode = TreeMode::all_segmentations;  // stochastok-uni
  SplitArity arity = SplitArity::two;     // stochastok
  bool retry_unsplittable = false;        // stochastok ablation

  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InputError("alpha must be a finite value >= 0");
    if (!(p_drop >= 0.0 && p_drop <= 1.0)) throw InputError("p_drop must lie in [0, 1]");
  }

  // Flat key=value form; only keys relevant to the scheme are emitted.
  std::map<std::string, std::string> to_kv() const {
    std::map<std::string, std::string> kv{{"scheme", std::string(scheme_name(scheme))}};
    switch (scheme) {
      case Scheme::stochastok:
        kv["alpha"] = format_double(alpha);
        if (k_max) kv["k_max"] = std::to_string(*k_max);
        kv["arity"] = arity == SplitArity::two ? "2" : "2+3";
        if (retry_unsplittable) kv["retry"] = "true";
        break;
      case Scheme::stochastok_uni:
        kv["alpha"] = format_double(alpha);
        kv["tree_mode"] = tree_mode == TreeMode::all_segmentations ? "all" : "merge-reachable";
        break;
      case Scheme::uniform_k: kv["k"] = std::to_string(k); break;
      case Scheme::bpe_dropout: kv["p_drop"] = format_double(p_drop); break;
      default: break;
    }
    return kv;
  }

  static SamplerSpec from_kv(const std::map<std::string, std::string>& kv) {
    SamplerSpec s;
    auto get = [&](const char* key) -> const std::string* {
      auto it = kv.find(key);
      return it == kv.end() ? nullptr : &it->second;
    };
    try {
      if (auto v = get("scheme")) s.scheme = parse_scheme(*v);
      if (auto v = get("alpha")) s.alpha = std::stod(*v);
      if (auto v = get("k")) s.k = std::stoull(*v);
      if (auto v = get("p_drop")) s.p_drop = std::stod(*v);
      if (auto v = get("k_max")) s.k_max = std::stoull(*v);
      if (auto v = get("arity")) {
        if (*v == "2") s.arity = SplitArity::two;
        else if (*v == "2+3" || *v == "23") s.arity = SplitArity::two_and_three;
        else throw InputError("arity must be 2 or 2+3");
      }
      if (auto v = get("tree_mode")) {
        if (*v == "all") s.tree_mode = TreeMode::all_segmentations;
        else if (*v == "merge-reachable") s.tree_mode = TreeMode::merge_reachable;
        else throw InputError("tree_mode must be all or merge-reachable");
      }
      if (auto v = get("retry")) s.retry_unsplittable = (*v == "true" || *v == "1");
    } catch (const std::logic_error&) {
      throw InputError("sampler spec: malformed numeric value");
    }
    s.validate();
    return s;
  }

 private:
  static std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }
};

// Per-canonical-token split counts.
struct SplitCounts {
  std::vector<std::size_t> counts;

  std::size_t total() const {
    std::size_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
  friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

// Number of splits requested for an m-token sequence at expansion proportion
// alpha: ceil(alpha * m). The epsilon absorbs representation error such as
// 0.1 * 30 = 3.0000000000000004.
inline std::size_t requested_splits(double alpha, std::size_t m) {
  if (alpha <= 0.0 || m == 0) return 0;
  return static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(m) - 1e-9));
}

// Immutable vocabulary-derived state shared by the samplers: both split maps
// and a lazily filled, thread-safe cache of per-token segment trees.
class SamplingContext {
 public:
  explicit SamplingContext(const Vocabulary& vocab, bool pretokenise_text = false)
      : vocab_(&vocab), pretokenise_(pretokenise_text), split2_(vocab, SplitArity::two) {}

  SamplingContext(const SamplingContext&) = delete;
  SamplingContext& operator=(const SamplingContext&) = delete;

  const Vocabulary& vocab() const { return *vocab_; }
  bool pretokenise() const { return pretokenise_; }

  const SplitMap& split_map(SplitArity arity) const {
    if (arity == SplitArity::two) return split2_;
    std::call_once(split23_once_, [&] { split23_ = SplitMap(*vocab_, SplitArity::two_and_three); });
    return split23_;
  }

  // Trees in merge-reachable mode use the 2-way split map.
  std::shared_ptr<const SegmentTree> tree(TokenId token, TreeMode mode) const {
    const auto key = std::make_pair(token, mode);
    std::lock_guard lock(mu_);
    auto it = trees_.find(key);
    if (it != trees_.end()) return it->second;
    auto t = std::make_shared<const SegmentTree>(token, *vocab_, split2_, mode);
    trees_.emplace(key, t);
    return t;
  }

  Boundaries boundaries(std::string_view text) const { return make_boundaries(text, pretokenise_); }

 private:
  const Vocabulary* vocab_;
  bool pretokenise_;
  SplitMap split2_;
  mutable std::once_flag split23_once_;
  mutable SplitMap split23_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<TokenId, TreeMode>, std::shared_ptr<const SegmentTree>> trees_;
};

// Random pairwise splitting. K = min(k_max, ceil(alpha * m)) iterations; each
// picks a position uniformly over the current sequence and replaces it with a
// uniformly chosen decomposition. An unsplittable pick still uses up the
// iteration unless retry_unsplittable is set, in which case positions are
// drawn among splittable tokens only and the loop ends early if none remain.
inline TokenSeq stochastok(const TokenSeq& canonical, double alpha, std::optional<std::size_t> k_max,
                           const SplitMap& split_map, Rng& rng, bool retry_unsplittable = false) {
  if (!(alpha >= 0.0)) throw InputError("alpha must be >= 0");
  std::size_t iterations = requested_splits(alpha, canonical.size());
  if (k_max) iterations = std::min(iterations, *k_max);
  TokenSeq v = canonical;
  for (std::size_t it = 0; it < iterations; ++it) {
    std::size_t i;
    if (retry_unsplittable) {
      std::vector<std::size_t> candidates;
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (split_map.splittable(v.ids[j])) candidates.push_back(j);
      }
      if (candidates.empty()) break;
      i = candidates[uniform_index(rng, candidates.size())];
    } else {
      if (v.empty()) break;
      i = uniform_index(rng, v.size());
    }
    auto options = split_map.decompositions(v.ids[i]);
    if (options.empty()) continue;
    const Decomposition& d = options[uniform_index(rng, options.size())];
    std::vector<TokenId> ids;
    std::vector<Span> spans;
    std::size_t pos = v.spans[i].begin;
    for (std::uint8_t p = 0; p < d.count; ++p) {
      ids.push_back(d.parts[p]);
      spans.push_back({pos, pos + d.lengths[p]});
      pos += d.lengths[p];
    }
    const auto at = static_cast<std::ptrdiff_t>(i);
    v.ids.erase(v.ids.begin() + at);
    v.spans.erase(v.spans.begin() + at);
    v.ids.insert(v.ids.begin() + at, ids.begin(), ids.end());
    v.spans.insert(v.spans.begin() + at, spans.begin(), spans.end());
  }
  return v;
}

// Polya urn: one ball per token initially; each of N draws picks a ball
// uniformly, returns it with a copy, and credits a split to its token. This is
// DirMult(N, 1).
inline SplitCounts sample_split_counts(std::size_t n_splits, std::size_t m, Rng& rng) {
  if (m == 0) throw InputError("split counts need at least one token");
  SplitCounts s{std::vector<std::size_t>(m, 0)};
  std::size_t balls = m;
  for (std::size_t draw = 0; draw < n_splits; ++draw) {
    std::size_t r = uniform_index(rng, balls);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t b = s.counts[i] + 1;
      if (r < b) {
        ++s.counts[i];
        break;
      }
      r -= b;
    }
    ++balls;
  }
  return s;
}

struct StochastokUniResult {
  TokenSeq tokens;
  SplitCounts drawn;     // urn output before feasibility adjustment
  SplitCounts realised;  // split counts actually applied
  bool adjusted = false; // realised != drawn
};

namespace detail {

// Largest feasible split count <= want for a tree (0 is always feasible).
inline std::size_t feasible_floor(const SegmentTree& tree, std::size_t want) {
  for (std::size_t s = want + 1; s-- > 0;) {
    if (tree.has_segments(s + 1)) return s;
  }
  return 0;
}

}  // namespace detail

// Two-stage sampler: draw split counts S ~ DirMult(ceil(alpha*m), 1), then for
// each canonical token draw uniformly among its segmentations with S_i + 1
// segments. Counts that a token cannot realise are lowered to the nearest
// feasible value and the shortfall is redistributed by continuing the urn over
// tokens that still have room; when the vocabulary cannot absorb N splits in
// total, every token takes its maximum.
inline StochastokUniResult stochastok_uni(const TokenSeq& canonical, double alpha, TreeMode mode,
                                          const SamplingContext& ctx, Rng& rng) {
  StochastokUniResult res;
  const std::size_t m = canonical.size();
  if (m == 0) return res;
  const std::size_t n = requested_splits(alpha, m);
  res.drawn = sample_split_counts(n, m, rng);

  std::vector<std::shared_ptr<const SegmentTree>> trees;
  std::vector<std::size_t> cap(m);
  for (std::size_t i = 0; i < m; ++i) {
    trees.push_back(ctx.tree(canonical.ids[i], mode));
    cap[i] = trees[i]->max_segments() - 1;
  }

  std::vector<std::size_t> target = res.drawn.counts;
  std::vector<std::size_t> real(m);
  for (;;) {
    std::size_t sum = 0;
    for (std::size_t i = 0; i < m; ++i) {
      target[i] = std::min(target[i], cap[i]);
      real[i] = detail::feasible_floor(*trees[i], target[i]);
      sum += real[i];
    }
    if (sum >= n) break;
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < m; ++i) {
      if (target[i] < cap[i]) open.push_back(i);
    }
    if (open.empty()) break;
    std::size_t balls = 0;
    for (std::size_t i : open) balls += real[i] + 1;
    for (std::size_t extra = n - sum; extra > 0; --extra) {
      std::size_t r = uniform_index(rng, balls);
      for (std::size_t i : open) {
        const std::size_t b = real[i] + 1;
        if (r < b) {
          ++target[i];
          break;
        }
        r -= b;
      }
    }
  }
  res.realised.counts = real;
  res.adjusted = res.realised != res.drawn;

  for (std::size_t i = 0; i < m; ++i) {
    const Span span = canonical.spans[i];
    if (real[i] == 0) {
      res.tokens.push_back(canonical.ids[i], span);
      continue;
    }
    TokenSeq part = trees[i]->sample(real[i] + 1, rng, span.begin);
    res.tokens.ids.insert(res.tokens.ids.end(), part.ids.begin(), part.ids.end());
    res.tokens.spans.insert(res.tokens.spans.end(), part.spans.begin(), part.spans.end());
  }
  return res;
}

struct UniformKResult {
  TokenSeq tokens;
  std::size_t k_requested = 0;
  std::size_t k_used = 0;
};

// Uniform over tokenisations at token edit distance k from the canonical one.
// An empty layer falls back to the largest non-empty k' < k (k' = 0 always
// exists).
inline UniformKResult uniform_k(std::string_view text, const TokenSeq& canonical, std::size_t k,
                                const Vocabulary& vocab, Rng& rng, const Boundaries* bounds = nullptr) {
  DistanceDag dag(text, canonical, k, vocab, bounds);
  std::size_t use = k;
  while (use > 0 && dag.count(use) == 0) --use;
  return {dag.sample(use, rng), k, use};
}

// Uniform over all tokenisations of text.
inline TokenSeq uniform_full(std::string_view text, const Vocabulary& vocab, Rng& rng,
                             const Boundaries* bounds = nullptr) {
  return SegmentationDag(text, vocab, bounds).sample(rng);
}

struct SampleResult {
  TokenSeq tokens;
  TokenSeq canonical;
  std::optional<std::size_t> k_used;          // uniform-k
  std::optional<StochastokUniResult> uni;     // stochastok-uni details (tokens duplicated there)
};

// Dispatches to the scheme named in spec.
inline SampleResult sample(std::string_view text, const SamplerSpec& spec, const SamplingContext& ctx,
                           Rng& rng) {
  spec.validate();
  const Vocabulary& vocab = ctx.vocab();
  SampleResult out;
  out.canonical = encode_canonical(text, vocab, ctx.pretokenise());
  switch (spec.scheme) {
    case Scheme::canonical:
      out.tokens = out.canonical;
      break;
    case Scheme::stochastok:
      out.tokens = stochastok(out.canonical, spec.alpha, spec.k_max, ctx.split_map(spec.arity), rng,
                              spec.retry_unsplittable);
      break;
    case Scheme::stochastok_uni: {
      auto r = stochastok_uni(out.canonical, spec.alpha, spec.tree_mode, ctx, rng);
      out.tokens = r.tokens;
      out.uni = std::move(r);
      break;
    }
    case Scheme::uniform_k: {
      const Boundaries b = ctx.boundaries(text);
      auto r = uniform_k(text, out.canonical, spec.k, vocab, rng, &b);
      out.tokens = std::move(r.tokens);
      out.k_used = r.k_used;
      break;
    }
    case Scheme::uniform: {
      const Boundaries b = ctx.boundaries(text);
      out.tokens = uniform_full(text, vocab, rng, &b);
      break;
    }
    case Scheme::bpe_dropout:
      out.tokens = bpe_dropout_encode(text, spec.p_drop, rng, vocab, ctx.pretokenise());
      break;
  }
  return out;
}

}  // namespace stoktok
