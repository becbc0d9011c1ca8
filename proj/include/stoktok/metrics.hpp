// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "json.hpp"
#include "stoktok/error.hpp"
#include "stoktok/random.hpp"
#include "stoktok/samplers.hpp"
#include "stoktok/vocab.hpp"

namespace stoktok {

// ---------------------------------------------------------------------------
// Token edit distance
// ---------------------------------------------------------------------------

namespace detail {

inline void require_same_string(const TokenSeq& v, const TokenSeq& u, const Vocabulary& vocab) {
  if (decode(v, vocab) != decode(u, vocab)) {
    throw InputError("token edit distance: sequences decode to different strings");
  }
}

}  // namespace detail

// Levenshtein over token sequences turning v into u, with insertion cost 1,
// deletion cost 0 and no substitution. Two tokens are the same symbol when
// they have the same id at the same byte span: the same id at a different
// offset is a different piece of the string.
inline std::size_t token_edit_distance(const TokenSeq& v, const TokenSeq& u, const Vocabulary& vocab) {
  detail::require_same_string(v, u, vocab);
  const std::size_t n = v.size();
  const std::size_t m = u.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = 0;
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t best = std::min(prev[j], cur[j - 1] + 1);
      if (v.ids[i - 1] == u.ids[j - 1] && v.spans[i - 1] == u.spans[j - 1]) best = std::min(best, prev[j - 1]);
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// |u| minus the number of u tokens whose span is also a span of v.
inline std::size_t span_match_distance(const TokenSeq& v, const TokenSeq& u, const Vocabulary& vocab) {
  detail::require_same_string(v, u, vocab);
  std::size_t matched = 0;
  std::size_t i = 0;
  for (const Span& s : u.spans) {
    while (i < v.size() && v.spans[i].begin < s.begin) ++i;
    if (i < v.size() && v.spans[i] == s) ++matched;
  }
  return u.size() - matched;
}

// ---------------------------------------------------------------------------
// Split statistics
// ---------------------------------------------------------------------------

// Thrown when a tokenisation has a token straddling a canonical boundary; the
// per-token vector is undefined there but the aggregate is still available.
class BoundaryCrossingError : public InputError {
 public:
  BoundaryCrossingError(Span offending, std::ptrdiff_t aggregate)
      : InputError("token span [" + std::to_string(offending.begin) + ", " + std::to_string(offending.end) +
                   ") crosses a canonical token boundary"),
        span(offending),
        aggregate_splits(aggregate) {}

  Span span;
  std::ptrdiff_t aggregate_splits;
};

// S_i = (number of v tokens inside canonical token i) - 1.
inline SplitCounts split_count_vector(const TokenSeq& canonical, const TokenSeq& v) {
  if (canonical.byte_length() != v.byte_length()) {
    throw InputError("split counts: sequences cover different lengths");
  }
  const auto aggregate = static_cast<std::ptrdiff_t>(v.size()) - static_cast<std::ptrdiff_t>(canonical.size());
  SplitCounts s{std::vector<std::size_t>(canonical.size(), 0)};
  std::size_t c = 0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const Span t = v.spans[j];
    while (c < canonical.size() && canonical.spans[c].end <= t.begin) ++c;
    if (c == canonical.size() || t.begin < canonical.spans[c].begin || t.end > canonical.spans[c].end) {
      throw BoundaryCrossingError(t, aggregate);
    }
    if (t.begin != canonical.spans[c].begin) ++s.counts[c];
  }
  return s;
}

// Average number of splits per canonical token. Aggregate mode uses
// (|v| - |v^c|) / |v^c| and is defined for boundary-crossing v as well.
inline Rational normalised_splits(const TokenSeq& v, const TokenSeq& canonical, bool aggregate = false) {
  if (canonical.empty()) throw InputError("normalised splits: empty canonical tokenisation");
  const auto m = static_cast<long long>(canonical.size());
  if (aggregate) return Rational(static_cast<long long>(v.size()) - m, m);
  return Rational(static_cast<long long>(split_count_vector(canonical, v).total()), m);
}

inline BigInt binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  BigInt r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;
  }
  return r;
}

// DirMult(N, 1) over m categories: uniform over compositions of N into m
// parts, 1 / C(N + m - 1, m - 1).
inline Rational dirmult_pmf(const SplitCounts& s, std::size_t n_splits, std::size_t m) {
  if (m == 0 || s.counts.size() != m) throw InputError("dirmult_pmf: vector length differs from m");
  if (s.total() != n_splits) return Rational(0);
  return Rational(BigInt(1), binomial(n_splits + m - 1, m - 1));
}

// Marginal of one coordinate of DirMult(N, 1) with m categories.
inline Rational dirmult_marginal_pmf(std::size_t s, std::size_t n_splits, std::size_t m) {
  if (m == 0) throw InputError("dirmult_marginal_pmf: m must be positive");
  if (s > n_splits) return Rational(0);
  if (m == 1) return Rational(s == n_splits ? 1 : 0);
  return Rational(binomial(n_splits - s + m - 2, m - 2), binomial(n_splits + m - 1, m - 1));
}

// Binomial(L - 1, 1/2): the split count of an L-byte token when every
// internal boundary is an independent fair coin, i.e. under an idealised
// vocabulary that contains every substring.
inline Rational binomial_split_pmf(std::size_t s, std::size_t token_len) {
  if (token_len == 0) throw InputError("binomial_split_pmf: empty token");
  const std::size_t n = token_len - 1;
  if (s > n) return Rational(0);
  return Rational(binomial(n, s), BigInt(1) << n);
}

using Polynomial = std::vector<BigInt>;

inline Polynomial poly_multiply(const Polynomial& a, const Polynomial& b) {
  if (a.empty() || b.empty()) return {};
  Polynomial out(a.size() + b.size() - 1, BigInt(0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

inline const BigInt& poly_coeff(const Polynomial& p, std::size_t k) {
  static const BigInt zero = 0;
  return k < p.size() ? p[k] : zero;
}

// How a token's split count s contributes to the polynomial exponent.
//   splits:   s       (total split count N, as in the split-count law)
//   distance: 0 if s == 0 else s + 1   (token edit distance to canonical)
enum class SplitWeight { splits, distance };

inline std::size_t split_weight(SplitWeight w, std::size_t s) {
  if (w == SplitWeight::splits) return s;
  return s == 0 ? 0 : s + 1;
}

// Generating functions of within-token split counts. A_i(s) counts the
// segmentations of canonical token i with s splits; G_i(x) = sum_s A_i(s)
// x^weight(s); G = prod_i G_i. Conditionals give Pr(S_i = s | total = k) under
// uniform sampling among within-boundary tokenisations with total weight k.
struct SplitDistribution {
  SplitWeight weight = SplitWeight::splits;
  std::vector<std::vector<BigInt>> counts;  // counts[i][s] = A_i(s)
  std::vector<Polynomial> factors;          // G_i
  Polynomial product;                       // G

  const BigInt& coefficient(std::size_t k) const { return poly_coeff(product, k); }

  Polynomial leave_one_out(std::size_t i) const {
    Polynomial h{BigInt(1)};
    for (std::size_t j = 0; j < factors.size(); ++j) {
      if (j != i) h = poly_multiply(h, factors[j]);
    }
    return h;
  }

  // Pr(S_i = s | total = k) for s = 0..max; nullopt when [x^k]G = 0.
  std::optional<std::vector<Rational>> conditional(std::size_t i, std::size_t k) const {
    if (i >= counts.size()) throw InputError("split distribution: token index out of range");
    const BigInt& denom = coefficient(k);
    if (denom == 0) return std::nullopt;
    const Polynomial h = leave_one_out(i);
    std::vector<Rational> pmf(counts[i].size(), Rational(0));
    for (std::size_t s = 0; s < counts[i].size(); ++s) {
      const std::size_t w = split_weight(weight, s);
      if (w > k || counts[i][s] == 0) continue;
      pmf[s] = Rational(counts[i][s] * poly_coeff(h, k - w), denom);
    }
    return pmf;
  }
};

inline SplitDistribution split_count_polynomials(const TokenSeq& canonical, const SamplingContext& ctx,
                                                 SplitWeight weight = SplitWeight::splits,
                                                 TreeMode mode = TreeMode::all_segmentations) {
  SplitDistribution d;
  d.weight = weight;
  d.product = {BigInt(1)};
  for (TokenId id : canonical.ids) {
    auto tree = ctx.tree(id, mode);
    const auto& leaves = tree->leaf_counts();
    std::vector<BigInt> a(leaves.size() - 1, BigInt(0));
    for (std::size_t l = 1; l < leaves.size(); ++l) a[l - 1] = leaves[l];
    Polynomial g(split_weight(weight, a.size() - 1) + 1, BigInt(0));
    for (std::size_t s = 0; s < a.size(); ++s) g[split_weight(weight, s)] += a[s];
    d.product = poly_multiply(d.product, g);
    d.counts.push_back(std::move(a));
    d.factors.push_back(std::move(g));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Histograms and distribution comparison
// ---------------------------------------------------------------------------

using Pmf = std::map<std::string, double>;

struct Histogram {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;

  void add(const std::string& key, std::uint64_t n = 1) {
    counts[key] += n;
    total += n;
  }
  void add(const TokenSeq& seq) { add(serialise_ids(seq.ids)); }

  void merge(const Histogram& other) {
    for (const auto& [k, c] : other.counts) counts[k] += c;
    total += other.total;
  }

  Pmf pmf() const {
    if (total == 0) throw InputError("histogram has zero draws");
    Pmf p;
    for (const auto& [k, c] : counts) p[k] = static_cast<double>(c) / static_cast<double>(total);
    return p;
  }
};

inline double tv_distance(const Pmf& p, const Pmf& q) {
  double sum = 0.0;
  for (const auto& [k, pk] : p) {
    auto it = q.find(k);
    sum += std::abs(pk - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, qk] : q) {
    if (!p.contains(k)) sum += std::abs(qk);
  }
  return 0.5 * sum;
}

inline double tv_distance(const Histogram& h, const Pmf& ref) { return tv_distance(h.pmf(), ref); }

inline Pmf uniform_pmf(const std::vector<std::string>& support) {
  Pmf p;
  for (const auto& k : support) p[k] = 1.0 / static_cast<double>(support.size());
  return p;
}

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

// Pearson goodness of fit against an expected pmf. Any observation outside
// the expected support makes the fit impossible (p = 0).
inline ChiSquareResult chi_square_test(const Histogram& h, const Pmf& expected) {
  if (h.total == 0) throw InputError("histogram has zero draws");
  ChiSquareResult r;
  std::size_t cells = 0;
  for (const auto& [k, c] : h.counts) {
    auto it = expected.find(k);
    if (it == expected.end() || it->second <= 0.0) {
      r.statistic = std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
      r.dof = expected.size() > 0 ? expected.size() - 1 : 0;
      return r;
    }
  }
  for (const auto& [k, pk] : expected) {
    if (pk <= 0.0) continue;
    ++cells;
    const double e = pk * static_cast<double>(h.total);
    auto it = h.counts.find(k);
    const double o = it == h.counts.end() ? 0.0 : static_cast<double>(it->second);
    r.statistic += (o - e) * (o - e) / e;
  }
  r.dof = cells > 0 ? cells - 1 : 0;
  if (r.dof == 0) {
    r.p_value = 1.0;
    return r;
  }
  boost::math::chi_squared dist(static_cast<double>(r.dof));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

inline Histogram empirical_histogram(const SamplerSpec& spec, std::string_view text, std::size_t draws,
                                     const SamplingContext& ctx, Rng& rng) {
  if (draws == 0) throw InputError("histogram needs at least one draw");
  Histogram h;
  for (std::size_t i = 0; i < draws; ++i) h.add(sample(text, spec, ctx, rng).tokens);
  return h;
}

inline nlohmann::json histogram_to_json(const Histogram& h) {
  nlohmann::json counts = nlohmann::json::object();
  nlohmann::json pmf = nlohmann::json::object();
  for (const auto& [k, c] : h.counts) {
    counts[k] = c;
    pmf[k] = static_cast<double>(c) / static_cast<double>(h.total);
  }
  return {{"total", h.total}, {"counts", counts}, {"pmf", pmf}};
}

inline std::string histogram_to_csv(const Histogram& h) {
  std::ostringstream os;
  os << "outcome,count,probability\n";
  for (const auto& [k, c] : h.counts) {
    os << k << ',' << c << ',' << static_cast<double>(c) / static_cast<double>(h.total) << '\n';
  }
  return os.str();
}

inline nlohmann::json pmf_to_json(const Pmf& p) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : p) j[k] = v;
  return j;
}

inline Pmf pmf_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("pmf must be a JSON object of outcome -> probability");
  Pmf p;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number()) throw InputError("pmf value for '" + it.key() + "' is not a number");
    p[it.key()] = it.value().get<double>();
  }
  return p;
}

}  // namespace stoktok
