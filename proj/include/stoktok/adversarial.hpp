// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stoktok/enumerate.hpp"
#include "stoktok/error.hpp"
#include "stoktok/metrics.hpp"
#include "stoktok/random.hpp"
#include "stoktok/samplers.hpp"
#include "stoktok/scorer.hpp"
#include "stoktok/vocab.hpp"

namespace stoktok {

struct McqInstance {
  std::string question;
  std::vector<std::string> options;
  std::size_t label = 0;

  void validate() const {
    if (options.size() < 2) throw InputError("instance needs at least two options");
    if (label >= options.size()) throw InputError("label out of range");
    for (const auto& o : options) {
      if (o.empty()) throw InputError("empty answer option");
    }
  }
};

inline McqInstance parse_instance(const nlohmann::json& j) {
  try {
    McqInstance inst;
    inst.question = j.at("question").get<std::string>();
    inst.options = j.at("options").get<std::vector<std::string>>();
    const long long label = j.at("label").get<long long>();
    if (label < 0) throw InputError("label out of range");
    inst.label = static_cast<std::size_t>(label);
    inst.validate();
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("dataset record: ") + e.what());
  }
}

// JSONL: one {"question", "options", "label"} object per line.
inline std::vector<McqInstance> load_dataset(std::istream& in) {
  std::vector<McqInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_instance(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("dataset line " + std::to_string(lineno) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<McqInstance> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset " + path);
  return load_dataset(in);
}

// ---------------------------------------------------------------------------
// Neighbourhoods
// ---------------------------------------------------------------------------

namespace detail {

inline TokenSeq splice(const TokenSeq& v, std::size_t from, std::size_t to, const TokenSeq& middle) {
  TokenSeq out;
  out.ids.reserve(v.size() + middle.size());
  out.spans.reserve(v.size() + middle.size());
  out.ids.insert(out.ids.end(), v.ids.begin(), v.ids.begin() + static_cast<std::ptrdiff_t>(from));
  out.spans.insert(out.spans.end(), v.spans.begin(), v.spans.begin() + static_cast<std::ptrdiff_t>(from));
  out.ids.insert(out.ids.end(), middle.ids.begin(), middle.ids.end());
  out.spans.insert(out.spans.end(), middle.spans.begin(), middle.spans.end());
  out.ids.insert(out.ids.end(), v.ids.begin() + static_cast<std::ptrdiff_t>(to), v.ids.end());
  out.spans.insert(out.spans.end(), v.spans.begin() + static_cast<std::ptrdiff_t>(to), v.spans.end());
  return out;
}

struct MergeMove {
  std::size_t from;
  std::size_t to;
  TokenId id;
};

// Every tokenisation within token edit distance 2 of v, v itself first.
//
// Writing u's differing region as maximal blocks between shared cut points,
// the distance is the number of u tokens in those blocks. So d <= 2 means one
// of:
//   - a run of >= 2 tokens of v merged into one token           (d = 1)
//   - a run of >= 1 tokens re-cut into a pair whose middle cut
//     is not a cut of v (a split when the run has one token)    (d = 2)
//   - two disjoint merges                                       (d = 2)
// Moves are emitted grouped by starting token, then move type, then
// decomposition, and duplicates keep their first position.
inline std::vector<TokenSeq> radius2(const TokenSeq& v, std::string_view text, const Vocabulary& vocab) {
  const std::size_t m = v.size();
  const std::size_t max_len = vocab.max_token_length();
  std::vector<TokenSeq> out{v};
  std::unordered_set<std::string> seen{serialise_ids(v.ids)};
  auto emit = [&](TokenSeq&& u) {
    if (seen.insert(serialise_ids(u.ids)).second) out.push_back(std::move(u));
  };

  std::vector<std::vector<MergeMove>> merges_from(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t begin = v.spans[i].begin;
    for (std::size_t j = i + 2; j <= m && v.spans[j - 1].end - begin <= max_len; ++j) {
      const std::size_t end = v.spans[j - 1].end;
      if (auto id = vocab.find(text.substr(begin, end - begin))) merges_from[i].push_back({i, j, *id});
    }
  }

  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t begin = v.spans[i].begin;
    for (const MergeMove& mv : merges_from[i]) {
      TokenSeq mid;
      mid.push_back(mv.id, {begin, v.spans[mv.to - 1].end});
      emit(splice(v, mv.from, mv.to, mid));
    }
    for (std::size_t j = i + 1; j <= m && v.spans[j - 1].end - begin <= 2 * max_len; ++j) {
      const std::size_t end = v.spans[j - 1].end;
      std::size_t next_cut = i + 1;
      for (std::size_t p = begin + 1; p < end; ++p) {
        while (next_cut < j && v.spans[next_cut].begin < p) ++next_cut;
        if (next_cut < j && v.spans[next_cut].begin == p) continue;
        if (p - begin > max_len || end - p > max_len) continue;
        auto left = vocab.find(text.substr(begin, p - begin));
        if (!left) continue;
        auto right = vocab.find(text.substr(p, end - p));
        if (!right) continue;
        TokenSeq mid;
        mid.push_back(*left, {begin, p});
        mid.push_back(*right, {p, end});
        emit(splice(v, i, j, mid));
      }
    }
    for (const MergeMove& first : merges_from[i]) {
      for (std::size_t i2 = first.to; i2 < m; ++i2) {
        for (const MergeMove& second : merges_from[i2]) {
          TokenSeq mid2;
          mid2.push_back(second.id, {v.spans[second.from].begin, v.spans[second.to - 1].end});
          TokenSeq once = splice(v, second.from, second.to, mid2);
          TokenSeq mid1;
          mid1.push_back(first.id, {begin, v.spans[first.to - 1].end});
          emit(splice(once, first.from, first.to, mid1));
        }
      }
    }
  }
  return out;
}

}  // namespace detail

// {u : d(v, u) <= radius}. Radius 2 is enumerated directly by local moves;
// larger even radii are the de-duplicated closure of repeated radius-2 steps.
inline std::vector<TokenSeq> neighbourhood(const TokenSeq& v, std::string_view text, const Vocabulary& vocab,
                                           std::size_t radius = 2) {
  if (radius < 2 || radius % 2 != 0) throw InputError("neighbourhood radius must be even and >= 2");
  if (!is_valid_tokenisation(v, text, vocab)) throw InputError("neighbourhood: v is not a tokenisation of text");
  std::vector<TokenSeq> out = detail::radius2(v, text, vocab);
  std::unordered_set<std::string> seen;
  for (const auto& u : out) seen.insert(serialise_ids(u.ids));
  std::vector<TokenSeq> frontier(out.begin() + 1, out.end());
  for (std::size_t r = 4; r <= radius; r += 2) {
    std::vector<TokenSeq> next;
    for (const TokenSeq& w : frontier) {
      for (TokenSeq& u : detail::radius2(w, text, vocab)) {
        if (seen.insert(serialise_ids(u.ids)).second) {
          next.push_back(u);
          out.push_back(std::move(u));
        }
      }
    }
    frontier = std::move(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scoring and the greedy attack
// ---------------------------------------------------------------------------

// max over wrong options of z_c minus z_y; positive means misclassified.
inline double margin(const Scorer& scorer, const TokenSeq& v, const std::vector<TokenSeq>& options, std::size_t y) {
  if (options.size() < 2 || y >= options.size()) throw InputError("margin needs >= 2 options and a valid label");
  const double zy = scorer.score(v.ids, options[y].ids);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < options.size(); ++c) {
    if (c == y) continue;
    best = std::max(best, scorer.score(v.ids, options[c].ids));
  }
  return best - zy;
}

// argmax_c z_c, lowest index on ties.
inline std::size_t predict(const Scorer& scorer, const TokenSeq& v, const std::vector<TokenSeq>& options) {
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < options.size(); ++c) {
    const double z = scorer.score(v.ids, options[c].ids);
    if (z > best_score) {
      best_score = z;
      best = c;
    }
  }
  return best;
}

enum class AttackInit { canonical, uniform_random };

struct AttackConfig {
  std::size_t max_steps = 10;
  std::size_t radius = 2;
  AttackInit init = AttackInit::canonical;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_steps < 1) throw InputError("attack needs at least one step");
    if (radius < 2 || radius % 2 != 0) throw InputError("attack radius must be even and >= 2");
  }
};

struct AttackResult {
  TokenSeq start;
  TokenSeq final_tokens;
  std::vector<TokenSeq> trajectory;  // start, then every accepted move
  std::vector<double> margins;       // aligned with trajectory
  std::size_t iterations = 0;        // loop iterations run, including the one that stopped
  bool clean_correct = false;        // canonical question predicted correctly
  bool final_correct = false;
  bool success = false;              // clean_correct and not final_correct
  std::size_t distance_from_start = 0;
  std::size_t distance_from_canonical = 0;
};

inline std::vector<TokenSeq> canonical_options(const McqInstance& inst, const Vocabulary& vocab) {
  std::vector<TokenSeq> out;
  for (const auto& o : inst.options) out.push_back(encode_canonical(o, vocab));
  return out;
}

// Greedy ascent on the margin over token edit distance neighbourhoods. Stops
// after max_steps moves or when no neighbour strictly improves; ties go to the
// first neighbour in enumeration order.
inline AttackResult greedy_attack(const Scorer& scorer, const McqInstance& inst, const AttackConfig& cfg,
                                  const Vocabulary& vocab) {
  inst.validate();
  cfg.validate();
  const std::string& x = inst.question;
  const TokenSeq canonical = encode_canonical(x, vocab);
  const std::vector<TokenSeq> options = canonical_options(inst, vocab);

  AttackResult r;
  if (cfg.init == AttackInit::canonical) {
    r.start = canonical;
  } else {
    Rng rng(cfg.seed);
    r.start = uniform_full(x, vocab, rng);
  }
  TokenSeq v = r.start;
  double current = margin(scorer, v, options, inst.label);
  r.trajectory.push_back(v);
  r.margins.push_back(current);
  for (std::size_t step = 0; step < cfg.max_steps; ++step) {
    ++r.iterations;
    const std::vector<TokenSeq> hood = neighbourhood(v, x, vocab, cfg.radius);
    std::size_t best = 0;
    double best_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < hood.size(); ++i) {
      const double mg = margin(scorer, hood[i], options, inst.label);
      if (mg > best_margin) {
        best_margin = mg;
        best = i;
      }
    }
    if (best_margin <= current) break;
    v = hood[best];
    current = best_margin;
    r.trajectory.push_back(v);
    r.margins.push_back(current);
  }
  r.final_tokens = v;
  r.clean_correct = predict(scorer, canonical, options) == inst.label;
  r.final_correct = predict(scorer, v, options) == inst.label;
  r.success = r.clean_correct && !r.final_correct;
  r.distance_from_start = token_edit_distance(r.start, v, vocab);
  r.distance_from_canonical = token_edit_distance(canonical, v, vocab);
  return r;
}

namespace detail {

// Serialises calls for scorers that declare single_flight.
class GuardedScorer : public Scorer {
 public:
  explicit GuardedScorer(const Scorer& inner) : inner_(inner) {}
  double score(std::span<const TokenId> context, std::span<const TokenId> continuation) const override {
    if (!inner_.single_flight()) return inner_.score(context, continuation);
    std::lock_guard lock(mu_);
    return inner_.score(context, continuation);
  }

 private:
  const Scorer& inner_;
  mutable std::mutex mu_;
};

// Runs f(i) for i in [0, n) on up to `threads` workers. The first exception
// is rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

// Monte Carlo accuracy under a stochastic tokenisation of the question: M
// draws per instance, averaged per instance and then over the dataset.
// Instance n draws from Rng(derive_seed(seed, n)).
inline double avg_accuracy(const Scorer& scorer, const std::vector<McqInstance>& dataset, const SamplerSpec& spec,
                           std::size_t draws, const SamplingContext& ctx, std::uint64_t seed,
                           std::size_t parallelism = 1) {
  if (dataset.empty()) throw InputError("empty dataset");
  if (draws == 0) throw InputError("need at least one draw per instance");
  detail::GuardedScorer guarded(scorer);
  std::vector<double> per(dataset.size());
  detail::parallel_for(dataset.size(), parallelism, [&](std::size_t n) {
    const McqInstance& inst = dataset[n];
    inst.validate();
    const auto options = canonical_options(inst, ctx.vocab());
    Rng rng(derive_seed(seed, n));
    std::size_t hits = 0;
    for (std::size_t d = 0; d < draws; ++d) {
      const TokenSeq q = sample(inst.question, spec, ctx, rng).tokens;
      if (predict(guarded, q, options) == inst.label) ++hits;
    }
    per[n] = static_cast<double>(hits) / static_cast<double>(draws);
  });
  double sum = 0.0;
  for (double p : per) sum += p;
  return sum / static_cast<double>(dataset.size());
}

struct AdversarialSummary {
  double clean = 0.0;
  double adversarial = 0.0;
  std::vector<AttackResult> results;
};

// Clean accuracy on canonical questions and accuracy after greedy_attack.
// Instance n attacks with seed derive_seed(cfg.seed, n).
inline AdversarialSummary adversarial_accuracy(const Scorer& scorer, const std::vector<McqInstance>& dataset,
                                               const AttackConfig& cfg, const Vocabulary& vocab,
                                               std::size_t parallelism = 1) {
  if (dataset.empty()) throw InputError("empty dataset");
  cfg.validate();
  detail::GuardedScorer guarded(scorer);
  AdversarialSummary s;
  s.results.resize(dataset.size());
  detail::parallel_for(dataset.size(), parallelism, [&](std::size_t n) {
    AttackConfig c = cfg;
    c.seed = derive_seed(cfg.seed, n);
    s.results[n] = greedy_attack(guarded, dataset[n], c, vocab);
  });
  std::size_t clean = 0;
  std::size_t adv = 0;
  for (const auto& r : s.results) {
    clean += r.clean_correct;
    adv += r.final_correct;
  }
  s.clean = static_cast<double>(clean) / static_cast<double>(dataset.size());
  s.adversarial = static_cast<double>(adv) / static_cast<double>(dataset.size());
  return s;
}

namespace detail {

inline void append_rebased(TokenSeq& out, const TokenSeq& part) {
  if (part.empty()) return;
  const std::size_t base = out.byte_length();
  const std::size_t origin = part.spans.front().begin;
  for (std::size_t i = 0; i < part.size(); ++i) {
    out.push_back(part.ids[i], {part.spans[i].begin - origin + base, part.spans[i].end - origin + base});
  }
}

}  // namespace detail

// In-context prompt: q_1 a_1 sep q_2 a_2 sep ... q_K a_K sep query, with spans
// re-based onto the concatenated string. K = 0 gives the query alone.
inline TokenSeq icl_prompt(const std::vector<std::pair<TokenSeq, TokenSeq>>& context_pairs, const TokenSeq& query,
                           const TokenSeq& separator) {
  TokenSeq out;
  for (const auto& [q, a] : context_pairs) {
    detail::append_rebased(out, q);
    detail::append_rebased(out, a);
    detail::append_rebased(out, separator);
  }
  detail::append_rebased(out, query);
  return out;
}

}  // namespace stoktok
