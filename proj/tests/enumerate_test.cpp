// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

#include <deque>

#include <gtest/gtest.h>

#include "fixtures.hpp"

namespace stoktok {
namespace {

using testing::ab_vocab;
using testing::byte_vocab;
using testing::keys_of;
using testing::max_sigma;
using testing::letters_vocab;
using testing::revolution_vocab;
using testing::seq_of;

std::set<std::string> key_set(const std::vector<TokenSeq>& seqs) {
  auto k = keys_of(seqs);
  return {k.begin(), k.end()};
}

//===----------------------------------------------------------------------===//
// enumerate_all / count_tokenisations
//===----------------------------------------------------------------------===//

TEST(EnumerateAll, TwoSegmentations) {
  Vocabulary v = ab_vocab();
  auto all = enumerate_all("ab", v);
  EXPECT_EQ(key_set(all), (std::set<std::string>{testing::key_of({"ab"}, v), testing::key_of({"a", "b"}, v)}));
}

TEST(EnumerateAll, ByteOnlyVocabulary) {
  EXPECT_EQ(enumerate_all("hello world", byte_vocab()).size(), 1u);
  EXPECT_EQ(enumerate_all("", byte_vocab()).size(), 1u);
}

TEST(EnumerateAll, RevolutionContainsListedTokenisations) {
  Vocabulary v = letters_vocab();
  auto keys = key_set(enumerate_all("revolution", v));
  EXPECT_TRUE(keys.contains(testing::key_of({"revolution"}, v)));
  EXPECT_TRUE(keys.contains(testing::key_of({"re", "v", "ol", "ution"}, v)));
  EXPECT_TRUE(keys.contains(testing::key_of({"r", "e", "v", "o", "l", "u", "t", "i", "o", "n"}, v)));
  EXPECT_EQ(keys.size(), testing::brute_force_count("revolution", testing::token_strings(v)));
  for (const auto& s : enumerate_all("revolution", v)) EXPECT_TRUE(is_valid_tokenisation(s, "revolution", v));
}

TEST(EnumerateAll, GuardAndLimit) {
  const std::string long_text(kEnumerateGuardBytes + 1, 'a');
  Vocabulary v = Vocabulary::from_strings({"aa"}, {{"a", "a"}});
  EXPECT_THROW(enumerate_all(long_text, v), InputError);
  EXPECT_EQ(enumerate_all(long_text, v, 5, true).size(), 5u);
  EXPECT_NO_THROW(enumerate_all(std::string(kEnumerateGuardBytes, 'a'), v, 3));
}

TEST(CountTokenisations, Examples) {
  EXPECT_EQ(count_tokenisations("ab", ab_vocab()), 2);
  EXPECT_EQ(count_tokenisations("", ab_vocab()), 1);
  Vocabulary p = letters_vocab();
  EXPECT_EQ(count_tokenisations("revolution", p), BigInt(enumerate_all("revolution", p).size()));
  Vocabulary f = revolution_vocab();
  EXPECT_EQ(count_tokenisations("revolution", f), BigInt(enumerate_all("revolution", f).size()));
  EXPECT_EQ(count_tokenisations("revolution", f), 44);
}

TEST(CountTokenisations, AllSubstringsIsPowerOfTwo) {
  std::string word;
  for (int n = 1; n <= 90; ++n) {
    word += static_cast<char>(0x21 + n);
    if (n % 7 != 1 && n != 90) continue;
    Vocabulary v = testing::all_substrings_vocab({word});
    EXPECT_EQ(count_tokenisations(word, v), BigInt(1) << (n - 1)) << n;
  }
}

TEST(CountTokenisations, MatchesOracleOnRandomInputs) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::string alphabet = trial % 2 ? "ab" : "abc";
    Vocabulary v = testing::random_bpe_vocab(static_cast<std::uint64_t>(trial), alphabet, 5 + trial % 20, 5);
    const std::string x = testing::random_string(rng, alphabet, uniform_index(rng, 13));
    auto all = enumerate_all(x, v);
    ASSERT_EQ(count_tokenisations(x, v), BigInt(all.size())) << x;
    ASSERT_EQ(all.size(), testing::brute_force_count(x, testing::token_strings(v)));
    ASSERT_EQ(key_set(all).size(), all.size());
  }
}

TEST(CountTokenisations, RespectsBoundaries) {
  Vocabulary v = testing::all_substrings_vocab({"ab c"});
  const std::string x = "ab c";
  Boundaries b = make_boundaries(x, true);
  // Chunks "ab" and " c": 2 * 2 tokenisations.
  EXPECT_EQ(count_tokenisations(x, v, &b), 4);
  EXPECT_EQ(enumerate_all(x, v, SIZE_MAX, false, &b).size(), 4u);
  EXPECT_EQ(count_tokenisations(x, v), 8);
}

//===----------------------------------------------------------------------===//
// Uniform sampling on the segmentation DAG
//===----------------------------------------------------------------------===//

TEST(SampleUniform, TwoOutcomesEquiprobable) {
  Vocabulary v = ab_vocab();
  SegmentationDag dag = build_dag("ab", v);
  Rng rng(5);
  int whole = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) whole += sample_uniform(dag, rng).size() == 1;
  EXPECT_NEAR(whole / double(draws), 0.5, 0.02);
}

TEST(SampleUniform, ByteOnlyIsDeterministic) {
  Vocabulary v = byte_vocab();
  SegmentationDag dag = build_dag("xyz", v);
  Rng rng(5);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_uniform(dag, rng).size(), 3u);
}

TEST(SampleUniform, RevolutionMatchesOracle) {
  Vocabulary v = revolution_vocab();
  const auto support = keys_of(enumerate_all("revolution", v));
  const Pmf target = uniform_pmf(support);
  SegmentationDag dag = build_dag("revolution", v);
  Rng rng(17);
  Histogram h;
  for (int i = 0; i < 50000; ++i) h.add(sample_uniform(dag, rng));
  EXPECT_LT(tv_distance(h, target), 0.02);
  EXPECT_LT(max_sigma(h, target), 3.0);
  EXPECT_GT(chi_square_test(h, target).p_value, 1e-3);
}

TEST(SampleUniform, ExactBeyondSixtyFourBits) {
  std::string word;
  for (int i = 0; i < 80; ++i) word += static_cast<char>(0x30 + i);
  Vocabulary v = testing::all_substrings_vocab({word});
  SegmentationDag dag = build_dag(word, v);
  EXPECT_GT(dag.count(), BigInt(std::numeric_limits<std::uint64_t>::max()));
  // Every internal boundary is an independent fair coin under the uniform law.
  Rng rng(8);
  std::vector<int> cut(word.size(), 0);
  const int draws = 4000;
  for (int i = 0; i < draws; ++i) {
    TokenSeq s = sample_uniform(dag, rng);
    ASSERT_EQ(decode(s, v), word);
    for (std::size_t j = 1; j < s.size(); ++j) ++cut[s.spans[j].begin];
  }
  const double sd = std::sqrt(draws * 0.25);
  for (std::size_t j = 1; j < word.size(); ++j) EXPECT_LT(std::abs(cut[j] - draws / 2.0), 4.5 * sd) << j;
}

//===----------------------------------------------------------------------===//
// Segment trees
//===----------------------------------------------------------------------===//

TEST(SegmentTree, SingleByteToken) {
  Vocabulary v = ab_vocab();
  SplitMap m(v, SplitArity::two);
  SegmentTree t = build_segment_tree('a', m, v, TreeMode::all_segmentations);
  EXPECT_EQ(t.total_leaves(), 1);
  EXPECT_EQ(t.leaf_count(1), 1);
  EXPECT_EQ(t.max_segments(), 1u);
}

TEST(SegmentTree, AllSegmentationsContainsThreeWayPath) {
  Vocabulary v = revolution_vocab();
  SplitMap m(v, SplitArity::two);
  const TokenId tok = *v.find("revolution");
  SegmentTree all = build_segment_tree(tok, m, v, TreeMode::all_segmentations);
  SegmentTree reach = build_segment_tree(tok, m, v, TreeMode::merge_reachable);
  const std::string target = testing::key_of({"re", "vol", "ution"}, v);
  EXPECT_TRUE(key_set(all.leaves(3)).contains(target));
  EXPECT_FALSE(key_set(reach.leaves(3)).contains(target));
  EXPECT_EQ(key_set(reach.leaves(3)), (std::set<std::string>{testing::key_of({"re", "v", "olution"}, v),
                                                              testing::key_of({"rev", "ol", "ution"}, v)}));
}

TEST(SegmentTree, LeafCountsMatchFilteredEnumeration) {
  std::vector<Vocabulary> vocabs;
  vocabs.push_back(revolution_vocab());
  vocabs.push_back(letters_vocab());
  for (std::uint64_t s = 0; s < 4; ++s) vocabs.push_back(testing::random_bpe_vocab(s, "abc", 60, 9));
  for (const Vocabulary& v : vocabs) {
    SplitMap m(v, SplitArity::two);
    for (TokenId id : v.ids()) {
      const std::string& t = v.bytes(id);
      if (t.size() < 2) continue;
      SegmentTree tree(id, v, m, TreeMode::all_segmentations);
      std::map<std::size_t, std::set<std::string>> by_len;
      for (const auto& s : enumerate_all(t, v)) by_len[s.size()].insert(serialise_ids(s.ids));
      for (std::size_t l = 1; l <= t.size(); ++l) {
        ASSERT_EQ(tree.leaf_count(l), BigInt(by_len[l].size())) << t << " L=" << l;
        ASSERT_EQ(key_set(tree.leaves(l)), by_len[l]);
      }
      EXPECT_EQ(tree.leaf_count(t.size() + 1), 0);
    }
  }
}

// Closure of the start token under "replace one token by a split-map
// decomposition", by breadth-first search over token-id sequences.
std::set<std::string> split_closure(TokenId start, const SplitMap& m) {
  std::set<std::string> seen;
  std::deque<std::vector<TokenId>> queue{{start}};
  seen.insert(serialise_ids(queue.front()));
  while (!queue.empty()) {
    auto cur = queue.front();
    queue.pop_front();
    for (std::size_t i = 0; i < cur.size(); ++i) {
      for (const auto& d : m.decompositions(cur[i])) {
        std::vector<TokenId> next(cur.begin(), cur.begin() + static_cast<std::ptrdiff_t>(i));
        for (TokenId p : d.ids()) next.push_back(p);
        next.insert(next.end(), cur.begin() + static_cast<std::ptrdiff_t>(i) + 1, cur.end());
        if (seen.insert(serialise_ids(next)).second) queue.push_back(next);
      }
    }
  }
  return seen;
}

TEST(SegmentTree, MergeReachableMatchesSplitClosure) {
  std::vector<Vocabulary> vocabs;
  vocabs.push_back(revolution_vocab());
  for (std::uint64_t s = 10; s < 14; ++s) vocabs.push_back(testing::random_bpe_vocab(s, "abcd", 80, 9));
  for (const Vocabulary& v : vocabs) {
    SplitMap m(v, SplitArity::two);
    for (TokenId id : v.ids()) {
      SegmentTree reach(id, v, m, TreeMode::merge_reachable);
      SegmentTree all(id, v, m, TreeMode::all_segmentations);
      std::set<std::string> got;
      for (std::size_t l = 1; l <= reach.byte_length(); ++l) {
        auto leaves = key_set(reach.leaves(l));
        ASSERT_EQ(reach.leaf_count(l), BigInt(leaves.size()));
        ASSERT_LE(reach.leaf_count(l), all.leaf_count(l));
        auto full = key_set(all.leaves(l));
        for (const auto& k : leaves) ASSERT_TRUE(full.contains(k));
        got.insert(leaves.begin(), leaves.end());
      }
      ASSERT_EQ(got, split_closure(id, m)) << v.bytes(id);
    }
  }
}

TEST(SegmentTree, StrictInclusionOnRevolution) {
  Vocabulary v = revolution_vocab();
  SplitMap m(v, SplitArity::two);
  const TokenId tok = *v.find("revolution");
  SegmentTree all(tok, v, m, TreeMode::all_segmentations);
  SegmentTree reach(tok, v, m, TreeMode::merge_reachable);
  EXPECT_LT(reach.total_leaves(), all.total_leaves());
  EXPECT_EQ(all.total_leaves(), 44);
}

TEST(SampleUniformSegments, OneSegmentIsTheToken) {
  Vocabulary v = revolution_vocab();
  SplitMap m(v, SplitArity::two);
  const TokenId tok = *v.find("revolution");
  SegmentTree t(tok, v, m, TreeMode::all_segmentations);
  Rng rng(1);
  TokenSeq s = sample_uniform_segments(t, 1, rng, 7);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.ids[0], tok);
  EXPECT_EQ(s.spans[0], (Span{7, 17}));
}

TEST(SampleUniformSegments, TooManySegmentsIsInfeasible) {
  Vocabulary v = revolution_vocab();
  SplitMap m(v, SplitArity::two);
  for (TreeMode mode : {TreeMode::all_segmentations, TreeMode::merge_reachable}) {
    SegmentTree t(*v.find("revolution"), v, m, mode);
    Rng rng(1);
    EXPECT_THROW(sample_uniform_segments(t, 11, rng), InfeasibleError);
    EXPECT_THROW(sample_uniform_segments(t, 0, rng), InfeasibleError);
  }
}

TEST(SampleUniformSegments, FourSegmentsUniform) {
  Vocabulary v = revolution_vocab();
  SplitMap m(v, SplitArity::two);
  SegmentTree t(*v.find("revolution"), v, m, TreeMode::all_segmentations);
  std::set<std::string> support;
  for (const auto& s : enumerate_all("revolution", v)) {
    if (s.size() == 4) support.insert(serialise_ids(s.ids));
  }
  ASSERT_EQ(t.leaf_count(4), BigInt(support.size()));
  Rng rng(99);
  Histogram h;
  const int draws = 50000;
  for (int i = 0; i < draws; ++i) h.add(sample_uniform_segments(t, 4, rng));
  const double p = 1.0 / static_cast<double>(support.size());
  ASSERT_EQ(h.counts.size(), support.size());
  for (const auto& [k, c] : h.counts) {
    EXPECT_TRUE(support.contains(k));
    EXPECT_NEAR(static_cast<double>(c) / draws, p, 0.01);
  }
  const Pmf target = uniform_pmf({support.begin(), support.end()});
  EXPECT_LT(max_sigma(h, target), 3.0);
}

TEST(SampleUniformSegments, MergeReachableUniformOverReachableSet) {
  Vocabulary v = revolution_vocab();
  SplitMap m(v, SplitArity::two);
  SegmentTree t(*v.find("revolution"), v, m, TreeMode::merge_reachable);
  const auto support = keys_of(t.leaves(4));
  Rng rng(12);
  Histogram h;
  for (std::size_t i = 0; i < 20 * support.size() * 100; ++i) h.add(t.sample(4, rng));
  EXPECT_LT(max_sigma(h, uniform_pmf(support)), 3.0);
}

//===----------------------------------------------------------------------===//
// Distance-layered DAG
//===----------------------------------------------------------------------===//

TEST(DistanceDag, LayerZeroIsReference) {
  Vocabulary v = revolution_vocab();
  TokenSeq ref = seq_of({"re", "vol", "ution"}, v);
  DistanceDag dag = build_distance_dag("revolution", ref, 4, v);
  EXPECT_EQ(dag.count(0), 1);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_uniform_distance(dag, 0, rng), ref);
}

TEST(DistanceDag, AbAtDistanceTwo) {
  Vocabulary v = ab_vocab();
  TokenSeq ref = seq_of({"ab"}, v);
  DistanceDag dag = build_distance_dag("ab", ref, 3, v);
  EXPECT_EQ(dag.count(1), 0);
  EXPECT_EQ(dag.count(2), 1);
  Rng rng(1);
  EXPECT_EQ(sample_uniform_distance(dag, 2, rng), seq_of({"a", "b"}, v));
  EXPECT_THROW(sample_uniform_distance(dag, 1, rng), InfeasibleError);
  EXPECT_THROW(sample_uniform_distance(dag, 3, rng), InfeasibleError);
}

TEST(DistanceDag, RejectsForeignReference) {
  Vocabulary v = ab_vocab();
  EXPECT_THROW(build_distance_dag("ab", seq_of({"a"}, v), 2, v), InputError);
}

TEST(DistanceDag, LayersPartitionAndMatchDistance) {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    Vocabulary v = testing::random_bpe_vocab(100 + static_cast<std::uint64_t>(trial), "abc", 25, 5);
    const std::string x = testing::random_string(rng, "abc", 1 + uniform_index(rng, 12));
    const auto all = enumerate_all(x, v);
    const TokenSeq ref = all[uniform_index(rng, all.size())];
    DistanceDag dag(x, ref, x.size(), v);
    BigInt sum = 0;
    for (const auto& c : dag.counts()) sum += c;
    ASSERT_EQ(sum, count_tokenisations(x, v));
    std::map<std::size_t, std::set<std::string>> layer;
    for (const auto& u : all) layer[token_edit_distance(ref, u, v)].insert(serialise_ids(u.ids));
    for (std::size_t k = 0; k <= x.size(); ++k) {
      ASSERT_EQ(key_set(dag.enumerate(k)), layer[k]) << x << " k=" << k;
      if (dag.count(k) == 0) continue;
      for (int d = 0; d < 5; ++d) {
        TokenSeq u = dag.sample(k, rng);
        ASSERT_EQ(token_edit_distance(ref, u, v), k);
        ASSERT_EQ(decode(u, v), x);
      }
    }
  }
}

TEST(DistanceDag, LayerSamplingIsUniform) {
  Vocabulary v = revolution_vocab();
  TokenSeq ref = encode_canonical("revolution", v);
  DistanceDag dag("revolution", ref, 10, v);
  Rng rng(77);
  for (std::size_t k : {2u, 3u, 4u}) {
    const auto support = keys_of(dag.enumerate(k));
    ASSERT_FALSE(support.empty());
    Histogram h;
    for (std::size_t i = 0; i < std::max<std::size_t>(20 * support.size(), 20000); ++i) h.add(dag.sample(k, rng));
    EXPECT_LT(max_sigma(h, uniform_pmf(support)), 3.0) << k;
  }
}

}  // namespace
}  // namespace stoktok
