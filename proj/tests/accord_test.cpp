#include <gtest/gtest.h>

#include <random>

#include "cointoss/accord.hpp"
#include "oracles.hpp"

using namespace cointoss;

namespace {

TruthTable max2() { return TruthTable::from_hex("E", 2); }
TruthTable t0f2d() { return TruthTable::from_hex("0F2D", 4); }
TruthTable product2() {
  return TruthTable::from_function(2, [](std::span<const int> x) { return x[0] * x[1]; });
}
TruthTable guard3() {
  return TruthTable::from_function(3, [](std::span<const int> x) { return std::max(x[0], -x[1]); });
}
TruthTable majority3() {
  return TruthTable::from_function(3, [](std::span<const int> x) { return x[0] + x[1] + x[2] > 0 ? 1 : -1; });
}

}  // namespace

TEST(AccordabilityMatrix, MaxIsAllTrue) { EXPECT_TRUE(accordability_matrix(max2()).all_true()); }

TEST(AccordabilityMatrix, PhiOneIsDiagonal) {
  const AccordMatrix a = accordability_matrix(TruthTable::phi1());
  EXPECT_EQ(a.count(), 2);
  EXPECT_TRUE(a(0, 0));
  EXPECT_FALSE(a(0, 1));
}

TEST(AccordabilityMatrix, Table0F2DIsEquivalenceWithEightPairs) {
  const AccordMatrix a = accordability_matrix(t0f2d());
  EXPECT_TRUE(a.is_equivalence());
  for (StateId s = 0; s < 16; ++s) EXPECT_EQ(a.rows[s].size(), 2) << s;
}

TEST(AccordabilityMatrix, IsFixedPointAndSymmetric) {
  std::mt19937_64 gen(21);
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 1 + static_cast<int>(gen() % 5);
    const TruthTable t(d, gen() & StateSet::full_mask(d));
    const StepMap f(t);
    const AccordMatrix a = accordability_matrix(t);
    for (StateId i = 0; i < t.states(); ++i) {
      EXPECT_TRUE(a(i, i));
      for (StateId j = 0; j < t.states(); ++j) {
        EXPECT_EQ(a(i, j), a(j, i));
        const bool implied = a(f.step(0, i), f.step(0, j)) || a(f.step(1, i), f.step(1, j));
        if (implied) {
          EXPECT_TRUE(a(i, j));
        }
      }
    }
  }
}

TEST(AccordabilityMatrix, MatchesPairSearchOnTuples) {
  for (int d = 1; d <= 3; ++d) {
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << state_count(d)); b += (d == 3 ? 7 : 1)) {
      const TruthTable t(d, b);
      const AccordMatrix a = accordability_matrix(t);
      const std::vector<int> dist = accord_distances(t);
      const auto tuples = oracle::all_tuples(d);
      for (StateId i = 0; i < t.states(); ++i) {
        for (StateId j = 0; j < t.states(); ++j) {
          const auto ref = oracle::accord_distance(t, tuples[i], tuples[j]);
          EXPECT_EQ(a(i, j), ref.has_value());
          EXPECT_EQ(dist[i * t.states() + j], ref ? *ref : -1);
        }
      }
    }
  }
}

TEST(AccordabilityMatrix, SynchronousAndDynamicAgree) {
  for (std::uint64_t b = 0; b < 256; ++b) {
    const TruthTable t(3, b);
    const Closure sync = accordability_closure(t, ClosureMode::synchronous);
    EXPECT_EQ(sync.matrix, accordability_matrix(t));
    EXPECT_EQ(sync.rounds, max_accord_steps(t));
  }
}

TEST(MinAccordSteps, Examples) {
  EXPECT_EQ(min_accord_steps(max2(), 3, 3), 0);
  EXPECT_EQ(min_accord_steps(max2(), 2, 0), 4);
  EXPECT_FALSE(min_accord_steps(TruthTable::phi1(), 0, 1).has_value());
}

TEST(MinAccordSteps, GuardExampleNeedsSevenSteps) {
  // The triples (1,1,-1) and (-1,1,-1) under max(x1, -x2) meet after 7 steps.
  const TruthTable t = guard3();
  const auto tuples = oracle::all_tuples(3);
  EXPECT_EQ(min_accord_steps(t, 6, 2), 7);
  EXPECT_EQ(oracle::accord_distance(t, tuples[6], tuples[2]), 7);
  EXPECT_EQ(max_accord_steps(t), 7);
}

TEST(MinAccordSteps, NoTripleTableNeedsNineSteps) {
  int largest = 0;
  for (std::uint64_t b = 0; b < 256; ++b) largest = std::max(largest, max_accord_steps(TruthTable(3, b)));
  EXPECT_EQ(largest, 8);
}

TEST(MaxAccordSteps, Examples) {
  EXPECT_EQ(max_accord_steps(max2()), 4);
  EXPECT_EQ(max_accord_steps(TruthTable::constant(1, 1)), 1);
  EXPECT_EQ(max_accord_steps(TruthTable::phi1()), 0);
}

TEST(MaxAccordSteps, WithinBothBounds) {
  for (int d = 1; d <= 3; ++d) {
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << state_count(d)); ++b) {
      const int steps = max_accord_steps(TruthTable(d, b));
      EXPECT_LE(steps, 1 << (2 * d - 2));
      EXPECT_LE(steps, (1 << (d - 1)) * ((1 << d) - 1));
    }
  }
}

TEST(MaxNonaccordable, Examples) {
  EXPECT_EQ(max_nonaccordable(max2()), 1);
  EXPECT_EQ(max_nonaccordable(t0f2d()), 8);
  EXPECT_EQ(max_nonaccordable(product2()), 4);
}

TEST(MaxIndependentOracle, Examples) {
  EXPECT_EQ(max_independent_oracle(TruthTable::phi1()), 2);
  EXPECT_EQ(max_independent_oracle(max2()), 1);
  EXPECT_EQ(max_independent_oracle(t0f2d()), 8);
  EXPECT_THROW(max_independent_oracle(TruthTable::constant(6, 1)), std::invalid_argument);
}

TEST(MaxNonaccordable, AgreesWithSubsetEnumerationOnSmallTables) {
  for (int d = 1; d <= 2; ++d) {
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << state_count(d)); ++b) {
      const TruthTable t(d, b);
      EXPECT_EQ(max_nonaccordable(t), oracle::max_nonaccordable_bruteforce(t)) << t.to_hex();
    }
  }
  for (std::uint64_t b = 0; b < 256; b += 5) {
    const TruthTable t(3, b);
    EXPECT_EQ(max_nonaccordable(t), oracle::max_nonaccordable_bruteforce(t)) << t.to_hex();
  }
}

TEST(MaxNonaccordable, EveryReachableSetIsAtLeastM) {
  std::mt19937_64 gen(9);
  for (int rep = 0; rep < 50; ++rep) {
    const int d = 1 + static_cast<int>(gen() % 5);
    const TruthTable t(d, gen() & StateSet::full_mask(d));
    const int m = max_nonaccordable(t);
    const StepMap f(t);
    StateSet a = StateSet::full(d);
    for (int k = 0; k < 200; ++k) {
      a = f.image(static_cast<int>(gen() % 2), a);
      EXPECT_GE(a.size(), m);
    }
    // the maximal-accord word takes any set down to M
    EXPECT_EQ(apply_word(t, a, maximal_accord_word(t)).size(), m) << t.to_hex();
  }
}

TEST(MaxNonaccordable, NodeCapAbortsWithoutFallback) {
  Limits tight;
  tight.node_cap = 2;
  tight.merge_fallback = false;
  EXPECT_THROW(max_nonaccordable(t0f2d(), tight), CapacityExceeded);
}

TEST(MaxNonaccordable, NodeCapFallsBackToPairMerging) {
  Limits tight;
  tight.node_cap = 2;
  EXPECT_EQ(max_nonaccordable(t0f2d(), tight), 8);
  const SignWord w = maximal_accord_word(t0f2d(), tight);
  EXPECT_EQ(apply_word(t0f2d(), StateSet::full(4), w).size(), 8);
}

TEST(MergePairs, AgreesWithSubsetSearch) {
  for (int d = 0; d <= 4; ++d) {
    const std::uint64_t count = std::uint64_t{1} << state_count(d);
    for (std::uint64_t b = 0; b < count; b += d == 4 ? 61 : 1) {
      const TruthTable t(d, b);
      const StepMap f(t);
      const detail::SubsetSearch merged = detail::merge_pairs(f, StateSet::full(d));
      EXPECT_FALSE(merged.shortest);
      EXPECT_EQ(merged.min_size, max_nonaccordable(t)) << t.to_hex();
      EXPECT_EQ(f.image(merged.word, StateSet::full(d)), merged.image);
      EXPECT_GE(merged.word.size(), maximal_accord_word(t).size());
    }
  }
}

TEST(MergePairs, FiveWindowCompositesBeyondTheCap) {
  // these composites reach more than 2^20 subsets from E_5
  Limits strict;
  strict.merge_fallback = false;
  EXPECT_THROW(max_nonaccordable(TruthTable::from_hex("804070BF", 5), strict), CapacityExceeded);
  EXPECT_EQ(bits_lost(TruthTable::from_hex("804070BF", 5)), 2);
  EXPECT_EQ(bits_lost(TruthTable::from_hex("3F36C0F5", 5)), 1);
  const LossReport r = analyze_loss(TruthTable::from_hex("3F36C0F5", 5));
  EXPECT_FALSE(r.word_shortest);
  EXPECT_EQ(r.m * r.n, 32);
}

TEST(BitsLost, Examples) {
  EXPECT_EQ(bits_lost(TruthTable::phi1()), 1);
  EXPECT_EQ(bits_lost(majority3()), 1);
  EXPECT_EQ(bits_lost(t0f2d()), 3);
  EXPECT_EQ(bits_lost(TruthTable::constant(5, 1)), 0);
}

TEST(BitsLost, RejectsNonPowerOfTwo) {
  EXPECT_THROW(bits_from_m(3, max2()), InvariantViolation);
  EXPECT_EQ(bits_from_m(8, max2()), 3);
}

TEST(SimultaneousCount, Examples) {
  for (StateId a = 0; a < 4; ++a) EXPECT_EQ(simultaneous_count(max2(), a), 4);
  for (StateId a = 0; a < 2; ++a) EXPECT_EQ(simultaneous_count(TruthTable::phi1(), a), 1);
  for (StateId a = 0; a < 16; ++a) EXPECT_EQ(simultaneous_count(t0f2d(), a), 2);
}

TEST(SimultaneousCount, MatchesWordSemigroup) {
  for (int d = 1; d <= 3; ++d) {
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << state_count(d)); b += (d == 3 ? 3 : 1)) {
      const TruthTable t(d, b);
      const auto ref = oracle::semigroup_summary(t, 200000);
      if (!ref) continue;
      const std::vector<int> n = simultaneous_counts(t);
      EXPECT_EQ(*std::max_element(n.begin(), n.end()), ref->largest_fibre) << t.to_hex();
      EXPECT_EQ(max_nonaccordable(t), ref->smallest_image) << t.to_hex();
    }
  }
}

TEST(MaximalAccordWord, Examples) {
  EXPECT_EQ(maximal_accord_word(max2()).to_string(), "+-++");
  EXPECT_EQ(maximal_accord_word(TruthTable::constant(2, 1)).to_string(), "++");
  EXPECT_TRUE(maximal_accord_word(TruthTable::phi1()).empty());
}

TEST(MaximalAccordWord, ImageHasMElementsWithBalancedFibres) {
  std::mt19937_64 gen(17);
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 1 + static_cast<int>(gen() % 5);
    const TruthTable t(d, gen() & StateSet::full_mask(d));
    const SignWord w = maximal_accord_word(t);
    const int m = max_nonaccordable(t);
    const StateSet img = apply_word(t, StateSet::full(d), w);
    EXPECT_EQ(img.size(), m);
    const StepMap f(t);
    for (StateId c : img.elements()) {
      int pre = 0;
      for (StateId s = 0; s < t.states(); ++s) pre += f.apply(w, s) == c;
      EXPECT_EQ(pre * m, static_cast<int>(t.states()));
    }
  }
}

TEST(MaximalAccordWord, IsShortestAndFirst) {
  // brute force over all words in length-then-lexicographic order
  for (std::uint64_t b = 0; b < 256; b += 3) {
    const TruthTable t(3, b);
    const int m = max_nonaccordable(t);
    const SignWord w = maximal_accord_word(t);
    std::optional<std::string> first;
    for (std::size_t len = 0; len <= w.size() && !first; ++len) {
      for (std::uint64_t code = 0; code < (std::uint64_t{1} << len) && !first; ++code) {
        std::string text;
        for (std::size_t i = 0; i < len; ++i) text.push_back(((code >> (len - 1 - i)) & 1U) ? '-' : '+');
        if (apply_word(t, StateSet::full(3), SignWord::parse(text)).size() == m) first = text;
      }
    }
    ASSERT_TRUE(first.has_value());
    EXPECT_EQ(*first, w.to_string()) << t.to_hex();
  }
}

TEST(PartitionBlocks, Examples) {
  EXPECT_EQ(partition_blocks(max2()).blocks, std::vector<StateSet>{StateSet::full(2)});
  const Partition p = partition_blocks(product2());
  ASSERT_EQ(p.blocks.size(), 4U);
  for (StateId s = 0; s < 4; ++s) EXPECT_EQ(p.blocks[s], StateSet::singleton(s));
}

TEST(PartitionBlocks, Table0F2DBlocksAreAccordabilityClasses) {
  const Partition p = partition_blocks(t0f2d());
  const AccordMatrix a = accordability_matrix(t0f2d());
  ASSERT_EQ(p.blocks.size(), 8U);
  for (StateSet b : p.blocks) EXPECT_EQ(a.rows[b.min()], b);
}

TEST(PartitionBlocks, StructureOnEveryTripleTable) {
  for (int d = 1; d <= 3; ++d) {
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << state_count(d)); ++bits) {
      const TruthTable t(d, bits);
      const int m = max_nonaccordable(t);
      const Partition p = partition_blocks(t);
      ASSERT_EQ(static_cast<int>(p.blocks.size()), m);
      StateSet cover;
      StateId last_min = 0;
      for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        const StateSet b = p.blocks[i];
        EXPECT_EQ(b.size() * m, static_cast<int>(t.states()));
        EXPECT_TRUE((cover & b).empty());
        cover = cover | b;
        if (i > 0) {
          EXPECT_GT(b.min(), last_min);
        }
        last_min = b.min();
        EXPECT_EQ(apply_word(t, b, p.witness).size(), 1) << t.to_hex();
      }
      EXPECT_EQ(cover, StateSet::full(d));
    }
  }
}

TEST(AnalyzeLoss, ReportsTable0F2D) {
  const LossReport r = analyze_loss(t0f2d());
  EXPECT_EQ(r.m, 8);
  EXPECT_EQ(r.n, 2);
  EXPECT_EQ(r.bits, 3);
  EXPECT_EQ(r.image.size(), 8);
  EXPECT_EQ(r.partition.blocks.size(), 8U);
}

TEST(AnalyzeLoss, SixWindowStructuredTables) {
  EXPECT_EQ(analyze_loss(widen(TruthTable::from_hex("0F2D", 4), 6)).bits, 3);
  const TruthTable ml = TruthTable::from_function(6, [](std::span<const int> x) { return x[0] * x[3] * x[5]; });
  EXPECT_EQ(analyze_loss(ml).bits, 6);
  EXPECT_EQ(analyze_loss(TruthTable::constant(6, -1)).bits, 0);
}

TEST(AnalyzeLoss, DenseSixWindowTablesFinishOrReportCapacity) {
  std::mt19937_64 gen(31);
  for (int rep = 0; rep < 4; ++rep) {
    const TruthTable t(6, gen());
    try {
      const LossReport r = analyze_loss(t);
      EXPECT_EQ(r.m * r.n, 64);
    } catch (const CapacityExceeded&) {
      SUCCEED();
    }
  }
}

TEST(AllAccordable, AllAccordableIffSingletonImage) {
  for (std::uint64_t b = 0; b < 65536; b += 97) {
    const TruthTable t(4, b);
    const bool all = accordability_matrix(t).all_true();
    EXPECT_EQ(all, max_nonaccordable(t) == 1);
    EXPECT_EQ(all, apply_word(t, StateSet::full(4), maximal_accord_word(t)).size() == 1);
  }
}
