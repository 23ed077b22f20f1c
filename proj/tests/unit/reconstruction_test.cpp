#include <gtest/gtest.h>

#include <set>

#include "oracle.hpp"
#include "recon/families.hpp"
#include "recon/generators.hpp"
#include "recon/reconstruction.hpp"

using namespace recon;

TEST(Audit, VertexDeletedDecksReconstructSmallGraphs) {
  for (int n = 3; n <= 6; ++n) {
    auto r = audit_k_reconstructibility(n, n - 1);
    EXPECT_TRUE(r.colliding_groups.empty()) << n;
    EXPECT_EQ(r.classes, enumerate_graphs(n).size());
  }
}

TEST(Audit, SmallCardsCollide) {
  // The 2-deck only records the edge count.
  auto r = audit_k_reconstructibility(5, 2);
  EXPECT_FALSE(r.colliding_groups.empty());
  for (const auto& grp : r.colliding_groups)
    for (const auto& g : grp) EXPECT_EQ(g.m(), grp.front().m());
}

TEST(Audit, CollisionGroupsAreSameDeckAndNonIsomorphic) {
  auto r = audit_k_reconstructibility(6, 3, Family::all, 2);
  ASSERT_FALSE(r.colliding_groups.empty());
  for (const auto& grp : r.colliding_groups)
    for (std::size_t i = 1; i < grp.size(); ++i) {
      EXPECT_TRUE(same_deck(grp[0], grp[i], 3));
      EXPECT_FALSE(oracle::isomorphic(grp[0], grp[i]));
    }
}

TEST(Audit, JobsDoNotChangeResults) {
  auto a = audit_k_reconstructibility(6, 4, Family::all, 1);
  auto b = audit_k_reconstructibility(6, 4, Family::all, 3);
  EXPECT_EQ(to_json(a), to_json(b));
}

TEST(Audit, FamiliesParse) {
  for (auto f : {Family::all, Family::trees, Family::spiders, Family::regular}) EXPECT_EQ(parse_family(to_string(f)), f);
  EXPECT_THROW(parse_family("planar"), InvalidArgument);
}

TEST(DeckHierarchy, SameKDeckImpliesSameSmallerDeck) {
  const auto& gs = enumerate_graphs(6);
  int pairs = 0;
  for (int k = 3; k <= 5; ++k)
    for (std::size_t i = 0; i < gs.size(); ++i)
      for (std::size_t j = i + 1; j < gs.size(); ++j)
        if (same_deck(gs[i], gs[j], k)) {
          ++pairs;
          EXPECT_TRUE(same_deck(gs[i], gs[j], k - 1));
        }
  EXPECT_GT(pairs, 0);
}

TEST(DeckWl, CslPairSeparatedByCards) {
  Graph a = csl_graph(11, 2), b = csl_graph(11, 3);
  EXPECT_FALSE(wl_distinguishes(a, b, 1));
  EXPECT_TRUE(deck_wl_distinguishes(a, b, 10));
  EXPECT_FALSE(deck_wl_distinguishes(a, a, 10));
  EXPECT_THROW(deck_wl_distinguishes(a, cycle_graph(5), 4), InvalidArgument);
}

TEST(Fingerprint, InjectiveOnSixVertexClasses) {
  std::set<Digest128> seen;
  for (const auto& g : enumerate_graphs(6)) EXPECT_TRUE(seen.insert(full_reconstruction_fingerprint(g)).second);
}

TEST(Fingerprint, RelabelingInvariant) {
  Rng rng = make_rng(11, "fp");
  for (int t = 0; t < 40; ++t) {
    Graph g = erdos_renyi(8, 0.5, rng);
    EXPECT_EQ(full_reconstruction_fingerprint(g), full_reconstruction_fingerprint(randomly_permuted(g, rng)));
  }
  EXPECT_THROW(full_reconstruction_fingerprint(cycle_graph(9)), UnsupportedSize);
}

TEST(CycleConditions, SmallOffsetHoldsForLargeN) {
  EXPECT_TRUE(cycle_theorem_conditions(50, 1).holds());
  // ell = 3 exceeds the first bound until ln n / ln ln n reaches 4.5.
  EXPECT_FALSE(cycle_theorem_conditions(50, 3).cond_i);
  EXPECT_THROW(cycle_theorem_conditions(3, 1), InvalidArgument);
  EXPECT_THROW(cycle_theorem_conditions(10, 8), InvalidArgument);
}

TEST(CycleConditions, FirstBoundClosedForm) {
  for (int n : {10, 100, 1000}) {
    const double ln = std::log(n);
    EXPECT_NEAR(cycle_theorem_conditions(n, 1).bound_i, std::sqrt(2 * ln / std::log(ln)), 1e-12);
  }
}
