#include <gtest/gtest.h>

#include "oracle.hpp"
#include "recon/deck.hpp"
#include "recon/families.hpp"
#include "recon/generators.hpp"
#include "recon/reconstruction.hpp"

using namespace recon;

TEST(Deck, C4HasOneCardClassOfMultiplicityFour) {
  Deck d = deck(cycle_graph(4), 3);
  ASSERT_EQ(d.distinct(), 1u);
  EXPECT_EQ(d.cards.begin()->second, 4u);
  EXPECT_TRUE(oracle::isomorphic(from_canonical(d.cards.begin()->first), path_graph(3)));
}

TEST(Deck, TotalIsBinomialAndRelabelingInvariant) {
  Rng rng = make_rng(4, "deck");
  for (int t = 0; t < 30; ++t) {
    const int n = uniform_int(rng, 4, 9);
    const int k = uniform_int(rng, 1, n);
    Graph g = erdos_renyi(n, 0.5, rng);
    Deck d = deck(g, k);
    EXPECT_EQ(d.total(), binomial(n, k));
    EXPECT_EQ(d, deck(randomly_permuted(g, rng), k));
  }
}

TEST(Deck, BudgetIsEnforced) {
  EXPECT_THROW(deck(complete_graph(20), 10, 1000), ResourceError);
  EXPECT_NO_THROW(deck(complete_graph(20), 2, 1000));
}

TEST(Deck, SameDeckForIsomorphicGraphsOnly) {
  // k = n - 1 on 5 vertices reconstructs every graph; check against the
  // brute-force isomorphism test.
  const auto& gs = enumerate_graphs(5);
  for (std::size_t i = 0; i < gs.size(); ++i)
    for (std::size_t j = i; j < gs.size(); ++j) EXPECT_EQ(same_deck(gs[i], gs[j], 4), i == j);
}

TEST(Kelly, CountMatchesDirectCountingOnRandomGraphs) {
  Rng rng = make_rng(6, "kelly");
  for (int t = 0; t < 20; ++t) {
    const int n = uniform_int(rng, 5, 9);
    Graph g = erdos_renyi(n, 0.45, rng);
    const int k = uniform_int(rng, 4, n - 1);
    Deck d = deck(g, k);
    for (int s = 1; s <= 4; ++s)
      for (const auto& h : enumerate_graphs(s)) EXPECT_EQ(kelly_count(d, h, n), count_induced(g, h));
  }
}

TEST(Kelly, TriangleCountOfK5) {
  Deck d = deck(complete_graph(5), 4);
  EXPECT_EQ(kelly_count(d, complete_graph(3), 5), 10u);
  EXPECT_EQ(kelly_count(d, path_graph(3), 5), 0u);
}

TEST(Kelly, RejectsOversizePatternsAndForeignDecks) {
  Deck d = deck(cycle_graph(6), 4);
  EXPECT_THROW(kelly_count(d, path_graph(5), 6), InvalidArgument);
  EXPECT_THROW(kelly_count(d, path_graph(2), 7), InvalidArgument);
}

TEST(Kelly, CorruptedDeckIsDetected) {
  // C6's 5-cards are six paths with 4 edges each; an extra one-edge card
  // makes the edge total 25, not a multiple of C(4, 3).
  Deck d = deck(cycle_graph(6), 5);
  d.cards[canonical_form(Graph(5, {{0, 1}}))] += 1;
  EXPECT_THROW(kelly_count(d, complete_graph(2), 6), CorruptedDeck);
}
