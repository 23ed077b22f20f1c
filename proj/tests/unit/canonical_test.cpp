#include <gtest/gtest.h>

#include <set>

#include "oracle.hpp"
#include "recon/canonical.hpp"
#include "recon/deck.hpp"
#include "recon/families.hpp"
#include "recon/generators.hpp"

using namespace recon;

TEST(Canonical, InvariantUnderRandomRelabeling) {
  Rng rng = make_rng(1, "canon");
  for (int t = 0; t < 200; ++t) {
    Graph g = erdos_renyi(uniform_int(rng, 1, 12), 0.4, rng);
    EXPECT_EQ(canonical_form(g), canonical_form(randomly_permuted(g, rng)));
  }
}

TEST(Canonical, AgreesWithBruteForceIsomorphism) {
  Rng rng = make_rng(2, "canon");
  int iso = 0;
  for (int t = 0; t < 400; ++t) {
    const int n = uniform_int(rng, 3, 6);
    Graph a = erdos_renyi(n, 0.5, rng), b = erdos_renyi(n, 0.5, rng);
    const bool same = oracle::isomorphic(a, b);
    iso += same;
    EXPECT_EQ(canonical_form(a) == canonical_form(b), same);
  }
  EXPECT_GT(iso, 10);
}

TEST(Canonical, FromCanonicalRoundTrips) {
  Rng rng = make_rng(3, "canon");
  for (int t = 0; t < 50; ++t) {
    Graph g = erdos_renyi(9, 0.3, rng);
    auto f = canonical_form(g);
    Graph h = from_canonical(f);
    EXPECT_TRUE(oracle::isomorphic(g, h));
    EXPECT_EQ(canonical_form(h), f);
  }
}

TEST(Canonical, LabelingIsAPermutation) {
  Graph g = petersen_graph();
  auto lab = canonical_labeling(g);
  std::set<int> seen(lab.order.begin(), lab.order.end());
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Canonical, AttributesAreRespected) {
  Graph a(2, {{0, 1}}, {{1}, {2}});
  Graph b(2, {{0, 1}}, {{2}, {1}});
  Graph c(2, {{0, 1}}, {{1}, {1}});
  EXPECT_EQ(canonical_form(a), canonical_form(b));
  EXPECT_NE(canonical_form(a), canonical_form(c));
}

// Number of graphs / trees on n unlabeled vertices (OEIS A000088, A000055).
TEST(Enumeration, ClassCountsMatchKnownSequences) {
  const std::vector<std::size_t> graphs{1, 1, 2, 4, 11, 34, 156, 1044};
  for (int n = 1; n <= 7; ++n) EXPECT_EQ(enumerate_graphs(n).size(), graphs[n]) << n;
  const std::vector<std::size_t> trees{1, 1, 1, 1, 2, 3, 6, 11, 23, 47, 106};
  for (int n = 1; n <= 10; ++n) EXPECT_EQ(enumerate_trees(n).size(), trees[n]) << n;
}

TEST(Enumeration, ClassesArePairwiseNonIsomorphic) {
  std::set<CanonicalForm> forms;
  for (const auto& g : enumerate_graphs(6)) forms.insert(canonical_form(g));
  EXPECT_EQ(forms.size(), 156u);
  const auto& five = enumerate_graphs(5);
  for (std::size_t i = 0; i < five.size(); ++i)
    for (std::size_t j = i + 1; j < five.size(); ++j) EXPECT_FALSE(oracle::isomorphic(five[i], five[j]));
}

TEST(Enumeration, RegularGraphsAreRegular) {
  // cubic graphs on 8 vertices: 5 connected + 1 disconnected (2 x K4)
  std::size_t cubic = 0;
  for (const auto& g : enumerate_regular(8)) {
    for (int v = 1; v < g.n(); ++v) EXPECT_EQ(g.degree(v), g.degree(0));
    cubic += g.n() > 0 && g.degree(0) == 3;
  }
  EXPECT_EQ(cubic, 6u);
}
