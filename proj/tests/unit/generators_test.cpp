#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracle.hpp"
#include "recon/families.hpp"
#include "recon/generators.hpp"

using namespace recon;

TEST(Labels, HasCycleMatchesBruteForce) {
  Rng rng = make_rng(12, "cyc");
  for (int t = 0; t < 300; ++t) {
    Graph g = erdos_renyi(uniform_int(rng, 3, 7), 0.35, rng);
    for (int L = 3; L <= 7; ++L) EXPECT_EQ(has_cycle_of_length(g, L), oracle::has_cycle(g, L));
  }
  EXPECT_THROW(has_cycle_of_length(cycle_graph(4), 2), InvalidArgument);
}

TEST(Labels, SpectralRadiusClosedForms) {
  for (int n = 3; n <= 12; ++n) {
    EXPECT_NEAR(spectral_radius(complete_graph(n)), n - 1.0, 1e-6);
    EXPECT_NEAR(spectral_radius(cycle_graph(n)), 2.0, 1e-6);
    EXPECT_NEAR(spectral_radius(star_graph(n)), std::sqrt(static_cast<double>(n)), 1e-6);
    EXPECT_NEAR(spectral_radius(path_graph(n)), 2.0 * std::cos(std::numbers::pi / (n + 1)), 1e-6);
  }
  EXPECT_NEAR(spectral_radius(petersen_graph()), 3.0, 1e-6);
}

TEST(Labels, DiameterAndConnectivity) {
  auto l = label_oracles(path_graph(6));
  EXPECT_TRUE(l.connected);
  EXPECT_EQ(l.diameter, 5);
  Graph two(4, {{0, 1}, {2, 3}});
  l = label_oracles(two);
  EXPECT_FALSE(l.connected);
  EXPECT_EQ(l.diameter, 1);
}

TEST(Generators, RandomTreesAreTrees) {
  Rng rng = make_rng(13, "tree");
  for (int n = 1; n <= 30; ++n) {
    Graph t = random_tree(n, rng);
    EXPECT_EQ(t.m(), static_cast<std::size_t>(n - 1));
    EXPECT_TRUE(is_connected(t));
  }
}

TEST(Datasets, CslShape) {
  DatasetSpec s;
  s.kind = "csl";
  Dataset ds = build_dataset(s);
  ASSERT_EQ(ds.size(), 150u);
  EXPECT_EQ(ds.classes, 10);
  std::vector<int> per_class(10, 0), per_fold(5, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ++per_class[ds.items[i].label];
    ++per_fold[ds.fold[i]];
    EXPECT_EQ(ds.items[i].graph.n(), 41);
  }
  for (int c : per_class) EXPECT_EQ(c, 15);
  for (int f : per_fold) EXPECT_EQ(f, 30);
  select_fold(ds, 4);
  EXPECT_EQ(ds.test.size(), 30u);
  EXPECT_EQ(ds.val.size(), 30u);
  EXPECT_EQ(ds.train.size(), 90u);
  for (auto i : ds.val) EXPECT_EQ(ds.fold[i], 0);
}

TEST(Datasets, CycleLabelsAgreeWithOracle) {
  for (int L : {4, 6}) {
    DatasetSpec s;
    s.kind = "cycles-" + std::to_string(L);
    s.size = 200;
    Dataset ds = build_dataset(s);
    ASSERT_EQ(ds.size(), 200u);
    int pos = 0;
    double edges[2] = {0, 0};
    for (const auto& it : ds.items) {
      EXPECT_EQ(has_cycle_of_length(it.graph, L), it.label == 1);
      pos += it.label;
      edges[it.label] += static_cast<double>(it.graph.m()) / it.graph.n();
    }
    EXPECT_EQ(pos, 100);
    // edge density must not give the label away
    EXPECT_NEAR(edges[0] / 100, edges[1] / 100, 0.05);
  }
}

TEST(Datasets, PaddedConnectivityIsHereditary) {
  DatasetSpec s;
  s.kind = "padded-connectivity";
  s.size = 40;
  s.ell = 2;
  Dataset ds = build_dataset(s);
  for (const auto& it : ds.items) {
    const bool y = it.target[0] == 1.0;
    const int n = it.graph.n();
    for_each_combination(n, n - 2, [&](std::span<const int> keep) {
      EXPECT_EQ(is_connected(induced_subgraph(it.graph, keep)), y);
    });
  }
}

TEST(Datasets, MultitaskTargetsAreStandardizedOnTrain) {
  DatasetSpec s;
  s.kind = "multitask";
  s.size = 300;
  Dataset ds = build_dataset(s);
  ASSERT_EQ(ds.target_dim, 3);
  for (int d = 0; d < 3; ++d) {
    double mean = 0;
    for (auto i : ds.train) mean += ds.items[i].target[d];
    EXPECT_NEAR(mean / ds.train.size(), 0.0, 1e-9);
  }
  for (const auto& it : ds.items) {
    auto l = label_oracles(it.graph);
    EXPECT_EQ(it.raw[0], l.connected ? 1.0 : 0.0);
    EXPECT_EQ(it.raw[1], l.diameter);
  }
}

TEST(Datasets, SameSeedGivesIdenticalBytes) {
  for (std::string kind : {"csl", "cycles-4", "multitask", "padded-connectivity"}) {
    DatasetSpec s;
    s.kind = kind;
    s.size = 60;
    s.seed = 3;
    Dataset a = build_dataset(s), b = build_dataset(s);
    EXPECT_EQ(split_jsonl(a, a.train), split_jsonl(b, b.train)) << kind;
    EXPECT_EQ(dataset_metadata(a).dump(), dataset_metadata(b).dump());
    s.seed = 4;
    Dataset c = build_dataset(s);
    EXPECT_NE(split_jsonl(a, a.train), split_jsonl(c, c.train)) << kind;
  }
}

TEST(Datasets, UnknownKindIsRejected) {
  DatasetSpec s;
  s.kind = "zinc";
  EXPECT_THROW(build_dataset(s), InvalidArgument);
  s.kind = "cycles-x";
  EXPECT_THROW(build_dataset(s), InvalidArgument);
}
