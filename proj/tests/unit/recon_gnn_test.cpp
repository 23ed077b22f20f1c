#include <gtest/gtest.h>

#include <cmath>

#include "recon/families.hpp"
#include "recon/generators.hpp"
#include "recon/recon_gnn.hpp"

using namespace recon;
using nn::Matrix;

namespace {

ReconConfig small_config(const std::string& k_rule, nn::Pooling pooling = nn::Pooling::mean) {
  ReconConfig c;
  c.gnn.hidden = 6;
  c.gnn.layers = 2;
  c.gnn.norm = nn::Norm::graph;
  c.phi_layers = 1;
  c.rho_hidden_layers = 1;
  c.pooling = pooling;
  c.out_dim = 2;
  c.k_rule = KRule::parse(k_rule);
  c.train_samples = 4;
  return c;
}

Dataset connectivity_dataset(int size, int ell) {
  DatasetSpec s;
  s.kind = "padded-connectivity";
  s.size = size;
  s.ell = ell;
  return build_dataset(s);
}

Dataset connectivity_classes(int size) {
  Dataset ds = connectivity_dataset(size, 1);
  ds.kind = TaskKind::classification;
  ds.classes = 2;
  return ds;
}

ReconConfig variance_config(const std::string& k_rule) {
  ReconConfig c = small_config(k_rule);
  c.rho_identity = true;
  c.out_dim = 1;
  return c;
}

}  // namespace

TEST(KRule, ResolveTable) {
  EXPECT_EQ(KRule::parse("n-1").resolve(10), 9);
  EXPECT_EQ(KRule::parse("n-2").resolve(10), 8);
  EXPECT_EQ(KRule::parse("n-1").resolve(4), 4);  // too small to delete from
  EXPECT_EQ(KRule::parse("half").resolve(7), 4);
  EXPECT_EQ(KRule::parse("half").resolve(8), 4);
  EXPECT_EQ(KRule::parse("whole").resolve(9), 9);
  EXPECT_EQ(KRule::parse("2").resolve(10), 3);
  EXPECT_EQ(KRule::parse("20").resolve(10), 10);
  EXPECT_EQ(KRule::parse("n-0").resolve(6), 6);
  for (std::string s : {"n-1", "n-3", "half", "whole", "5"}) EXPECT_EQ(KRule::parse(s).str(), s);
  EXPECT_THROW(KRule::parse("most"), InvalidArgument);
}

TEST(ReconModel, WholeGraphRuleIsThePlainGnn) {
  ReconModel m(small_config("whole"), 1);
  Graph g = petersen_graph();
  Matrix direct = m.rho.forward(m.phi.forward(m.base.forward(g)));
  EXPECT_LT((m.forward_exact(g) - direct).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ReconModel, ExactOutputIsPermutationInvariant) {
  for (auto pooling : {nn::Pooling::mean, nn::Pooling::sum}) {
    ReconModel m(small_config("n-1", pooling), 2);
    Rng rng = make_rng(2, "perm");
    for (int t = 0; t < 5; ++t) {
      Graph g = erdos_renyi(8, 0.4, rng);
      EXPECT_LT((m.forward_exact(g) - m.forward_exact(randomly_permuted(g, rng))).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(ReconModel, SamplingEveryCardIsExact) {
  for (auto pooling : {nn::Pooling::mean, nn::Pooling::sum}) {
    ReconModel m(small_config("half", pooling), 3);
    Graph g = cycle_graph(7);
    Rng rng = make_rng(3, "s");
    EXPECT_LT((m.forward_sampled(g, rng, 1000) - m.forward_exact(g)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

// Monte Carlo: one-card pooled vectors average to the exact pooled vector,
// for mean pooling and for sum pooling with the C(n, k) correction.
TEST(ReconModel, SampledPoolingIsUnbiased) {
  for (auto pooling : {nn::Pooling::mean, nn::Pooling::sum}) {
    ReconModel m(small_config("half", pooling), 4);
    Rng rng = make_rng(4, "g");
    Graph g = erdos_renyi(9, 0.4, rng);
    Matrix exact = m.pooled_exact(g);
    const int draws = 4000;
    Matrix sum = Matrix::Zero(1, exact.cols()), sq = Matrix::Zero(1, exact.cols());
    for (int i = 0; i < draws; ++i) {
      Matrix p = m.pooled_sampled(g, rng, 2);
      sum += p;
      sq += p.cwiseAbs2();
    }
    for (Eigen::Index j = 0; j < exact.cols(); ++j) {
      const double mean = sum(0, j) / draws;
      const double se = std::sqrt(std::max(sq(0, j) / draws - mean * mean, 0.0) / draws);
      EXPECT_NEAR(mean, exact(0, j), 4 * se + 1e-12) << j;
    }
  }
}

TEST(ReconModel, BudgetGuardsExactForward) {
  ReconConfig c = small_config("half");
  c.budget = 100;
  ReconModel m(c, 5);
  EXPECT_THROW(m.forward_exact(cycle_graph(12)), ResourceError);
  Rng rng = make_rng(5, "b");
  EXPECT_NO_THROW(m.forward_eval(cycle_graph(12), rng));
}

TEST(ReconModel, GradientsMatchFiniteDifferences) {
  for (bool concat : {false, true})
    for (auto pooling : {nn::Pooling::mean, nn::Pooling::sum}) {
      ReconConfig c = small_config("n-2", pooling);
      c.concat_original = concat;
      ReconModel m(c, 6);
      Rng rng = make_rng(6, "g");
      Graph g = erdos_renyi(7, 0.5, rng);
      Matrix r(1, 2);
      r << 0.7, -1.3;
      auto loss = [&] { return m.forward_exact(g).cwiseProduct(r).sum(); };
      auto ps = m.params();
      nn::zero_grads(ps);
      ReconModel::Pass pass;
      m.forward_exact(g, &pass);
      m.backward(g, pass, r);
      constexpr double h = 1e-6;
      for (auto* p : ps)
        for (Eigen::Index i = 0; i < p->value.size(); ++i) {
          double& w = p->value.data()[i];
          const double w0 = w;
          w = w0 + h;
          const double up = loss();
          w = w0 - h;
          const double down = loss();
          w = w0;
          const double num = (up - down) / (2 * h);
          EXPECT_NEAR(p->grad.data()[i], num, 1e-5 * std::max(1.0, std::abs(num))) << p->name;
        }
    }
}

TEST(ReconModel, CheckpointRestoresOutputs) {
  ReconModel a(small_config("n-1"), 7), b(small_config("n-1"), 8);
  Graph g = cycle_graph(6);
  EXPECT_GT((a.forward_exact(g) - b.forward_exact(g)).cwiseAbs().maxCoeff(), 1e-9);
  b.load_checkpoint(json::parse(a.checkpoint().dump()));
  EXPECT_EQ(a.forward_exact(g), b.forward_exact(g));
  ReconModel other(small_config("n-1", nn::Pooling::mean), 9);
  other.phi = nn::MLP("phi", {12, 3}, true);
  EXPECT_THROW(other.load_checkpoint(a.checkpoint()), ShapeError);
}

TEST(Risk, ExactRiskIsMeanItemLoss) {
  Dataset ds = connectivity_dataset(20, 1);
  ReconModel m(variance_config("n-1"), 10);
  auto r = empirical_risk(m, ds, ds.train, RiskMode::exact);
  double s = 0;
  for (auto i : ds.train) s += item_loss(ds, ds.items[i], m.forward_exact(ds.items[i].graph)).value;
  EXPECT_NEAR(r.value, s / ds.train.size(), 1e-12);
  EXPECT_FALSE(r.surrogate);
  EXPECT_TRUE(empirical_risk(m, ds, ds.train, RiskMode::sampled).surrogate);
  EXPECT_THROW(empirical_risk(m, ds, {}, RiskMode::exact), InvalidArgument);
}

TEST(Metrics, FromKnownOutputs) {
  Dataset ds;
  ds.kind = TaskKind::classification;
  ds.classes = 2;
  ds.items = {{Graph(1, {}), 0, {}, {}}, {Graph(1, {}), 1, {}, {}}};
  Matrix a(1, 2), b(1, 2);
  a << 2, 1;
  b << 2, 1;
  EXPECT_DOUBLE_EQ(metric_from_outputs(ds, {0, 1}, {a, b}, Metric::accuracy), 50.0);
  Dataset r;
  r.kind = TaskKind::multitask_regression;
  r.target_dim = 2;
  r.items = {{Graph(1, {}), -1, {0, 0}, {}}};
  Matrix p(1, 2);
  p << 10, 0.1;  // per-task mse 100 and 0.01
  EXPECT_NEAR(metric_from_outputs(r, {0}, {p}, Metric::mse), 50.005, 1e-12);
  EXPECT_NEAR(metric_from_outputs(r, {0}, {p}, Metric::log10_mse), 0.0, 1e-12);
  EXPECT_THROW(metric_from_outputs(r, {0}, {p}, Metric::accuracy), InvalidArgument);
  for (auto mt : {Metric::accuracy, Metric::mse, Metric::log10_mse}) EXPECT_EQ(parse_metric(to_string(mt)), mt);
}

TEST(Training, LearnsConnectivityAndIsDeterministic) {
  Dataset ds = connectivity_classes(120);
  ReconConfig c = small_config("n-1");
  c.gnn.hidden = 12;
  auto run = [&] {
    ReconModel m(c, 11);
    TrainConfig tc;
    tc.epochs = 15;
    tc.batch_size = 8;
    tc.adam.lr = 0.01;
    tc.seed = 11;
    auto r = train(m, ds, tc);
    return std::pair{r, m.checkpoint().dump()};
  };
  auto [r1, ck1] = run();
  auto [r2, ck2] = run();
  EXPECT_EQ(ck1, ck2);
  ASSERT_EQ(r1.history.size(), 15u);
  EXPECT_LT(r1.history.back().train_loss, r1.history.front().train_loss);
  EXPECT_GE(r1.best_val, 90.0);
  EXPECT_FALSE(curve_csv(r1).empty());
}

TEST(Training, PatienceStopsAfterWorseEpochs) {
  Dataset cls = connectivity_classes(40);
  ReconModel m(small_config("n-1"), 12);
  TrainConfig tc;
  tc.epochs = 30;
  tc.patience = 1;
  tc.adam.lr = 0.0;  // validation never changes, and ties count as improvement
  EXPECT_EQ(train(m, cls, tc).history.size(), 30u);
  tc.metric = Metric::mse;
  EXPECT_THROW(train(m, cls, tc), InvalidArgument);

  Dataset ds = connectivity_dataset(40, 1);
  ReconModel r(variance_config("n-1"), 12);
  tc.epochs = 60;
  tc.patience = 2;
  tc.adam.lr = 0.5;  // oscillates
  auto res = train(r, ds, tc);
  ASSERT_LT(res.history.size(), 60u);
  EXPECT_EQ(res.history.size(), static_cast<std::size_t>(res.best_epoch + tc.patience + 1));
}

TEST(Training, NonFiniteLossIsReported) {
  Dataset ds = connectivity_classes(20);
  ReconModel m(small_config("n-1"), 13);
  m.rho.layers.back().b.value(0, 0) = std::numeric_limits<double>::quiet_NaN();
  TrainConfig tc;
  tc.epochs = 1;
  EXPECT_THROW(train(m, ds, tc), TrainingError);
}

TEST(Variance, EstimatorsCoincideWithoutDeletion) {
  // k = n: one card per item, so the three estimators are the same numbers.
  Dataset ds = connectivity_dataset(60, 0);
  ReconModel m(variance_config("n-0"), 14);
  VarianceConfig vc;
  vc.trials = 200;
  auto r = variance_experiment(m, ds, vc);
  EXPECT_EQ(r.k_offset, 0);
  EXPECT_DOUBLE_EQ(r.var_gnn, r.var_aug);
  EXPECT_DOUBLE_EQ(r.var_aug, r.var_recon);
  EXPECT_DOUBLE_EQ(r.confidence, 1.0);
}

TEST(Variance, ConstantPredictorOnConstantLabelsHasNoVariance) {
  Dataset ds = connectivity_dataset(60, 2);
  std::vector<Item> pos;
  for (const auto& it : ds.items)
    if (it.target[0] == 1.0) pos.push_back(it);
  ds.items = pos;
  ReconModel m(variance_config("n-2"), 15);
  for (auto* p : m.phi.params()) p->value.setZero();
  VarianceConfig vc;
  vc.trials = 100;
  auto r = variance_experiment(m, ds, vc);
  EXPECT_EQ(r.var_gnn, 0.0);
  EXPECT_EQ(r.var_aug, 0.0);
  EXPECT_EQ(r.var_recon, 0.0);
  EXPECT_DOUBLE_EQ(r.mean_recon, 1.0);
}

TEST(Variance, JensenOrdersTheMeans) {
  // Squared loss is convex, so the loss of the mean card output never
  // exceeds the mean card loss.
  Dataset ds = connectivity_dataset(80, 2);
  ReconModel m(variance_config("n-2"), 16);
  VarianceConfig vc;
  vc.trials = 100;
  auto r = variance_experiment(m, ds, vc);
  EXPECT_EQ(r.k_offset, 2);
  EXPECT_LE(r.mean_recon, r.mean_aug + 1e-12);
  EXPECT_NEAR(r.mean_aug, r.mean_gnn, 0.2 * r.mean_aug + 1e-9);
}

TEST(Variance, RejectsNonHereditaryTasksAndWrongHeads) {
  Dataset ds = connectivity_dataset(20, 2);
  VarianceConfig vc;
  EXPECT_THROW(variance_experiment(ReconModel(variance_config("3"), 17), ds, vc), InvalidDataset);
  EXPECT_THROW(variance_experiment(ReconModel(small_config("n-2"), 17), ds, vc), InvalidArgument);
  vc.trials = 1;
  EXPECT_THROW(variance_experiment(ReconModel(variance_config("n-2"), 17), ds, vc), InvalidArgument);
}
