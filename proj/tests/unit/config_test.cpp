#include <gtest/gtest.h>

#include <filesystem>

#include "recon/audit.hpp"
#include "recon/config.hpp"

using namespace recon;

TEST(Config, ParsesValuesAndComments) {
  auto c = RunConfig::parse("# header\nseed = 7  # trailing\n\nmodel.hidden=16\n");
  EXPECT_EQ(c.get_int("seed"), 7);
  EXPECT_EQ(c.get_int("model.hidden"), 16);
  EXPECT_EQ(c.get("model.conv"), "gin");  // default
}

TEST(Config, UnknownKeyNamesTheKey) {
  try {
    RunConfig::parse("seed = 1\nmodel.hiden = 3\n", "x.conf");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("model.hiden"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("x.conf:2"), std::string::npos);
  }
}

TEST(Config, MalformedValuesAreConfigErrors) {
  EXPECT_THROW(RunConfig::parse("seed 3\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("seed = three\n").get_int("seed"), ConfigError);
  EXPECT_THROW(RunConfig::parse("schema_version = 2\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("model.rho_identity = maybe\n").get_bool("model.rho_identity"), ConfigError);
  Dataset ds;
  ds.kind = TaskKind::classification;
  ds.classes = 2;
  EXPECT_THROW(model_config(RunConfig::parse("model.conv = gat\n"), ds), ConfigError);
  EXPECT_THROW(model_config(RunConfig::parse("model.k_rule = most\n"), ds), ConfigError);
  EXPECT_THROW(train_config(RunConfig::parse("train.metric = auc\n")), ConfigError);
}

TEST(Config, HashCoversEveryResolvedValue) {
  RunConfig a, b;
  EXPECT_EQ(a.hash(), b.hash());
  b.set("train.lr", "0.002");
  EXPECT_NE(a.hash(), b.hash());
  // formatting of the source text does not matter, only the values
  EXPECT_EQ(RunConfig::parse("seed=1").hash(), RunConfig::parse("  seed   =   1 # x").hash());
  EXPECT_EQ(a.hash().size(), 32u);
}

TEST(Config, ResolvedTextRoundTrips) {
  auto c = RunConfig::parse("seed = 5\nmodel.k_rule = half\n");
  EXPECT_EQ(RunConfig::parse(c.resolved()).resolved(), c.resolved());
  EXPECT_EQ(c.to_json()["model.k_rule"], "half");
}

TEST(Config, BuiltinConfigsMatchShippedFiles) {
  namespace fs = std::filesystem;
  const fs::path dir = RECON_CONFIG_DIR;
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".conf") ++files;
  EXPECT_EQ(files, audit::builtin_configs().size());
  for (const auto& [name, text] : audit::builtin_configs()) {
    const fs::path p = dir / (name + ".conf");
    ASSERT_TRUE(fs::exists(p)) << p;
    EXPECT_EQ(RunConfig::load(p.string()).resolved(), RunConfig::parse(text).resolved()) << name;
  }
}

TEST(Config, BuiltinConfigsBuildModels) {
  for (const auto& [name, text] : audit::builtin_configs()) {
    auto c = audit::builtin_config(name, 3);
    EXPECT_EQ(c.get_int("seed"), 3);
    Dataset ds;
    auto spec = dataset_spec(c);
    ds.kind = spec.kind == "csl" || spec.kind.rfind("cycles", 0) == 0 ? TaskKind::classification
                                                                    : TaskKind::regression;
    ds.classes = 10;
    ds.target_dim = spec.kind == "multitask" ? 3 : 1;
    auto mc = model_config(c, ds);
    EXPECT_NO_THROW(ReconModel(mc, 0)) << name;
    EXPECT_NO_THROW(train_config(c));
  }
  EXPECT_THROW(audit::builtin_config("nope"), InvalidArgument);
}

TEST(Config, RunExperimentIsDeterministic) {
  auto c = RunConfig::parse(
      "dataset = padded-connectivity\ndataset.size = 40\ndataset.ell = 1\nmodel.hidden = 8\nmodel.layers = 2\n"
      "model.rho_identity = true\nmodel.k_rule = n-1\ntrain.epochs = 2\ntrain.metric = mse\nseed = 4\n");
  auto a = run_experiment(c), b = run_experiment(c);
  ASSERT_EQ(a.fold_metrics.size(), 1u);
  EXPECT_EQ(a.fold_metrics, b.fold_metrics);
  EXPECT_TRUE(std::isfinite(a.mean));
  c.set("folds", "5");
  EXPECT_THROW(run_experiment(c), ConfigError);
}
