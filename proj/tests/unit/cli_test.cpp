#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "recon/families.hpp"
#include "recon/graph_io.hpp"

namespace fs = std::filesystem;
using namespace recon;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(RECON_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t got = fread(buf, 1, sizeof buf, p)) r.out.append(buf, got);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir;
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("recon_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string put(const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    write_file(p.string(), text);
    return p.string();
  }
  std::string put_graph(const std::string& name, const Graph& g) { return put(name, to_json(g).dump()); }
};

}  // namespace

TEST_F(Cli, DeckOfFourCycle) {
  auto r = run("deck " + put_graph("c4.json", cycle_graph(4)) + " --k 3");
  ASSERT_EQ(r.code, 0);
  auto j = json::parse(r.out);
  EXPECT_EQ(j["distinct"], 1);
  EXPECT_EQ(j["cards"][0]["multiplicity"], 4);
  EXPECT_TRUE(j.contains("config_hash"));
}

TEST_F(Cli, WlOnStronglyRegularPair) {
  auto [rook, shr] = srg_pair();
  const std::string a = put_graph("rook.json", rook), b = put_graph("shrikhande.json", shr);
  auto r = run("wl --arity 2 " + a + " " + b);
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["verdict"], "indistinguishable");
  r = run("wl --arity 1 " + put_graph("c6.json", cycle_graph(6)) + " " + put("p6.txt", to_edge_list(path_graph(6))));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["verdict"], "distinguishable");
}

TEST_F(Cli, ReconCheckSevenVertices) {
  auto r = run("recon-check --n 7 --k 6 --jobs 1");
  ASSERT_EQ(r.code, 0);
  auto j = json::parse(r.out);
  EXPECT_EQ(j["classes"], 1044);
  EXPECT_TRUE(j["colliding_groups"].empty());
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("deck").code, 2);
  EXPECT_EQ(run("--config " + put("bad.conf", "model.hiden = 3\n") + " gen").code, 2);
  EXPECT_EQ(run("deck " + put_graph("k.json", complete_graph(20)) + " --k 10 --budget-subgraphs 1000").code, 3);
  EXPECT_EQ(run("deck " + (dir / "missing.json").string() + " --k 2").code, 2);
  EXPECT_EQ(run("audit-all --only 6").code, 0);
}

TEST_F(Cli, GenIsByteIdentical) {
  const std::string conf = put("gen.conf", "dataset = cycles-4\ndataset.size = 50\nseed = 2\n");
  ASSERT_EQ(run("--config " + conf + " --out " + (dir / "a").string() + " gen").code, 0);
  ASSERT_EQ(run("--config " + conf + " --out " + (dir / "b").string() + " gen").code, 0);
  for (auto f : {"cycles-4.train.jsonl", "cycles-4.val.jsonl", "cycles-4.test.jsonl", "cycles-4.json"})
    EXPECT_EQ(read_file((dir / "a" / f).string()), read_file((dir / "b" / f).string())) << f;
  EXPECT_TRUE(fs::exists(dir / "a" / "resolved.conf"));
  EXPECT_TRUE(fs::exists(dir / "a" / "gen.meta.json"));
}

TEST_F(Cli, TrainThenEvalAppendsLedgerRows) {
  const std::string conf = put("t.conf",
                               "dataset = multitask\ndataset.size = 60\nmodel.hidden = 8\nmodel.layers = 2\n"
                               "model.k_rule = n-1\nmodel.eval_samples = 20\ntrain.epochs = 2\ntrain.metric = mse\n");
  const fs::path out = dir / "run";
  auto r = run("--config " + conf + " --out " + out.string() + " train");
  ASSERT_EQ(r.code, 0);
  auto summary = json::parse(read_file((out / "train.json").string()));
  const std::string hash = summary["config_hash"];
  EXPECT_EQ(json::parse(read_file((out / "checkpoint.json").string()))["config_hash"], hash);
  auto e = run("eval --checkpoint " + (out / "checkpoint.json").string() + " --split test");
  ASSERT_EQ(e.code, 0);
  EXPECT_DOUBLE_EQ(json::parse(e.out)["value"].get<double>(), summary["test_mean"].get<double>());
  std::ifstream ledger(out / "results.csv");
  std::string line;
  int rows = 0;
  while (std::getline(ledger, line)) ++rows;
  EXPECT_EQ(rows, 3);  // header, train, eval
}

TEST_F(Cli, VarianceReport) {
  const std::string conf =
      put("v.conf",
          "dataset = padded-connectivity\ndataset.ell = 2\ndataset.size = 60\nmodel.hidden = 8\nmodel.layers = 2\n"
          "model.rho_identity = true\nmodel.k_rule = n-2\ntrain.epochs = 1\ntrain.metric = mse\nvariance.trials = 50\n");
  auto r = run("--config " + conf + " variance");
  ASSERT_EQ(r.code, 0);
  auto j = json::parse(r.out);
  EXPECT_EQ(j["k"], "n-2");
  EXPECT_EQ(j["items"], 60);
  EXPECT_GE(j["confidence"].get<double>(), 0.0);
  // same config, same bytes
  EXPECT_EQ(run("--config " + conf + " variance").out, r.out);
}
