#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "recon/audit.hpp"
#include "recon/config.hpp"
#include "recon/deck.hpp"
#include "recon/generators.hpp"
#include "recon/graph_io.hpp"
#include "recon/recon_gnn.hpp"
#include "recon/reconstruction.hpp"
#include "recon/wl.hpp"

namespace fs = std::filesystem;
using namespace recon;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitResource = 3;
constexpr int kExitAssertion = 4;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::uint64_t> budget;
  int jobs = 1;
};

/// --config file (or the named built-in, or the defaults) with the command
/// line overrides applied.
RunConfig resolve_config(const Globals& g, const std::string& builtin = "") {
  RunConfig c = !g.config_path.empty() ? RunConfig::load(g.config_path)
                : builtin.empty()      ? RunConfig()
                                       : audit::builtin_config(builtin);
  if (g.seed) c.set("seed", std::to_string(*g.seed));
  if (g.budget) c.set("budget_subgraphs", std::to_string(*g.budget));
  return c;
}

std::uint64_t budget_of(const RunConfig& c) { return static_cast<std::uint64_t>(c.get_int("budget_subgraphs")); }

/// Writes the resolved config and a metadata file with the wall-clock data
/// that is kept out of the deterministic outputs.
void write_run_files(const fs::path& dir, const std::string& command, const RunConfig& c, double elapsed) {
  fs::create_directories(dir);
  write_file((dir / "resolved.conf").string(), "# config hash " + c.hash() + "\n" + c.resolved());
  json meta;
  meta["command"] = command;
  meta["config_hash"] = c.hash();
  meta["timestamp"] = static_cast<long long>(std::time(nullptr));
  meta["elapsed_seconds"] = elapsed;
  write_file((dir / (command + ".meta.json")).string(), meta.dump(2) + "\n");
}

void emit(const Globals& g, const std::string& file, const json& j) {
  const std::string text = j.dump(2) + "\n";
  if (g.out.empty()) {
    std::cout << text;
  } else {
    fs::create_directories(g.out);
    write_file((fs::path(g.out) / file).string(), text);
    std::cerr << "wrote " << (fs::path(g.out) / file).string() << "\n";
  }
}

void append_ledger(const fs::path& dir, const std::string& run_id, const std::string& dataset,
                   const std::string& model, const std::string& k, const std::string& metric, double value,
                   std::uint64_t seed) {
  fs::create_directories(dir);
  const fs::path path = dir / "results.csv";
  const bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::app);
  if (fresh) out << "run_id,dataset,model,k,metric,value,seed\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  out << run_id << "," << dataset << "," << model << "," << k << "," << metric << "," << buf << "," << seed << "\n";
}

std::string model_name(const RunConfig& c) { return c.get("model.conv") + "-" + c.get("model.k_rule"); }

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

int cmd_gen(const Globals& g) {
  auto start = std::chrono::steady_clock::now();
  RunConfig c = resolve_config(g);
  Dataset ds = build_dataset(dataset_spec(c));
  const fs::path dir = g.out.empty() ? fs::path("recon_out") : fs::path(g.out);
  fs::create_directories(dir);
  write_file((dir / (ds.name + ".train.jsonl")).string(), split_jsonl(ds, ds.train));
  write_file((dir / (ds.name + ".val.jsonl")).string(), split_jsonl(ds, ds.val));
  write_file((dir / (ds.name + ".test.jsonl")).string(), split_jsonl(ds, ds.test));
  json meta = dataset_metadata(ds);
  meta["config_hash"] = c.hash();
  write_file((dir / (ds.name + ".json")).string(), meta.dump(2) + "\n");
  write_run_files(dir, "gen", c, seconds_since(start));
  std::cerr << "wrote " << ds.size() << " graphs to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_wl(const Globals& g, const std::vector<std::string>& files, int arity) {
  RunConfig c = resolve_config(g);
  if (arity != 1 && arity != 2) throw InvalidArgument("wl: arity must be 1 or 2");
  std::vector<Graph> graphs;
  std::vector<std::string> names;
  for (const auto& f : files) {
    auto loaded = load_graphs(f);
    for (std::size_t i = 0; i < loaded.size(); ++i) {
      names.push_back(loaded.size() == 1 ? f : f + "#" + std::to_string(i));
      graphs.push_back(std::move(loaded[i]));
    }
  }
  auto colorings = arity == 1 ? wl1_joint(graphs) : wl2_joint(graphs);
  json out;
  out["config_hash"] = c.hash();
  out["arity"] = arity;
  json items = json::array();
  for (std::size_t i = 0; i < graphs.size(); ++i)
    items.push_back({{"source", names[i]},
                     {"n", graphs[i].n()},
                     {"classes", colorings[i].classes()},
                     {"rounds", colorings[i].rounds},
                     {"trace", colorings[i].trace.hex()}});
  out["graphs"] = items;
  if (graphs.size() >= 2) {
    json pairs = json::array();
    for (std::size_t i = 0; i < graphs.size(); ++i)
      for (std::size_t j = i + 1; j < graphs.size(); ++j) {
        const bool sep = colorings[i].trace != colorings[j].trace;
        pairs.push_back({{"a", i}, {"b", j}, {"verdict", sep ? "distinguishable" : "indistinguishable"}});
      }
    out["pairs"] = pairs;
    if (graphs.size() == 2) out["verdict"] = pairs[0]["verdict"];
  }
  emit(g, "wl.json", out);
  return kExitOk;
}

int cmd_deck(const Globals& g, const std::string& file, int k) {
  RunConfig c = resolve_config(g);
  Graph gr = load_graph(file);
  Deck d = deck(gr, k, budget_of(c));
  json out;
  out["config_hash"] = c.hash();
  out["n"] = gr.n();
  out["k"] = k;
  out["total"] = d.total();
  out["distinct"] = d.distinct();
  json cards = json::array();
  for (const auto& [form, mult] : d.cards)
    cards.push_back({{"canonical", form.hex()}, {"graph", to_json(from_canonical(form))}, {"multiplicity", mult}});
  out["cards"] = cards;
  emit(g, "deck.json", out);
  return kExitOk;
}

int cmd_recon_check(const Globals& g, int n, int k, const std::string& family) {
  auto start = std::chrono::steady_clock::now();
  RunConfig c = resolve_config(g);
  auto rep = audit_k_reconstructibility(n, k, parse_family(family), g.jobs, budget_of(c));
  json out = to_json(rep);
  out["config_hash"] = c.hash();
  emit(g, "recon_check.json", out);
  if (!g.out.empty()) write_run_files(g.out, "recon-check", c, seconds_since(start));
  return kExitOk;
}

int cmd_train(const Globals& g) {
  auto start = std::chrono::steady_clock::now();
  RunConfig c = resolve_config(g);
  const fs::path dir = g.out.empty() ? fs::path("recon_out") : fs::path(g.out);
  fs::create_directories(dir);
  auto outcome = run_experiment(c, true, [](int f, int e, double loss, double v) {
    std::cerr << "fold " << f << " epoch " << e + 1 << " loss " << loss << " val " << v << "\n";
  });
  const std::string metric = to_string(outcome.metric);
  for (std::size_t f = 0; f < outcome.models.size(); ++f) {
    json ck = outcome.models[f].checkpoint();
    ck["config"] = c.resolved();
    ck["config_hash"] = c.hash();
    ck["fold"] = f;
    const std::string suffix = outcome.models.size() > 1 ? "_fold" + std::to_string(f) : "";
    write_file((dir / ("checkpoint" + suffix + ".json")).string(), ck.dump() + "\n");
    write_file((dir / ("curve" + suffix + ".csv")).string(), curve_csv(outcome.histories[f]));
    append_ledger(dir, c.hash().substr(0, 12) + "-f" + std::to_string(f), c.get("dataset"), model_name(c),
                  c.get("model.k_rule"), metric, outcome.fold_metrics[f], static_cast<std::uint64_t>(c.get_int("seed")));
  }
  json summary;
  summary["config_hash"] = c.hash();
  summary["metric"] = metric;
  summary["test_per_fold"] = outcome.fold_metrics;
  summary["test_mean"] = outcome.mean;
  summary["test_std"] = outcome.stddev;
  if (outcome.metric == Metric::log10_mse) summary["log_base"] = 10;
  write_file((dir / "train.json").string(), summary.dump(2) + "\n");
  write_run_files(dir, "train", c, seconds_since(start));
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_eval(const Globals& g, const std::string& checkpoint, const std::string& split) {
  auto start = std::chrono::steady_clock::now();
  json ck = json::parse(read_file(checkpoint));
  RunConfig c = RunConfig::parse(ck.at("config").get<std::string>(), checkpoint);
  if (g.seed) c.set("seed", std::to_string(*g.seed));
  if (g.budget) c.set("budget_subgraphs", std::to_string(*g.budget));
  Dataset ds = build_dataset(dataset_spec(c));
  const int folds = static_cast<int>(c.get_int("folds"));
  const int fold = ck.value("fold", 0);
  if (folds > 1) select_fold(ds, fold, folds);
  const std::vector<std::size_t>* idx = split == "train" ? &ds.train : split == "val" ? &ds.val
                                      : split == "test"  ? &ds.test
                                                         : nullptr;
  if (!idx) throw InvalidArgument("eval: split must be train|val|test, got '" + split + "'");
  ReconModel m(model_config(c, ds), 0);
  m.load_checkpoint(ck);
  TrainConfig tc = train_config(c);
  const double value = evaluate(m, ds, *idx, tc.metric, derive_seed(tc.seed, "train", static_cast<std::uint64_t>(fold)));
  const fs::path dir = g.out.empty() ? fs::path(checkpoint).parent_path() : fs::path(g.out);
  append_ledger(dir.empty() ? fs::path(".") : dir, c.hash().substr(0, 12) + "-f" + std::to_string(fold) + "-" + split,
                c.get("dataset"), model_name(c), c.get("model.k_rule"), to_string(tc.metric), value,
                static_cast<std::uint64_t>(c.get_int("seed")));
  json out{{"config_hash", c.hash()}, {"split", split}, {"fold", fold}, {"metric", to_string(tc.metric)}, {"value", value}};
  std::cout << out.dump(2) << "\n";
  if (!g.out.empty()) write_run_files(g.out, "eval", c, seconds_since(start));
  return kExitOk;
}

int cmd_variance(const Globals& g) {
  auto start = std::chrono::steady_clock::now();
  RunConfig c = resolve_config(g, "variance");
  auto v = audit::run_variance(c);
  json out{{"config_hash", c.hash()},
           {"k", "n-" + std::to_string(v.k_offset)},
           {"items", v.items},
           {"trials", c.get_int("variance.trials")},
           {"var_gnn", v.var_gnn},
           {"var_aug", v.var_aug},
           {"var_recon", v.var_recon},
           {"mean_gnn", v.mean_gnn},
           {"mean_aug", v.mean_aug},
           {"mean_recon", v.mean_recon},
           {"confidence", v.confidence},
           {"confidence_aug_le_gnn", v.confidence_aug_gnn},
           {"confidence_recon_le_aug", v.confidence_recon_aug}};
  emit(g, "variance.json", out);
  if (!g.out.empty()) write_run_files(g.out, "variance", c, seconds_since(start));
  return kExitOk;
}

int cmd_audit_all(const Globals& g, bool n8, const std::string& golden, const std::string& only) {
  audit::Options o;
  o.tier_n8 = n8;
  o.golden_path = golden;
  o.seed = g.seed.value_or(0);
  o.log = [](const std::string& s) { std::cerr << s << "\n"; };
  std::set<int> pick;
  std::stringstream ss(only);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) pick.insert(std::stoi(tok));
  auto checks = audit::all_checks();
  json matrix = json::array();
  int failed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!pick.empty() && !pick.count(id)) continue;
    auto r = audit::timed(checks[i], o, id);
    std::cout << audit::format_line(r) << std::endl;
    failed += !r.pass;
    matrix.push_back(audit::to_json(r));
  }
  if (!g.out.empty()) emit(g, "audit.json", json{{"checks", matrix}, {"failed", failed}});
  return failed ? kExitAssertion : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph reconstruction toolkit: decks, WL tests, k-Reconstruction GNNs"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  Globals g;
  app.add_option("--config", g.config_path, "run config file (key = value)");
  app.add_option("--seed", g.seed, "top-level seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--budget-subgraphs", g.budget, "cap on enumerated subgraphs");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen", "generate a dataset from the config");

  std::vector<std::string> wl_files;
  int arity = 1;
  auto* wl = app.add_subcommand("wl", "joint 1-WL / 2-WL report for graph files");
  wl->add_option("graphs", wl_files, "graph files (JSON or edge list)")->required();
  wl->add_option("--arity", arity, "1 or 2");

  std::string deck_file;
  int deck_k = 0;
  auto* dk = app.add_subcommand("deck", "k-deck summary of one graph");
  dk->add_option("graph", deck_file, "graph file")->required();
  dk->add_option("--k", deck_k, "card size")->required();

  int rc_n = 0, rc_k = 0;
  std::string family = "all";
  auto* rc = app.add_subcommand("recon-check", "k-deck collisions among all classes of a family on n vertices");
  rc->add_option("--n", rc_n, "vertex count")->required();
  rc->add_option("--k", rc_k, "card size")->required();
  rc->add_option("--family", family, "all|trees|spiders|regular");

  auto* tr = app.add_subcommand("train", "train and test a model from the config");

  std::string checkpoint, split = "test";
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  ev->add_option("--checkpoint", checkpoint, "checkpoint written by train")->required();
  ev->add_option("--split", split, "train|val|test");

  auto* var = app.add_subcommand("variance", "three-estimator variance experiment");

  bool n8 = false;
  std::string golden, only;
  auto* au = app.add_subcommand("audit-all", "run the acceptance suite and print a pass/fail matrix");
  au->add_flag("--n8", n8, "include the n = 8 reconstruction tier");
  au->add_option("--golden", golden, "frozen spider pair to compare against");
  au->add_option("--only", only, "comma-separated criterion ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(g);
    if (*wl) return cmd_wl(g, wl_files, arity);
    if (*dk) return cmd_deck(g, deck_file, deck_k);
    if (*rc) return cmd_recon_check(g, rc_n, rc_k, family);
    if (*tr) return cmd_train(g);
    if (*ev) return cmd_eval(g, checkpoint, split);
    if (*var) return cmd_variance(g);
    if (*au) return cmd_audit_all(g, n8, golden, only);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return kExitResource;
  } catch (const UnsupportedSize& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return kExitResource;
  } catch (const Error& e) {
    std::cerr << e.kind() << " error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
