#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "recon/errors.hpp"
#include "recon/generators.hpp"
#include "recon/hash.hpp"
#include "recon/recon_gnn.hpp"

namespace recon {

/// Run configuration: `key = value` lines, `#` starts a comment. Every key
/// has a default; unknown keys are rejected. The resolved text lists every
/// key in sorted order and is what the config hash covers.
class RunConfig {
 public:
  static constexpr int kSchemaVersion = 1;

  RunConfig() : values_(defaults()) {}

  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d{
        {"schema_version", std::to_string(kSchemaVersion)},
        {"seed", "0"},
        {"budget_subgraphs", std::to_string(kDefaultDeckBudget)},
        {"dataset", "csl"},
        {"dataset.size", "0"},
        {"dataset.mean_n", "0"},
        {"dataset.ell", "2"},
        {"dataset.extra_edges", "1"},
        {"dataset.full_scale", "false"},
        {"dataset.retry_budget", "10000"},
        {"folds", "1"},
        {"model.conv", "gin"},
        {"model.hidden", "64"},
        {"model.layers", "4"},
        {"model.norm", "none"},
        {"model.readout", "sum"},
        {"model.jumping_knowledge", "true"},
        {"model.phi_layers", "0"},
        {"model.rho_hidden_layers", "1"},
        {"model.rho_identity", "false"},
        {"model.pooling", "mean"},
        {"model.k_rule", "n-1"},
        {"model.train_samples", "10"},
        {"model.eval_samples", "200"},
        {"model.concat_original", "false"},
        {"train.epochs", "50"},
        {"train.batch_size", "32"},
        {"train.lr", "0.001"},
        {"train.patience", "0"},
        {"train.metric", "accuracy"},
        {"variance.trials", "1000"},
    };
    return d;
  }

  static RunConfig parse(const std::string& text, const std::string& origin = "config") {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
      c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), origin + ":" + std::to_string(lineno));
    }
    if (c.get_int("schema_version") != kSchemaVersion)
      throw ConfigError(origin + ": unsupported schema_version " + c.get("schema_version"));
    return c;
  }

  static RunConfig load(const std::string& path) { return parse(read_file(path), path); }

  void set(const std::string& key, const std::string& value, const std::string& where = "override") {
    if (!values_.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    values_[key] = value;
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
    return it->second;
  }

  long long get_int(const std::string& key) const {
    const auto& v = get(key);
    try {
      std::size_t used = 0;
      long long x = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    }
  }

  double get_double(const std::string& key) const {
    const auto& v = get(key);
    try {
      std::size_t used = 0;
      double x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
  }

  bool get_bool(const std::string& key) const {
    const auto& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key '" + key + "': expected true|false, got '" + v + "'");
  }

  std::string resolved() const {
    std::string s;
    for (const auto& [k, v] : values_) s += k + " = " + v + "\n";
    return s;
  }

  std::string hash() const { return Hasher128(0xc0f1).add_bytes(resolved()).digest().hex(); }

  json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
  }

 private:
  std::map<std::string, std::string> values_;

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
  }
};

// Config errors surface from the nested parsers as InvalidArgument; wrap
// them so the CLI reports them as usage errors with the key.
template <class F>
auto config_field(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

inline DatasetSpec dataset_spec(const RunConfig& c) {
  DatasetSpec s;
  s.kind = c.get("dataset");
  s.size = static_cast<int>(c.get_int("dataset.size"));
  s.mean_n = static_cast<int>(c.get_int("dataset.mean_n"));
  s.ell = static_cast<int>(c.get_int("dataset.ell"));
  s.extra_edges = static_cast<int>(c.get_int("dataset.extra_edges"));
  s.full_scale = c.get_bool("dataset.full_scale");
  s.retry_budget = static_cast<int>(c.get_int("dataset.retry_budget"));
  s.seed = static_cast<std::uint64_t>(c.get_int("seed"));
  return s;
}

inline ReconConfig model_config(const RunConfig& c, const Dataset& ds) {
  ReconConfig r;
  r.gnn.conv = config_field("model.conv", [&] { return nn::parse_conv(c.get("model.conv")); });
  r.gnn.hidden = static_cast<int>(c.get_int("model.hidden"));
  r.gnn.layers = static_cast<int>(c.get_int("model.layers"));
  r.gnn.norm = config_field("model.norm", [&] { return nn::parse_norm(c.get("model.norm")); });
  r.gnn.readout = config_field("model.readout", [&] { return nn::parse_readout(c.get("model.readout")); });
  r.gnn.jumping_knowledge = c.get_bool("model.jumping_knowledge");
  r.phi_layers = static_cast<int>(c.get_int("model.phi_layers"));
  r.rho_hidden_layers = static_cast<int>(c.get_int("model.rho_hidden_layers"));
  r.rho_identity = c.get_bool("model.rho_identity");
  r.pooling = config_field("model.pooling", [&] { return nn::parse_pooling(c.get("model.pooling")); });
  r.k_rule = config_field("model.k_rule", [&] { return KRule::parse(c.get("model.k_rule")); });
  r.train_samples = static_cast<int>(c.get_int("model.train_samples"));
  r.eval_samples = static_cast<int>(c.get_int("model.eval_samples"));
  r.concat_original = c.get_bool("model.concat_original");
  r.budget = static_cast<std::uint64_t>(c.get_int("budget_subgraphs"));
  r.out_dim = ds.kind == TaskKind::classification ? ds.classes : ds.target_dim;
  if (r.train_samples < 1) throw ConfigError("key 'model.train_samples': must be >= 1");
  if (r.eval_samples < 1) throw ConfigError("key 'model.eval_samples': must be >= 1");
  return r;
}

inline TrainConfig train_config(const RunConfig& c) {
  TrainConfig t;
  t.epochs = static_cast<int>(c.get_int("train.epochs"));
  t.batch_size = static_cast<int>(c.get_int("train.batch_size"));
  t.adam.lr = c.get_double("train.lr");
  t.patience = static_cast<int>(c.get_int("train.patience"));
  t.metric = config_field("train.metric", [&] { return parse_metric(c.get("train.metric")); });
  t.seed = static_cast<std::uint64_t>(c.get_int("seed"));
  if (t.epochs < 1 || t.batch_size < 1) throw ConfigError("keys 'train.epochs' and 'train.batch_size' must be >= 1");
  return t;
}

struct RunOutcome {
  std::vector<double> fold_metrics;  ///< test metric per fold
  double mean = 0;
  double stddev = 0;
  Metric metric = Metric::accuracy;
  std::vector<TrainResult> histories;
  std::vector<ReconModel> models;
};

/// Builds the dataset, trains one model per fold (folds > 1 uses the
/// dataset's cross-validation folds) and evaluates on each fold's test split.
inline RunOutcome run_experiment(const RunConfig& c, bool keep_models = false,
                                 const std::function<void(int fold, int epoch, double, double)>& progress = {}) {
  Dataset ds = build_dataset(dataset_spec(c));
  const int folds = static_cast<int>(c.get_int("folds"));
  if (folds < 1) throw ConfigError("key 'folds': must be >= 1");
  if (folds > 1 && ds.fold.empty()) throw ConfigError("key 'folds': dataset '" + ds.name + "' has no folds");
  RunOutcome out;
  TrainConfig tc = train_config(c);
  out.metric = tc.metric;
  for (int f = 0; f < folds; ++f) {
    if (folds > 1) select_fold(ds, f, folds);
    ReconModel m(model_config(c, ds), derive_seed(tc.seed, "model", static_cast<std::uint64_t>(f)));
    TrainConfig ftc = tc;
    ftc.seed = derive_seed(tc.seed, "train", static_cast<std::uint64_t>(f));
    if (progress) ftc.on_epoch = [&, f](int e, double l, double v) { progress(f, e, l, v); };
    out.histories.push_back(train(m, ds, ftc));
    out.fold_metrics.push_back(evaluate(m, ds, ds.test, tc.metric, ftc.seed));
    if (keep_models) out.models.push_back(std::move(m));
  }
  for (double v : out.fold_metrics) out.mean += v;
  out.mean /= static_cast<double>(out.fold_metrics.size());
  for (double v : out.fold_metrics) out.stddev += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(out.stddev / static_cast<double>(out.fold_metrics.size()));
  return out;
}

}  // namespace recon
