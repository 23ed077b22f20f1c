#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "recon/deck.hpp"
#include "recon/errors.hpp"
#include "recon/generators.hpp"
#include "recon/graph.hpp"
#include "recon/nn.hpp"
#include "recon/rng.hpp"

namespace recon {

using nn::Matrix;

/// How the card size k is chosen for a graph on n vertices.
///   absolute v : k = v
///   n-minus l  : k = n - l; graphs with n <= l + 3 use k = n
///   half       : k = ceil(n / 2)
///   whole      : k = n (the plain GNN)
/// Results are clamped to [min(3, n), n].
struct KRule {
  enum class Kind { absolute, n_minus, half, whole };
  Kind kind = Kind::n_minus;
  int value = 1;

  int resolve(int n) const {
    int k = n;
    switch (kind) {
      case Kind::absolute: k = value; break;
      case Kind::n_minus: k = n <= value + 3 ? n : n - value; break;
      case Kind::half: k = (n + 1) / 2; break;
      case Kind::whole: k = n; break;
    }
    return std::clamp(k, std::min(3, n), n);
  }

  /// "n-1", "n-2", ..., "half", "whole", or a plain integer.
  static KRule parse(const std::string& s) {
    KRule r;
    if (s == "half" || s == "ceil-half") {
      r.kind = Kind::half;
    } else if (s == "whole" || s == "n") {
      r.kind = Kind::whole;
    } else if (s.rfind("n-", 0) == 0) {
      r.kind = Kind::n_minus;
      r.value = std::stoi(s.substr(2));
      if (r.value < 0) throw InvalidArgument("k_rule: negative offset");
    } else {
      try {
        r.kind = Kind::absolute;
        r.value = std::stoi(s);
      } catch (const std::exception&) {
        throw InvalidArgument("k_rule: cannot parse '" + s + "' (expected n-L, half, whole or an integer)");
      }
    }
    return r;
  }

  std::string str() const {
    switch (kind) {
      case Kind::absolute: return std::to_string(value);
      case Kind::n_minus: return "n-" + std::to_string(value);
      case Kind::half: return "half";
      case Kind::whole: return "whole";
    }
    return "?";
  }
};

struct ReconConfig {
  nn::GnnConfig gnn;
  int phi_layers = 0;         ///< dense layers (hidden wide, ReLU) before pooling
  int rho_hidden_layers = 1;  ///< hidden layers after pooling; a final linear layer maps to out_dim
  bool rho_identity = false;  ///< rho = identity; phi then ends in a linear map to out_dim
  nn::Pooling pooling = nn::Pooling::mean;
  int out_dim = 2;
  KRule k_rule;
  int train_samples = 10;
  int eval_samples = 200;
  bool concat_original = false;
  std::uint64_t budget = kDefaultDeckBudget;  ///< cards enumerated by forward_exact
};

/// k-Reconstruction GNN: rho(pool_S phi(h(G[S]))), optionally with h(G)
/// appended to the pooled vector before rho.
class ReconModel {
 public:
  ReconConfig cfg;
  nn::GnnModel base;
  nn::MLP phi, rho;

  struct Pass {
    std::vector<Graph> cards;
    std::vector<nn::GnnModel::Cache> card_caches;
    Matrix card_reps;
    nn::MLP::Cache phi_cache;
    double weight = 1.0;
    Matrix pooled;  // weighted phi sum, before concatenation
    nn::GnnModel::Cache whole_cache;
    Matrix rho_in;
    nn::MLP::Cache rho_cache;
    Matrix out;
  };

  ReconModel() = default;

  ReconModel(const ReconConfig& c, std::uint64_t seed) : cfg(c), base(c.gnn, "gnn") {
    if (c.train_samples < 1) throw InvalidArgument("recon model: train_samples must be >= 1");
    const int d = base.out_dim();
    const int h = c.gnn.hidden;
    if (c.rho_identity) {
      std::vector<int> dims{d};
      for (int i = 0; i < c.phi_layers; ++i) dims.push_back(h);
      dims.push_back(c.out_dim);
      phi = nn::MLP("phi", dims, false);
      if (c.concat_original) throw InvalidArgument("recon model: concat_original needs a non-identity rho");
    } else {
      std::vector<int> dims{d};
      for (int i = 0; i < c.phi_layers; ++i) dims.push_back(h);
      phi = nn::MLP("phi", dims, true);
      std::vector<int> rdims{phi.out(d) + (c.concat_original ? d : 0)};
      for (int i = 0; i < c.rho_hidden_layers; ++i) rdims.push_back(h);
      rdims.push_back(c.out_dim);
      rho = nn::MLP("rho", rdims, false);
    }
    Rng rng = make_rng(seed, "init");
    base.init(rng);
    phi.init(rng);
    rho.init(rng);
  }

  int k_for(int n) const { return cfg.k_rule.resolve(n); }

  std::vector<nn::Tensor*> params() {
    auto out = base.params();
    for (auto* p : phi.params()) out.push_back(p);
    for (auto* p : rho.params()) out.push_back(p);
    return out;
  }

  /// Pooled vector pool_S phi(h(G[S])) over the given subsets, where every
  /// summand carries `weight`.
  Matrix pooled(const Graph& g, const std::vector<std::vector<int>>& subsets, double weight, Pass* pass = nullptr) const {
    if (subsets.empty()) throw InvalidArgument("recon model: no subgraphs to pool");
    const int d = base.out_dim();
    Matrix reps(static_cast<Eigen::Index>(subsets.size()), d);
    if (pass) {
      pass->cards.clear();
      pass->card_caches.assign(subsets.size(), {});
    }
    for (std::size_t i = 0; i < subsets.size(); ++i) {
      Graph card = induced_subgraph(g, subsets[i]);
      reps.row(static_cast<Eigen::Index>(i)) = base.forward(card, pass ? &pass->card_caches[i] : nullptr);
      if (pass) pass->cards.push_back(std::move(card));
    }
    Matrix ys = phi.forward(reps, pass ? &pass->phi_cache : nullptr);
    Matrix p = ys.colwise().sum() * weight;
    if (pass) {
      pass->card_reps = std::move(reps);
      pass->weight = weight;
      pass->pooled = p;
    }
    return p;
  }

  Matrix forward_subsets(const Graph& g, const std::vector<std::vector<int>>& subsets, double weight,
                         Pass* pass = nullptr) const {
    Matrix p = pooled(g, subsets, weight, pass);
    Matrix in = p;
    if (cfg.concat_original) {
      Matrix whole = base.forward(g, pass ? &pass->whole_cache : nullptr);
      in.resize(1, p.cols() + whole.cols());
      in << p, whole;
    }
    Matrix out = rho.forward(in, pass ? &pass->rho_cache : nullptr);
    if (pass) {
      pass->rho_in = in;
      pass->out = out;
    }
    return out;
  }

  /// Weight of each card in the pooled sum for a sample of `taken` cards.
  double card_weight(int n, int k, std::size_t taken) const {
    if (cfg.pooling == nn::Pooling::mean) return 1.0 / static_cast<double>(taken);
    return static_cast<double>(binomial(n, k)) / static_cast<double>(taken);
  }

  std::vector<std::vector<int>> all_subsets(const Graph& g) const {
    const int k = k_for(g.n());
    const std::uint64_t total = binomial(g.n(), k);
    if (total > cfg.budget)
      throw ResourceError("forward_exact: C(" + std::to_string(g.n()) + "," + std::to_string(k) + ") = " +
                          std::to_string(total) + " exceeds budget-subgraphs " + std::to_string(cfg.budget) +
                          "; use forward_sampled");
    std::vector<std::vector<int>> subsets;
    subsets.reserve(total);
    for_each_combination(g.n(), k, [&](std::span<const int> s) { subsets.emplace_back(s.begin(), s.end()); });
    return subsets;
  }

  Matrix forward_exact(const Graph& g, Pass* pass = nullptr) const {
    auto subsets = all_subsets(g);
    return forward_subsets(g, subsets, card_weight(g.n(), k_for(g.n()), subsets.size()), pass);
  }

  Matrix pooled_exact(const Graph& g) const {
    auto subsets = all_subsets(g);
    return pooled(g, subsets, card_weight(g.n(), k_for(g.n()), subsets.size()));
  }

  /// `count` cards drawn uniformly without replacement (count = 0 means
  /// train_samples), with the |S|/|S_B| correction for sum pooling.
  Matrix forward_sampled(const Graph& g, Rng& rng, int count = 0, Pass* pass = nullptr) const {
    const int k = k_for(g.n());
    auto subsets = sample_k_subsets(g.n(), k, count > 0 ? count : cfg.train_samples, rng);
    return forward_subsets(g, subsets, card_weight(g.n(), k, subsets.size()), pass);
  }

  Matrix pooled_sampled(const Graph& g, Rng& rng, int count) const {
    const int k = k_for(g.n());
    auto subsets = sample_k_subsets(g.n(), k, count, rng);
    return pooled(g, subsets, card_weight(g.n(), k, subsets.size()));
  }

  /// Evaluation protocol: exact when C(n, k) <= eval_samples, otherwise
  /// eval_samples cards sampled from `rng`.
  Matrix forward_eval(const Graph& g, Rng& rng) const {
    const int k = k_for(g.n());
    if (binomial(g.n(), k) <= static_cast<std::uint64_t>(cfg.eval_samples)) return forward_exact(g);
    return forward_sampled(g, rng, cfg.eval_samples);
  }

  void backward(const Graph& g, Pass& pass, const Matrix& dout) {
    Matrix din = rho.backward(pass.rho_cache, dout);
    const Eigen::Index pc = pass.pooled.cols();
    Matrix dpooled = din.leftCols(pc);
    if (cfg.concat_original) base.backward(g, pass.whole_cache, din.rightCols(din.cols() - pc));
    Matrix dys = (dpooled * pass.weight).replicate(pass.card_reps.rows(), 1);
    Matrix dreps = phi.backward(pass.phi_cache, dys);
    for (std::size_t i = 0; i < pass.cards.size(); ++i)
      base.backward(pass.cards[i], pass.card_caches[i], dreps.row(static_cast<Eigen::Index>(i)));
  }

  json checkpoint() {
    json j = nn::params_to_json(params());
    j["schema_version"] = 1;
    return j;
  }

  void load_checkpoint(const json& j) { nn::params_from_json(params(), j); }
};

// ---------------------------------------------------------------------------
// Losses and risk

inline nn::LossValue item_loss(const Dataset& ds, const Item& item, const Matrix& out) {
  if (ds.kind == TaskKind::classification) return nn::cross_entropy(out, item.label);
  Matrix target(1, static_cast<Eigen::Index>(item.target.size()));
  for (std::size_t i = 0; i < item.target.size(); ++i) target(0, static_cast<Eigen::Index>(i)) = item.target[i];
  return nn::mse(out, target);
}

struct RiskEstimate {
  std::string kind = "reconstruction";  ///< gnn | data_augmentation | reconstruction
  bool surrogate = false;                ///< sampled-card upper-bound surrogate rather than the exact risk
  double value = 0;
  std::vector<double> per_graph;
};

enum class RiskMode { exact, sampled };

/// Empirical risk over `split`: mean per-item loss under exact
/// forwarding, or under `train_samples` sampled cards (labelled surrogate).
inline RiskEstimate empirical_risk(const ReconModel& m, const Dataset& ds, const std::vector<std::size_t>& split,
                                   RiskMode mode, std::uint64_t seed = 0) {
  if (split.empty()) throw InvalidArgument("empirical_risk: empty split");
  RiskEstimate r;
  r.surrogate = mode == RiskMode::sampled;
  Rng rng = make_rng(seed, "risk");
  for (auto i : split) {
    const auto& item = ds.items[i];
    Matrix out = mode == RiskMode::exact ? m.forward_exact(item.graph) : m.forward_sampled(item.graph, rng);
    r.per_graph.push_back(item_loss(ds, item, out).value);
  }
  double s = 0;
  for (double x : r.per_graph) s += x;
  r.value = s / static_cast<double>(r.per_graph.size());
  return r;
}

// ---------------------------------------------------------------------------
// Evaluation

enum class Metric { accuracy, log10_mse, mse };

inline Metric parse_metric(const std::string& s) {
  if (s == "accuracy") return Metric::accuracy;
  if (s == "log10-mse") return Metric::log10_mse;
  if (s == "mse") return Metric::mse;
  throw InvalidArgument("unknown metric '" + s + "' (expected accuracy|log10-mse|mse)");
}

inline std::string to_string(Metric m) {
  switch (m) {
    case Metric::accuracy: return "accuracy";
    case Metric::log10_mse: return "log10-mse";
    case Metric::mse: return "mse";
  }
  return "?";
}

inline bool higher_is_better(Metric m) { return m == Metric::accuracy; }

/// Accuracy in percent; mse as the mean over tasks of per-task MSE; log10-mse
/// as the mean over tasks of log10(per-task MSE).
inline double metric_from_outputs(const Dataset& ds, const std::vector<std::size_t>& split,
                                  const std::vector<Matrix>& outs, Metric metric) {
  if (split.empty()) throw InvalidArgument("evaluate: empty split");
  if (metric == Metric::accuracy) {
    if (ds.kind != TaskKind::classification) throw InvalidArgument("evaluate: accuracy needs a classification task");
    std::size_t correct = 0;
    for (std::size_t j = 0; j < split.size(); ++j) {
      Eigen::Index arg;
      outs[j].row(0).maxCoeff(&arg);
      correct += arg == ds.items[split[j]].label;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(split.size());
  }
  if (ds.kind == TaskKind::classification) throw InvalidArgument("evaluate: mse metrics need a regression task");
  const int d = ds.target_dim;
  std::vector<double> task(d, 0.0);
  for (std::size_t j = 0; j < split.size(); ++j)
    for (int t = 0; t < d; ++t) task[t] += std::pow(outs[j](0, t) - ds.items[split[j]].target[t], 2);
  double agg = 0;
  for (double& x : task) {
    x /= static_cast<double>(split.size());
    agg += metric == Metric::log10_mse ? std::log10(std::max(x, 1e-300)) : x;
  }
  return agg / d;
}

inline double evaluate(const ReconModel& m, const Dataset& ds, const std::vector<std::size_t>& split, Metric metric,
                       std::uint64_t seed = 0) {
  std::vector<Matrix> outs;
  outs.reserve(split.size());
  for (auto i : split) {
    Rng rng = make_rng(seed, "eval", i);
    outs.push_back(m.forward_eval(ds.items[i].graph, rng));
  }
  return metric_from_outputs(ds, split, outs, metric);
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  nn::AdamConfig adam;
  std::uint64_t seed = 0;
  Metric metric = Metric::accuracy;
  int patience = 0;  ///< stop after this many epochs without validation improvement; 0 disables
  std::function<void(int epoch, double train_loss, double val_metric)> on_epoch;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double val_metric = 0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val = 0;
};

/// Minibatch Adam over sampled forward passes (fresh uniform card draws per
/// step). The model ends at the parameters of the best validation epoch.
inline TrainResult train(ReconModel& m, const Dataset& ds, const TrainConfig& tc) {
  if (ds.train.empty()) throw InvalidArgument("train: empty train split");
  const auto& val = ds.val.empty() ? ds.train : ds.val;
  auto params = m.params();
  nn::Adam opt{tc.adam};
  TrainResult result;
  json best;
  const bool up = higher_is_better(tc.metric);
  int since_best = 0;

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    std::vector<std::size_t> order = ds.train;
    Rng shuffle_rng = make_rng(tc.seed, "shuffle", static_cast<std::uint64_t>(epoch));
    shuffle(order, shuffle_rng);
    Rng sample_rng = make_rng(tc.seed, "samples", static_cast<std::uint64_t>(epoch));
    double total = 0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
      nn::zero_grads(params);
      for (std::size_t j = start; j < end; ++j) {
        const auto& item = ds.items[order[j]];
        ReconModel::Pass pass;
        Matrix out = m.forward_sampled(item.graph, sample_rng, 0, &pass);
        auto loss = item_loss(ds, item, out);
        if (!std::isfinite(loss.value))
          throw TrainingError("train: non-finite loss " + std::to_string(loss.value) + " at epoch " +
                              std::to_string(epoch) + ", item " + std::to_string(order[j]) + ", step " +
                              std::to_string(opt.t) + " (lower the learning rate or enable standardization)");
        total += loss.value;
        m.backward(item.graph, pass, loss.grad / static_cast<double>(end - start));
      }
      opt.step(params);
    }
    const double train_loss = total / static_cast<double>(order.size());
    const double v = evaluate(m, ds, val, tc.metric, tc.seed);
    if (!std::isfinite(v)) throw TrainingError("train: non-finite validation metric at epoch " + std::to_string(epoch));
    result.history.push_back({epoch, train_loss, v});
    if (tc.on_epoch) tc.on_epoch(epoch, train_loss, v);
    // Ties go to the later epoch: validation splits are small and accuracy
    // saturates long before the loss does.
    if (result.best_epoch < 0 || (up ? v >= result.best_val : v <= result.best_val)) {
      result.best_epoch = epoch;
      result.best_val = v;
      best = nn::params_to_json(params);
      since_best = 0;
    } else if (tc.patience > 0 && ++since_best >= tc.patience) {
      break;
    }
  }
  nn::params_from_json(params, best);
  return result;
}

inline std::string curve_csv(const TrainResult& r) {
  std::string s = "epoch,train_loss,val_metric\n";
  for (const auto& e : r.history) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g\n", e.epoch, e.train_loss, e.val_metric);
    s += buf;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Variance of the three risk estimators on a hereditary task

struct VarianceConfig {
  int trials = 1000;  ///< bootstrap resamples
  std::uint64_t seed = 0;
  /// Label of a card; the dataset label must survive on every k-card.
  std::function<double(const Graph&)> label = [](const Graph& g) { return is_connected(g) ? 1.0 : 0.0; };
};

struct VarianceResult {
  int k_offset = 0;  ///< ell in k = n - ell
  std::size_t items = 0;
  double var_gnn = 0, var_aug = 0, var_recon = 0;  ///< variance of the resampled risks
  double mean_gnn = 0, mean_aug = 0, mean_recon = 0;
  double confidence = 0;  ///< fraction of resamples with var_recon <= var_aug <= var_gnn
  double confidence_aug_gnn = 0, confidence_recon_aug = 0;
};

/// Throws InvalidDataset when some k-card of an item (k from the model's
/// rule) carries a different label than the item.
inline void check_hereditary(const ReconModel& m, const Dataset& ds, const VarianceConfig& vc) {
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    const auto& item = ds.items[i];
    const double y = item.target.empty() ? item.label : item.target[0];
    if (vc.label(item.graph) != y)
      throw InvalidDataset("variance: item " + std::to_string(i) + " label disagrees with the label function");
    const int k = m.k_for(item.graph.n());
    for_each_combination(item.graph.n(), k, [&](std::span<const int> s) {
      if (vc.label(induced_subgraph(item.graph, s)) != y)
        throw InvalidDataset("variance: item " + std::to_string(i) + " has a " + std::to_string(k) +
                             "-card with a different label; the task is not hereditary at this k");
    });
  }
}

/// Estimators over the whole dataset with squared loss and fixed weights:
///   a) gnn: loss of one uniformly drawn card per item
///   b) data augmentation: mean loss over all k-cards
///   c) reconstruction: loss of the mean card representation
/// Each of `trials` bootstrap resamples redraws the items (and the cards of
/// a); the reported variances are across resamples.
inline VarianceResult variance_experiment(const ReconModel& m, const Dataset& ds, const VarianceConfig& vc) {
  if (ds.kind == TaskKind::classification) throw InvalidArgument("variance: needs a regression dataset (squared loss)");
  if (!m.cfg.rho_identity || m.cfg.concat_original || m.cfg.out_dim != 1)
    throw InvalidArgument("variance: needs an identity rho with one output and no whole-graph concatenation");
  if (ds.items.empty()) throw InvalidArgument("variance: empty dataset");
  if (vc.trials < 2) throw InvalidArgument("variance: need at least 2 trials");
  check_hereditary(m, ds, vc);

  const std::size_t N = ds.items.size();
  std::vector<std::vector<double>> card_loss(N);
  std::vector<double> aug(N), recon(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto& g = ds.items[i].graph;
    const double y = ds.items[i].target[0];
    auto subsets = m.all_subsets(g);
    ReconModel::Pass pass;
    m.pooled(g, subsets, 1.0 / static_cast<double>(subsets.size()), &pass);
    Matrix phis = m.phi.forward(pass.card_reps);
    double s = 0;
    for (Eigen::Index c = 0; c < phis.rows(); ++c) {
      const double l = std::pow(phis(c, 0) - y, 2);
      card_loss[i].push_back(l);
      s += l;
    }
    aug[i] = s / static_cast<double>(phis.rows());
    recon[i] = std::pow(phis.col(0).mean() - y, 2);
  }

  auto var_of = [](const std::vector<double>& x) {
    double mean = 0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double s = 0;
    for (double v : x) s += (v - mean) * (v - mean);
    return std::pair{mean, s / static_cast<double>(x.size() - 1)};
  };

  VarianceResult r;
  r.items = N;
  r.k_offset = ds.items[0].graph.n() - m.k_for(ds.items[0].graph.n());
  std::vector<double> ra, rb, rc;
  std::vector<double> la(N), lb(N), lc(N);
  int both = 0, ab = 0, bc = 0;
  for (int t = 0; t < vc.trials; ++t) {
    Rng rng = make_rng(vc.seed, "bootstrap", static_cast<std::uint64_t>(t));
    for (std::size_t j = 0; j < N; ++j) {
      const std::size_t i = uniform_below(rng, N);
      la[j] = card_loss[i][uniform_below(rng, card_loss[i].size())];
      lb[j] = aug[i];
      lc[j] = recon[i];
    }
    auto [ma, va] = var_of(la);
    auto [mb, vb] = var_of(lb);
    auto [mc, vcv] = var_of(lc);
    ra.push_back(ma);
    rb.push_back(mb);
    rc.push_back(mc);
    ab += vb <= va;
    bc += vcv <= vb;
    both += vcv <= vb && vb <= va;
  }
  std::tie(r.mean_gnn, r.var_gnn) = var_of(ra);
  std::tie(r.mean_aug, r.var_aug) = var_of(rb);
  std::tie(r.mean_recon, r.var_recon) = var_of(rc);
  r.confidence = static_cast<double>(both) / vc.trials;
  r.confidence_aug_gnn = static_cast<double>(ab) / vc.trials;
  r.confidence_recon_aug = static_cast<double>(bc) / vc.trials;
  return r;
}

}  // namespace recon
