#pragma once

// The acceptance suite as library functions, shared by the acceptance test
// binary and `recon audit-all`.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "recon/config.hpp"
#include "recon/families.hpp"
#include "recon/generators.hpp"
#include "recon/nn.hpp"
#include "recon/recon_gnn.hpp"
#include "recon/reconstruction.hpp"
#include "recon/wl.hpp"

namespace recon::audit {

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

struct Options {
  bool tier_n8 = false;     ///< opt-in n = 8 reconstruction audit
  std::string golden_path;  ///< frozen spider pair; empty skips the comparison
  std::uint64_t seed = 0;
  std::function<void(const std::string&)> log;  ///< progress lines
};

inline void say(const Options& o, const std::string& s) {
  if (o.log) o.log(s);
}

inline std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// ---------------------------------------------------------------------------
// Shipped experiment configs; configs/*.conf hold the same text.

inline const std::map<std::string, std::string>& builtin_configs() {
  static const std::string csl_common =
      "dataset = csl\nfolds = 5\nmodel.hidden = 32\nmodel.layers = 4\nmodel.norm = graph\nmodel.readout = sum\n"
      "model.phi_layers = 0\nmodel.rho_hidden_layers = 1\nmodel.pooling = mean\nmodel.train_samples = 20\n"
      "model.eval_samples = 200\ntrain.epochs = 100\ntrain.batch_size = 16\ntrain.lr = 0.001\n"
      "train.metric = accuracy\n";
  static const std::string cycles_common =
      "model.conv = gin\nmodel.hidden = 32\nmodel.layers = 4\nmodel.norm = graph\nmodel.readout = sum\n"
      "model.phi_layers = 1\nmodel.rho_hidden_layers = 2\nmodel.pooling = mean\nmodel.train_samples = 10\n"
      "model.eval_samples = 200\ntrain.epochs = 40\ntrain.batch_size = 32\ntrain.lr = 0.001\n"
      "train.metric = accuracy\n";
  static const std::map<std::string, std::string> c{
      {"csl-gcn", csl_common + "model.conv = gcn\nmodel.k_rule = whole\n"},
      {"csl-gin", csl_common + "model.conv = gin\nmodel.k_rule = whole\n"},
      {"csl-recon-gcn", csl_common + "model.conv = gcn\nmodel.k_rule = n-1\n"},
      {"csl-half-gcn", csl_common + "model.conv = gcn\nmodel.k_rule = half\n"},
      {"cycles4-gin", "dataset = cycles-4\n" + cycles_common + "model.k_rule = whole\n"},
      {"cycles4-recon-gin", "dataset = cycles-4\n" + cycles_common + "model.k_rule = n-1\n"},
      {"cycles4-half-gin", "dataset = cycles-4\n" + cycles_common + "model.k_rule = half\n"},
      {"cycles6-gin", "dataset = cycles-6\n" + cycles_common + "model.k_rule = whole\n"},
      {"cycles6-recon-gin", "dataset = cycles-6\n" + cycles_common + "model.k_rule = n-1\n"},
      {"cycles6-half-gin", "dataset = cycles-6\n" + cycles_common + "model.k_rule = half\n"},
      {"variance",
       "dataset = padded-connectivity\ndataset.ell = 2\ndataset.size = 1000\nmodel.conv = gin\nmodel.hidden = 16\n"
       "model.layers = 3\nmodel.norm = graph\nmodel.rho_identity = true\nmodel.phi_layers = 1\nmodel.k_rule = n-2\n"
       "model.train_samples = 5\ntrain.epochs = 15\ntrain.lr = 0.003\ntrain.metric = mse\nvariance.trials = 1000\n"},
      {"multitask-recon-gin",
       "dataset = multitask\nmodel.conv = gin\nmodel.hidden = 32\nmodel.layers = 4\nmodel.norm = graph\n"
       "model.phi_layers = 0\nmodel.rho_hidden_layers = 2\nmodel.k_rule = n-1\nmodel.train_samples = 10\n"
       "train.epochs = 30\ntrain.metric = log10-mse\n"},
  };
  return c;
}

inline RunConfig builtin_config(const std::string& name, std::uint64_t seed = 0) {
  auto it = builtin_configs().find(name);
  if (it == builtin_configs().end()) throw InvalidArgument("no built-in config '" + name + "'");
  RunConfig c = RunConfig::parse(it->second, name);
  c.set("seed", std::to_string(seed));
  return c;
}

// ---------------------------------------------------------------------------
// 1-7: exact combinatorial checks

inline CheckResult check_kelly(const Options& o) {
  CheckResult r{1, "kelly oracle equivalence (n <= 7, |h| <= 4)"};
  std::uint64_t checked = 0, bad = 0;
  for (int n = 2; n <= 7; ++n) {
    for (const Graph& g : enumerate_graphs(n)) {
      Deck d = deck(g, n - 1);
      for (int s = 1; s <= std::min(4, n - 1); ++s)
        for (const Graph& h : enumerate_graphs(s)) {
          ++checked;
          bad += kelly_count(d, h, n) != count_induced(g, h);
        }
    }
    say(o, "  kelly: n = " + std::to_string(n) + " done");
  }
  r.pass = bad == 0 && checked > 0;
  r.detail = std::to_string(checked) + " (graph, pattern) pairs, " + std::to_string(bad) + " mismatches";
  return r;
}

inline CheckResult check_reconstruction(const Options& o) {
  CheckResult r{2, "reconstruction audit, k = n-1"};
  const int top = o.tier_n8 ? 8 : 7;
  std::size_t groups = 0, classes = 0;
  for (int n = 3; n <= top; ++n) {
    auto rep = audit_k_reconstructibility(n, n - 1);
    groups += rep.colliding_groups.size();
    classes += rep.classes;
    say(o, "  recon-check n = " + std::to_string(n) + ": " + std::to_string(rep.colliding_groups.size()) + " groups");
  }
  r.pass = groups == 0;
  r.detail = "n = 3.." + std::to_string(top) + (o.tier_n8 ? " (n = 8 tier on)" : " (CI tier)") + ", " +
             std::to_string(classes) + " classes, " + std::to_string(groups) + " colliding groups";
  return r;
}

inline CheckResult check_deck_hierarchy(const Options& o) {
  CheckResult r{3, "deck hierarchy: same k-deck implies same (k-1)-deck"};
  std::uint64_t pairs = 0, bad = 0;
  for (int n = 5; n <= 7; ++n) {
    const auto& gs = enumerate_graphs(n);
    for (int k = 4; k <= n - 1; ++k) {
      std::map<std::map<CanonicalForm, std::uint64_t>, std::vector<std::size_t>> groups;
      for (std::size_t i = 0; i < gs.size(); ++i) groups[deck(gs[i], k).cards].push_back(i);
      for (const auto& [_, idx] : groups) {
        if (idx.size() < 2) continue;
        const Deck ref = deck(gs[idx[0]], k - 1);
        for (std::size_t j = 1; j < idx.size(); ++j) {
          ++pairs;
          bad += !(deck(gs[idx[j]], k - 1).cards == ref.cards);
        }
      }
    }
    say(o, "  hierarchy: n = " + std::to_string(n) + " done");
  }
  r.pass = bad == 0;
  r.detail = std::to_string(pairs) + " same-deck pairs checked, " + std::to_string(bad) + " violations";
  return r;
}

inline CheckResult check_fingerprint(const Options& o) {
  CheckResult r{4, "full-reconstruction fingerprint injective (n <= 7)"};
  std::map<Digest128, CanonicalForm> seen;
  std::uint64_t collisions = 0, total = 0;
  for (int n = 0; n <= 7; ++n) {
    for (const Graph& g : enumerate_graphs(n)) {
      ++total;
      auto form = canonical_form(g);
      auto [it, fresh] = seen.emplace(full_reconstruction_fingerprint(g), form);
      if (!fresh && it->second != form) ++collisions;
    }
  }
  say(o, "  fingerprint: " + std::to_string(total) + " classes hashed");
  r.pass = collisions == 0 && seen.size() == total;
  r.detail = std::to_string(total) + " classes, " + std::to_string(seen.size()) + " distinct fingerprints, " +
             std::to_string(collisions) + " collisions";
  return r;
}

inline CheckResult check_csl_wl(const Options& o) {
  CheckResult r{5, "CSL pairs: 1-WL blind, (m-1)-deck 1-WL separates (9 <= m <= 20)"};
  std::uint64_t pairs = 0, wl_bad = 0, deck_bad = 0;
  for (int m = 9; m <= 20; ++m) {
    std::map<CanonicalForm, Graph> classes;
    for (int s = 2; s < m - 1; ++s)
      if (std::gcd(m, s) == 1) {
        Graph g = csl_graph(m, s);
        classes.emplace(canonical_form(g, m), std::move(g));
      }
    std::vector<const Graph*> reps;
    for (const auto& [_, g] : classes) reps.push_back(&g);
    for (std::size_t i = 0; i < reps.size(); ++i)
      for (std::size_t j = i + 1; j < reps.size(); ++j) {
        ++pairs;
        wl_bad += wl_distinguishes(*reps[i], *reps[j], 1);
        deck_bad += !deck_wl_distinguishes(*reps[i], *reps[j], m - 1);
      }
  }
  say(o, "  csl-wl: " + std::to_string(pairs) + " pairs");
  r.pass = pairs > 0 && wl_bad == 0 && deck_bad == 0;
  r.detail = std::to_string(pairs) + " non-isomorphic pairs; 1-WL separated " + std::to_string(wl_bad) +
             ", deck 1-WL missed " + std::to_string(deck_bad);
  return r;
}

inline CheckResult check_srg(const Options& o) {
  CheckResult r{6, "rook 4x4 vs Shrikhande: 2-WL blind, 14-deck 1-WL separates"};
  auto [rook, shrikhande] = srg_pair();
  const bool wl2_sep = wl_distinguishes(rook, shrikhande, 2);
  const bool deck_sep = deck_wl_distinguishes(rook, shrikhande, 14);
  say(o, "  srg: done");
  r.pass = !wl2_sep && deck_sep;
  r.detail = std::string("2-WL ") + (wl2_sep ? "separates" : "does not separate") + "; 14-deck 1-WL " +
             (deck_sep ? "separates" : "does not separate");
  return r;
}

struct SpiderSearch {
  int n = 0, k = 0;
  Graph first, second;  ///< first pair found (smallest n, enumeration order)
  std::size_t spider_pairs = 0, tree_pairs = 0;
  bool found = false;
};

/// Pairs of spiders, and of trees, on n <= 12 vertices with identical
/// ceil(n/2)-decks that 1-WL distinguishes. Starts at n = 5 so that k >= 3;
/// at k = 2 the deck only counts edges.
inline SpiderSearch search_spider_pairs(const Options& o, int max_n = 12) {
  SpiderSearch s;
  auto scan = [&](const std::vector<Graph>& gs, int n, std::size_t& count) {
    const int k = (n + 1) / 2;
    std::map<std::map<CanonicalForm, std::uint64_t>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < gs.size(); ++i) groups[deck(gs[i], k).cards].push_back(i);
    for (const auto& [_, idx] : groups)
      for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
          if (!wl_distinguishes(gs[idx[a]], gs[idx[b]], 1)) continue;
          ++count;
          if (!s.found) {
            s.found = true;
            s.n = n;
            s.k = k;
            s.first = gs[idx[a]];
            s.second = gs[idx[b]];
          }
        }
  };
  for (int n = 5; n <= max_n; ++n) {
    scan(enumerate_spiders(n), n, s.spider_pairs);
    scan(enumerate_trees(n), n, s.tree_pairs);
    say(o, "  spiders: n = " + std::to_string(n) + ", pairs so far " + std::to_string(s.spider_pairs) + " spider / " +
               std::to_string(s.tree_pairs) + " tree");
  }
  return s;
}

inline json spider_pair_json(const SpiderSearch& s) {
  json j;
  j["n"] = s.n;
  j["k"] = s.k;
  j["pair"] = {to_json(s.first), to_json(s.second)};
  return j;
}

inline CheckResult check_spiders(const Options& o) {
  CheckResult r{7, "spiders/trees on <= 12 vertices: equal ceil(n/2)-decks, 1-WL separable"};
  auto s = search_spider_pairs(o);
  r.pass = s.found;
  r.detail = std::to_string(s.spider_pairs) + " spider pairs, " + std::to_string(s.tree_pairs) + " tree pairs";
  if (s.found) r.detail += "; first at n = " + std::to_string(s.n) + ", k = " + std::to_string(s.k);
  if (!o.golden_path.empty()) {
    if (!std::filesystem::exists(o.golden_path)) {
      r.pass = false;
      r.detail += "; golden file missing: " + o.golden_path;
    } else {
      json g = json::parse(read_file(o.golden_path));
      Graph a = graph_from_json(g["pair"][0]), b = graph_from_json(g["pair"][1]);
      const int k = g["k"].get<int>();
      std::set<CanonicalForm> golden{canonical_form(a), canonical_form(b)};
      std::set<CanonicalForm> found{canonical_form(s.first), canonical_form(s.second)};
      const bool same = s.found && golden == found && k == s.k;
      const bool valid = same_deck(a, b, k) && wl_distinguishes(a, b, 1);
      r.pass = r.pass && same && valid;
      r.detail += same ? "; matches golden pair" : "; DIFFERS from golden pair";
      if (!valid) r.detail += "; golden pair no longer satisfies the property";
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// 8-10: learning experiments

/// Trains and evaluates a built-in config; results are memoized per
/// (name, seed) so checks that share a run do not repeat it.
inline RunOutcome run_logged(const Options& o, const std::string& name) {
  static std::map<std::pair<std::string, std::uint64_t>, RunOutcome> memo;
  if (auto it = memo.find({name, o.seed}); it != memo.end()) return it->second;
  auto c = builtin_config(name, o.seed);
  auto start = std::chrono::steady_clock::now();
  auto out = run_experiment(c, false, [&](int f, int e, double loss, double v) {
    if ((e + 1) % 10 == 0)
      say(o, "    " + name + " fold " + std::to_string(f) + " epoch " + std::to_string(e + 1) + " loss " +
                 fmt("%.4f", loss) + " val " + fmt("%.2f", v));
  });
  std::string folds;
  for (double v : out.fold_metrics) folds += (folds.empty() ? "" : " ") + fmt("%.1f", v);
  say(o, "  " + name + ": test " + fmt("%.2f", out.mean) + " +- " + fmt("%.2f", out.stddev) + " [" + folds + "] (" +
             fmt("%.0f", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()) + " s)");
  memo[{name, o.seed}] = out;
  return out;
}

inline CheckResult check_csl_learning(const Options& o) {
  CheckResult r{8, "CSL 5-fold: plain GCN/GIN <= 20%, (n-1)-Reconstruction GCN >= 95%"};
  auto gcn = run_logged(o, "csl-gcn");
  auto gin = run_logged(o, "csl-gin");
  auto rec = run_logged(o, "csl-recon-gcn");
  r.pass = gcn.mean <= 20.0 && gin.mean <= 20.0 && rec.mean >= 95.0;
  r.detail = "GCN " + fmt("%.2f", gcn.mean) + ", GIN " + fmt("%.2f", gin.mean) + ", (n-1)-GCN " + fmt("%.2f", rec.mean) +
             " +- " + fmt("%.2f", rec.stddev);
  return r;
}

/// Hierarchy invariant on CSL: the ceil(n/2) variant does not beat n-1.
inline CheckResult check_csl_hierarchy(const Options& o) {
  CheckResult r{0, "CSL hierarchy: ceil(n/2)-GCN accuracy <= (n-1)-GCN accuracy"};
  auto half = run_logged(o, "csl-half-gcn");
  auto rec = run_logged(o, "csl-recon-gcn");
  r.pass = half.mean <= rec.mean;
  r.detail = "ceil(n/2) " + fmt("%.2f", half.mean) + ", n-1 " + fmt("%.2f", rec.mean);
  return r;
}

inline CheckResult check_cycles(const Options& o) {
  CheckResult r{9, "cycles-4/6: (n-1)-GIN >= GIN + 2 points, ceil(n/2)-GIN < (n-1)-GIN"};
  bool ok = true;
  for (const std::string L : {"4", "6"}) {
    auto plain = run_logged(o, "cycles" + L + "-gin");
    auto rec = run_logged(o, "cycles" + L + "-recon-gin");
    auto half = run_logged(o, "cycles" + L + "-half-gin");
    ok = ok && rec.mean >= plain.mean + 2.0 && half.mean < rec.mean;
    if (!r.detail.empty()) r.detail += "; ";
    r.detail += "cycles-" + L + ": GIN " + fmt("%.1f", plain.mean) + ", (n-1) " + fmt("%.1f", rec.mean) +
                ", ceil(n/2) " + fmt("%.1f", half.mean);
  }
  r.pass = ok;
  return r;
}

inline VarianceResult run_variance(const RunConfig& c) {
  Dataset ds = build_dataset(dataset_spec(c));
  TrainConfig tc = train_config(c);
  ReconModel m(model_config(c, ds), derive_seed(tc.seed, "model"));
  train(m, ds, tc);
  VarianceConfig vc;
  vc.trials = static_cast<int>(c.get_int("variance.trials"));
  vc.seed = derive_seed(tc.seed, "variance");
  return variance_experiment(m, ds, vc);
}

inline CheckResult check_variance(const Options& o) {
  CheckResult r{10, "variance: var_recon <= var_aug <= var_gnn, >= 95% bootstrap confidence"};
  auto v = run_variance(builtin_config("variance", o.seed));
  r.pass = v.var_recon <= v.var_aug && v.var_aug <= v.var_gnn && v.confidence >= 0.95;
  char buf[256];
  std::snprintf(buf, sizeof buf, "var_gnn %.3e, var_aug %.3e, var_recon %.3e, confidence %.3f over %zu items",
                v.var_gnn, v.var_aug, v.var_recon, v.confidence, v.items);
  r.detail = buf;
  say(o, "  variance: " + r.detail);
  return r;
}

// ---------------------------------------------------------------------------
// 11: sampling estimator against exact pooling

struct SamplingReport {
  std::size_t coords = 0, outside = 0;
  double worst_z = 0;
};

inline SamplingReport sampling_consistency(std::uint64_t seed, int graphs = 10, int draws = 10'000) {
  SamplingReport rep;
  for (int gi = 0; gi < graphs; ++gi) {
    Rng rng = make_rng(seed, "sampling-graph", static_cast<std::uint64_t>(gi));
    const int n = uniform_int(rng, 8, 10);
    Graph g = erdos_renyi(n, 0.4, rng);
    ReconConfig rc;
    rc.gnn.hidden = 8;
    rc.gnn.layers = 2;
    rc.phi_layers = 1;
    rc.k_rule = KRule::parse("half");
    rc.train_samples = 10;
    rc.pooling = gi % 2 == 0 ? nn::Pooling::mean : nn::Pooling::sum;
    ReconModel m(rc, derive_seed(seed, "sampling-model", static_cast<std::uint64_t>(gi)));
    Matrix exact = m.pooled_exact(g);
    const Eigen::Index d = exact.cols();
    Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(d), sq = Eigen::ArrayXd::Zero(d);
    Rng draw = make_rng(seed, "sampling-draws", static_cast<std::uint64_t>(gi));
    for (int t = 0; t < draws; ++t) {
      Eigen::ArrayXd p = m.pooled_sampled(g, draw, rc.train_samples).row(0).transpose().array();
      sum += p;
      sq += p * p;
    }
    for (Eigen::Index c = 0; c < d; ++c) {
      const double mean = sum(c) / draws;
      const double var = std::max(0.0, (sq(c) - draws * mean * mean) / (draws - 1));
      const double se = std::max(std::sqrt(var / draws), 1e-12);
      const double z = std::abs(mean - exact(0, c)) / se;
      rep.worst_z = std::max(rep.worst_z, z);
      ++rep.coords;
      rep.outside += z > 3.0;
    }
  }
  return rep;
}

inline CheckResult check_sampling(const Options& o) {
  CheckResult r{11, "sampled pooled vector mean within 3 SE of exact (10 graphs, 10,000 draws)"};
  auto rep = sampling_consistency(o.seed);
  r.pass = rep.outside == 0;
  r.detail = std::to_string(rep.coords) + " coordinates, " + std::to_string(rep.outside) + " outside 3 SE, worst z " +
             fmt("%.2f", rep.worst_z);
  say(o, "  sampling: " + r.detail);
  return r;
}

// ---------------------------------------------------------------------------
// 12: finite differences and permutation invariance

/// Largest entrywise |analytic - numeric| / max(|analytic|, |numeric|, floor)
/// over all parameters, with central differences of step h.
inline double gradient_error(const std::vector<nn::Tensor*>& params, const std::function<double()>& loss,
                             const std::function<void()>& backprop, double h = 1e-5, double floor = 1e-3) {
  nn::zero_grads(params);
  backprop();
  double worst = 0;
  for (nn::Tensor* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& w = p->value.data()[i];
      const double saved = w;
      w = saved + h;
      const double up = loss();
      w = saved - h;
      const double down = loss();
      w = saved;
      const double num = (up - down) / (2 * h), ana = p->grad.data()[i];
      worst = std::max(worst, std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), floor}));
    }
  }
  return worst;
}

/// Same for a gradient with respect to an input matrix.
inline double input_gradient_error(Matrix& x, const Matrix& analytic, const std::function<double()>& loss,
                                   double h = 1e-5, double floor = 1e-3) {
  double worst = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double& v = x.data()[i];
    const double saved = v;
    v = saved + h;
    const double up = loss();
    v = saved - h;
    const double down = loss();
    v = saved;
    const double num = (up - down) / (2 * h), ana = analytic.data()[i];
    worst = std::max(worst, std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), floor}));
  }
  return worst;
}

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform_real(rng, -1.0, 1.0);
  return m;
}

inline Graph random_attributed_graph(int n, double p, int dim, Rng& rng) {
  Graph g = erdos_renyi(n, p, rng);
  std::vector<AttrVector> attrs(n);
  for (auto& a : attrs)
    for (int i = 0; i < dim; ++i) a.push_back(uniform_int(rng, 0, 3));
  return Graph(n, g.edges(), attrs);
}

struct NumericsReport {
  std::map<std::string, double> grad_errors;  ///< component -> worst relative error
  std::map<std::string, double> perm_errors;  ///< component -> worst absolute deviation
  double worst_grad = 0, worst_perm = 0;
};

inline NumericsReport numerics(std::uint64_t seed, int instances = 10, int perms = 100) {
  NumericsReport rep;
  auto note = [&](const std::string& k, double e) {
    rep.grad_errors[k] = std::max(rep.grad_errors[k], e);
    rep.worst_grad = std::max(rep.worst_grad, e);
  };
  for (int inst = 0; inst < instances; ++inst) {
    Rng rng = make_rng(seed, "numerics", static_cast<std::uint64_t>(inst));

    {  // dense and mlp
      nn::Dense d("d", 3, 4);
      d.init(rng);
      Matrix x = random_matrix(5, 3, rng), R = random_matrix(5, 4, rng);
      auto loss = [&] { return d.forward(x).cwiseProduct(R).sum(); };
      Matrix dx;
      note("dense", gradient_error(d.params(), loss, [&] { dx = d.backward(x, R); }));
      note("dense.input", input_gradient_error(x, dx, loss));
      for (bool last : {false, true}) {
        nn::MLP mlp("m", {3, 6, 4}, last);
        mlp.init(rng);
        nn::MLP::Cache c;
        auto mloss = [&] { return mlp.forward(x).cwiseProduct(R).sum(); };
        note("mlp", gradient_error(mlp.params(), mloss, [&] {
               mlp.forward(x, &c);
               dx = mlp.backward(c, R);
             }));
        note("mlp.input", input_gradient_error(x, dx, mloss));
      }
    }

    Graph g = random_attributed_graph(uniform_int(rng, 5, 8), 0.45, 2, rng);

    for (auto kind : {nn::ConvKind::gin, nn::ConvKind::gcn})
      for (auto norm : {nn::Norm::none, nn::Norm::vertex, nn::Norm::graph}) {
        const std::string name = "conv." + nn::to_string(kind) + "." + nn::to_string(norm);
        nn::ConvLayer layer("c", kind, 3, 5, norm);
        layer.transform.init(rng);
        Matrix h = random_matrix(g.n(), 3, rng), R = random_matrix(g.n(), 5, rng);
        auto loss = [&] { return layer.forward(g, h).cwiseProduct(R).sum(); };
        nn::ConvLayer::Cache c;
        Matrix dh;
        note(name, gradient_error(layer.params(), loss, [&] {
               layer.forward(g, h, &c);
               dh = layer.backward(g, c, R);
             }));
        note(name + ".input", input_gradient_error(h, dh, loss));
      }

    for (auto ro : {nn::Readout::sum, nn::Readout::mean}) {
      Matrix h = random_matrix(6, 4, rng), R = random_matrix(1, 4, rng);
      auto loss = [&] { return nn::readout(h, ro).cwiseProduct(R).sum(); };
      note("readout." + nn::to_string(ro), input_gradient_error(h, nn::readout_backward(R, h.rows(), ro), loss));
    }

    for (auto kind : {nn::ConvKind::gin, nn::ConvKind::gcn})
      for (bool jk : {false, true}) {
        nn::GnnConfig gc;
        gc.conv = kind;
        gc.in_dim = 2;
        gc.hidden = 4;
        gc.layers = 3;
        gc.jumping_knowledge = jk;
        gc.norm = inst % 2 ? nn::Norm::graph : nn::Norm::none;
        gc.readout = inst % 3 ? nn::Readout::sum : nn::Readout::mean;
        nn::GnnModel model(gc);
        model.init(rng);
        Matrix R = random_matrix(1, model.out_dim(), rng);
        nn::GnnModel::Cache c;
        note("gnn." + nn::to_string(kind), gradient_error(model.params(), [&] {
               return model.forward(g).cwiseProduct(R).sum();
             }, [&] {
               model.forward(g, &c);
               model.backward(g, c, R);
             }));
        double dev = 0;
        Matrix base = model.forward(g);
        for (int p = 0; p < perms; ++p) {
          auto perm = random_permutation(g.n(), rng);
          dev = std::max(dev, (model.forward(permuted(g, perm)) - base).cwiseAbs().maxCoeff());
        }
        rep.perm_errors["gnn"] = std::max(rep.perm_errors["gnn"], dev);
        rep.worst_perm = std::max(rep.worst_perm, dev);
      }

    for (auto pool : {nn::Pooling::mean, nn::Pooling::sum}) {
      nn::DeepSetsHead head{nn::MLP("phi", {4, 5}, true), nn::MLP("rho", {5, 6, 3}), pool};
      head.phi.init(rng);
      head.rho.init(rng);
      Matrix xs = random_matrix(7, 4, rng), R = random_matrix(1, 3, rng);
      nn::DeepSetsHead::Cache c;
      Matrix dx;
      auto loss = [&] { return head.apply(xs).cwiseProduct(R).sum(); };
      note("deepsets", gradient_error(head.params(), loss, [&] {
             head.apply(xs, &c);
             dx = head.backward(c, R);
           }));
      note("deepsets.input", input_gradient_error(xs, dx, loss));
    }

    {  // losses
      Matrix logits = random_matrix(1, 4, rng);
      const int y = uniform_int(rng, 0, 3);
      note("cross_entropy",
           input_gradient_error(logits, nn::cross_entropy(logits, y).grad, [&] { return nn::cross_entropy(logits, y).value; }));
      Matrix pred = random_matrix(1, 3, rng), target = random_matrix(1, 3, rng);
      note("mse", input_gradient_error(pred, nn::mse(pred, target).grad, [&] { return nn::mse(pred, target).value; }));
    }

    {  // full reconstruction model, exact pooling
      ReconConfig rc;
      rc.gnn.in_dim = 2;
      rc.gnn.hidden = 4;
      rc.gnn.layers = 2;
      rc.gnn.norm = inst % 2 ? nn::Norm::graph : nn::Norm::vertex;
      rc.phi_layers = 1;
      rc.rho_hidden_layers = 1;
      rc.out_dim = 3;
      rc.k_rule = KRule::parse("n-2");
      rc.pooling = inst % 2 ? nn::Pooling::sum : nn::Pooling::mean;
      rc.concat_original = inst % 3 == 0;
      ReconModel m(rc, derive_seed(seed, "numerics-model", static_cast<std::uint64_t>(inst)));
      Matrix R = random_matrix(1, 3, rng);
      note("recon", gradient_error(m.params(), [&] { return m.forward_exact(g).cwiseProduct(R).sum(); }, [&] {
             ReconModel::Pass pass;
             auto subsets = m.all_subsets(g);
             m.forward_subsets(g, subsets, m.card_weight(g.n(), m.k_for(g.n()), subsets.size()), &pass);
             m.backward(g, pass, R);
           }));
      double dev = 0;
      Matrix base = m.forward_exact(g);
      for (int p = 0; p < perms; ++p) {
        auto perm = random_permutation(g.n(), rng);
        dev = std::max(dev, (m.forward_exact(permuted(g, perm)) - base).cwiseAbs().maxCoeff());
      }
      rep.perm_errors["recon"] = std::max(rep.perm_errors["recon"], dev);
      rep.worst_perm = std::max(rep.worst_perm, dev);
    }
  }
  return rep;
}

inline CheckResult check_numerics(const Options& o) {
  CheckResult r{12, "finite-difference gradients <= 1e-4 relative; permutation invariance <= 1e-9"};
  auto rep = numerics(o.seed);
  std::string worst_name;
  for (const auto& [k, v] : rep.grad_errors)
    if (v == rep.worst_grad) worst_name = k;
  r.pass = rep.worst_grad <= 1e-4 && rep.worst_perm <= 1e-9;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu components, worst gradient error %.2e (%s), worst permutation deviation %.2e",
                rep.grad_errors.size(), rep.worst_grad, worst_name.c_str(), rep.worst_perm);
  r.detail = buf;
  say(o, "  numerics: " + r.detail);
  return r;
}

// ---------------------------------------------------------------------------

inline std::vector<std::function<CheckResult(const Options&)>> all_checks() {
  return {check_kelly,        check_reconstruction, check_deck_hierarchy, check_fingerprint,
          check_csl_wl,       check_srg,            check_spiders,        check_csl_learning,
          check_cycles,       check_variance,       check_sampling,       check_numerics};
}

inline CheckResult timed(const std::function<CheckResult(const Options&)>& f, const Options& o, int id) {
  auto start = std::chrono::steady_clock::now();
  CheckResult r;
  try {
    r = f(o);
  } catch (const std::exception& e) {
    r = CheckResult{id, "criterion " + std::to_string(id), false, std::string("exception: ") + e.what()};
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline std::string format_line(const CheckResult& r) {
  char head[32];
  if (r.id > 0)
    std::snprintf(head, sizeof head, "[%s] %2d ", r.pass ? "PASS" : "FAIL", r.id);
  else
    std::snprintf(head, sizeof head, "[%s]  - ", r.pass ? "PASS" : "FAIL");
  return std::string(head) + r.name + " :: " + r.detail + " (" + fmt("%.1f", r.seconds) + " s)";
}

inline json to_json(const CheckResult& r, bool with_timing = false) {
  json j{{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}};
  if (with_timing) j["seconds"] = r.seconds;
  return j;
}

}  // namespace recon::audit
