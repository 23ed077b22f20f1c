#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "recon/canonical.hpp"
#include "recon/errors.hpp"
#include "recon/families.hpp"
#include "recon/graph.hpp"
#include "recon/graph_io.hpp"
#include "recon/rng.hpp"

namespace recon {

// ---------------------------------------------------------------------------
// Label oracles

inline std::vector<int> bfs_distances(const Graph& g, Vertex s) {
  std::vector<int> dist(g.n(), -1);
  std::queue<Vertex> q;
  dist[s] = 0;
  q.push(s);
  while (!q.empty()) {
    Vertex v = q.front();
    q.pop();
    for (Vertex u : g.neighbors(v))
      if (dist[u] < 0) {
        dist[u] = dist[v] + 1;
        q.push(u);
      }
  }
  return dist;
}

inline bool is_connected(const Graph& g) {
  if (g.n() <= 1) return true;
  auto d = bfs_distances(g, 0);
  return std::none_of(d.begin(), d.end(), [](int x) { return x < 0; });
}

/// Largest adjacency eigenvalue by power iteration on A + I from the all-ones
/// vector, stopped when the residual |Ax - λx| falls below tol·max(λ, 1).
/// The shift keeps bipartite graphs from oscillating.
inline double spectral_radius(const Graph& g, double tol = 1e-8, int max_iter = 1'000'000) {
  const int n = g.n();
  if (n == 0 || g.m() == 0) return 0.0;
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n))), ax(n);
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    for (int v = 0; v < n; ++v) {
      double s = 0.0;
      for (Vertex u : g.neighbors(v)) s += x[u];
      ax[v] = s;
    }
    lambda = 0.0;
    for (int v = 0; v < n; ++v) lambda += x[v] * ax[v];
    double res = 0.0;
    for (int v = 0; v < n; ++v) res += (ax[v] - lambda * x[v]) * (ax[v] - lambda * x[v]);
    if (std::sqrt(res) <= tol * std::max(lambda, 1.0)) break;
    double norm = 0.0;
    for (int v = 0; v < n; ++v) {
      ax[v] += x[v];
      norm += ax[v] * ax[v];
    }
    norm = std::sqrt(norm);
    for (int v = 0; v < n; ++v) x[v] = ax[v] / norm;
  }
  return lambda;
}

struct GraphLabels {
  bool connected = false;
  double diameter = 0;  ///< max finite eccentricity
  double spectral_radius = 0;
};

inline GraphLabels label_oracles(const Graph& g) {
  GraphLabels l;
  l.connected = is_connected(g);
  int diam = 0;
  for (int v = 0; v < g.n(); ++v)
    for (int d : bfs_distances(g, v)) diam = std::max(diam, d);
  l.diameter = diam;
  l.spectral_radius = spectral_radius(g);
  return l;
}

/// Whether g has a (not necessarily induced) cycle on exactly L vertices.
/// Paths are grown from their smallest vertex only.
inline bool has_cycle_of_length(const Graph& g, int L) {
  if (L < 3) throw InvalidArgument("has_cycle_of_length: L must be >= 3");
  if (L > g.n()) return false;
  std::vector<char> on_path(g.n(), 0);
  auto extend = [&](auto&& self, Vertex start, Vertex v, int len) -> bool {
    if (len == L) return g.adjacent(v, start);
    for (Vertex u : g.neighbors(v)) {
      if (u <= start || on_path[u]) continue;
      on_path[u] = 1;
      bool found = self(self, start, u, len + 1);
      on_path[u] = 0;
      if (found) return true;
    }
    return false;
  };
  for (Vertex s = 0; s < g.n(); ++s) {
    on_path[s] = 1;
    bool found = extend(extend, s, s, 1);
    on_path[s] = 0;
    if (found) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Random graphs

/// Uniform labeled tree from a random Prüfer sequence.
inline Graph random_tree(int n, Rng& rng) {
  if (n < 1) throw InvalidArgument("random_tree: n must be >= 1");
  if (n == 1) return Graph(1, {});
  if (n == 2) return Graph(2, {{0, 1}});
  std::vector<int> prufer(n - 2), degree(n, 1);
  for (auto& x : prufer) {
    x = static_cast<int>(uniform_below(rng, n));
    ++degree[x];
  }
  std::vector<Edge> edges;
  std::priority_queue<int, std::vector<int>, std::greater<>> leaves;
  for (int v = 0; v < n; ++v)
    if (degree[v] == 1) leaves.push(v);
  for (int x : prufer) {
    int leaf = leaves.top();
    leaves.pop();
    edges.emplace_back(leaf, x);
    if (--degree[x] == 1) leaves.push(x);
  }
  int a = leaves.top();
  leaves.pop();
  edges.emplace_back(a, leaves.top());
  return Graph(n, std::move(edges));
}

inline Graph erdos_renyi(int n, double p, Rng& rng) {
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (uniform01(rng) < p) edges.emplace_back(u, v);
  return Graph(n, std::move(edges));
}

inline Graph with_edges(const Graph& g, const std::vector<Edge>& extra) {
  std::vector<Edge> e = g.edges();
  e.insert(e.end(), extra.begin(), extra.end());
  return Graph::collapsing(g.n(), std::move(e), g.attrs());
}

inline Graph randomly_permuted(const Graph& g, Rng& rng) {
  auto p = random_permutation(g.n(), rng);
  return permuted(g, p);
}

// ---------------------------------------------------------------------------
// Datasets

enum class TaskKind { classification, regression, multitask_regression };

inline std::string to_string(TaskKind t) {
  switch (t) {
    case TaskKind::classification: return "classification";
    case TaskKind::regression: return "regression";
    case TaskKind::multitask_regression: return "multitask-regression";
  }
  return "?";
}

struct Item {
  Graph graph;
  int label = -1;              ///< class index (classification)
  std::vector<double> target;  ///< regression targets, standardized when the dataset says so
  std::vector<double> raw;     ///< regression targets before standardization
};

struct Dataset {
  std::string name;
  TaskKind kind = TaskKind::classification;
  int classes = 0;
  int target_dim = 0;
  std::uint64_t seed = 0;
  std::vector<Item> items;
  std::vector<std::size_t> train, val, test;
  std::vector<int> fold;  ///< cross-validation fold per item (csl only)
  std::vector<double> target_mean, target_std;  ///< train-split statistics, when standardized

  std::size_t size() const { return items.size(); }
};

struct DatasetSpec {
  std::string kind = "csl";  ///< csl | cycles-L | multitask | padded-connectivity
  int size = 0;              ///< 0 selects the kind's default
  int mean_n = 0;            ///< 0 selects the desk-scale default
  int ell = 2;               ///< padded-connectivity: vertices that may be removed
  int extra_edges = 1;       ///< cycles-L: edges added to the base tree
  bool full_scale = false;
  double val_frac = 0.1;
  double test_frac = 0.1;
  std::uint64_t seed = 0;
  int retry_budget = 10'000;
};

inline const std::vector<int>& csl_skips() {
  static const std::vector<int> skips{2, 3, 4, 5, 6, 9, 11, 12, 13, 16};
  return skips;
}

namespace detail {

/// Shuffled split of all indices, stratified by class when labels exist.
inline void assign_splits(Dataset& ds, double val_frac, double test_frac, Rng& rng) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.items.size(); ++i) by_class[ds.items[i].label].push_back(i);
  for (auto& [_, idx] : by_class) {
    shuffle(idx, rng);
    const auto nt = static_cast<std::size_t>(std::llround(test_frac * idx.size()));
    const auto nv = static_cast<std::size_t>(std::llround(val_frac * idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) (i < nt ? ds.test : i < nt + nv ? ds.val : ds.train).push_back(idx[i]);
  }
  std::sort(ds.train.begin(), ds.train.end());
  std::sort(ds.val.begin(), ds.val.end());
  std::sort(ds.test.begin(), ds.test.end());
}

inline void standardize_targets(Dataset& ds) {
  const int d = ds.target_dim;
  ds.target_mean.assign(d, 0.0);
  ds.target_std.assign(d, 0.0);
  if (ds.train.empty()) throw GenerationError("standardize: empty train split");
  for (auto i : ds.train)
    for (int t = 0; t < d; ++t) ds.target_mean[t] += ds.items[i].raw[t];
  for (auto& m : ds.target_mean) m /= static_cast<double>(ds.train.size());
  for (auto i : ds.train)
    for (int t = 0; t < d; ++t) ds.target_std[t] += std::pow(ds.items[i].raw[t] - ds.target_mean[t], 2);
  for (auto& s : ds.target_std) {
    s = std::sqrt(s / static_cast<double>(ds.train.size()));
    if (s < 1e-12) s = 1.0;
  }
  for (auto& item : ds.items) {
    item.target.resize(d);
    for (int t = 0; t < d; ++t) item.target[t] = (item.raw[t] - ds.target_mean[t]) / ds.target_std[t];
  }
}

inline Dataset build_csl(const DatasetSpec& spec) {
  constexpr int m = 41;
  const auto& skips = csl_skips();
  {
    // The skip set must give pairwise non-isomorphic classes.
    static const bool verified = [&] {
      std::vector<CanonicalForm> forms;
      for (int r : skips) forms.push_back(canonical_form(csl_graph(m, r), m));
      std::sort(forms.begin(), forms.end());
      return std::adjacent_find(forms.begin(), forms.end()) == forms.end();
    }();
    if (!verified) throw GenerationError("csl: skip set contains isomorphic classes");
  }
  const int copies = spec.size > 0 ? std::max(1, spec.size / static_cast<int>(skips.size())) : 15;
  Dataset ds;
  ds.name = "csl";
  ds.kind = TaskKind::classification;
  ds.classes = static_cast<int>(skips.size());
  ds.seed = spec.seed;
  for (int c = 0; c < ds.classes; ++c) {
    Graph base = csl_graph(m, skips[c]);
    for (int i = 0; i < copies; ++i) {
      Rng rng = make_rng(spec.seed, "csl-item", static_cast<std::uint64_t>(c * copies + i));
      ds.items.push_back({randomly_permuted(base, rng), c, {}, {}});
    }
  }
  // Five stratified folds; fold f is the test split of run f.
  Rng rng = make_rng(spec.seed, "csl-folds");
  ds.fold.assign(ds.items.size(), 0);
  for (int c = 0; c < ds.classes; ++c) {
    std::vector<std::size_t> idx;
    for (int i = 0; i < copies; ++i) idx.push_back(static_cast<std::size_t>(c * copies + i));
    shuffle(idx, rng);
    for (std::size_t j = 0; j < idx.size(); ++j) ds.fold[idx[j]] = static_cast<int>(j % 5);
  }
  for (std::size_t i = 0; i < ds.items.size(); ++i)
    (ds.fold[i] == 0 ? ds.test : ds.fold[i] == 1 ? ds.val : ds.train).push_back(i);
  return ds;
}

/// Positive: a random tree with one extra edge closing a cycle of exactly L
/// vertices. Negative: the same with the closing edge spanning a different
/// distance, so both classes have n edges. Further extra edges (if any) are
/// drawn so that no other L-cycle appears.
inline Graph cycle_task_graph(int n, int L, bool positive, int extra_edges, Rng& rng, int retry_budget) {
  for (int attempt = 0; attempt < retry_budget; ++attempt) {
    Graph t = random_tree(n, rng);
    std::vector<Edge> good, other;
    for (int u = 0; u < n; ++u) {
      auto d = bfs_distances(t, u);
      for (int v = u + 1; v < n; ++v) {
        if (d[v] < 2) continue;
        (d[v] == L - 1 ? good : other).emplace_back(u, v);
      }
    }
    auto& pool = positive ? good : other;
    if (pool.empty()) continue;
    std::vector<Edge> added{pool[uniform_below(rng, pool.size())]};
    Graph g = with_edges(t, added);
    bool ok = true;
    for (int e = 1; e < extra_edges && ok; ++e) {
      ok = false;
      for (int tries = 0; tries < 64 && !ok; ++tries) {
        int u = uniform_int(rng, 0, n - 1), v = uniform_int(rng, 0, n - 1);
        if (u == v || g.adjacent(u, v)) continue;
        Graph h = with_edges(g, {{u, v}});
        if (positive || !has_cycle_of_length(h, L)) {
          // Positives keep exactly the planted structure plus chords that do
          // not matter for the label; negatives must stay L-cycle free.
          g = std::move(h);
          ok = true;
        }
      }
    }
    if (!ok) continue;
    if (has_cycle_of_length(g, L) != positive) continue;
    return randomly_permuted(g, rng);
  }
  throw GenerationError("cycles: retry budget of " + std::to_string(retry_budget) + " exhausted for n = " +
                        std::to_string(n));
}

inline Dataset build_cycles(const DatasetSpec& spec, int L) {
  if (L < 3) throw InvalidArgument("cycles-L: L must be >= 3");
  const int desk_mean = L == 4 ? 12 : L == 6 ? 16 : L == 8 ? 20 : 2 * L + 4;
  const int full_mean = L == 4 ? 36 : L == 6 ? 56 : L == 8 ? 72 : 9 * L;
  const int mean_n = spec.mean_n > 0 ? spec.mean_n : spec.full_scale ? full_mean : desk_mean;
  const int size = spec.size > 0 ? spec.size : spec.full_scale ? 20'000 : 2'000;
  const int lo = std::max(L + 1, mean_n - mean_n / 4), hi = std::max(lo, mean_n + mean_n / 4);

  Dataset ds;
  ds.name = "cycles-" + std::to_string(L);
  ds.kind = TaskKind::classification;
  ds.classes = 2;
  ds.seed = spec.seed;
  for (int i = 0; i < size; ++i) {
    Rng rng = make_rng(spec.seed, ds.name, static_cast<std::uint64_t>(i));
    const bool positive = i % 2 == 0;
    const int n = uniform_int(rng, lo, hi);
    ds.items.push_back({cycle_task_graph(n, L, positive, spec.extra_edges, rng, spec.retry_budget), positive ? 1 : 0, {}, {}});
  }
  Rng rng = make_rng(spec.seed, ds.name + "-splits");
  assign_splits(ds, spec.val_frac, spec.test_frac, rng);
  return ds;
}

/// Erdős–Rényi with p in [0.2, 0.8], random trees, and cycles with random
/// chords, in equal proportion.
inline Dataset build_multitask(const DatasetSpec& spec) {
  const int mean_n = spec.mean_n > 0 ? spec.mean_n : spec.full_scale ? 19 : 12;
  const int size = spec.size > 0 ? spec.size : spec.full_scale ? 7'040 : 1'200;
  const int lo = std::max(4, mean_n - mean_n / 3), hi = mean_n + mean_n / 3;
  Dataset ds;
  ds.name = "multitask";
  ds.kind = TaskKind::multitask_regression;
  ds.target_dim = 3;
  ds.seed = spec.seed;
  for (int i = 0; i < size; ++i) {
    Rng rng = make_rng(spec.seed, "multitask", static_cast<std::uint64_t>(i));
    const int n = uniform_int(rng, lo, hi);
    Graph g;
    switch (i % 3) {
      case 0: g = erdos_renyi(n, uniform_real(rng, 0.2, 0.8), rng); break;
      case 1: g = random_tree(n, rng); break;
      default: {
        std::vector<Edge> chords;
        const int c = uniform_int(rng, 1, std::max(1, n / 4));
        for (int j = 0; j < c; ++j) {
          int u = uniform_int(rng, 0, n - 1), v = uniform_int(rng, 0, n - 1);
          if (u != v) chords.emplace_back(u, v);
        }
        g = randomly_permuted(with_edges(cycle_graph(n), chords), rng);
      }
    }
    auto l = label_oracles(g);
    ds.items.push_back({g, -1, {}, {l.connected ? 1.0 : 0.0, l.diameter, l.spectral_radius}});
  }
  Rng rng = make_rng(spec.seed, "multitask-splits");
  assign_splits(ds, spec.val_frac, spec.test_frac, rng);
  standardize_targets(ds);
  return ds;
}

/// Whether removing any `ell` or fewer vertices leaves g connected.
inline bool robustly_connected(const Graph& g, int ell) {
  for (int r = 0; r <= ell && r < g.n(); ++r) {
    bool ok = true;
    for_each_combination(g.n(), g.n() - r, [&](std::span<const int> s) {
      ok = is_connected(induced_subgraph(g, s));
      return ok;
    });
    if (!ok) return false;
  }
  return true;
}

/// Connectivity labels that survive the removal of `ell` vertices:
/// positives are (ell + 1)-vertex-connected, negatives have exactly two
/// components of at least ell + 1 vertices each. Target is 1 or 0.
inline Dataset build_padded_connectivity(const DatasetSpec& spec) {
  const int ell = spec.ell;
  if (ell < 0) throw InvalidArgument("padded-connectivity: ell must be >= 0");
  const int mean_n = spec.mean_n > 0 ? spec.mean_n : 2 * ell + 6;
  const int size = spec.size > 0 ? spec.size : 200;
  const int lo = std::max(2 * ell + 2, mean_n - 1), hi = std::max(lo, mean_n + 1);
  Dataset ds;
  ds.name = "padded-connectivity";
  ds.kind = TaskKind::regression;
  ds.target_dim = 1;
  ds.seed = spec.seed;
  for (int i = 0; i < size; ++i) {
    Rng rng = make_rng(spec.seed, "padded-connectivity", static_cast<std::uint64_t>(i));
    const bool positive = i % 2 == 0;
    const int n = uniform_int(rng, lo, hi);
    Graph g;
    bool made = false;
    for (int attempt = 0; attempt < spec.retry_budget && !made; ++attempt) {
      if (positive) {
        g = erdos_renyi(n, uniform_real(rng, 0.3, 0.7), rng);
        made = robustly_connected(g, ell);
      } else {
        const int a = uniform_int(rng, ell + 1, n - ell - 1);
        Graph parts[2] = {erdos_renyi(a, uniform_real(rng, 0.3, 0.8), rng),
                          erdos_renyi(n - a, uniform_real(rng, 0.3, 0.8), rng)};
        made = is_connected(parts[0]) && is_connected(parts[1]);
        if (made) g = randomly_permuted(disjoint_union(parts), rng);
      }
    }
    if (!made) throw GenerationError("padded-connectivity: retry budget exhausted");
    ds.items.push_back({g, positive ? 1 : 0, {positive ? 1.0 : 0.0}, {positive ? 1.0 : 0.0}});
  }
  Rng rng = make_rng(spec.seed, "padded-connectivity-splits");
  assign_splits(ds, spec.val_frac, spec.test_frac, rng);
  return ds;
}

}  // namespace detail

inline Dataset build_dataset(const DatasetSpec& spec) {
  if (spec.kind == "csl") return detail::build_csl(spec);
  if (spec.kind == "multitask") return detail::build_multitask(spec);
  if (spec.kind == "padded-connectivity") return detail::build_padded_connectivity(spec);
  if (spec.kind.rfind("cycles-", 0) == 0) {
    int L = 0;
    try {
      L = std::stoi(spec.kind.substr(7));
    } catch (const std::exception&) {
      throw InvalidArgument("unknown dataset spec '" + spec.kind + "'");
    }
    return detail::build_cycles(spec, L);
  }
  throw InvalidArgument("unknown dataset spec '" + spec.kind + "' (expected csl|cycles-L|multitask|padded-connectivity)");
}

/// Train/val/test indices for cross-validation run `f` of a dataset with
/// folds: test = fold f, validation = fold f+1 (mod count), train = the rest.
inline void select_fold(Dataset& ds, int f, int folds = 5) {
  if (ds.fold.empty()) throw InvalidArgument("select_fold: dataset has no folds");
  ds.train.clear();
  ds.val.clear();
  ds.test.clear();
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    const int fi = ds.fold[i];
    (fi == f ? ds.test : fi == (f + 1) % folds ? ds.val : ds.train).push_back(i);
  }
}

// ---------------------------------------------------------------------------
// Serialization: one JSON line per item, {"graph": ..., "target": ...}

inline json item_to_json(const Dataset& ds, const Item& item) {
  json j;
  j["graph"] = to_json(item.graph);
  if (ds.kind == TaskKind::classification)
    j["target"] = item.label;
  else
    j["target"] = item.raw;
  return j;
}

inline std::string split_jsonl(const Dataset& ds, const std::vector<std::size_t>& split) {
  std::string out;
  for (auto i : split) out += item_to_json(ds, ds.items[i]).dump() + "\n";
  return out;
}

inline json dataset_metadata(const Dataset& ds) {
  json j;
  j["name"] = ds.name;
  j["task_kind"] = to_string(ds.kind);
  j["classes"] = ds.classes;
  j["target_dim"] = ds.target_dim;
  j["seed"] = ds.seed;
  j["size"] = ds.items.size();
  j["splits"] = {{"train", ds.train.size()}, {"val", ds.val.size()}, {"test", ds.test.size()}};
  if (!ds.target_mean.empty()) j["standardization"] = {{"mean", ds.target_mean}, {"std", ds.target_std}};
  double nsum = 0, msum = 0;
  for (const auto& it : ds.items) {
    nsum += it.graph.n();
    msum += static_cast<double>(it.graph.m());
  }
  if (!ds.items.empty()) {
    j["mean_vertices"] = nsum / ds.items.size();
    j["mean_edges"] = msum / ds.items.size();
  }
  return j;
}

}  // namespace recon
