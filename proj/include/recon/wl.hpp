#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "recon/canonical.hpp"
#include "recon/errors.hpp"
#include "recon/graph.hpp"
#include "recon/hash.hpp"
#include "recon/rng.hpp"

namespace recon {

/// Stable Weisfeiler-Leman coloring of one graph.
///
/// Colors are ranks of refinement signatures in sorted order, so they carry
/// no dependence on vertex names. When several graphs are refined jointly the
/// ranks are taken over all of them and histograms are directly comparable.
/// `trace` digests the per-round signature histograms; it is equal for two
/// graphs exactly when WL does not distinguish them, even when the graphs
/// were refined separately.
struct Coloring {
  int arity = 1;
  int n = 0;
  std::vector<int> colors;  ///< per vertex, or per ordered pair at u * n + v
  std::vector<std::pair<int, std::uint64_t>> histogram;
  int rounds = 0;
  Digest128 trace;

  int color(Vertex v) const { return colors[v]; }
  int color(Vertex u, Vertex v) const { return colors[static_cast<std::size_t>(u) * n + v]; }
  std::size_t classes() const { return histogram.size(); }
};

inline constexpr int kWl2Cap = 32;

namespace detail {

using Signature = std::vector<std::int64_t>;

/// Shared refinement driver. `items[g]` is the number of colored items in
/// graph g; `signature(g, i, colors_of_g)` builds the signature of item i
/// from the current colors (which it must start with).
template <class SigFn>
std::vector<Coloring> refine_jointly(int arity, std::span<const int> ns, std::vector<std::vector<int>> colors,
                                     SigFn&& signature) {
  const std::size_t graphs = colors.size();
  std::vector<Coloring> out(graphs);
  std::vector<Hasher128> trace(graphs);

  auto count_classes = [&] {
    std::size_t total = 0;
    for (const auto& cs : colors) total = std::max<std::size_t>(total, cs.empty() ? 0 : 1 + *std::max_element(cs.begin(), cs.end()));
    return total;
  };
  std::size_t classes = count_classes();
  int rounds = 0;
  std::vector<std::vector<Signature>> sigs(graphs);
  while (true) {
    std::vector<const Signature*> all;
    for (std::size_t g = 0; g < graphs; ++g) {
      sigs[g].resize(colors[g].size());
      for (std::size_t i = 0; i < colors[g].size(); ++i) {
        sigs[g][i] = signature(g, i, colors[g]);
        all.push_back(&sigs[g][i]);
      }
    }
    std::sort(all.begin(), all.end(), [](const Signature* a, const Signature* b) { return *a < *b; });
    all.erase(std::unique(all.begin(), all.end(), [](const Signature* a, const Signature* b) { return *a == *b; }),
              all.end());

    for (std::size_t g = 0; g < graphs; ++g) {
      // Per-graph histogram of signatures, hashed in sorted order.
      std::vector<const Signature*> mine;
      for (auto& s : sigs[g]) mine.push_back(&s);
      std::sort(mine.begin(), mine.end(), [](const Signature* a, const Signature* b) { return *a < *b; });
      trace[g].add(0xfeedULL);
      for (std::size_t i = 0; i < mine.size();) {
        std::size_t j = i;
        while (j < mine.size() && *mine[j] == *mine[i]) ++j;
        trace[g].add_range(std::span<const std::int64_t>(*mine[i])).add(j - i);
        i = j;
      }
      for (std::size_t i = 0; i < colors[g].size(); ++i) {
        auto it = std::lower_bound(all.begin(), all.end(), &sigs[g][i],
                                   [](const Signature* a, const Signature* b) { return *a < *b; });
        colors[g][i] = static_cast<int>(it - all.begin());
      }
    }
    if (all.size() == classes) break;
    classes = all.size();
    ++rounds;
  }

  for (std::size_t g = 0; g < graphs; ++g) {
    auto& c = out[g];
    c.arity = arity;
    c.n = ns[g];
    c.colors = std::move(colors[g]);
    c.rounds = rounds;
    std::map<int, std::uint64_t> hist;
    for (int x : c.colors) ++hist[x];
    c.histogram.assign(hist.begin(), hist.end());
    c.trace = trace[g].digest();
  }
  return out;
}

inline std::vector<std::vector<int>> attribute_ranks(std::span<const Graph> gs) {
  std::vector<AttrVector> all;
  for (const auto& g : gs)
    for (int v = 0; v < g.n(); ++v) all.push_back(g.has_attrs() ? g.attrs()[v] : AttrVector{});
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<std::vector<int>> ranks;
  for (const auto& g : gs) {
    auto& r = ranks.emplace_back(g.n());
    for (int v = 0; v < g.n(); ++v) {
      const AttrVector& a = g.has_attrs() ? g.attrs()[v] : AttrVector{};
      r[v] = static_cast<int>(std::lower_bound(all.begin(), all.end(), a) - all.begin());
    }
  }
  return ranks;
}

}  // namespace detail

/// 1-WL refined jointly over all graphs in `gs`.
inline std::vector<Coloring> wl1_joint(std::span<const Graph> gs) {
  std::vector<int> ns;
  for (const auto& g : gs) ns.push_back(g.n());
  return detail::refine_jointly(1, ns, detail::attribute_ranks(gs),
                                [&](std::size_t gi, std::size_t v, const std::vector<int>& c) {
                                  const Graph& g = gs[gi];
                                  detail::Signature s;
                                  s.reserve(g.degree(static_cast<int>(v)) + 1);
                                  s.push_back(c[v]);
                                  for (Vertex u : g.neighbors(static_cast<int>(v))) s.push_back(c[u]);
                                  std::sort(s.begin() + 1, s.end());
                                  return s;
                                });
}

inline Coloring wl1(const Graph& g) { return wl1_joint(std::span<const Graph>(&g, 1)).front(); }

/// Folklore 2-WL (pair colors refined by the multiset of (c(u,w), c(w,v))),
/// refined jointly over `gs`. Throws UnsupportedSize above 32 vertices.
inline std::vector<Coloring> wl2_joint(std::span<const Graph> gs) {
  std::vector<int> ns;
  for (const auto& g : gs) {
    if (g.n() > kWl2Cap)
      throw UnsupportedSize("wl2: n = " + std::to_string(g.n()) + " exceeds pair-table cap " + std::to_string(kWl2Cap));
    ns.push_back(g.n());
  }
  auto attr = detail::attribute_ranks(gs);
  // Initial pair type: (equal / adjacent / non-adjacent, attr(u), attr(v)).
  std::vector<std::tuple<int, int, int>> types;
  for (std::size_t gi = 0; gi < gs.size(); ++gi)
    for (int u = 0; u < ns[gi]; ++u)
      for (int v = 0; v < ns[gi]; ++v)
        types.emplace_back(u == v ? 0 : gs[gi].adjacent(u, v) ? 1 : 2, attr[gi][u], attr[gi][v]);
  auto sorted = types;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::vector<int>> colors;
  std::size_t at = 0;
  for (int n : ns) {
    auto& c = colors.emplace_back(static_cast<std::size_t>(n) * n);
    for (auto& x : c) x = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), types[at++]) - sorted.begin());
  }

  return detail::refine_jointly(2, ns, std::move(colors), [&](std::size_t gi, std::size_t p, const std::vector<int>& c) {
    const std::int64_t n = ns[gi];
    const std::int64_t u = static_cast<std::int64_t>(p) / n, v = static_cast<std::int64_t>(p) % n;
    const std::int64_t base = static_cast<std::int64_t>(c.size()) * 4 + 1;
    detail::Signature s;
    s.reserve(n + 1);
    s.push_back(c[p]);
    for (std::int64_t w = 0; w < n; ++w) s.push_back(c[u * n + w] * base + c[w * n + v]);
    std::sort(s.begin() + 1, s.end());
    return s;
  });
}

inline Coloring wl2(const Graph& g) { return wl2_joint(std::span<const Graph>(&g, 1)).front(); }

/// True iff the stable histograms of a and b differ (joint refinement).
inline bool wl_distinguishes(const Graph& a, const Graph& b, int arity = 1) {
  if (arity != 1 && arity != 2) throw InvalidArgument("wl_distinguishes: arity must be 1 or 2");
  if (a.n() != b.n()) return true;
  std::vector<Graph> both{a, b};
  auto cs = arity == 1 ? wl1_joint(both) : wl2_joint(both);
  return cs[0].histogram != cs[1].histogram;
}

/// Disjoint union of all k-vertex induced subgraphs, cards in lexicographic
/// subset order.
inline Graph deck_union_graph(const Graph& g, int k, std::uint64_t vertex_budget = 1'000'000) {
  if (k < 1 || k > g.n()) throw InvalidArgument("deck_union_graph: k outside [1, n]");
  const std::uint64_t cards = binomial(g.n(), k);
  if (cards > vertex_budget / static_cast<std::uint64_t>(k))
    throw ResourceError("deck_union_graph: C(n,k)*k vertices exceeds budget-subgraphs " + std::to_string(vertex_budget));
  std::vector<Graph> parts;
  parts.reserve(cards);
  for_each_combination(g.n(), k, [&](std::span<const int> s) { parts.push_back(induced_subgraph(g, s)); });
  return disjoint_union(parts);
}

/// Whether 1-WL identifies g: every graph with the same stable color
/// statistics is isomorphic to g. Decided structurally on the stable
/// partition (the amenability criterion of Arvind, Köbler, Rattan and
/// Verbitsky): cells must induce empty, complete, matching, co-matching or
/// 5-cycle graphs; cell pairs must be empty, complete, matchings,
/// co-matchings or star forests; and every component of the graph of
/// non-uniform cell pairs must be a tree with at most one non-uniform cell,
/// rooted so that cell sizes never shrink away from the root.
inline bool wl1_identifies(const Graph& g) {
  const int n = g.n();
  if (n == 0) return true;
  Coloring c = wl1(g);
  const int cells = static_cast<int>(c.histogram.size());
  std::vector<int> size(cells, 0), rep(cells, -1);
  for (int v = 0; v < n; ++v) {
    ++size[c.colors[v]];
    if (rep[c.colors[v]] < 0) rep[c.colors[v]] = v;
  }
  // deg[x][y]: neighbors in cell y of any vertex of cell x (equitable).
  std::vector<std::vector<int>> deg(cells, std::vector<int>(cells, 0));
  for (int x = 0; x < cells; ++x)
    for (Vertex u : g.neighbors(rep[x])) ++deg[x][c.colors[u]];

  std::vector<char> heterogeneous(cells, 0);
  for (int x = 0; x < cells; ++x) {
    const int s = size[x], d = deg[x][x];
    if (d == 0 || d == s - 1) continue;
    if (d == 1 || d == s - 2 || (s == 5 && d == 2)) {
      heterogeneous[x] = 1;
      continue;
    }
    return false;
  }

  std::vector<std::vector<int>> aniso(cells);
  for (int x = 0; x < cells; ++x)
    for (int y = x + 1; y < cells; ++y) {
      const int dxy = deg[x][y], dyx = deg[y][x];
      if (dxy == 0 || dxy == size[y]) continue;
      bool stars = dxy == 1 || dyx == 1;
      bool comatching = size[x] == size[y] && dxy == size[y] - 1 && dyx == size[x] - 1;
      if (!stars && !comatching) return false;
      aniso[x].push_back(y);
      aniso[y].push_back(x);
    }

  std::vector<int> comp(cells, -1);
  for (int start = 0; start < cells; ++start) {
    if (comp[start] >= 0) continue;
    std::vector<int> members{start};
    comp[start] = start;
    std::size_t edges2 = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      edges2 += aniso[members[i]].size();
      for (int y : aniso[members[i]])
        if (comp[y] < 0) {
          comp[y] = start;
          members.push_back(y);
        }
    }
    if (edges2 / 2 != members.size() - 1) return false;  // not a tree
    int hetero = static_cast<int>(std::count_if(members.begin(), members.end(), [&](int x) { return heterogeneous[x]; }));
    if (hetero > 1) return false;

    auto rooted_ok = [&](int root) {
      std::vector<int> parent(cells, -2), stack{root};
      parent[root] = -1;
      while (!stack.empty()) {
        int x = stack.back();
        stack.pop_back();
        for (int y : aniso[x]) {
          if (y == parent[x]) continue;
          if (size[y] < size[x]) return false;
          parent[y] = x;
          stack.push_back(y);
        }
      }
      return true;
    };
    bool ok = false;
    for (int root : members) {
      if (hetero == 1 && !heterogeneous[root]) continue;
      if (rooted_ok(root)) {
        ok = true;
        break;
      }
    }
    if (!ok) return false;
  }
  return true;
}

/// Fraction of unordered pairs of sampled k-cards that are non-isomorphic
/// yet 1-WL-equivalent. Uses every card when sample_count >= C(n, k).
inline double wl_collision_rate(const Graph& g, int k, std::uint64_t sample_count, std::uint64_t seed,
                                int cap = kDefaultCanonicalCap) {
  if (k < 1 || k > g.n()) throw InvalidArgument("wl_collision_rate: k outside [1, n]");
  Rng rng = make_rng(seed, "wl-collision");
  auto subsets = sample_k_subsets(g.n(), k, sample_count, rng);
  std::vector<CanonicalForm> forms;
  std::vector<Digest128> traces;
  for (const auto& s : subsets) {
    Graph card = induced_subgraph(g, s);
    forms.push_back(canonical_form(card, cap));
    traces.push_back(wl1(card).trace);
  }
  const std::size_t m = subsets.size();
  if (m < 2) return 0.0;
  std::uint64_t colliding = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (traces[i] == traces[j] && forms[i] != forms[j]) ++colliding;
  return static_cast<double>(colliding) / (static_cast<double>(m) * (m - 1) / 2);
}

/// Fraction of sampled k-cards that 1-WL does not identify.
inline double wl_unidentified_rate(const Graph& g, int k, std::uint64_t sample_count, std::uint64_t seed) {
  if (k < 1 || k > g.n()) throw InvalidArgument("wl_unidentified_rate: k outside [1, n]");
  Rng rng = make_rng(seed, "wl-unidentified");
  auto subsets = sample_k_subsets(g.n(), k, sample_count, rng);
  std::size_t bad = 0;
  for (const auto& s : subsets) bad += !wl1_identifies(induced_subgraph(g, s));
  return static_cast<double>(bad) / static_cast<double>(subsets.size());
}

}  // namespace recon
