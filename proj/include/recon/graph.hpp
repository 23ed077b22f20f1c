#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <type_traits>
#include <string>
#include <utility>
#include <vector>

#include "recon/errors.hpp"

namespace recon {

using Vertex = int;
using Edge = std::pair<Vertex, Vertex>;
using AttrVector = std::vector<int>;

/// Immutable simple undirected graph on vertices 0..n-1 with optional
/// integer-coded vertex attributes.
///
/// Edges are stored with u < v and sorted, so structurally equal graphs
/// compare and serialize identically.
class Graph {
 public:
  Graph() = default;

  /// Throws InvalidArgument on self-loops, out-of-range endpoints, duplicate
  /// edges, or an attribute list whose length differs from n.
  Graph(int n, std::vector<Edge> edges, std::vector<AttrVector> attrs = {}) : n_(n), attrs_(std::move(attrs)) {
    if (n < 0) throw InvalidArgument("graph: negative vertex count");
    if (!attrs_.empty() && static_cast<int>(attrs_.size()) != n)
      throw InvalidArgument("graph: vertex_attrs length " + std::to_string(attrs_.size()) + " != n " +
                            std::to_string(n));
    for (auto& [u, v] : edges) {
      if (u < 0 || v < 0 || u >= n || v >= n)
        throw InvalidArgument("graph: edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range");
      if (u == v) throw InvalidArgument("graph: self-loop at " + std::to_string(u));
      if (u > v) std::swap(u, v);
    }
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
      throw InvalidArgument("graph: duplicate edge");
    edges_ = std::move(edges);
    build_index();
  }

  /// Like the constructor but silently collapses duplicate edges.
  static Graph collapsing(int n, std::vector<Edge> edges, std::vector<AttrVector> attrs = {}) {
    for (auto& e : edges)
      if (e.first > e.second) std::swap(e.first, e.second);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return Graph(n, std::move(edges), std::move(attrs));
  }

  int n() const noexcept { return n_; }
  std::size_t m() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  bool adjacent(Vertex u, Vertex v) const noexcept { return adj_[static_cast<std::size_t>(u) * n_ + v] != 0; }
  std::span<const Vertex> neighbors(Vertex v) const noexcept { return nbrs_[v]; }
  int degree(Vertex v) const noexcept { return static_cast<int>(nbrs_[v].size()); }

  bool has_attrs() const noexcept { return !attrs_.empty(); }
  const std::vector<AttrVector>& attrs() const noexcept { return attrs_; }
  /// Attribute vector of v; empty for unattributed graphs.
  std::span<const int> attr(Vertex v) const noexcept {
    if (attrs_.empty()) return {};
    return attrs_[v];
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_ && a.attrs_ == b.attrs_;
  }

 private:
  void build_index() {
    adj_.assign(static_cast<std::size_t>(n_) * n_, 0);
    nbrs_.assign(n_, {});
    for (auto [u, v] : edges_) {
      adj_[static_cast<std::size_t>(u) * n_ + v] = 1;
      adj_[static_cast<std::size_t>(v) * n_ + u] = 1;
      nbrs_[u].push_back(v);
      nbrs_[v].push_back(u);
    }
    for (auto& l : nbrs_) std::sort(l.begin(), l.end());
  }

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<AttrVector> attrs_;
  std::vector<std::uint8_t> adj_;
  std::vector<std::vector<Vertex>> nbrs_;
};

/// G[S] with vertices relabeled 0..|S|-1 following the ascending order of S.
inline Graph induced_subgraph(const Graph& g, std::span<const Vertex> s) {
  if (s.empty()) throw InvalidArgument("induced_subgraph: empty vertex set");
  std::vector<Vertex> sorted(s.begin(), s.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidArgument("induced_subgraph: repeated vertex");
  if (sorted.front() < 0 || sorted.back() >= g.n())
    throw InvalidArgument("induced_subgraph: vertex out of range");

  const int k = static_cast<int>(sorted.size());
  std::vector<Edge> edges;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (g.adjacent(sorted[i], sorted[j])) edges.emplace_back(i, j);
  std::vector<AttrVector> attrs;
  if (g.has_attrs()) {
    attrs.reserve(k);
    for (Vertex v : sorted) attrs.push_back(g.attrs()[v]);
  }
  return Graph(k, std::move(edges), std::move(attrs));
}

/// Relabels vertex v as perm[v].
inline Graph permuted(const Graph& g, std::span<const int> perm) {
  if (static_cast<int>(perm.size()) != g.n()) throw InvalidArgument("permuted: permutation size mismatch");
  std::vector<Edge> edges;
  edges.reserve(g.m());
  for (auto [u, v] : g.edges()) edges.emplace_back(perm[u], perm[v]);
  std::vector<AttrVector> attrs;
  if (g.has_attrs()) {
    attrs.resize(g.n());
    for (int v = 0; v < g.n(); ++v) attrs[perm[v]] = g.attrs()[v];
  }
  return Graph(g.n(), std::move(edges), std::move(attrs));
}

inline Graph disjoint_union(std::span<const Graph> parts) {
  int offset = 0;
  bool any_attrs = false;
  for (const auto& p : parts) any_attrs |= p.has_attrs();
  std::vector<Edge> edges;
  std::vector<AttrVector> attrs;
  for (const auto& p : parts) {
    for (auto [u, v] : p.edges()) edges.emplace_back(u + offset, v + offset);
    if (any_attrs)
      for (int v = 0; v < p.n(); ++v) attrs.push_back(p.has_attrs() ? p.attrs()[v] : AttrVector{});
    offset += p.n();
  }
  return Graph(offset, std::move(edges), std::move(attrs));
}

inline Graph complement(const Graph& g) {
  std::vector<Edge> edges;
  for (int u = 0; u < g.n(); ++u)
    for (int v = u + 1; v < g.n(); ++v)
      if (!g.adjacent(u, v)) edges.emplace_back(u, v);
  return Graph(g.n(), std::move(edges), g.attrs());
}

// ---------------------------------------------------------------------------
// Combinatorics helpers shared by decks, samplers and audits.

/// C(n, k), saturating at uint64 max.
inline std::uint64_t binomial(int n, int k) noexcept {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

/// Calls fn(span of k ascending vertices) for every k-subset of 0..n-1 in
/// lexicographic order. fn may return false to stop early.
template <class Fn>
void for_each_combination(int n, int k, Fn&& fn) {
  if (k < 0 || k > n) return;
  std::vector<int> c(k);
  std::iota(c.begin(), c.end(), 0);
  while (true) {
    if constexpr (std::is_same_v<decltype(fn(std::span<const int>(c))), bool>) {
      if (!fn(std::span<const int>(c))) return;
    } else {
      fn(std::span<const int>(c));
    }
    int i = k - 1;
    while (i >= 0 && c[i] == n - k + i) --i;
    if (i < 0) return;
    ++c[i];
    for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
  }
}

/// The rank-th k-subset of 0..n-1 in lexicographic order (the order used by
/// for_each_combination).
inline std::vector<int> unrank_combination(int n, int k, std::uint64_t rank) {
  std::vector<int> out;
  out.reserve(k);
  int next = 0;
  for (int slot = 0; slot < k; ++slot) {
    for (int v = next; v < n; ++v) {
      std::uint64_t with_v = binomial(n - v - 1, k - slot - 1);
      if (rank < with_v) {
        out.push_back(v);
        next = v + 1;
        break;
      }
      rank -= with_v;
    }
  }
  return out;
}

}  // namespace recon
