#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "recon/canonical.hpp"
#include "recon/errors.hpp"
#include "recon/graph.hpp"

namespace recon {

inline constexpr std::uint64_t kDefaultDeckBudget = 5'000'000;

/// Multiset of k-card isomorphism types.
struct Deck {
  int k = 0;
  int n = 0;  ///< vertex count of the source graph
  std::map<CanonicalForm, std::uint64_t> cards;

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& [_, c] : cards) t += c;
    return t;
  }
  std::size_t distinct() const { return cards.size(); }

  friend bool operator==(const Deck& a, const Deck& b) { return a.k == b.k && a.n == b.n && a.cards == b.cards; }
};

/// The k-deck of g. Throws ResourceError when C(n, k) exceeds `budget`.
inline Deck deck(const Graph& g, int k, std::uint64_t budget = kDefaultDeckBudget, int cap = kDefaultCanonicalCap) {
  if (k < 1 || k > g.n())
    throw InvalidArgument("deck: k = " + std::to_string(k) + " outside [1, " + std::to_string(g.n()) + "]");
  const std::uint64_t cards = binomial(g.n(), k);
  if (cards > budget)
    throw ResourceError("deck: C(" + std::to_string(g.n()) + "," + std::to_string(k) + ") = " +
                        std::to_string(cards) + " cards exceeds budget-subgraphs " + std::to_string(budget) +
                        "; use a sampled deck");
  Deck d;
  d.k = k;
  d.n = g.n();
  CanonicalCache canon(cap);
  for_each_combination(g.n(), k, [&](std::span<const int> s) { ++d.cards[canon(induced_subgraph(g, s))]; });
  return d;
}

namespace detail {

inline std::vector<Graph> extend_by_vertex(const std::vector<Graph>& smaller, int n, bool trees_only) {
  std::map<CanonicalForm, Graph> seen;
  CanonicalCache canon;
  for (const auto& g : smaller) {
    const int m = g.n();
    const std::uint32_t limit = 1u << m;
    for (std::uint32_t mask = 0; mask < limit; ++mask) {
      if (trees_only && std::popcount(mask) != 1) continue;
      std::vector<Edge> edges = g.edges();
      for (int v = 0; v < m; ++v)
        if (mask >> v & 1) edges.emplace_back(v, m);
      Graph h(n, std::move(edges));
      const auto& f = canon(h);
      if (!seen.contains(f)) seen.emplace(f, from_canonical(f));
    }
  }
  // Map order is canonical-form order, so enumeration output is stable.
  std::vector<Graph> out;
  out.reserve(seen.size());
  for (auto& [_, g] : seen) out.push_back(std::move(g));
  return out;
}

template <class Build>
const std::vector<Graph>& memoized_family(std::map<int, std::vector<Graph>>& memo, int n, Build&& build) {
  static std::mutex mu;
  std::lock_guard lock(mu);
  auto it = memo.find(n);
  if (it == memo.end()) it = memo.emplace(n, build()).first;
  return it->second;
}

}  // namespace detail

/// One representative per isomorphism class of simple graphs on n ≤ 8
/// vertices (1, 1, 2, 4, 11, 34, 156, 1044, 12346 classes for n = 0..8).
/// Representatives are canonical (decoded from their canonical forms) and
/// listed in canonical-form order. Results are memoized per process.
inline const std::vector<Graph>& enumerate_graphs(int n) {
  if (n < 0) throw InvalidArgument("enumerate_graphs: negative n");
  if (n > 8) throw UnsupportedSize("enumerate_graphs: n = " + std::to_string(n) + " exceeds 8");
  static std::map<int, std::vector<Graph>> memo;
  if (n == 0) {
    static const std::vector<Graph> empty{Graph(0, {})};
    return empty;
  }
  const auto& smaller = enumerate_graphs(n - 1);
  return detail::memoized_family(memo, n, [&] { return detail::extend_by_vertex(smaller, n, false); });
}

/// Unlabeled trees on n ≤ 14 vertices.
inline const std::vector<Graph>& enumerate_trees(int n) {
  if (n < 1) throw InvalidArgument("enumerate_trees: n must be >= 1");
  if (n > 14) throw UnsupportedSize("enumerate_trees: n = " + std::to_string(n) + " exceeds 14");
  static std::map<int, std::vector<Graph>> memo;
  if (n == 1) {
    static const std::vector<Graph> single{Graph(1, {})};
    return single;
  }
  const auto& smaller = enumerate_trees(n - 1);
  return detail::memoized_family(memo, n, [&] { return detail::extend_by_vertex(smaller, n, true); });
}

/// Regular graphs among the isomorphism classes on n ≤ 8 vertices.
inline std::vector<Graph> enumerate_regular(int n) {
  std::vector<Graph> out;
  for (const auto& g : enumerate_graphs(n)) {
    bool regular = true;
    for (int v = 1; v < g.n() && regular; ++v) regular = g.degree(v) == g.degree(0);
    if (regular) out.push_back(g);
  }
  return out;
}

}  // namespace recon
