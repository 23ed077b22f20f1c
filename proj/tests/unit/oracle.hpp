#pragma once

// Slow, obviously-correct reference implementations used as test oracles.

#include <algorithm>
#include <numeric>
#include <vector>

#include "recon/graph.hpp"

namespace oracle {

inline bool isomorphic(const recon::Graph& a, const recon::Graph& b) {
  if (a.n() != b.n() || a.m() != b.m()) return false;
  std::vector<int> p(a.n());
  std::iota(p.begin(), p.end(), 0);
  do {
    bool ok = true;
    for (const auto& [u, v] : a.edges())
      if (!b.adjacent(p[u], p[v])) {
        ok = false;
        break;
      }
    if (ok) return true;
  } while (std::next_permutation(p.begin(), p.end()));
  return false;
}

// Simple cycle on exactly L vertices, by trying every ordered L-tuple.
inline bool has_cycle(const recon::Graph& g, int L) {
  const int n = g.n();
  std::vector<int> path;
  std::vector<char> used(n, 0);
  auto rec = [&](auto&& self) -> bool {
    if (static_cast<int>(path.size()) == L) return g.adjacent(path.back(), path.front());
    for (int v = 0; v < n; ++v) {
      if (used[v] || (!path.empty() && !g.adjacent(path.back(), v))) continue;
      used[v] = 1;
      path.push_back(v);
      if (self(self)) return true;
      path.pop_back();
      used[v] = 0;
    }
    return false;
  };
  return L <= n && rec(rec);
}

}  // namespace oracle
