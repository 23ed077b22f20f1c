#pragma once

#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "recon/errors.hpp"
#include "recon/graph.hpp"

namespace recon {

inline Graph cycle_graph(int n) {
  if (n < 3) throw InvalidArgument("cycle_graph: n must be >= 3");
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return Graph(n, std::move(e));
}

inline Graph path_graph(int n) {
  if (n < 1) throw InvalidArgument("path_graph: n must be >= 1");
  std::vector<Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph(n, std::move(e));
}

inline Graph complete_graph(int n) {
  if (n < 1) throw InvalidArgument("complete_graph: n must be >= 1");
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Graph(n, std::move(e));
}

/// K_{1,leaves}, center 0.
inline Graph star_graph(int leaves) {
  if (leaves < 1) throw InvalidArgument("star_graph: need at least one leaf");
  std::vector<Edge> e;
  for (int i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return Graph(leaves + 1, std::move(e));
}

/// Center 0 joined to the first vertex of each leg; legs are numbered
/// consecutively after the center.
inline Graph spider_graph(const std::vector<int>& legs) {
  if (legs.size() < 3) throw InvalidArgument("spider_graph: need at least 3 legs");
  std::vector<Edge> e;
  int next = 1;
  for (int len : legs) {
    if (len < 1) throw InvalidArgument("spider_graph: leg lengths must be >= 1");
    e.emplace_back(0, next);
    for (int i = 1; i < len; ++i) e.emplace_back(next + i - 1, next + i);
    next += len;
  }
  return Graph(next, std::move(e));
}

/// All spiders on n vertices, one per multiset of leg lengths (legs sorted
/// descending).
inline std::vector<Graph> enumerate_spiders(int n) {
  std::vector<Graph> out;
  std::vector<int> legs;
  auto rec = [&](auto&& self, int remaining, int max_part) -> void {
    if (remaining == 0) {
      if (legs.size() >= 3) out.push_back(spider_graph(legs));
      return;
    }
    for (int p = std::min(remaining, max_part); p >= 1; --p) {
      legs.push_back(p);
      self(self, remaining - p, p);
      legs.pop_back();
    }
  };
  if (n >= 4) rec(rec, n - 1, n - 1);
  return out;
}

inline Graph petersen_graph() {
  std::vector<Edge> e;
  for (int i = 0; i < 5; ++i) {
    e.emplace_back(i, (i + 1) % 5);
    e.emplace_back(i, i + 5);
    e.emplace_back(5 + i, 5 + (i + 2) % 5);
  }
  return Graph(10, std::move(e));
}

/// Circular skip link graph: the m-cycle plus the cycle visiting
/// 0, r, 2r, ... (mod m).
inline Graph csl_graph(int m, int r) {
  if (m < 5) throw InvalidArgument("csl_graph: m must be >= 5");
  if (r < 2 || r >= m - 1) throw InvalidArgument("csl_graph: need 2 <= r < m-1, got r = " + std::to_string(r));
  if (std::gcd(m, r) != 1) throw InvalidArgument("csl_graph: gcd(m, r) != 1 for m = " + std::to_string(m) +
                                                 ", r = " + std::to_string(r));
  std::vector<Edge> e;
  for (int i = 0; i < m; ++i) e.emplace_back(i, (i + 1) % m);
  int s = 0;
  for (int i = 0; i < m; ++i) {
    int t = (s + r) % m;
    e.emplace_back(s, t);
    s = t;
  }
  return Graph::collapsing(m, std::move(e));
}

/// (rook's graph on 4x4, Shrikhande graph); both strongly regular with
/// parameters (16, 6, 2, 2). Vertex (a, b) of Z4 x Z4 is 4a + b.
inline std::pair<Graph, Graph> srg_pair() {
  auto build = [](auto&& adjacent) {
    std::vector<Edge> e;
    for (int x = 0; x < 16; ++x)
      for (int y = x + 1; y < 16; ++y)
        if (adjacent(x / 4, x % 4, y / 4, y % 4)) e.emplace_back(x, y);
    return Graph(16, std::move(e));
  };
  Graph rook = build([](int a, int b, int c, int d) { return a == c || b == d; });
  Graph shrikhande = build([](int a, int b, int c, int d) {
    int da = (c - a + 4) % 4, db = (d - b + 4) % 4;
    return (da == 0 && (db == 1 || db == 3)) || (db == 0 && (da == 1 || da == 3)) || (da == 1 && db == 1) ||
           (da == 3 && db == 3);
  });
  return {std::move(rook), std::move(shrikhande)};
}

/// Two 5-cycles, one of them with an extra vertex joined to all five of its
/// vertices. 1-WL identifies it, but deleting the extra vertex leaves the
/// regular graph 2 x C5, which 1-WL does not identify.
inline Graph apex_two_pentagons() {
  std::vector<Edge> e;
  for (int i = 0; i < 5; ++i) {
    e.emplace_back(i, (i + 1) % 5);
    e.emplace_back(5 + i, 5 + (i + 1) % 5);
    e.emplace_back(i, 10);
  }
  return Graph(11, std::move(e));
}

}  // namespace recon
