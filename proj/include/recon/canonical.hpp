#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "recon/errors.hpp"
#include "recon/graph.hpp"
#include "recon/hash.hpp"

namespace recon {

inline constexpr int kDefaultCanonicalCap = 16;

/// Exact identifier of an isomorphism type.
///
/// Layout: n as 2 big-endian bytes, an attribute flag byte, then (if
/// attributed) each vertex's attribute vector in canonical order as a 2-byte
/// length followed by 4-byte big-endian values, then the upper triangle of
/// the adjacency matrix under the canonical order, row-major, MSB first.
struct CanonicalForm {
  std::vector<std::uint8_t> bytes;

  friend auto operator<=>(const CanonicalForm&, const CanonicalForm&) = default;
  friend bool operator==(const CanonicalForm&, const CanonicalForm&) = default;

  int n() const noexcept { return bytes.size() < 2 ? 0 : (bytes[0] << 8) | bytes[1]; }

  std::string hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (auto b : bytes) {
      s.push_back(digits[b >> 4]);
      s.push_back(digits[b & 15]);
    }
    return s;
  }
};

struct CanonicalFormHash {
  std::size_t operator()(const CanonicalForm& f) const noexcept {
    Hasher128 h;
    h.add_bytes(std::string_view(reinterpret_cast<const char*>(f.bytes.data()), f.bytes.size()));
    return static_cast<std::size_t>(h.digest().lo);
  }
};

struct CanonicalLabeling {
  CanonicalForm form;
  std::vector<Vertex> order;  ///< order[i] is the vertex placed at canonical position i
  std::uint64_t leaves = 0;   ///< search-tree leaves visited
};

namespace detail {

using Cells = std::vector<std::vector<Vertex>>;

/// Refinement-guided individualization search with automorphism pruning.
/// The leaf set is isomorphism invariant (cells are split and ordered by
/// signatures only), so the minimal leaf code is a canonical form. Subtrees
/// are skipped when an automorphism fixing the current prefix maps the
/// candidate onto an already explored vertex.
class CanonicalSearch {
 public:
  explicit CanonicalSearch(const Graph& g, std::uint64_t leaf_budget) : g_(g), budget_(leaf_budget) {
    words_ = (static_cast<std::size_t>(g.n()) * (g.n() - 1) / 2 + 63) / 64;
  }

  CanonicalLabeling run() {
    Cells cells = initial_cells();
    refine(cells);
    std::vector<Vertex> prefix;
    visit(cells, prefix);

    CanonicalLabeling out;
    out.order = best_order_;
    out.leaves = leaves_;
    out.form = encode(best_order_, best_code_);
    return out;
  }

 private:
  Cells initial_cells() const {
    const int n = g_.n();
    std::vector<Vertex> vs(n);
    std::iota(vs.begin(), vs.end(), 0);
    if (!g_.has_attrs()) return n == 0 ? Cells{} : Cells{vs};
    std::stable_sort(vs.begin(), vs.end(), [&](Vertex a, Vertex b) { return g_.attrs()[a] < g_.attrs()[b]; });
    Cells cells;
    for (Vertex v : vs) {
      if (cells.empty() || g_.attrs()[cells.back().front()] != g_.attrs()[v]) cells.emplace_back();
      cells.back().push_back(v);
    }
    return cells;
  }

  void refine(Cells& cells) const {
    const int n = g_.n();
    std::vector<int> color(n);
    std::vector<std::pair<std::vector<int>, Vertex>> sig;
    while (true) {
      for (int c = 0; c < static_cast<int>(cells.size()); ++c)
        for (Vertex v : cells[c]) color[v] = c;
      bool changed = false;
      Cells next;
      next.reserve(cells.size() + 4);
      for (auto& cell : cells) {
        if (cell.size() == 1) {
          next.push_back(cell);
          continue;
        }
        sig.clear();
        for (Vertex v : cell) {
          std::vector<int> s;
          s.reserve(g_.degree(v));
          for (Vertex u : g_.neighbors(v)) s.push_back(color[u]);
          std::sort(s.begin(), s.end());
          sig.emplace_back(std::move(s), v);
        }
        std::sort(sig.begin(), sig.end());
        std::size_t start = next.size();
        for (std::size_t i = 0; i < sig.size(); ++i) {
          if (i == 0 || sig[i].first != sig[i - 1].first) next.emplace_back();
          next.back().push_back(sig[i].second);
        }
        if (next.size() - start > 1) changed = true;
      }
      cells.swap(next);
      if (!changed) return;
    }
  }

  void visit(const Cells& cells, std::vector<Vertex>& prefix) {
    int target = -1;
    for (int c = 0; c < static_cast<int>(cells.size()); ++c)
      if (cells[c].size() > 1 && (target < 0 || cells[c].size() < cells[target].size())) target = c;
    if (target < 0) {
      leaf(cells);
      return;
    }

    std::vector<Vertex> candidates = cells[target];
    std::sort(candidates.begin(), candidates.end());
    std::vector<Vertex> explored;
    std::vector<int> orbit;
    std::size_t autos_seen = static_cast<std::size_t>(-1);
    for (Vertex v : candidates) {
      if (!explored.empty()) {
        if (autos_seen != autos_.size()) {
          orbit = orbits_fixing(prefix);
          autos_seen = autos_.size();
        }
        bool redundant = std::any_of(explored.begin(), explored.end(),
                                     [&](Vertex u) { return orbit[u] == orbit[v]; });
        if (redundant) continue;
      }
      Cells child;
      child.reserve(cells.size() + 1);
      for (int c = 0; c < static_cast<int>(cells.size()); ++c) {
        if (c != target) {
          child.push_back(cells[c]);
          continue;
        }
        child.push_back({v});
        std::vector<Vertex> rest;
        for (Vertex u : cells[c])
          if (u != v) rest.push_back(u);
        child.push_back(std::move(rest));
      }
      refine(child);
      prefix.push_back(v);
      visit(child, prefix);
      prefix.pop_back();
      explored.push_back(v);
    }
  }

  std::vector<int> orbits_fixing(const std::vector<Vertex>& prefix) const {
    const int n = g_.n();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& a : autos_) {
      bool fixes = std::all_of(prefix.begin(), prefix.end(), [&](Vertex p) { return a[p] == p; });
      if (!fixes) continue;
      for (int v = 0; v < n; ++v) {
        int x = find(v), y = find(a[v]);
        if (x != y) parent[std::max(x, y)] = std::min(x, y);
      }
    }
    for (int v = 0; v < n; ++v) parent[v] = find(v);
    return parent;
  }

  std::vector<std::uint64_t> code_of(const std::vector<Vertex>& order) const {
    const int n = g_.n();
    std::vector<std::uint64_t> code(words_, 0);
    std::size_t bit = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++bit)
        if (g_.adjacent(order[i], order[j])) code[bit / 64] |= 1ULL << (63 - bit % 64);
    return code;
  }

  void leaf(const Cells& cells) {
    if (++leaves_ > budget_)
      throw ResourceError("canonical_form: leaf budget of " + std::to_string(budget_) +
                          " exceeded (raise the canonicalization leaf budget)");
    std::vector<Vertex> order;
    order.reserve(g_.n());
    for (const auto& c : cells) order.push_back(c.front());
    auto code = code_of(order);
    if (first_order_.empty() && g_.n() > 0 && best_order_.empty()) {
      first_order_ = best_order_ = order;
      first_code_ = best_code_ = std::move(code);
      return;
    }
    if (code == first_code_) add_automorphism(first_order_, order);
    if (code == best_code_) {
      if (best_order_ != first_order_) add_automorphism(best_order_, order);
    } else if (code < best_code_) {
      best_code_ = std::move(code);
      best_order_ = std::move(order);
    }
  }

  void add_automorphism(const std::vector<Vertex>& from, const std::vector<Vertex>& to) {
    std::vector<int> perm(g_.n());
    for (int i = 0; i < g_.n(); ++i) perm[from[i]] = to[i];
    bool identity = true;
    for (int v = 0; v < g_.n() && identity; ++v) identity = perm[v] == v;
    if (!identity) autos_.push_back(std::move(perm));
  }

  CanonicalForm encode(const std::vector<Vertex>& order, const std::vector<std::uint64_t>& code) const {
    const int n = g_.n();
    CanonicalForm f;
    auto& b = f.bytes;
    b.push_back(static_cast<std::uint8_t>(n >> 8));
    b.push_back(static_cast<std::uint8_t>(n & 0xff));
    b.push_back(g_.has_attrs() ? 1 : 0);
    if (g_.has_attrs()) {
      for (Vertex v : order) {
        const auto& a = g_.attrs()[v];
        b.push_back(static_cast<std::uint8_t>(a.size() >> 8));
        b.push_back(static_cast<std::uint8_t>(a.size() & 0xff));
        for (int x : a) {
          // Offset so that byte order matches signed integer order.
          auto u = static_cast<std::uint32_t>(x) ^ 0x80000000u;
          for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(u >> s));
        }
      }
    }
    const std::size_t bits = static_cast<std::size_t>(n) * (n - 1) / 2;
    for (std::size_t i = 0; i < (bits + 7) / 8; ++i)
      b.push_back(static_cast<std::uint8_t>(code[i / 8] >> (56 - 8 * (i % 8))));
    return f;
  }

  const Graph& g_;
  std::uint64_t budget_;
  std::size_t words_ = 0;
  std::uint64_t leaves_ = 0;
  std::vector<std::uint64_t> first_code_, best_code_;
  std::vector<Vertex> first_order_, best_order_;
  std::vector<std::vector<int>> autos_;
};

}  // namespace detail

inline constexpr std::uint64_t kDefaultLeafBudget = 20'000'000;

/// Canonical vertex order and form. Throws UnsupportedSize above `cap`.
inline CanonicalLabeling canonical_labeling(const Graph& g, int cap = kDefaultCanonicalCap,
                                            std::uint64_t leaf_budget = kDefaultLeafBudget) {
  if (g.n() > cap)
    throw UnsupportedSize("canonical_form: n = " + std::to_string(g.n()) + " exceeds canonicalization cap " +
                          std::to_string(cap));
  return detail::CanonicalSearch(g, leaf_budget).run();
}

inline CanonicalForm canonical_form(const Graph& g, int cap = kDefaultCanonicalCap) {
  return canonical_labeling(g, cap).form;
}

/// The canonical representative: the graph whose vertex i is canonical
/// position i.
inline Graph from_canonical(const CanonicalForm& f) {
  const auto& b = f.bytes;
  if (b.size() < 3) throw InvalidArgument("from_canonical: truncated form");
  const int n = f.n();
  std::size_t pos = 3;
  std::vector<AttrVector> attrs;
  if (b[2]) {
    attrs.resize(n);
    for (int v = 0; v < n; ++v) {
      if (pos + 2 > b.size()) throw InvalidArgument("from_canonical: truncated attributes");
      std::size_t len = (b[pos] << 8) | b[pos + 1];
      pos += 2;
      for (std::size_t i = 0; i < len; ++i) {
        if (pos + 4 > b.size()) throw InvalidArgument("from_canonical: truncated attributes");
        std::uint32_t u = 0;
        for (int s = 0; s < 4; ++s) u = (u << 8) | b[pos++];
        attrs[v].push_back(static_cast<int>(u ^ 0x80000000u));
      }
    }
  }
  std::vector<Edge> edges;
  std::size_t bit = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++bit) {
      std::size_t at = pos + bit / 8;
      if (at >= b.size()) throw InvalidArgument("from_canonical: truncated adjacency");
      if (b[at] & (0x80 >> (bit % 8))) edges.emplace_back(i, j);
    }
  return Graph(n, std::move(edges), std::move(attrs));
}

/// Memoizes canonical forms of small unattributed graphs keyed by their
/// labeled adjacency bitmask. Not thread-safe; give each worker its own.
class CanonicalCache {
 public:
  explicit CanonicalCache(int cap = kDefaultCanonicalCap) : cap_(cap) {}

  const CanonicalForm& operator()(const Graph& g) {
    if (g.has_attrs() || g.n() > 11) {
      scratch_ = canonical_form(g, cap_);
      return scratch_;
    }
    std::uint64_t key = static_cast<std::uint64_t>(g.n()) << 58;
    std::size_t bit = 0;
    for (int i = 0; i < g.n(); ++i)
      for (int j = i + 1; j < g.n(); ++j, ++bit)
        if (g.adjacent(i, j)) key |= 1ULL << bit;
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    return memo_.emplace(key, canonical_form(g, cap_)).first->second;
  }

  std::size_t size() const noexcept { return memo_.size(); }

 private:
  int cap_;
  std::unordered_map<std::uint64_t, CanonicalForm> memo_;
  CanonicalForm scratch_;
};

}  // namespace recon
