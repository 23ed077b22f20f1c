#pragma once

#include <bit>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "recon/canonical.hpp"
#include "recon/deck.hpp"
#include "recon/errors.hpp"
#include "recon/families.hpp"
#include "recon/graph.hpp"
#include "recon/graph_io.hpp"
#include "recon/hash.hpp"
#include "recon/wl.hpp"

namespace recon {

inline bool same_deck(const Graph& a, const Graph& b, int k, std::uint64_t budget = kDefaultDeckBudget) {
  if (a.n() != b.n())
    throw InvalidArgument("same_deck: graphs have different sizes (" + std::to_string(a.n()) + " vs " +
                          std::to_string(b.n()) + ")");
  return deck(a, k, budget).cards == deck(b, k, budget).cards;
}

enum class Family { all, trees, spiders, regular };

inline Family parse_family(const std::string& s) {
  if (s == "all") return Family::all;
  if (s == "trees") return Family::trees;
  if (s == "spiders") return Family::spiders;
  if (s == "regular") return Family::regular;
  throw InvalidArgument("unknown graph family '" + s + "' (expected all|trees|spiders|regular)");
}

inline std::string to_string(Family f) {
  switch (f) {
    case Family::all: return "all";
    case Family::trees: return "trees";
    case Family::spiders: return "spiders";
    case Family::regular: return "regular";
  }
  return "?";
}

/// One representative per isomorphism class in the family on n vertices.
inline std::vector<Graph> family_members(Family f, int n) {
  switch (f) {
    case Family::all: return enumerate_graphs(n);
    case Family::trees: return enumerate_trees(n);
    case Family::spiders: return enumerate_spiders(n);
    case Family::regular: return enumerate_regular(n);
  }
  return {};
}

struct ReconReport {
  int n = 0;
  int k = 0;
  Family family = Family::all;
  std::size_t classes = 0;
  std::vector<std::vector<Graph>> colliding_groups;
  double elapsed = 0.0;  // seconds
};

/// Groups the family's isomorphism classes on n vertices by k-deck and
/// returns the groups with two or more members. `jobs` > 1 computes decks on
/// that many threads; results do not depend on it.
inline ReconReport audit_k_reconstructibility(int n, int k, Family family = Family::all, int jobs = 1,
                                              std::uint64_t budget = kDefaultDeckBudget) {
  auto start = std::chrono::steady_clock::now();
  if (k < 1 || k > n) throw InvalidArgument("audit: k outside [1, n]");
  std::vector<Graph> members = family_members(family, n);

  std::vector<Deck> decks(members.size());
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(members.size())));
  auto work = [&](int worker) {
    for (std::size_t i = worker; i < members.size(); i += jobs) decks[i] = deck(members[i], k, budget);
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < jobs; ++w) pool.emplace_back(work, w);
  }

  std::map<std::map<CanonicalForm, std::uint64_t>, std::vector<std::size_t>> by_deck;
  for (std::size_t i = 0; i < members.size(); ++i) by_deck[decks[i].cards].push_back(i);

  ReconReport r;
  r.n = n;
  r.k = k;
  r.family = family;
  r.classes = members.size();
  for (const auto& [_, idx] : by_deck) {
    if (idx.size() < 2) continue;
    auto& group = r.colliding_groups.emplace_back();
    for (auto i : idx) group.push_back(members[i]);
  }
  r.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

/// Report as JSON. `elapsed` is left out unless asked for so that repeated
/// runs serialize identically.
inline json to_json(const ReconReport& r, bool with_timing = false) {
  json j;
  j["n"] = r.n;
  j["k"] = r.k;
  j["family"] = to_string(r.family);
  j["classes"] = r.classes;
  json groups = json::array();
  for (const auto& g : r.colliding_groups) {
    json members = json::array();
    for (const auto& m : g) members.push_back(to_json(m));
    groups.push_back(std::move(members));
  }
  j["colliding_groups"] = std::move(groups);
  if (with_timing) j["elapsed"] = r.elapsed;
  return j;
}

/// Induced copies of h in g, counted directly.
inline std::uint64_t count_induced(const Graph& g, const Graph& h) {
  if (h.n() > g.n()) return 0;
  if (h.n() == 0) return 1;
  const CanonicalForm target = canonical_form(h);
  CanonicalCache canon;
  std::uint64_t count = 0;
  for_each_combination(g.n(), h.n(), [&](std::span<const int> s) { count += canon(induced_subgraph(g, s)) == target; });
  return count;
}

/// Induced copies of h in the unknown graph on n vertices whose k-deck is d.
/// Each copy lies in C(n - |h|, k - |h|) cards.
inline std::uint64_t kelly_count(const Deck& d, const Graph& h, int n) {
  if (d.n != 0 && d.n != n)
    throw InvalidArgument("kelly_count: deck was built from a " + std::to_string(d.n) + "-vertex graph, not " +
                          std::to_string(n));
  if (h.n() > d.k || h.n() >= n)
    throw InvalidArgument("kelly_count: pattern has " + std::to_string(h.n()) + " vertices; need |h| <= k and |h| < n");
  std::uint64_t weighted = 0;
  for (const auto& [form, mult] : d.cards) weighted += count_induced(from_canonical(form), h) * mult;
  const std::uint64_t per_copy = binomial(n - h.n(), d.k - h.n());
  if (per_copy == 0 || weighted % per_copy != 0)
    throw CorruptedDeck("kelly_count: card total " + std::to_string(weighted) + " not divisible by " +
                        std::to_string(per_copy));
  return weighted / per_copy;
}

/// Multiset of jointly-refined 1-WL histograms over the k-cards of a and b.
/// True when they differ: the distinguishing power of a k-Reconstruction GNN
/// with a maximally expressive base GNN and injective pooling.
inline bool deck_wl_distinguishes(const Graph& a, const Graph& b, int k, std::uint64_t budget = kDefaultDeckBudget) {
  if (a.n() != b.n())
    throw InvalidArgument("deck_wl_distinguishes: graphs have different sizes (" + std::to_string(a.n()) + " vs " +
                          std::to_string(b.n()) + ")");
  if (k < 1 || k > a.n()) throw InvalidArgument("deck_wl_distinguishes: k outside [1, n]");
  const std::uint64_t per = binomial(a.n(), k);
  if (per > budget)
    throw ResourceError("deck_wl_distinguishes: C(n,k) = " + std::to_string(per) + " exceeds budget-subgraphs " +
                        std::to_string(budget));
  std::vector<Graph> cards;
  cards.reserve(2 * per);
  for (const Graph* g : {&a, &b})
    for_each_combination(g->n(), k, [&](std::span<const int> s) { cards.push_back(induced_subgraph(*g, s)); });
  auto colorings = wl1_joint(cards);
  using Hist = std::vector<std::pair<int, std::uint64_t>>;
  std::vector<Hist> ha, hb;
  for (std::size_t i = 0; i < colorings.size(); ++i) (i < per ? ha : hb).push_back(colorings[i].histogram);
  std::sort(ha.begin(), ha.end());
  std::sort(hb.begin(), hb.end());
  return ha != hb;
}

inline constexpr int kFingerprintCap = 8;

/// Full-reconstruction fingerprint: every 2-subset gets its exact pair type,
/// every larger subset the digest of the sorted digests of its subsets one
/// vertex smaller; the result is the digest of V(g).
inline Digest128 full_reconstruction_fingerprint(const Graph& g) {
  const int n = g.n();
  if (n > kFingerprintCap)
    throw UnsupportedSize("full_reconstruction_fingerprint: n = " + std::to_string(n) + " exceeds " +
                          std::to_string(kFingerprintCap));
  if (n == 0) return Hasher128(0xf00d).digest();
  std::vector<Digest128> fp(std::size_t{1} << n);
  std::vector<std::uint64_t> attr(n, 0);
  for (int v = 0; v < n; ++v) attr[v] = attribute_hash(g.attr(v));
  for (int v = 0; v < n; ++v) fp[1u << v] = Hasher128(1).add(attr[v]).digest();
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      auto [lo, hi] = std::minmax(attr[u], attr[v]);
      fp[(1u << u) | (1u << v)] = Hasher128(2).add(g.adjacent(u, v) ? 1 : 0).add(lo).add(hi).digest();
    }
  // Masks in increasing popcount order.
  std::vector<std::uint32_t> masks;
  for (std::uint32_t m = 1; m < (1u << n); ++m)
    if (std::popcount(m) >= 3) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(), [](auto a, auto b) { return std::popcount(a) < std::popcount(b); });
  std::vector<Digest128> children;
  for (auto m : masks) {
    children.clear();
    for (int v = 0; v < n; ++v)
      if (m >> v & 1) children.push_back(fp[m & ~(1u << v)]);
    std::sort(children.begin(), children.end());
    Hasher128 h(static_cast<std::uint64_t>(std::popcount(m)));
    for (const auto& c : children) h.add(c);
    fp[m] = h.digest();
  }
  return fp[(1u << n) - 1];
}

/// Evaluation of the two sufficient conditions for cycle identification by
/// (n - ell)-Reconstruction GNNs, natural logarithms throughout.
struct CycleConditions {
  double bound_i = 0;   ///< (2 ln n / ln ln n)^(1/2)
  double bound_ii = 0;  ///< right-hand side of the degree-list bound on n
  bool cond_i = false;        ///< ell < bound_i
  bool cond_i_slack = false;  ///< ell < 1.1 * bound_i
  bool cond_ii = false;       ///< n >= bound_ii
  bool near_boundary = false; ///< either comparison within 5% of equality
  bool holds() const { return cond_i && cond_ii; }
};

inline CycleConditions cycle_theorem_conditions(int n, int ell) {
  if (n < 4 || ell < 1 || ell > n - 3)
    throw InvalidArgument("cycle_theorem_conditions: need n >= 4 and 1 <= ell <= n-3");
  constexpr double e = std::numbers::e;
  const double ln_n = std::log(static_cast<double>(n));
  const double l = ell, ln_l = std::log(l);
  CycleConditions c;
  c.bound_i = std::sqrt(2.0 * ln_n / std::log(ln_n));
  c.bound_ii = (l - ln_l + 1.0) * ((e + e * ln_l + e + 1.0) / ((l - 1.0) * ln_l - 1.0)) + 1.0;
  c.cond_i = l < c.bound_i;
  c.cond_i_slack = l < 1.1 * c.bound_i;
  c.cond_ii = n >= c.bound_ii;
  c.near_boundary = std::abs(l - c.bound_i) <= 0.05 * c.bound_i ||
                    std::abs(n - c.bound_ii) <= 0.05 * std::max(1.0, std::abs(c.bound_ii));
  return c;
}

}  // namespace recon
