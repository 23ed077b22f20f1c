#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string_view>
#include <vector>

#include "recon/graph.hpp"
#include "recon/hash.hpp"

namespace recon {

// std::mt19937_64 output is fully specified by the standard; the
// distributions below are written out so that streams are identical across
// standard library implementations.
using Rng = std::mt19937_64;

/// Seed of the named sub-stream `tag`/`index` under a top-level seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
  Hasher128 h(seed);
  h.add_bytes(tag).add(index);
  return h.digest().lo;
}

inline Rng make_rng(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, tag, index));
}

/// Uniform integer in [0, bound).
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return x % bound;
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo) + 1));
}

/// Uniform double in [0, 1).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

template <class T>
void shuffle(std::vector<T>& xs, Rng& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[uniform_below(rng, i)]);
}

inline std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  shuffle(p, rng);
  return p;
}

/// `count` distinct k-subsets of 0..n-1 drawn uniformly without
/// replacement (Floyd's algorithm on lexicographic ranks), returned in rank
/// order. All subsets when count >= C(n, k).
inline std::vector<std::vector<int>> sample_k_subsets(int n, int k, std::uint64_t count, Rng& rng) {
  const std::uint64_t total = binomial(n, k);
  std::vector<std::vector<int>> out;
  if (count >= total) {
    out.reserve(total);
    for_each_combination(n, k, [&](std::span<const int> s) { out.emplace_back(s.begin(), s.end()); });
    return out;
  }
  std::set<std::uint64_t> ranks;
  for (std::uint64_t j = total - count; j < total; ++j) {
    std::uint64_t t = uniform_below(rng, j + 1);
    if (!ranks.insert(t).second) ranks.insert(j);
  }
  out.reserve(count);
  for (auto r : ranks) out.push_back(unrank_combination(n, k, r));
  return out;
}

}  // namespace recon
