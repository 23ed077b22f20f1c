#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace recon {

/// 128-bit digest used for WL traces and reconstruction fingerprints.
///
/// The hash is two 64-bit lanes fed word by word:
///   lo = fmix64(lo ^ (w * K1)) + hi
///   hi = fmix64(hi + rotl(w, 31) * K2) ^ lo
/// with fmix64 the MurmurHash3 finalizer. The word count is folded in at the
/// end. It is not cryptographic; injectivity claims that depend on it are
/// cross-checked against canonical forms in the tests.
struct Digest128 {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  friend auto operator<=>(const Digest128&, const Digest128&) = default;

  std::string hex() const {
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(hi),
                  static_cast<unsigned long long>(lo));
    return buf;
  }
};

inline constexpr std::uint64_t fmix64(std::uint64_t k) noexcept {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Hasher128 {
 public:
  explicit Hasher128(std::uint64_t seed = 0) : lo_(0x243f6a8885a308d3ULL ^ seed), hi_(0x13198a2e03707344ULL) {}

  Hasher128& add(std::uint64_t w) noexcept {
    constexpr std::uint64_t k1 = 0x87c37b91114253d5ULL;
    constexpr std::uint64_t k2 = 0x4cf5ad432745937fULL;
    lo_ = fmix64(lo_ ^ (w * k1)) + hi_;
    hi_ = fmix64(hi_ + ((w << 31) | (w >> 33)) * k2) ^ lo_;
    ++count_;
    return *this;
  }
  Hasher128& add(const Digest128& d) noexcept { return add(d.lo).add(d.hi); }
  Hasher128& add_signed(std::int64_t w) noexcept { return add(static_cast<std::uint64_t>(w)); }

  template <class Int>
  Hasher128& add_range(std::span<const Int> xs) noexcept {
    add(xs.size());
    for (auto x : xs) add(static_cast<std::uint64_t>(x));
    return *this;
  }

  Hasher128& add_bytes(std::string_view s) noexcept {
    add(s.size());
    std::uint64_t w = 0;
    int used = 0;
    for (unsigned char c : s) {
      w |= static_cast<std::uint64_t>(c) << (8 * used);
      if (++used == 8) {
        add(w);
        w = 0;
        used = 0;
      }
    }
    if (used) add(w);
    return *this;
  }

  Digest128 digest() const noexcept {
    std::uint64_t a = fmix64(lo_ ^ count_);
    std::uint64_t b = fmix64(hi_ + a + count_);
    return {a + b, b ^ (a << 1)};
  }

 private:
  std::uint64_t lo_, hi_;
  std::uint64_t count_ = 0;
};

/// Rolling hash of an integer attribute vector (FNV-1a over the little-endian
/// bytes of each element, then fmix64). Used for initial WL colors.
inline std::uint64_t attribute_hash(std::span<const int> attrs) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int a : attrs) {
    auto u = static_cast<std::uint32_t>(a);
    for (int b = 0; b < 4; ++b) {
      h ^= (u >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  return fmix64(h ^ attrs.size());
}

}  // namespace recon
