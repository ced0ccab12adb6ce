#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace tunegain {

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// A key component for seed derivation: either a number or a label.
struct SeedKey {
  std::uint64_t value;
  SeedKey(std::uint64_t v) : value(v) {}  // NOLINT
  SeedKey(int v) : value(static_cast<std::uint64_t>(v)) {}  // NOLINT
  SeedKey(std::string_view s) : value(detail::fnv1a(s)) {}  // NOLINT
  SeedKey(const char* s) : value(detail::fnv1a(s)) {}  // NOLINT
};

/// Derives a child seed from a master seed and a path of keys. The result
/// depends only on its arguments, so jobs can be scheduled in any order.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<SeedKey> path) {
  std::uint64_t h = detail::splitmix64(master);
  for (const auto& k : path) h = detail::splitmix64(h ^ detail::splitmix64(k.value + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng derive_rng(std::uint64_t master, std::initializer_list<SeedKey> path) {
  return Rng(derive_seed(master, path));
}

/// Uniform index in [0, n). Avoids std::uniform_int_distribution so streams
/// are identical across standard library implementations.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  // Lemire's nearly-divisionless method, rejection for exact uniformity.
  std::uint64_t x = rng();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    std::uint64_t threshold = (0 - static_cast<std::uint64_t>(n)) % n;
    while (low < threshold) {
      x = rng();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Standard normal via Box-Muller (one value per call).
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Sample k distinct indices from [0, n) in draw order (partial Fisher-Yates).
template <class Vec = std::vector<std::size_t>>
Vec sample_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  if (k > n) k = n;
  Vec out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + uniform_index(rng, n - i);
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace tunegain
