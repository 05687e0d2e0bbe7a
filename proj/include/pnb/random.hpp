#pragma once

// Seeded randomness with a fixed bit stream on every platform.
// std::uniform_int_distribution and std::shuffle are implementation-defined,
// so reports would not replay across standard libraries; everything here is
// built on the raw mt19937_64 output, which the standard pins down.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace pnb {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for stream `stream` of `parent`. Distinct (parent, stream)
/// pairs give independent, individually replayable sub-seeds.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
  return splitmix64(splitmix64(parent) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// FNV-1a, used to turn stable names into seed streams.
inline std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  /// Uniform real in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pnb
