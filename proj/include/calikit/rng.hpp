#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace calikit {

// splitmix64 finalizer (Vigna). Used to mix seeds; the mix function is part
// of the documented output contract, so do not change it.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child seed = mix64(parent ^ FNV-1a(purpose)). Distinct purposes give
// independent, reproducible streams from one parent seed.
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view purpose) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : purpose) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(parent ^ h);
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view purpose,
                                 std::uint64_t index) {
  return mix64(derive_seed(parent, purpose) ^ mix64(index));
}

// mt19937_64 with hand-rolled mappings. std::uniform_*_distribution is
// implementation-defined, so draws go through fixed bit manipulations only.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform double in [0, 1), 53 random bits
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // uniform double in the open interval (0, 1): midpoints of the 2^53 cells.
  // Safe to feed into inverse CDFs that diverge at 0 or 1.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // uniform integer in [0, bound), bound > 0, by rejection
  std::uint64_t uniform_below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  // Fisher-Yates shuffle, deterministic for a given seed
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace calikit
