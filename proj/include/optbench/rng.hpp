#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <vector>

namespace optbench {

// SplitMix64 finalizer; whitens seed material before it reaches an engine.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and a stream tag.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ stream);
}

// Seeded generator with explicit value mappings. std::mt19937_64 output is
// pinned by the standard; the library distributions are not, so uniform,
// bounded-int and normal draws are implemented here to keep sequences
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) by rejection over a power-of-two envelope.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t mask = std::bit_ceil(n) - 1;
    for (;;) {
      const std::uint64_t r = next_u64() & mask;
      if (r < n) return r;
    }
  }

  double normal(double mean = 0.0, double stddev = 1.0);

  // Fisher-Yates; consumes size-1 bounded draws.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace optbench
