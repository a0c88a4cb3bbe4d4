#pragma once

// Deterministic pseudo-randomness. Every random choice in the library is
// drawn from a seed derived as derive_seed(root, purpose_tag, index), so
// sub-tasks can be reordered or run in parallel without changing results,
// and a run is fully reproducible from its root seed.

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace dkc {

inline constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer; bijective mixing of 64-bit values.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

// seed = mix(mix(root ^ hash(tag)) + index). Distinct tags and indices
// give statistically independent streams.
inline constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                           std::uint64_t index = 0) {
  return mix64(mix64(root ^ fnv1a64(tag)) + index);
}

// splitmix64 generator. Small state, passes the usual batteries, and is
// identical across platforms, which matters more here than period length.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGolden64;
    return mix64(state_);
  }

  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n); n must be positive.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace dkc
