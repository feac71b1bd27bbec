#pragma once

#include <cstdint>
#include <limits>

namespace perc {

// SplitMix64 finalizer (Steele, Lea, Flood). Bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Folds a word into a running key.
constexpr std::uint64_t combine(std::uint64_t key, std::uint64_t word) { return mix64(key ^ mix64(word)); }

constexpr std::uint64_t zigzag(std::int64_t v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

// Maps 64 random bits to [0, 1) with 53-bit resolution.
constexpr double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// Counter-based stream: the k-th output is a pure function of (key, k), so
// independent streams are obtained by deriving keys, never by sharing state.
// Satisfies UniformRandomBitGenerator for use with <random> distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(mix64(key)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + 0x9E3779B97F4A7C15ull * ++counter_); }
  double uniform() { return to_unit((*this)()); }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Key for stream `index` under `parent` (e.g. walker i of a configuration).
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) {
  return combine(combine(parent, 0x5EEDull), index);
}

}  // namespace perc
