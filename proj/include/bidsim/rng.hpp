#pragma once

#include <cstdint>

namespace bidsim {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Deterministic key derivation for nested stream splitting, e.g.
/// hash_combine(hash_combine(base_seed, run), bidder).
constexpr std::uint64_t hash_combine(std::uint64_t key, std::uint64_t index) {
  return mix64(key ^ (index * 0xD1B54A32D192ED03ull + 0x9E3779B97F4A7C15ull));
}

/// Counter-based uniform generator: the n-th output is a pure function of
/// (key, n), so identical streams can be replayed on any platform or thread
/// schedule. Plain integer arithmetic only.
class RngStream {
 public:
  constexpr explicit RngStream(std::uint64_t key) : key_(key) {}

  constexpr std::uint64_t next_u64() {
    counter_ += 0x9E3779B97F4A7C15ull;
    return mix64(key_ + counter_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  constexpr std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace bidsim
