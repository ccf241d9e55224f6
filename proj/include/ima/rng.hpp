#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <utility>

namespace ima {

/// SplitMix64: a 64-bit counter-based generator. The n-th output (1-based)
/// is mix64(seed + n * 0x9E3779B97F4A7C15), so any position can be reached
/// directly and independent streams are derived with derive_seed().
///
/// Reference outputs for seed 0: e220a8397b1dcdaf, 6e789e6aa1b965f4,
/// 06c45d188009454f. Every stochastic decision in the project goes through
/// this type, so datasets and runs are reproducible bit-for-bit on any
/// platform.
class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() {
    state_ += kGamma;
    return mix64(state_);
  }

  /// Uniform integer in [0, bound) by Lemire's multiply-shift with rejection.
  /// bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Child generator whose stream is a pure function of (current state, key).
  SplitMix64 split(std::uint64_t key) const;

  /// Fisher-Yates, walking i from size-1 down to 1 and swapping with below(i+1).
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// Seed of an independent stream: folds each key into the seed with mix64.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

/// 64-bit FNV-1a, used to turn strings (ids, tokens) into stream keys.
std::uint64_t fnv1a(std::string_view text);

}  // namespace ima
