#include "ima/rng.hpp"

#include <string_view>

namespace ima {

std::uint64_t SplitMix64::below(std::uint64_t bound) {
  // Lemire, "Fast Random Integer Generation in an Interval" (2019).
  unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

SplitMix64 SplitMix64::split(std::uint64_t key) const {
  return SplitMix64(derive_seed(state_, {key}));
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = SplitMix64::mix64(seed + SplitMix64::kGamma);
  for (const std::uint64_t key : keys) {
    s = SplitMix64::mix64(s ^ SplitMix64::mix64(key + SplitMix64::kGamma));
  }
  return s;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ima
