#include "ima/example.hpp"

#include <span>

#include "ima/rng.hpp"

namespace ima {

Example shuffle_sentences(const Example& example, std::uint64_t seed) {
  Example out = example;
  SplitMix64 rng(seed);
  rng.shuffle(std::span<std::string>(out.context));
  return out;
}

}  // namespace ima
