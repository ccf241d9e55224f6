#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ima {

/// One (context, question, label, depth) record.
struct Example {
  std::string id;
  std::vector<std::string> context;
  std::string question;
  bool label = false;
  int depth = 0;  // reasoning-depth tag of the example's chain

  bool operator==(const Example&) const = default;
};

/// Permutes the context sentences with SplitMix64(seed); everything else is
/// carried over unchanged.
Example shuffle_sentences(const Example& example, std::uint64_t seed);

}  // namespace ima
