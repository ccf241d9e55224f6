#pragma once

// Independent reference implementations used only by tests.

#include <cstdint>
#include <map>
#include <vector>

#include "ima/logic.hpp"
#include "ima/rng.hpp"

namespace ima::testing {

/// Grounds every rule over the universe up front, then derives level by level:
/// level k holds atoms produced by a ground rule whose antecedents were all
/// known before level k. The level an atom first appears at is its depth.
std::map<logic::Atom, int> bfs_oracle(const logic::KnowledgeBase& kb);

struct RandomKbShape {
  int max_entities = 4;
  int max_attributes = 6;
  int max_rules = 8;
  int max_facts = 6;
};

/// Random KB over attribute atoms plus a "likes" relation, with negative
/// literals and up to two antecedents per rule.
logic::KnowledgeBase random_kb(SplitMix64& rng, const RandomKbShape& shape = {});

}  // namespace ima::testing
