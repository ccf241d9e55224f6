#include "ima/datagen.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <span>
#include <stdexcept>

#include <json.hpp>

#include "ima/error.hpp"
#include "ima/logic.hpp"

namespace ima::datagen {

using logic::Atom;
using logic::Rule;
using logic::RuleForm;

std::string_view to_string(Category c) { return c == Category::kAnimal ? "animal" : "people"; }

Category category_from_string(std::string_view text) {
  if (text == "animal" || text == "animals") return Category::kAnimal;
  if (text == "people") return Category::kPeople;
  throw Error(ErrorCode::kInvalidSpec, "unknown category '" + std::string(text) + "'");
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

const Vocabularies& vocabularies() {
  static const Vocabularies kVocab{
      .animal_names = {"the bald eagle", "the tiger", "the bear", "the lion", "the wolf",
                       "the crocodile", "the dinosaur", "the snake", "the leopard", "the cat",
                       "the dog", "the mouse", "the rabbit", "the squirrel"},
      .people_names = {"Anne", "Alan", "Bob", "Charlie", "Dave", "Erin", "Harry", "Gary",
                       "Fiona"},
      .animal_relations = {"is", "is not", "likes", "chases", "needs", "visits", "attacks",
                           "sees"},
      .people_relations = {"is", "is not"},
      .animal_attributes = {"kind", "quiet", "round", "nice", "smart", "dull", "rough",
                            "lazy", "slow", "sleepy", "furry", "small", "cute", "lovely",
                            "beautiful", "big", "strong", "awful", "fierce", "heavy"},
      .people_attributes = {"big", "strong", "high", "huge", "short", "thin", "small",
                            "little", "wealthy", "smart", "nice", "quiet", "kind", "poor",
                            "dull", "rough", "bad", "sad", "old", "young"},
  };
  return kVocab;
}

std::size_t GenerationSpec::count(Split split, int depth) const {
  const auto s = counts.find(split);
  if (s == counts.end()) return 0;
  const auto d = s->second.find(depth);
  return d == s->second.end() ? 0 : d->second;
}

GenerationSpec GenerationSpec::uniform(Category category, bool negation, std::vector<int> depths,
                                       std::size_t train, std::size_t dev, std::size_t test,
                                       std::uint64_t seed) {
  GenerationSpec spec;
  spec.category = category;
  spec.negation_rules = negation;
  spec.depths = std::move(depths);
  spec.seed = seed;
  for (const int d : spec.depths) {
    spec.counts[Split::kTrain][d] = train;
    spec.counts[Split::kDev][d] = dev;
    spec.counts[Split::kTest][d] = test;
  }
  return spec;
}

GenerationSpec GenerationSpec::full_size(Category category, bool negation, std::uint64_t seed) {
  GenerationSpec spec;
  spec.category = category;
  spec.negation_rules = negation;
  spec.depths = {2, 3, 4, 5};
  spec.seed = seed;
  spec.counts[Split::kTrain] = {{2, 89952}, {3, 90016}, {4, 90010}, {5, 90022}};
  spec.counts[Split::kDev] = {{2, 16204}, {3, 16154}, {4, 16150}, {5, 16150}};
  spec.counts[Split::kTest] = {{2, 2708}, {3, 2694}, {4, 2704}, {5, 2692}};
  return spec;
}

void validate(const GenerationSpec& spec) {
  if (spec.depths.empty()) throw Error(ErrorCode::kInvalidSpec, "no depths requested");
  for (const int d : spec.depths) {
    if (d < 2 || d > 5)
      throw Error(ErrorCode::kInvalidSpec, "depth " + std::to_string(d) + " outside 2..5");
  }
  for (const auto& [split, cells] : spec.counts) {
    for (const auto& [depth, n] : cells) {
      if (n % 2 != 0)
        throw Error(ErrorCode::kInvalidSpec,
                    std::string(to_string(split)) + " depth " + std::to_string(depth) +
                        ": count must be even (one true and one false question per context)");
    }
  }
}

Inventory inventory_for(Category category) {
  const auto& v = vocabularies();
  Inventory inv;
  if (category == Category::kAnimal) {
    inv.names = v.animal_names;
    inv.attributes = v.animal_attributes;
    // "is" / "is not" are expressed through attribute atoms.
    for (const auto& r : v.animal_relations) {
      if (r.rfind("is", 0) != 0) inv.verbs.push_back(r);
    }
  } else {
    inv.names = v.people_names;
    inv.attributes = v.people_attributes;
  }
  return inv;
}

namespace {

Atom attr_atom(std::string subject, std::string attribute, bool positive = true) {
  return Atom{std::move(subject), std::string(logic::kIs), std::move(attribute), positive};
}

Atom var_atom(std::string attribute, bool positive = true) {
  return attr_atom(std::string(logic::kVariable), std::move(attribute), positive);
}

template <typename T>
const T& pick(const std::vector<T>& items, SplitMix64& rng) {
  return items[rng.below(items.size())];
}

// Draws attributes without replacement from a shuffled copy of the pool.
class AttributePool {
 public:
  AttributePool(std::vector<std::string> attrs, SplitMix64& rng) : attrs_(std::move(attrs)) {
    rng.shuffle(std::span<std::string>(attrs_));
  }

  std::string take(int depth) {
    if (next_ >= attrs_.size())
      throw Error(ErrorCode::kVocabExhausted,
                  "not enough distinct attributes for a depth-" + std::to_string(depth) +
                      " chain (" + std::to_string(attrs_.size()) + " available)");
    return attrs_[next_++];
  }

  bool empty() const { return next_ >= attrs_.size(); }

 private:
  std::vector<std::string> attrs_;
  std::size_t next_ = 0;
};

class PairBuilder {
 public:
  PairBuilder(const GenerationSpec& spec, int depth, SplitMix64& rng, const Inventory& inv)
      : spec_(spec),
        depth_(depth),
        rng_(rng),
        inv_(inv),
        reg_(spec.category == Category::kPeople ? logic::Register::kPeople
                                                : logic::Register::kThings),
        pool_(inv.attributes, rng) {}

  ExamplePair build() {
    if (inv_.names.size() < 4)
      throw Error(ErrorCode::kVocabExhausted, "need 4 distinct entity names");
    std::vector<std::string> names = inv_.names;
    rng_.shuffle(std::span<std::string>(names));
    subject_ = names[0];
    others_.assign(names.begin() + 1, names.begin() + 4);

    build_chain();
    build_near_miss();
    build_distractors();

    rng_.shuffle(std::span<Rule>(facts_));
    rng_.shuffle(std::span<Rule>(rules_));
    std::vector<std::string> context;
    for (const Rule& r : facts_) context.push_back(logic::render(r));
    for (const Rule& r : rules_) context.push_back(logic::render(r));

    // Half the pairs ask affirmatively, half negated, so "not" alone carries
    // no label information.
    const Atom terminal = attr_atom(subject_, terminal_);
    const Atom miss = attr_atom(subject_, near_miss_);
    Atom true_q = terminal;
    Atom false_q = miss;
    if (rng_.bernoulli(0.5)) {
      true_q = attr_atom(subject_, near_miss_, false);
      false_q = attr_atom(subject_, terminal_, false);
    }

    ExamplePair pair;
    pair.true_example = Example{"", context, logic::render_question(true_q), true, depth_};
    pair.false_example = Example{"", context, logic::render_question(false_q), false, depth_};
    check(pair, terminal);
    return pair;
  }

 private:
  void add_rule(std::vector<Atom> antecedents, Atom consequent) {
    RuleForm form = RuleForm::kConditional;
    const Atom& a = antecedents.front();
    if (antecedents.size() == 1 && a.is_attribute() && a.positive) {
      static constexpr RuleForm kForms[] = {RuleForm::kBare, RuleForm::kAll,
                                            RuleForm::kConditional};
      form = kForms[rng_.below(3)];
    }
    rules_.push_back(logic::make_rule(std::move(antecedents), std::move(consequent), form, reg_));
  }

  void build_chain() {
    const bool relation_root = !inv_.verbs.empty() && rng_.bernoulli(0.5);
    Atom root;
    if (relation_root) {
      root = Atom{subject_, pick(inv_.verbs, rng_), pick(others_, rng_), true};
    } else {
      root = attr_atom(subject_, pool_.take(depth_));
      chain_.push_back(root.object);
    }

    // Negation site: 0 negates the root fact, k in 1..depth-1 negates the
    // conclusion of link k (and the matching condition of link k+1).
    int negated = -1;
    if (spec_.negation_rules) {
      const int lo = relation_root ? 1 : 0;
      negated = lo + static_cast<int>(rng_.below(static_cast<std::uint64_t>(depth_ - lo)));
    }
    if (negated == 0) root.positive = false;
    facts_.push_back(logic::make_fact(root));

    Atom previous = root;
    previous.subject = std::string(logic::kVariable);
    for (int k = 1; k <= depth_; ++k) {
      const std::string attr = pool_.take(depth_);
      chain_.push_back(attr);
      std::vector<Atom> antecedents = {previous};
      if (k < depth_ && rng_.bernoulli(0.25)) {
        // Conjunctive link; the extra condition is a depth-0 fact.
        const std::string extra = pool_.take(depth_);
        antecedents.push_back(var_atom(extra));
        facts_.push_back(logic::make_fact(attr_atom(subject_, extra)));
      }
      Atom consequent = var_atom(attr, k != negated);
      add_rule(std::move(antecedents), consequent);
      previous = consequent;
    }
    terminal_ = chain_.back();
  }

  // An attribute that another entity derives but the question subject cannot.
  void build_near_miss() {
    const std::string trigger = pool_.take(depth_);
    near_miss_ = pool_.take(depth_);
    facts_.push_back(logic::make_fact(attr_atom(pick(others_, rng_), trigger)));
    add_rule({var_atom(trigger)}, var_atom(near_miss_));
  }

  std::string fresh_or_chain() {
    if (!pool_.empty() && rng_.bernoulli(0.5)) return pool_.take(depth_);
    return pick(chain_, rng_);
  }

  void build_distractors() {
    for (const std::string& other : others_) {
      const bool positive = !(spec_.negation_rules && rng_.bernoulli(0.3));
      facts_.push_back(logic::make_fact(attr_atom(other, fresh_or_chain(), positive)));
    }
    if (!pool_.empty()) {
      const std::string condition = fresh_or_chain();
      if (!pool_.empty()) {
        const bool positive = !(spec_.negation_rules && rng_.bernoulli(0.5));
        add_rule({var_atom(condition)}, var_atom(pool_.take(depth_), positive));
      }
    }
    if (!pool_.empty() && rng_.bernoulli(0.5)) {
      facts_.push_back(logic::make_fact(attr_atom(subject_, pool_.take(depth_))));
    }
    if (!inv_.verbs.empty() && rng_.bernoulli(0.5)) {
      const std::size_t i = rng_.below(3);
      const std::size_t j = (i + 1 + rng_.below(2)) % 3;
      facts_.push_back(logic::make_fact(Atom{others_[i], pick(inv_.verbs, rng_), others_[j], true}));
    }
  }

  void check(const ExamplePair& pair, const Atom& terminal) const {
    const auto kb = logic::parse_context(pair.true_example.context);
    const auto derived = logic::forward_chain(kb);
    const auto verdict_true = logic::answer(kb, derived, logic::parse_question(pair.true_example.question));
    const auto verdict_false = logic::answer(kb, derived, logic::parse_question(pair.false_example.question));
    const auto it = derived.find(terminal);
    const bool ok = kb.entity_universe.size() == 4 && verdict_true.label && !verdict_false.label &&
                    it != derived.end() && it->second == depth_ &&
                    !derived.contains(attr_atom(subject_, near_miss_));
    if (!ok)
      throw std::logic_error("generated example failed oracle verification: " +
                             pair.true_example.question);
  }

  const GenerationSpec& spec_;
  int depth_;
  SplitMix64& rng_;
  const Inventory& inv_;
  logic::Register reg_;
  AttributePool pool_;

  std::string subject_;
  std::vector<std::string> others_;
  std::vector<std::string> chain_;
  std::string terminal_;
  std::string near_miss_;
  std::vector<Rule> facts_;
  std::vector<Rule> rules_;
};

constexpr std::size_t kPairsPerShard = 512;

}  // namespace

ExamplePair generate_example(const GenerationSpec& spec, int depth, SplitMix64& rng,
                             const Inventory& inventory) {
  if (std::find(spec.depths.begin(), spec.depths.end(), depth) == spec.depths.end())
    throw Error(ErrorCode::kInvalidSpec, "depth " + std::to_string(depth) + " not in spec");
  return PairBuilder(spec, depth, rng, inventory).build();
}

ExamplePair generate_example(const GenerationSpec& spec, int depth, SplitMix64& rng) {
  return generate_example(spec, depth, rng, inventory_for(spec.category));
}

DatasetSplit generate_split(const GenerationSpec& spec, Split split) {
  validate(spec);
  const Inventory inv = inventory_for(spec.category);
  DatasetSplit out;
  out.name = split;
  const std::string prefix = std::string(to_string(split)) + "-" +
                             std::string(to_string(spec.category)) +
                             (spec.negation_rules ? "-neg" : "") + "-d";
  for (const int depth : spec.depths) {
    const std::size_t pairs = spec.count(split, depth) / 2;
    out.examples.reserve(out.examples.size() + 2 * pairs);
    // Each shard owns an independent stream, so shards can be produced in
    // any order (or concurrently) and concatenated by index.
    for (std::size_t shard = 0; shard * kPairsPerShard < pairs; ++shard) {
      SplitMix64 rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(split),
                                             static_cast<std::uint64_t>(depth), shard,
                                             static_cast<std::uint64_t>(spec.category),
                                             spec.negation_rules ? 1ULL : 0ULL}));
      const std::size_t end = std::min(pairs, (shard + 1) * kPairsPerShard);
      for (std::size_t i = shard * kPairsPerShard; i < end; ++i) {
        ExamplePair pair = generate_example(spec, depth, rng, inv);
        char index[32];
        std::snprintf(index, sizeof index, "%d-%06zu", depth, i);
        pair.true_example.id = prefix + index + "-t";
        pair.false_example.id = prefix + index + "-f";
        out.examples.push_back(std::move(pair.true_example));
        out.examples.push_back(std::move(pair.false_example));
      }
    }
  }
  return out;
}

Dataset generate_dataset(const GenerationSpec& spec) {
  validate(spec);
  Dataset out;
  for (const Split s : kAllSplits) out[s] = generate_split(spec, s);
  return out;
}

std::string encode_record(const Example& example) {
  nlohmann::ordered_json j;
  j["id"] = example.id;
  j["context"] = example.context;
  j["question"] = example.question;
  j["label"] = example.label ? 1 : 0;
  j["depth"] = example.depth;
  return j.dump();
}

Example decode_record(std::string_view line, std::size_t line_number) {
  auto malformed = [&](const std::string& why) {
    return Error(ErrorCode::kMalformedRecord, "line " + std::to_string(line_number) + ": " + why);
  };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw malformed(e.what());
  }
  if (!j.is_object() || j.size() != 5) throw malformed("expected an object with 5 fields");
  for (const char* key : {"id", "context", "question", "label", "depth"}) {
    if (!j.contains(key)) throw malformed(std::string("missing field '") + key + "'");
  }
  Example ex;
  if (!j["id"].is_string() || !j["question"].is_string() || !j["context"].is_array())
    throw malformed("wrong field type");
  ex.id = j["id"].get<std::string>();
  ex.question = j["question"].get<std::string>();
  for (const auto& s : j["context"]) {
    if (!s.is_string()) throw malformed("context entries must be strings");
    ex.context.push_back(s.get<std::string>());
  }
  if (!j["label"].is_number_integer() || (j["label"] != 0 && j["label"] != 1))
    throw malformed("label must be 0 or 1");
  ex.label = j["label"] == 1;
  if (!j["depth"].is_number_integer() || j["depth"].get<long long>() < 0)
    throw malformed("depth must be a non-negative integer");
  ex.depth = j["depth"].get<int>();
  return ex;
}

void write_records(const DatasetSplit& split, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  for (const Example& ex : split.examples) out << encode_record(ex) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

DatasetSplit read_records(const std::filesystem::path& path, Split name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  DatasetSplit split;
  split.name = name;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    split.examples.push_back(decode_record(line, n));
  }
  if (in.bad()) throw Error(ErrorCode::kIoError, "read failed for " + path.string());
  return split;
}

VerifyResult& VerifyResult::operator+=(const VerifyResult& other) {
  checked += other.checked;
  label_mismatches += other.label_mismatches;
  depth_checked += other.depth_checked;
  depth_mismatches += other.depth_mismatches;
  unparseable += other.unparseable;
  return *this;
}

VerifyResult verify_example(const Example& example) {
  VerifyResult r;
  r.checked = 1;
  try {
    const auto kb = logic::parse_context(example.context);
    const auto verdict = logic::answer(kb, logic::parse_question(example.question));
    if (verdict.label != example.label) ++r.label_mismatches;
    if (verdict.depth) {
      ++r.depth_checked;
      if (*verdict.depth != example.depth) ++r.depth_mismatches;
    }
  } catch (const Error&) {
    ++r.unparseable;
  }
  return r;
}

VerifyResult verify_split(const DatasetSplit& split) {
  VerifyResult total;
  for (const Example& ex : split.examples) total += verify_example(ex);
  return total;
}

}  // namespace ima::datagen
