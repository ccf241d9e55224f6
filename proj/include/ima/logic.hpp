#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ima::logic {

/// Placeholder bound by "someone"/"something" and "they"/"it" in a rule.
inline constexpr std::string_view kVariable = "?x";

/// Relation used for attribute atoms ("Anne is rough"); every other relation
/// takes an entity as its object ("the tiger chases the bear").
inline constexpr std::string_view kIs = "is";

struct Atom {
  std::string subject;
  std::string relation;
  std::string object;
  bool positive = true;

  bool is_attribute() const { return relation == kIs; }
  bool has_variable() const { return subject == kVariable; }
  Atom affirmative() const { return {subject, relation, object, true}; }

  auto operator<=>(const Atom&) const = default;
};

std::string to_string(const Atom& atom);

/// Which noun phrases a rule uses for its variable when rendered.
enum class Register {
  kPeople,  // "people", "someone", "they"
  kThings,  // "animals", "something", "it"
};

/// Surface template a rule was parsed from (or should be rendered with).
enum class RuleForm {
  kFact,         // "Anne is rough."
  kBare,         // "Rough people are young."
  kAll,          // "All young people are cold."
  kConditional,  // "If someone is rough and nice then they are green."
};

struct Rule {
  std::vector<Atom> antecedents;
  Atom consequent;
  RuleForm form = RuleForm::kFact;
  Register reg = Register::kPeople;

  bool is_fact() const { return antecedents.empty(); }

  // Logical identity only; the surface template is presentation.
  bool operator==(const Rule& other) const {
    return antecedents == other.antecedents && consequent == other.consequent;
  }
};

Rule make_fact(Atom atom);
Rule make_rule(std::vector<Atom> antecedents, Atom consequent,
               RuleForm form = RuleForm::kConditional, Register reg = Register::kPeople);

struct KnowledgeBase {
  std::vector<Rule> items;  // sentence order, as given
  std::set<std::string> entity_universe;
};

KnowledgeBase make_kb(std::vector<Rule> items);

struct Verdict {
  bool label = false;
  std::optional<int> depth;  // nullopt: the affirmative atom is not derivable

  bool operator==(const Verdict&) const = default;
};

/// Entity names the parser recognizes verbatim. Unknown names are still
/// accepted when they are a single capitalized word or a "the ..." phrase.
struct Lexicon {
  std::vector<std::string> entities;
};

const Lexicon& default_lexicon();

Rule parse_sentence(std::string_view sentence, const Lexicon& lexicon = default_lexicon());
KnowledgeBase parse_context(const std::vector<std::string>& sentences,
                            const Lexicon& lexicon = default_lexicon());
/// A question is a fact sentence; "not" gives a negative-polarity atom.
Atom parse_question(std::string_view sentence, const Lexicon& lexicon = default_lexicon());

/// Canonical sentence for a rule in its recorded form. Forms that cannot
/// express the rule (e.g. kBare with two antecedents) fall back to kConditional.
std::string render(const Rule& rule);
std::string render_question(const Atom& atom);

using DepthMap = std::map<Atom, int>;

/// Grounded forward chaining to the fixpoint. Each derivable atom maps to its
/// minimal proof height (see rule_application_depth).
DepthMap forward_chain(const KnowledgeBase& kb);

/// Depth contributed by one rule application whose antecedents sit at the
/// given depths: 1 + max(antecedent depths). Kept in one place so the depth
/// convention can be swapped.
int rule_application_depth(int max_antecedent_depth);

/// Closed-world answer with negation as failure.
Verdict answer(const KnowledgeBase& kb, const Atom& question);
Verdict answer(const KnowledgeBase& kb, const DepthMap& derived, const Atom& question);

}  // namespace ima::logic
