#include "ima/logic.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "ima/datagen.hpp"
#include "ima/error.hpp"

namespace ima::logic {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

bool is_keyword(std::string_view w) {
  static const std::set<std::string, std::less<>> kKeywords = {
      "if", "then", "and", "not", "is", "are", "does", "do", "all",
      "someone", "something", "they", "it", "the", "people", "animals"};
  return kKeywords.contains(w);
}

bool is_attribute_word(std::string_view w) {
  if (w.empty() || is_keyword(w)) return false;
  return std::all_of(w.begin(), w.end(),
                     [](char c) { return std::islower(static_cast<unsigned char>(c)) != 0; });
}

// Relation verbs in third-person singular; the plural form drops the final 's'.
const std::vector<std::string>& relation_verbs() {
  static const std::vector<std::string> kVerbs = {"likes", "chases", "needs",
                                                  "visits", "attacks", "sees"};
  return kVerbs;
}

std::string base_form(std::string_view verb) {
  return std::string(verb.substr(0, verb.size() - 1));
}

std::string_view noun_of(Register reg) { return reg == Register::kPeople ? "people" : "animals"; }
std::string_view indefinite_of(Register reg) {
  return reg == Register::kPeople ? "someone" : "something";
}
std::string_view pronoun_of(Register reg) { return reg == Register::kPeople ? "they" : "it"; }

constexpr std::string_view kTemplatesTried =
    "templates tried: fact, bare rule, all-rule, conditional rule";

[[noreturn]] void fail(std::string_view sentence, std::string_view why) {
  std::ostringstream msg;
  msg << '"' << sentence << "\" (" << why << "; " << kTemplatesTried << ")";
  throw Error(ErrorCode::kUnparseableSentence, msg.str());
}

class SentenceParser {
 public:
  SentenceParser(std::string_view sentence, const Lexicon& lexicon)
      : sentence_(sentence), lexicon_(lexicon) {
    std::istringstream in{std::string(sentence)};
    std::string w;
    while (in >> w) words_.push_back(w);
    if (!words_.empty()) {
      auto& last = words_.back();
      while (!last.empty() && (last.back() == '.' || last.back() == '?')) last.pop_back();
      if (last.empty()) words_.pop_back();
    }
    if (words_.empty()) fail(sentence_, "empty sentence");
  }

  Rule parse_rule() {
    const std::string first = lower(words_[0]);
    if (first == "if") return parse_conditional();
    if (first == "all") return parse_generic(1, RuleForm::kAll);
    if (words_.size() >= 2 && (words_[1] == "people" || words_[1] == "animals"))
      return parse_generic(0, RuleForm::kBare);
    Atom atom = parse_ground_clause();
    return make_fact(std::move(atom));
  }

  Atom parse_ground_clause() {
    std::size_t pos = 0;
    Atom atom = parse_clause(pos, words_.size());
    if (pos != words_.size()) fail(sentence_, "trailing words after fact");
    if (atom.has_variable()) fail(sentence_, "fact with a variable subject");
    return atom;
  }

 private:
  Rule parse_generic(std::size_t start, RuleForm form) {
    // [All] <attr> people|animals are [not] <attr>
    std::size_t pos = start;
    auto need = [&](bool ok, std::string_view why) {
      if (!ok) fail(sentence_, why);
    };
    need(pos + 4 <= words_.size(), "rule too short");
    const std::string antecedent = lower(words_[pos++]);
    need(is_attribute_word(antecedent), "expected an attribute");
    const std::string& noun = words_[pos++];
    need(noun == "people" || noun == "animals", "expected 'people' or 'animals'");
    need(words_[pos++] == "are", "expected 'are'");
    bool positive = true;
    if (pos < words_.size() && words_[pos] == "not") {
      positive = false;
      ++pos;
    }
    need(pos + 1 == words_.size() && is_attribute_word(words_[pos]), "expected a final attribute");
    const Register reg = noun == "people" ? Register::kPeople : Register::kThings;
    Atom a{std::string(kVariable), std::string(kIs), antecedent, true};
    Atom c{std::string(kVariable), std::string(kIs), words_[pos], positive};
    return make_rule({std::move(a)}, std::move(c), form, reg);
  }

  Rule parse_conditional() {
    const auto then_it = std::find(words_.begin(), words_.end(), "then");
    if (then_it == words_.end()) fail(sentence_, "conditional without 'then'");
    const auto then_pos = static_cast<std::size_t>(then_it - words_.begin());

    std::vector<Atom> antecedents;
    std::size_t pos = 1;
    antecedents.push_back(parse_clause(pos, then_pos));
    while (pos < then_pos) {
      if (words_[pos] != "and") fail(sentence_, "expected 'and' between conditions");
      ++pos;
      std::size_t probe = pos;
      if (subject_at(probe, then_pos)) {
        antecedents.push_back(parse_clause(pos, then_pos));
        continue;
      }
      // Elided subject: "is rough and nice" / "and not nice".
      const Atom& prev = antecedents.back();
      if (!prev.is_attribute()) fail(sentence_, "elided condition after a relation");
      bool positive = true;
      if (pos < then_pos && words_[pos] == "not") {
        positive = false;
        ++pos;
      }
      if (pos >= then_pos || !is_attribute_word(words_[pos]))
        fail(sentence_, "expected an attribute after 'and'");
      antecedents.push_back(Atom{prev.subject, std::string(kIs), words_[pos++], positive});
    }
    pos = then_pos + 1;
    Atom consequent = parse_clause(pos, words_.size());
    if (pos != words_.size()) fail(sentence_, "trailing words after conclusion");
    const bool has_var = std::any_of(antecedents.begin(), antecedents.end(),
                                     [](const Atom& a) { return a.has_variable(); });
    if (consequent.has_variable() && !has_var)
      fail(sentence_, "conclusion pronoun without a bound condition");
    return make_rule(std::move(antecedents), std::move(consequent), RuleForm::kConditional,
                     register_.value_or(Register::kPeople));
  }

  // Returns the subject text (entity name or variable) and advances pos.
  std::optional<std::string> subject_at(std::size_t& pos, std::size_t end) {
    if (pos >= end) return std::nullopt;
    const std::string w = lower(words_[pos]);
    if (w == "someone" || w == "they") {
      register_ = Register::kPeople;
      ++pos;
      return std::string(kVariable);
    }
    if (w == "something" || w == "it") {
      register_ = Register::kThings;
      ++pos;
      return std::string(kVariable);
    }
    return entity_at(pos, end);
  }

  std::optional<std::string> entity_at(std::size_t& pos, std::size_t end) {
    std::size_t best_len = 0;
    const std::string* best = nullptr;
    for (const std::string& name : lexicon_.entities) {
      std::istringstream in(name);
      std::string part;
      std::size_t k = 0;
      bool ok = true;
      while (in >> part) {
        if (pos + k >= end || lower(words_[pos + k]) != lower(part)) {
          ok = false;
          break;
        }
        ++k;
      }
      if (ok && k > best_len) {
        best_len = k;
        best = &name;
      }
    }
    if (best != nullptr) {
      pos += best_len;
      return *best;
    }
    const std::string& w = words_[pos];
    if (lower(w) == "the") {
      std::string name = "the";
      std::size_t k = pos + 1;
      while (k < end && !is_predicate_word(words_[k])) name += " " + lower(words_[k++]);
      if (k == pos + 1) return std::nullopt;
      pos = k;
      return name;
    }
    if (std::isupper(static_cast<unsigned char>(w[0])) && !is_keyword(lower(w))) {
      ++pos;
      return w;
    }
    return std::nullopt;
  }

  static bool is_predicate_word(std::string_view w) {
    if (w == "is" || w == "are" || w == "does" || w == "do") return true;
    for (const auto& v : relation_verbs()) {
      if (w == v || w == base_form(v)) return true;
    }
    return false;
  }

  Atom parse_clause(std::size_t& pos, std::size_t end) {
    auto subject = subject_at(pos, end);
    if (!subject) fail(sentence_, "expected a subject");
    if (pos >= end) fail(sentence_, "missing predicate");
    const std::string& verb = words_[pos];
    if (verb == "is" || verb == "are") {
      ++pos;
      bool positive = true;
      if (pos < end && words_[pos] == "not") {
        positive = false;
        ++pos;
      }
      if (pos >= end || !is_attribute_word(words_[pos])) fail(sentence_, "expected an attribute");
      return Atom{*subject, std::string(kIs), words_[pos++], positive};
    }
    bool positive = true;
    std::size_t vpos = pos;
    if (verb == "does" || verb == "do") {
      if (pos + 1 >= end || words_[pos + 1] != "not") fail(sentence_, "expected 'not'");
      positive = false;
      vpos = pos + 2;
    }
    if (vpos >= end) fail(sentence_, "missing verb");
    for (const auto& v : relation_verbs()) {
      const bool plain = positive && (words_[vpos] == v || words_[vpos] == base_form(v));
      const bool negated = !positive && words_[vpos] == base_form(v);
      if (!plain && !negated) continue;
      pos = vpos + 1;
      auto object = entity_at(pos, end);
      if (!object) fail(sentence_, "expected an object entity");
      return Atom{*subject, v, *object, positive};
    }
    fail(sentence_, "unknown verb '" + words_[vpos] + "'");
  }

  std::string_view sentence_;
  const Lexicon& lexicon_;
  std::vector<std::string> words_;
  std::optional<Register> register_;
};

std::string clause_text(std::string_view subject, const Atom& atom, bool plural) {
  std::string out(subject);
  if (atom.is_attribute()) {
    out += plural ? " are " : " is ";
    if (!atom.positive) out += "not ";
    out += atom.object;
    return out;
  }
  if (atom.positive) {
    out += " " + (plural ? base_form(atom.relation) : atom.relation);
  } else {
    out += plural ? " do not " : " does not ";
    out += base_form(atom.relation);
  }
  out += " " + atom.object;
  return out;
}

bool generic_form_fits(const Rule& rule) {
  if (rule.antecedents.size() != 1) return false;
  const Atom& a = rule.antecedents.front();
  const Atom& c = rule.consequent;
  return a.has_variable() && a.is_attribute() && a.positive && c.has_variable() &&
         c.is_attribute();
}

std::string render_conditional(const Rule& rule) {
  std::string out = "if ";
  bool seen_var = false;
  auto subject_text = [&](const Atom& a) -> std::string {
    if (!a.has_variable()) return a.subject;
    const bool first = !seen_var;
    seen_var = true;
    return std::string(first ? indefinite_of(rule.reg) : pronoun_of(rule.reg));
  };
  for (std::size_t i = 0; i < rule.antecedents.size(); ++i) {
    const Atom& a = rule.antecedents[i];
    if (i > 0) {
      out += " and ";
      const Atom& prev = rule.antecedents[i - 1];
      if (prev.subject == a.subject && prev.is_attribute() && a.is_attribute()) {
        out += a.positive ? a.object : "not " + a.object;
        continue;
      }
    }
    const std::string subject = subject_text(a);
    out += clause_text(subject, a, subject == "they");
  }
  const std::string subject = subject_text(rule.consequent);
  out += " then " + clause_text(subject, rule.consequent, subject == "they");
  return capitalize(out) + ".";
}

bool unify(const Atom& pattern, const Atom& ground, std::optional<std::string>& binding) {
  if (pattern.relation != ground.relation || pattern.object != ground.object ||
      pattern.positive != ground.positive)
    return false;
  if (!pattern.has_variable()) return pattern.subject == ground.subject;
  if (binding) return *binding == ground.subject;
  binding = ground.subject;
  return true;
}

// Bindings to try once one antecedent matched: the matched subject, or every
// entity of the closed world when the matched antecedent was ground.
std::vector<std::optional<std::string>> candidate_bindings(
    const Rule& rule, const std::optional<std::string>& matched,
    const std::set<std::string>& universe) {
  if (matched) return {matched};
  const bool uses_var = std::any_of(rule.antecedents.begin(), rule.antecedents.end(),
                                    [](const Atom& a) { return a.has_variable(); });
  if (!uses_var) return {std::nullopt};
  return {universe.begin(), universe.end()};
}

Atom instantiate(const Atom& pattern, const std::optional<std::string>& binding) {
  Atom out = pattern;
  if (out.has_variable()) out.subject = *binding;
  return out;
}

}  // namespace

std::string to_string(const Atom& atom) {
  std::string out = atom.positive ? "" : "~";
  out += atom.relation + "(" + atom.subject + ", " + atom.object + ")";
  return out;
}

Rule make_fact(Atom atom) {
  if (atom.has_variable()) throw Error(ErrorCode::kInvalidSpec, "fact with variable subject");
  Rule r;
  r.consequent = std::move(atom);
  r.form = RuleForm::kFact;
  return r;
}

Rule make_rule(std::vector<Atom> antecedents, Atom consequent, RuleForm form, Register reg) {
  if (antecedents.empty()) return make_fact(std::move(consequent));
  const bool bound = std::any_of(antecedents.begin(), antecedents.end(),
                                 [](const Atom& a) { return a.has_variable(); });
  if (consequent.has_variable() && !bound)
    throw Error(ErrorCode::kInvalidSpec, "unbound variable in " + to_string(consequent));
  Rule r;
  r.antecedents = std::move(antecedents);
  r.consequent = std::move(consequent);
  r.form = form == RuleForm::kFact ? RuleForm::kConditional : form;
  r.reg = reg;
  return r;
}

KnowledgeBase make_kb(std::vector<Rule> items) {
  KnowledgeBase kb;
  kb.items = std::move(items);
  auto note = [&](const Atom& a) {
    if (!a.has_variable()) kb.entity_universe.insert(a.subject);
    if (!a.is_attribute()) kb.entity_universe.insert(a.object);
  };
  for (const Rule& r : kb.items) {
    for (const Atom& a : r.antecedents) note(a);
    note(r.consequent);
  }
  return kb;
}

const Lexicon& default_lexicon() {
  static const Lexicon kLexicon = [] {
    Lexicon lex;
    const auto& v = datagen::vocabularies();
    lex.entities = v.animal_names;
    lex.entities.insert(lex.entities.end(), v.people_names.begin(), v.people_names.end());
    return lex;
  }();
  return kLexicon;
}

Rule parse_sentence(std::string_view sentence, const Lexicon& lexicon) {
  return SentenceParser(sentence, lexicon).parse_rule();
}

KnowledgeBase parse_context(const std::vector<std::string>& sentences, const Lexicon& lexicon) {
  std::vector<Rule> items;
  items.reserve(sentences.size());
  for (const auto& s : sentences) items.push_back(parse_sentence(s, lexicon));
  return make_kb(std::move(items));
}

Atom parse_question(std::string_view sentence, const Lexicon& lexicon) {
  return SentenceParser(sentence, lexicon).parse_ground_clause();
}

std::string render(const Rule& rule) {
  if (rule.is_fact()) return capitalize(clause_text(rule.consequent.subject, rule.consequent, false)) + ".";
  const bool generic = rule.form == RuleForm::kBare || rule.form == RuleForm::kAll;
  if (!generic || !generic_form_fits(rule)) return render_conditional(rule);
  std::string out = rule.form == RuleForm::kAll ? "all " : "";
  out += rule.antecedents.front().object;
  out += " ";
  out += noun_of(rule.reg);
  out += " are ";
  if (!rule.consequent.positive) out += "not ";
  out += rule.consequent.object;
  return capitalize(out) + ".";
}

std::string render_question(const Atom& atom) { return render(make_fact(atom)); }

int rule_application_depth(int max_antecedent_depth) { return max_antecedent_depth + 1; }

DepthMap forward_chain(const KnowledgeBase& kb) {
  DepthMap depth;
  std::vector<Atom> frontier;
  std::vector<const Rule*> rules;
  for (const Rule& r : kb.items) {
    if (r.is_fact()) {
      if (depth.emplace(r.consequent, 0).second) frontier.push_back(r.consequent);
    } else {
      rules.push_back(&r);
    }
  }

  // Layer k holds atoms whose shallowest proof has height k: every such proof
  // uses at least one antecedent first derived in layer k-1.
  for (int k = 1; !frontier.empty(); ++k) {
    std::set<Atom> fresh;
    for (const Rule* rule : rules) {
      const auto& ants = rule->antecedents;
      for (std::size_t j = 0; j < ants.size(); ++j) {
        for (const Atom& ground : frontier) {
          std::optional<std::string> matched;
          if (!unify(ants[j], ground, matched)) continue;
          for (const auto& binding : candidate_bindings(*rule, matched, kb.entity_universe)) {
            bool satisfied = true;
            for (std::size_t m = 0; m < ants.size() && satisfied; ++m) {
              if (m != j) satisfied = depth.contains(instantiate(ants[m], binding));
            }
            if (!satisfied) continue;
            Atom derived = instantiate(rule->consequent, binding);
            if (!depth.contains(derived)) fresh.insert(std::move(derived));
          }
        }
      }
    }
    frontier.assign(fresh.begin(), fresh.end());
    for (const Atom& a : frontier) depth.emplace(a, rule_application_depth(k - 1));
  }
  return depth;
}

Verdict answer(const KnowledgeBase& kb, const DepthMap& derived, const Atom& question) {
  if (!kb.entity_universe.contains(question.subject))
    throw Error(ErrorCode::kUnknownEntity, "'" + question.subject + "' is not mentioned in the context");
  const auto it = derived.find(question.affirmative());
  const bool found = it != derived.end();
  Verdict v;
  v.label = question.positive ? found : !found;
  if (found) v.depth = it->second;
  return v;
}

Verdict answer(const KnowledgeBase& kb, const Atom& question) {
  return answer(kb, forward_chain(kb), question);
}

}  // namespace ima::logic
