#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "actowl/dialogue/backend.hpp"
#include "actowl/dialogue/text.hpp"

namespace actowl::dialogue {

enum class Ownership { Shared, Owned };

/// "my <relation>'s" spoken by `responder` refers to `owner`.
struct Relation {
  std::string responder;
  std::string relation;
  std::string owner;
};

/// Everything the mock backend decides with. Lookups are case-insensitive.
struct MockRules {
  std::map<std::string, Ownership> household;
  std::map<std::string, Ownership> laboratory;
  /// Applied after the context table; used for scripted fault injection.
  std::map<std::string, Ownership> overrides;
  Ownership default_policy = Ownership::Owned;
  std::vector<Relation> relations;
  std::size_t max_typo_distance = 2;

  static MockRules standard() {
    MockRules r;
    // Laboratory table: the shared/owned split reported for the lab deployment.
    for (const char* c : {"Clock", "Dining Table", "Printer", "Potted Plant", "Refrigerator", "Trash bin Can"})
      r.laboratory[text::lower(c)] = Ownership::Shared;
    for (const char* c : {"Backpack", "Bed", "Book", "Bottle", "Chair", "Cup", "Desk", "Handbag/Satchel", "Laptop",
                          "Monitor/TV", "Mouse", "Pillow"})
      r.laboratory[text::lower(c)] = Ownership::Owned;

    r.household = r.laboratory;
    for (const char* c : {"Sofa", "Couch", "Television", "TV", "Microwave", "Tissue Box", "Dining Chair", "Lamp",
                          "Bookshelf", "Sink", "Oven"})
      r.household[text::lower(c)] = Ownership::Shared;
    for (const char* c : {"Box", "Mug", "Toothbrush", "Shoes", "Slippers", "Glasses", "Umbrella", "Wallet", "Phone",
                          "Headphones", "Towel", "Pen", "Notebook"})
      r.household[text::lower(c)] = Ownership::Owned;
    return r;
  }
};

class MockBackend : public DialogueBackend {
 public:
  explicit MockBackend(MockRules rules = MockRules::standard()) : rules_(std::move(rules)) {
    std::map<std::string, Ownership> lowered;
    for (const auto& [k, v] : rules_.overrides) lowered[text::lower(k)] = v;
    rules_.overrides = std::move(lowered);
  }

  const MockRules& rules() const { return rules_; }
  std::string name() const override { return "mock"; }

  Ownership lookup(const std::string& class_name, EnvironmentContext ctx) const {
    const std::string key = text::lower(text::trim(class_name));
    if (auto it = rules_.overrides.find(key); it != rules_.overrides.end()) return it->second;
    const auto& table = ctx == EnvironmentContext::Laboratory ? rules_.laboratory : rules_.household;
    if (auto it = table.find(key); it != table.end()) return it->second;
    return rules_.default_policy;
  }

  Classification classify_shared_owned(const std::vector<std::string>& classes, EnvironmentContext ctx) override {
    Classification out;
    for (const auto& c : classes) {
      if (lookup(c, ctx) == Ownership::Shared) {
        out.shared.insert(c);
      } else {
        out.owned.insert(c);
      }
    }
    return out;
  }

  /// "Whose {color} {class} is this, the one near the {class of nearest labeled object}?"
  QuestionRecord generate_question(const ObjectRow& target, const std::vector<ObjectRow>& others) override {
    QuestionRecord q;
    q.target_object_id = target.object_id;
    q.target = target;
    q.context_objects = others;

    std::string subject = target.color.empty() ? target.class_name : target.color + " " + target.class_name;
    const ObjectRow* nearest = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : others) {
      if (!o.labeled() || o.object_id == target.object_id) continue;
      const double d = std::hypot(o.x - target.x, o.y - target.y);
      if (d < best) {
        best = d;
        nearest = &o;
      }
    }
    q.question_text = nearest ? "Whose " + subject + " is this, the one near the " + nearest->class_name + "?"
                              : "Whose " + subject + " is this?";
    return q;
  }

  AnswerLabel interpret_answer(const QuestionRecord&, const std::string& answer_text,
                               const std::string& responding_user, const std::vector<std::string>& users) override {
    const std::string lowered = text::lower(text::ascii_quotes(answer_text));
    const auto tokens = text::tokenize(answer_text);
    if (tokens.empty()) throw InterpretationError("empty answer", answer_text);

    for (const char* phrase : {"shared", "share", "everyone", "everybody", "all of us", "common", "communal",
                               "nobody's", "no one's", "no one in particular"}) {
      if (text::contains_phrase(lowered, phrase)) return AnswerLabel::shared();
    }

    auto user_named = [&](std::string_view word) -> std::optional<std::string> {
      for (const auto& u : users)
        if (text::lower(u) == word) return u;
      return std::nullopt;
    };

    // "my <relation>'s": resolved through the relation table, never to the speaker.
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
      if (tokens[i].word != "my" || !tokens[i + 1].possessive) continue;
      for (const auto& rel : rules_.relations) {
        if (text::lower(rel.responder) == text::lower(responding_user) &&
            text::lower(rel.relation) == tokens[i + 1].word) {
          if (auto u = user_named(text::lower(rel.owner))) return AnswerLabel::owner(*u);
        }
      }
      if (!user_named(tokens[i + 1].word))
        throw InterpretationError("unknown relation '" + tokens[i + 1].word + "'", answer_text);
    }

    std::optional<std::string> named;
    for (const auto& t : tokens) {
      if (auto u = user_named(t.word)) {
        if (named && *named != *u) throw InterpretationError("answer names more than one user", answer_text);
        named = u;
      }
    }
    if (named) return AnswerLabel::owner(*named);

    // Typo tolerance only where a name is expected: possessive words or a one-word reply.
    std::optional<std::string> fuzzy;
    std::size_t best = std::numeric_limits<std::size_t>::max();
    bool tied = false;
    for (const auto& t : tokens) {
      if (!t.possessive && tokens.size() != 1) continue;
      if (t.word.size() < 3 || t.word == "that" || t.word == "this" || t.word == "she" || t.word == "who") continue;
      for (const auto& u : users) {
        const std::string ul = text::lower(u);
        const std::size_t d = text::edit_distance(t.word, ul);
        // Short names only tolerate edits that leave most of the name intact.
        if (d > rules_.max_typo_distance || 2 * d >= ul.size()) continue;
        if (d < best) {
          best = d;
          fuzzy = u;
          tied = false;
        } else if (d == best && fuzzy != u) {
          tied = true;
        }
      }
    }
    if (fuzzy && tied) throw InterpretationError("answer is equally close to several users", answer_text);
    if (fuzzy) return AnswerLabel::owner(*fuzzy);

    for (const auto& t : tokens) {
      if (t.word == "mine" || t.word == "my" || t.word == "me" || t.word == "myself") {
        if (auto u = user_named(text::lower(responding_user))) return AnswerLabel::owner(*u);
        throw InterpretationError("possessive answer from a responder who is not a user", answer_text);
      }
    }
    throw InterpretationError("could not resolve an owner", answer_text);
  }

  /// Each unlabeled object takes the label of the nearest labeled object; a
  /// same-class neighbor counts at half its distance. No labels: all Shared.
  std::vector<AnswerLabel> predict_owners(const std::vector<ObjectRow>& rows,
                                          const std::vector<std::string>&) override {
    auto to_label = [](const std::string& s) {
      return s == "Shared" ? AnswerLabel::shared() : AnswerLabel::owner(s);
    };
    std::vector<AnswerLabel> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
      if (row.labeled()) {
        out.push_back(to_label(row.observed_user));
        continue;
      }
      const ObjectRow* nearest = nullptr;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& o : rows) {
        if (!o.labeled()) continue;
        double d = std::hypot(o.x - row.x, o.y - row.y);
        if (text::lower(o.class_name) == text::lower(row.class_name)) d *= 0.5;
        if (d < best) {
          best = d;
          nearest = &o;
        }
      }
      out.push_back(nearest ? to_label(nearest->observed_user) : AnswerLabel::shared());
    }
    return out;
  }

 private:
  MockRules rules_;
};

}  // namespace actowl::dialogue
