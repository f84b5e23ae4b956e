#pragma once

#include <string>
#include <vector>

#include "actowl/core/random.hpp"
#include "actowl/harness/scenario.hpp"

namespace actowl::harness {

struct ScriptedAnswer {
  std::string text;
  std::string responder;
};

/// Ground-truth answer phrased by persona. Referential falls back to Direct
/// when no relation in the scenario points at the owner.
inline ScriptedAnswer scripted_answer(const Scenario& s, std::size_t object_id, Persona persona, std::uint64_t seed) {
  const auto& obj = s.object(object_id);
  Rng rng(derive_seed(seed, {tag(StreamTag::kPersona), object_id}));

  if (obj.owner == "Shared") return {"It's shared", s.users[rng.uniform_index(s.users.size())]};

  if (persona == Persona::Possessive) return {"It's mine", obj.owner};

  if (persona == Persona::Referential) {
    std::vector<const dialogue::Relation*> matches;
    for (const auto& r : s.personas.relations)
      if (r.owner == obj.owner && r.responder != obj.owner) matches.push_back(&r);
    if (!matches.empty()) {
      const auto* r = matches[rng.uniform_index(matches.size())];
      return {"It's my " + r->relation + "'s", r->responder};
    }
  }

  std::vector<std::string> others;
  for (const auto& u : s.users)
    if (u != obj.owner) others.push_back(u);
  const std::string responder = others.empty() ? obj.owner : others[rng.uniform_index(others.size())];
  return {"It's " + obj.owner + "'s", responder};
}

/// Source of answers to asked questions. Tests substitute faulty ones.
class AnswerSource {
 public:
  virtual ~AnswerSource() = default;
  virtual ScriptedAnswer answer(std::size_t object_id) = 0;
};

/// Draws a persona per object from the scenario's configured modes.
class ScriptedUser : public AnswerSource {
 public:
  ScriptedUser(const Scenario& scenario, std::uint64_t seed) : scenario_(scenario), seed_(seed) {}

  Persona persona_for(std::size_t object_id) const {
    const auto& modes = scenario_.personas.modes;
    if (modes.size() == 1) return modes.front();
    Rng rng(derive_seed(seed_, {tag(StreamTag::kPersona), object_id, 1}));
    return modes[rng.uniform_index(modes.size())];
  }

  ScriptedAnswer answer(std::size_t object_id) override {
    return scripted_answer(scenario_, object_id, persona_for(object_id), seed_);
  }

 private:
  const Scenario& scenario_;
  std::uint64_t seed_;
};

/// Mock backend configured from a scenario's relations and overrides.
inline dialogue::MockBackend make_mock_backend(const Scenario& s) {
  auto rules = dialogue::MockRules::standard();
  rules.relations = s.personas.relations;
  for (const auto& [cls, own] : s.classification_overrides) rules.overrides[cls] = own;
  return dialogue::MockBackend(std::move(rules));
}

}  // namespace actowl::harness
