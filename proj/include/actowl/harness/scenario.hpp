#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "actowl/core/errors.hpp"
#include "actowl/core/types.hpp"
#include "actowl/dialogue/backend.hpp"
#include "actowl/dialogue/mock_backend.hpp"

namespace actowl::harness {

inline constexpr const char* kScenarioSchema = "actowl.scenario/v1";

enum class Persona { Direct, Possessive, Referential };

inline const char* to_string(Persona p) {
  switch (p) {
    case Persona::Direct: return "direct";
    case Persona::Possessive: return "possessive";
    case Persona::Referential: return "referential";
  }
  return "direct";
}

inline Persona parse_persona(const std::string& s) {
  const std::string l = attributes::lower(s);
  if (l == "direct") return Persona::Direct;
  if (l == "possessive") return Persona::Possessive;
  if (l == "referential") return Persona::Referential;
  throw InputError("unknown persona '" + s + "'");
}

struct ScenarioObject {
  std::size_t id = 0;
  std::string class_name;
  std::string color;
  std::string size;
  std::string shape;
  double x = 0.0;
  double y = 0.0;
  std::string owner;  ///< a user name or "Shared"
  std::size_t position_component = 0;
};

struct PersonaConfig {
  std::vector<Persona> modes{Persona::Direct};
  std::vector<dialogue::Relation> relations;
};

struct Scenario {
  std::string schema = kScenarioSchema;
  std::string name;
  nlohmann::json metadata = nlohmann::json::object();
  dialogue::EnvironmentContext environment = dialogue::EnvironmentContext::Household;
  std::vector<std::string> users;
  std::vector<std::string> classes;  ///< one-hot order of the class block
  std::vector<ScenarioObject> objects;
  Hyperparameters hyperparameters;
  PersonaConfig personas;
  std::map<std::string, dialogue::Ownership> classification_overrides;

  AnswerVocabulary vocabulary() const { return AnswerVocabulary(users); }

  AnswerLabel true_label(const ScenarioObject& o) const {
    return o.owner == "Shared" ? AnswerLabel::shared() : AnswerLabel::owner(o.owner);
  }

  const ScenarioObject& object(std::size_t id) const {
    for (const auto& o : objects)
      if (o.id == id) return o;
    throw InputError("no object with id " + std::to_string(id));
  }

  std::size_t class_index(const std::string& c) const {
    for (std::size_t i = 0; i < classes.size(); ++i)
      if (classes[i] == c) return i;
    throw InputError("class '" + c + "' is not in the class list");
  }

  std::vector<std::string> distinct_classes() const {
    std::vector<std::string> out;
    for (const auto& o : objects)
      if (std::find(out.begin(), out.end(), o.class_name) == out.end()) out.push_back(o.class_name);
    return out;
  }

  /// Object rows for prompts; observed users come from `answers`.
  dialogue::ObjectRow row(const ScenarioObject& o, const AnswerOverlay& answers = {}) const {
    dialogue::ObjectRow r;
    r.object_id = o.id;
    r.class_name = o.class_name;
    r.color = o.color;
    r.attributes = AttributeVector::encode(classes.size(), class_index(o.class_name), o.color, o.size, o.shape).values;
    r.x = o.x;
    r.y = o.y;
    if (auto it = answers.find(o.id); it != answers.end()) r.observed_user = it->second.to_string();
    return r;
  }
};

namespace detail {

inline Vec2 vec2_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw InputError("m0 must be a 2-element array");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

inline Mat2 mat2_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_array() || j[0].size() != 2 || !j[1].is_array() ||
      j[1].size() != 2)
    throw InputError("V0 must be a 2x2 array");
  Mat2 m;
  m << j[0][0].get<double>(), j[0][1].get<double>(), j[1][0].get<double>(), j[1][1].get<double>();
  return m;
}

}  // namespace detail

/// Overwrites fields of `h` that appear in `j`. Unknown keys are rejected.
inline void apply_hyperparameters(Hyperparameters& h, const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("hyperparameters must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "alpha") h.alpha = value.get<double>();
    else if (key == "beta") h.beta = value.get<double>();
    else if (key == "gamma") h.gamma = value.get<double>();
    else if (key == "lambda") h.lambda = value.get<double>();
    else if (key == "kappa0") h.kappa0 = value.get<double>();
    else if (key == "nu0") h.nu0 = value.get<double>();
    else if (key == "m0") h.m0 = detail::vec2_from(value);
    else if (key == "V0") h.V0 = detail::mat2_from(value);
    else if (key == "L") h.L = value.get<std::size_t>();
    else if (key == "K") h.K = value.get<std::size_t>();
    else if (key == "w_answer") h.w_answer = value.get<double>();
    else if (key == "w_attribute") h.w_attribute = value.get<double>();
    else if (key == "w_position") h.w_position = value.get<double>();
    else throw InputError("unknown hyperparameter '" + key + "'");
  }
}

inline nlohmann::json hyperparameters_to_json(const Hyperparameters& h) {
  return {{"alpha", h.alpha},
          {"beta", h.beta},
          {"gamma", h.gamma},
          {"lambda", h.lambda},
          {"m0", {h.m0(0), h.m0(1)}},
          {"kappa0", h.kappa0},
          {"V0", {{h.V0(0, 0), h.V0(0, 1)}, {h.V0(1, 0), h.V0(1, 1)}}},
          {"nu0", h.nu0},
          {"L", h.L},
          {"K", h.K},
          {"w_answer", h.w_answer},
          {"w_attribute", h.w_attribute},
          {"w_position", h.w_position}};
}

/// Structural parse. Throws InputError on wrong types or missing fields;
/// semantic invariants are left to validate_scenario.
inline Scenario parse_scenario(const nlohmann::json& j) {
  try {
    Scenario s;
    if (!j.is_object()) throw InputError("scenario must be a JSON object");
    s.schema = j.value("schema", std::string(kScenarioSchema));
    if (s.schema != kScenarioSchema) throw InputError("unsupported schema '" + s.schema + "'");
    s.name = j.at("name").get<std::string>();
    if (j.contains("metadata")) s.metadata = j.at("metadata");
    const std::string env = j.value("environment", std::string("household"));
    if (env == "household") {
      s.environment = dialogue::EnvironmentContext::Household;
    } else if (env == "laboratory") {
      s.environment = dialogue::EnvironmentContext::Laboratory;
    } else {
      throw InputError("environment must be household or laboratory");
    }
    s.users = j.at("users").get<std::vector<std::string>>();
    for (const auto& o : j.at("objects")) {
      ScenarioObject so;
      so.id = o.at("id").get<std::size_t>();
      so.class_name = o.at("class").get<std::string>();
      so.color = o.at("color").get<std::string>();
      so.size = o.at("size").get<std::string>();
      so.shape = o.at("shape").get<std::string>();
      so.x = o.at("x").get<double>();
      so.y = o.at("y").get<double>();
      so.owner = o.at("owner").get<std::string>();
      so.position_component = o.at("position_component").get<std::size_t>();
      s.objects.push_back(std::move(so));
    }
    if (j.contains("classes")) {
      s.classes = j.at("classes").get<std::vector<std::string>>();
    } else {
      s.classes = s.distinct_classes();
    }
    if (j.contains("hyperparameters")) apply_hyperparameters(s.hyperparameters, j.at("hyperparameters"));
    if (j.contains("personas")) {
      const auto& p = j.at("personas");
      if (p.contains("modes")) {
        s.personas.modes.clear();
        for (const auto& m : p.at("modes")) s.personas.modes.push_back(parse_persona(m.get<std::string>()));
      }
      if (p.contains("relations"))
        for (const auto& r : p.at("relations"))
          s.personas.relations.push_back({r.at("responder").get<std::string>(), r.at("relation").get<std::string>(),
                                          r.at("owner").get<std::string>()});
    }
    if (j.contains("mock_dialogue") && j.at("mock_dialogue").contains("classification_overrides")) {
      for (const auto& [cls, v] : j.at("mock_dialogue").at("classification_overrides").items()) {
        const std::string val = attributes::lower(v.get<std::string>());
        if (val == "shared") {
          s.classification_overrides[cls] = dialogue::Ownership::Shared;
        } else if (val == "owned") {
          s.classification_overrides[cls] = dialogue::Ownership::Owned;
        } else {
          throw InputError("classification override for '" + cls + "' must be shared or owned");
        }
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed scenario: ") + e.what());
  }
}

/// Every violated invariant, one message each. Empty means valid.
inline std::vector<std::string> validate_scenario(const Scenario& s) {
  std::vector<std::string> v;
  if (s.name.empty()) v.push_back("name is empty");
  if (s.users.empty()) v.push_back("users is empty");
  std::set<std::string> users;
  for (const auto& u : s.users) {
    if (u.empty()) v.push_back("empty user name");
    if (u == "Shared" || u == "unknown") v.push_back("user name '" + u + "' is reserved");
    if (!users.insert(u).second) v.push_back("duplicate user '" + u + "'");
  }
  if (s.objects.size() < 2) v.push_back("at least two objects are required");

  try {
    s.hyperparameters.validate();
  } catch (const InputError& e) {
    v.push_back(std::string("hyperparameters: ") + e.what());
  }

  std::set<std::string> classes;
  for (const auto& c : s.classes)
    if (!classes.insert(c).second) v.push_back("duplicate class '" + c + "'");

  std::set<std::size_t> ids;
  for (const auto& o : s.objects) {
    const std::string where = "object " + std::to_string(o.id);
    if (!ids.insert(o.id).second) v.push_back("duplicate object id " + std::to_string(o.id));
    if (o.position_component >= s.hyperparameters.K)
      v.push_back(where + ": position_component " + std::to_string(o.position_component) + " must be < K = " +
                  std::to_string(s.hyperparameters.K));
    if (o.owner != "Shared" && !users.contains(o.owner))
      v.push_back(where + ": owner '" + o.owner + "' is not a user");
    if (!classes.contains(o.class_name)) v.push_back(where + ": class '" + o.class_name + "' is not in classes");
    if (!attributes::color_index(o.color)) v.push_back(where + ": unknown color '" + o.color + "'");
    if (!attributes::size_index(o.size)) v.push_back(where + ": unknown size '" + o.size + "'");
    if (!attributes::shape_index(o.shape)) v.push_back(where + ": unknown shape '" + o.shape + "'");
    if (!std::isfinite(o.x) || !std::isfinite(o.y)) v.push_back(where + ": coordinates must be finite");
  }
  for (const auto& r : s.personas.relations) {
    if (!users.contains(r.responder)) v.push_back("relation responder '" + r.responder + "' is not a user");
    if (!users.contains(r.owner)) v.push_back("relation owner '" + r.owner + "' is not a user");
    if (r.relation.empty()) v.push_back("relation with empty name");
  }
  if (s.personas.modes.empty()) v.push_back("personas.modes is empty");
  return v;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

/// Parse and validate; throws InputError listing all violations.
inline Scenario load_scenario(const std::filesystem::path& path) {
  Scenario s = parse_scenario(read_json_file(path));
  auto violations = validate_scenario(s);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << path.string() << " is not a valid scenario:";
    for (const auto& v : violations) msg << "\n  " << v;
    throw InputError(msg.str());
  }
  return s;
}

/// Which evidence channels reach the model.
enum class Ablation { Full, ColorOnly, PositionOnly, AttributeOnly };

inline const char* to_string(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::ColorOnly: return "color-only";
    case Ablation::PositionOnly: return "position-only";
    case Ablation::AttributeOnly: return "attribute-only";
  }
  return "full";
}

inline Ablation parse_ablation(const std::string& s) {
  if (s == "full" || s == "none") return Ablation::Full;
  if (s == "color-only") return Ablation::ColorOnly;
  if (s == "position-only") return Ablation::PositionOnly;
  if (s == "attribute-only") return Ablation::AttributeOnly;
  throw InputError("unknown ablation '" + s + "'");
}

/// Model inputs for every object in scenario order, all answers Unknown.
/// ColorOnly keeps the color block of the attribute vector; AttributeOnly
/// drops the position channel, including the clamped component.
inline std::vector<Observation> to_observations(const Scenario& s, bool clamp_components, Ablation ablation) {
  std::vector<Observation> out;
  out.reserve(s.objects.size());
  for (const auto& o : s.objects) {
    Observation obs;
    obs.object_id = o.id;
    obs.position = Vec2(o.x, o.y);
    obs.attributes = AttributeVector::encode(s.classes.size(), s.class_index(o.class_name), o.color, o.size, o.shape);
    if (ablation == Ablation::ColorOnly) obs.attributes = obs.attributes.color_block(s.classes.size());
    if (clamp_components && ablation != Ablation::AttributeOnly) obs.fixed_position_component = o.position_component;
    out.push_back(std::move(obs));
  }
  return out;
}

/// Modality weights after masking out the channels an ablation excludes.
inline Hyperparameters ablate(Hyperparameters h, Ablation ablation) {
  if (ablation == Ablation::PositionOnly) h.w_attribute = 0.0;
  if (ablation == Ablation::AttributeOnly) h.w_position = 0.0;
  return h;
}

}  // namespace actowl::harness
