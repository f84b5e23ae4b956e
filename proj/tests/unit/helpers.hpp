#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "actowl/core/types.hpp"
#include "actowl/harness/scenario.hpp"
#include "oracle/collapsed_oracle.hpp"

namespace testing_support {

inline std::filesystem::path scenario_path(const std::string& name) {
  return std::filesystem::path(ACTOWL_SCENARIO_DIR) / name;
}

inline actowl::harness::Scenario shipped(const std::string& name) {
  return actowl::harness::load_scenario(scenario_path(name));
}

inline actowl::Observation obs(std::size_t id, double x, double y, std::vector<int> attrs,
                               actowl::AnswerLabel answer = {}, std::optional<std::size_t> comp = std::nullopt) {
  actowl::Observation o;
  o.object_id = id;
  o.position = actowl::Vec2(x, y);
  o.attributes = actowl::AttributeVector(std::move(attrs));
  o.answer = std::move(answer);
  o.fixed_position_component = comp;
  return o;
}

inline std::vector<int> onehot(std::size_t dim, std::size_t at) {
  std::vector<int> v(dim, 0);
  v.at(at) = 1;
  return v;
}

inline oracle::Params to_oracle(const actowl::Hyperparameters& h, std::size_t vocab) {
  oracle::Params p;
  p.alpha = h.alpha;
  p.beta = h.beta;
  p.gamma = h.gamma;
  p.lambda = h.lambda;
  p.m0 = {h.m0(0), h.m0(1)};
  p.kappa0 = h.kappa0;
  p.V0 = {h.V0(0, 0), h.V0(0, 1), h.V0(1, 0), h.V0(1, 1)};
  p.nu0 = h.nu0;
  p.L = static_cast<int>(h.L);
  p.K = static_cast<int>(h.K);
  p.V = static_cast<int>(vocab);
  p.w_answer = h.w_answer;
  p.w_attribute = h.w_attribute;
  p.w_position = h.w_position;
  return p;
}

inline std::vector<oracle::Item> to_oracle(const std::vector<actowl::Observation>& observations,
                                           const actowl::AnswerVocabulary& vocab) {
  std::vector<oracle::Item> items;
  for (const auto& o : observations) {
    oracle::Item it;
    it.x = o.position(0);
    it.y = o.position(1);
    it.attributes = o.attributes.values;
    if (auto v = vocab.index_of(o.answer)) it.answer = static_cast<int>(*v);
    if (o.fixed_position_component) it.component = static_cast<int>(*o.fixed_position_component);
    items.push_back(it);
  }
  return items;
}

/// Four objects on two desks, two users, two classes: the small clamped
/// instance the enumeration oracle handles exhaustively.
struct DeskInstance {
  actowl::Hyperparameters h;
  actowl::AnswerVocabulary vocab{{"anna", "ben"}};
  std::vector<actowl::Observation> observations;

  DeskInstance() {
    h.L = 2;
    h.K = 2;
    const std::size_t n_classes = 2;
    auto enc = [&](std::size_t cls, const char* color) {
      return actowl::AttributeVector::encode(n_classes, cls, color, "medium", "square").values;
    };
    observations = {obs(1, -1.0, 0.2, enc(0, "red"), actowl::AnswerLabel::owner("anna"), 0),
                    obs(2, -0.8, -0.1, enc(1, "red"), {}, 0),
                    obs(3, 1.1, 0.0, enc(0, "blue"), {}, 1),
                    obs(4, 0.9, 0.3, enc(1, "blue"), {}, 1)};
  }
};

}  // namespace testing_support
