#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "actowl/dialogue/llm_backend.hpp"
#include "actowl/harness/experiment.hpp"
#include "actowl/harness/scenario.hpp"

namespace actowl::cli {

/// Everything `run` needs. Every field can come from a JSON config file;
/// command-line flags override the file.
struct RunConfig {
  std::string scenario;
  std::vector<std::string> strategies{"ig-max"};
  std::size_t trials = 20;
  std::size_t particles = 100;
  std::size_t samples = 10;
  std::string ig_mode = "sampled";
  std::uint64_t seed = 1;
  std::string backend = "mock";
  std::string llm_endpoint = dialogue::LlmConfig{}.endpoint;
  std::string llm_model = dialogue::LlmConfig{}.model;
  std::string ablation = "full";
  std::optional<double> w_answer;
  std::optional<double> w_attribute;
  std::optional<double> w_position;
  bool clamp_components = true;
  std::vector<std::string> mock_shared;  ///< classes the mock classifier is forced to call shared
  std::string policy = "skip";           ///< skip | abort, on interpretation errors
  std::string metrics_out = "metrics.csv";
  std::string aggregate_out = "aggregate.json";
  std::size_t jobs = 1;

  /// Throws InputError naming the first bad field.
  void validate() const {
    if (scenario.empty()) throw InputError("--scenario is required");
    if (strategies.empty()) throw InputError("at least one strategy is required");
    for (const auto& s : strategies) harness::parse_method(s);
    if (trials == 0) throw InputError("trials must be at least 1");
    if (particles == 0) throw InputError("particles must be at least 1");
    if (samples == 0) throw InputError("samples must be at least 1");
    if (ig_mode != "sampled" && ig_mode != "exact") throw InputError("ig-mode must be sampled or exact");
    if (backend != "mock" && backend != "llm") throw InputError("backend must be mock or llm");
    harness::parse_ablation(ablation);
    if (policy != "skip" && policy != "abort") throw InputError("policy must be skip or abort");
    if (jobs == 0) throw InputError("jobs must be at least 1");
    for (auto w : {w_answer, w_attribute, w_position})
      if (w && !(*w >= 0.0)) throw InputError("modality weights must be non-negative");
    dialogue::Endpoint::parse(llm_endpoint);
  }

  std::vector<harness::Method> methods() const {
    std::vector<harness::Method> out;
    for (const auto& s : strategies) {
      const auto m = harness::parse_method(s);
      if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    return out;
  }

  harness::TrialConfig trial_config() const {
    harness::TrialConfig c;
    c.particles = particles;
    c.ig_mode = ig_mode == "exact" ? IgMode::exact() : IgMode::sampled(samples);
    c.clamp_components = clamp_components;
    c.ablation = harness::parse_ablation(ablation);
    c.w_answer = w_answer;
    c.w_attribute = w_attribute;
    c.w_position = w_position;
    c.policy = policy == "abort" ? harness::InterpretationPolicy::AbortTrial
                                 : harness::InterpretationPolicy::SkipAndRequeue;
    return c;
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"scenario", c.scenario},
          {"strategies", c.strategies},
          {"trials", c.trials},
          {"particles", c.particles},
          {"samples", c.samples},
          {"ig_mode", c.ig_mode},
          {"seed", c.seed},
          {"backend", c.backend},
          {"llm_endpoint", c.llm_endpoint},
          {"llm_model", c.llm_model},
          {"ablation", c.ablation},
          {"w_answer", opt(c.w_answer)},
          {"w_attribute", opt(c.w_attribute)},
          {"w_position", opt(c.w_position)},
          {"clamp_components", c.clamp_components},
          {"mock_shared", c.mock_shared},
          {"policy", c.policy},
          {"metrics_out", c.metrics_out},
          {"aggregate_out", c.aggregate_out},
          {"jobs", c.jobs}};
}

/// Applies the keys present in `j` over `c`. Unknown keys are an error.
inline void apply_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("config file must hold a JSON object");
  auto opt = [](const nlohmann::json& v) -> std::optional<double> {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "scenario") c.scenario = v.get<std::string>();
      else if (key == "strategies") c.strategies = v.get<std::vector<std::string>>();
      else if (key == "trials") c.trials = v.get<std::size_t>();
      else if (key == "particles") c.particles = v.get<std::size_t>();
      else if (key == "samples") c.samples = v.get<std::size_t>();
      else if (key == "ig_mode") c.ig_mode = v.get<std::string>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "backend") c.backend = v.get<std::string>();
      else if (key == "llm_endpoint") c.llm_endpoint = v.get<std::string>();
      else if (key == "llm_model") c.llm_model = v.get<std::string>();
      else if (key == "ablation") c.ablation = v.get<std::string>();
      else if (key == "w_answer") c.w_answer = opt(v);
      else if (key == "w_attribute") c.w_attribute = opt(v);
      else if (key == "w_position") c.w_position = opt(v);
      else if (key == "clamp_components") c.clamp_components = v.get<bool>();
      else if (key == "mock_shared") c.mock_shared = v.get<std::vector<std::string>>();
      else if (key == "policy") c.policy = v.get<std::string>();
      else if (key == "metrics_out") c.metrics_out = v.get<std::string>();
      else if (key == "aggregate_out") c.aggregate_out = v.get<std::string>();
      else if (key == "jobs") c.jobs = v.get<std::size_t>();
      else throw InputError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad config value: ") + e.what());
  }
}

/// Sidecar holding the effective configuration: aggregate.json -> aggregate.config.json.
inline std::filesystem::path config_echo_path(const std::filesystem::path& aggregate_out) {
  auto p = aggregate_out;
  p.replace_extension(".config.json");
  return p;
}

}  // namespace actowl::cli
