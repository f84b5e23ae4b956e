#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "actowl/harness/metrics_io.hpp"
#include "actowl/harness/scripted_user.hpp"
#include "actowl/harness/session.hpp"

namespace actowl::service {

/// An error with an HTTP status and a stable machine-readable code.
class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& message, nlohmann::json detail = nullptr)
      : Error(message), status_(status), code_(std::move(code)), detail_(std::move(detail)) {}

  int status() const { return status_; }
  const std::string& code() const { return code_; }
  const nlohmann::json& detail() const { return detail_; }

  nlohmann::json body() const { return {{"code", code_}, {"message", what()}, {"detail", detail_}}; }

 private:
  int status_;
  std::string code_;
  nlohmann::json detail_;
};

using BackendProvider = std::function<std::shared_ptr<dialogue::DialogueBackend>(const harness::Scenario&)>;

inline BackendProvider mock_backend_provider() {
  return [](const harness::Scenario& s) {
    return std::make_shared<dialogue::MockBackend>(harness::make_mock_backend(s));
  };
}

struct ServiceOptions {
  BackendProvider backend = mock_backend_provider();
  harness::TrialConfig defaults;
  std::uint64_t default_seed = 1;
  std::optional<std::filesystem::path> persist_dir;  ///< snapshot written here after every mutation
};

/// Immutable view published after each mutation; readers never see a
/// half-applied step.
struct Snapshot {
  nlohmann::json state;
  std::string metrics_csv;
};

/// Fields of a create request's "config" object, applied over `base`.
inline std::pair<harness::TrialConfig, std::uint64_t> parse_session_config(const nlohmann::json& j,
                                                                           harness::TrialConfig base,
                                                                           std::uint64_t seed) {
  if (j.is_null()) return {base, seed};
  if (!j.is_object()) throw ServiceError(400, "invalid_request", "config must be an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "particles") base.particles = v.get<std::size_t>();
      else if (key == "samples") base.ig_mode = IgMode::sampled(v.get<std::size_t>());
      else if (key == "ig_mode") {
        const auto mode = v.get<std::string>();
        if (mode == "exact") base.ig_mode = IgMode::exact();
        else if (mode != "sampled") throw ServiceError(400, "invalid_request", "ig_mode must be sampled or exact");
      } else if (key == "seed") seed = v.get<std::uint64_t>();
      else if (key == "clamp_components") base.clamp_components = v.get<bool>();
      else if (key == "w_answer") base.w_answer = v.get<double>();
      else if (key == "w_attribute") base.w_attribute = v.get<double>();
      else if (key == "w_position") base.w_position = v.get<double>();
      else if (key == "ablation") base.ablation = harness::parse_ablation(v.get<std::string>());
      else throw ServiceError(400, "invalid_request", "unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(400, "invalid_request", std::string("bad config value: ") + e.what());
  } catch (const InputError& e) {
    throw ServiceError(400, "invalid_request", e.what());
  }
  if (base.ig_mode.kind == IgMode::Kind::Sampled && base.ig_mode.samples == 0)
    throw ServiceError(400, "invalid_request", "samples must be at least 1");
  if (base.particles == 0) throw ServiceError(400, "invalid_request", "particles must be at least 1");
  return {base, seed};
}

/// Live teaching sessions. Writes to one session are serialized (a second
/// concurrent writer gets a conflict); reads return the last published
/// snapshot without locking the session.
class SessionManager {
 public:
  SessionManager(std::map<std::string, harness::Scenario> scenarios, ServiceOptions options = {})
      : scenarios_(std::move(scenarios)),
        options_(std::move(options)),
        id_salt_(static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count())) {}

  std::vector<std::string> scenario_names() const {
    std::vector<std::string> out;
    for (const auto& [name, s] : scenarios_) out.push_back(name);
    return out;
  }

  /// POST /sessions. Runs steps -1 and 0 before returning.
  nlohmann::json create_session(const nlohmann::json& request) {
    if (!request.is_object() || !request.contains("scenario") || !request["scenario"].is_string())
      throw ServiceError(400, "invalid_request", "body must be {\"scenario\": name, \"config\": {...}}");
    const std::string name = request["scenario"].get<std::string>();
    auto it = scenarios_.find(name);
    if (it == scenarios_.end())
      throw ServiceError(404, "scenario_not_found", "no scenario named '" + name + "'", {{"scenario", name}});
    auto [config, seed] =
        parse_session_config(request.value("config", nlohmann::json()), options_.defaults, options_.default_seed);

    auto entry = std::make_shared<Entry>();
    entry->id = next_id();
    entry->scenario_name = name;
    entry->created_at = now_iso8601();
    try {
      entry->session = std::make_unique<harness::Session>(it->second, harness::Method::IGMax,
                                                          options_.backend(it->second), config, seed);
      entry->session->start();
    } catch (const dialogue::BackendError& e) {
      throw ServiceError(502, "backend_error", e.what(), {{"payload", e.payload()}});
    } catch (const InputError& e) {
      throw ServiceError(400, "invalid_request", e.what());
    }
    publish(*entry);
    {
      std::unique_lock lock(sessions_mutex_);
      sessions_[entry->id] = entry;
    }
    return handle(*entry);
  }

  /// GET /sessions/{id}/state
  std::shared_ptr<const Snapshot> get_state(const std::string& id) const {
    auto e = find(id);
    std::lock_guard lock(e->snapshot_mutex);
    return e->snapshot;
  }

  /// POST /sessions/{id}/ask
  nlohmann::json ask_next(const std::string& id) {
    auto e = find(id);
    auto lock = write_lock(*e);
    auto& s = *e->session;
    if (s.in_flight())
      throw ServiceError(409, "question_in_flight", "answer the current question first",
                         {{"object_id", s.in_flight()->target_object_id}});
    if (s.complete()) throw ServiceError(409, "session_complete", "every candidate has been answered");
    try {
      s.ask();
    } catch (const dialogue::BackendError& ex) {
      throw ServiceError(502, "backend_error", ex.what(), {{"payload", ex.payload()}});
    } catch (const dialogue::GenerationError& ex) {
      throw ServiceError(502, "generation_error", ex.what());
    }
    publish(*e);
    return question_json(s);
  }

  /// POST /sessions/{id}/answer
  nlohmann::json submit_answer(const std::string& id, const std::string& text, const std::string& responder) {
    auto e = find(id);
    auto lock = write_lock(*e);
    auto& s = *e->session;
    if (!s.in_flight()) throw ServiceError(409, "no_question", "there is no question in flight");
    harness::StepMetrics m;
    try {
      m = s.submit_answer(text, responder);
    } catch (const dialogue::InterpretationError& ex) {
      throw ServiceError(422, "interpretation_failed", ex.what(),
                         {{"raw_text", ex.raw_text()}, {"object_id", s.in_flight()->target_object_id}});
    } catch (const VocabularyError& ex) {
      throw ServiceError(422, "interpretation_failed", ex.what(), {{"raw_text", text}});
    } catch (const dialogue::BackendError& ex) {
      throw ServiceError(502, "backend_error", ex.what(), {{"payload", ex.payload()}});
    }
    publish(*e);
    return harness::to_json(m);
  }

  std::size_t session_count() const {
    std::shared_lock lock(sessions_mutex_);
    return sessions_.size();
  }

 private:
  struct Entry {
    std::string id;
    std::string scenario_name;
    std::string created_at;
    std::mutex write_mutex;
    std::unique_ptr<harness::Session> session;
    mutable std::mutex snapshot_mutex;
    std::shared_ptr<const Snapshot> snapshot;
  };

  std::shared_ptr<Entry> find(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end())
      throw ServiceError(404, "session_not_found", "no session '" + id + "'", {{"session_id", id}});
    return it->second;
  }

  static std::unique_lock<std::mutex> write_lock(Entry& e) {
    std::unique_lock lock(e.write_mutex, std::try_to_lock);
    if (!lock.owns_lock()) throw ServiceError(409, "busy", "another request is updating this session");
    return lock;
  }

  std::string next_id() {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%016llx",
                  static_cast<unsigned long long>(splitmix64(id_salt_ ^ counter_.fetch_add(1))));
    return buf;
  }

  static std::string now_iso8601() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  static nlohmann::json handle(const Entry& e) {
    return {{"session_id", e.id}, {"scenario", e.scenario_name}, {"created_at", e.created_at},
            {"step", e.session->step()}};
  }

  static nlohmann::json question_json(const harness::Session& s) {
    const auto& q = *s.in_flight();
    nlohmann::json j = {{"object_id", q.target_object_id}, {"question", q.question_text}, {"step", s.step() + 1}};
    j["ig"] = nullptr;
    if (s.last_selection())
      if (const auto* est = s.last_selection()->estimate_for(q.target_object_id)) j["ig"] = est->value;
    return j;
  }

  /// Builds the read model. Called with the write lock held.
  void publish(Entry& e) {
    const auto& s = *e.session;
    nlohmann::json state = handle(e);
    state["complete"] = s.complete();
    state["n_questions"] = s.questions();
    state["users"] = s.scenario().users;
    state["shared_classes"] = s.shared_classes();

    nlohmann::json candidates = nlohmann::json::array();
    for (auto id : s.candidates()) {
      nlohmann::json c = {{"object_id", id}, {"ig", nullptr}};
      if (s.last_selection())
        if (const auto* est = s.last_selection()->estimate_for(id)) c["ig"] = est->value;
      candidates.push_back(std::move(c));
    }
    state["candidates"] = std::move(candidates);
    state["question"] = s.in_flight() ? question_json(s) : nlohmann::json(nullptr);

    const auto concepts = s.map_concepts();
    nlohmann::json objects = nlohmann::json::array();
    for (std::size_t n = 0; n < s.scenario().objects.size(); ++n) {
      const auto& o = s.scenario().objects[n];
      nlohmann::json obj = {{"object_id", o.id}, {"class", o.class_name}, {"color", o.color},
                            {"x", o.x},          {"y", o.y},            {"map_concept", concepts[n]},
                            {"answer_entropy", s.answer_entropy(o.id)}};
      auto a = s.answers().find(o.id);
      obj["answer"] = a == s.answers().end() ? nlohmann::json(nullptr) : nlohmann::json(a->second.to_string());
      objects.push_back(std::move(obj));
    }
    state["objects"] = std::move(objects);

    nlohmann::json metrics = nlohmann::json::array();
    for (const auto& m : s.history()) metrics.push_back(harness::to_json(m));
    state["metrics"] = std::move(metrics);

    auto snap = std::make_shared<Snapshot>();
    snap->state = std::move(state);
    snap->metrics_csv = harness::metrics_csv(s.history());
    if (options_.persist_dir) persist(e.id, *snap);
    std::lock_guard lock(e.snapshot_mutex);
    e.snapshot = std::move(snap);
  }

  void persist(const std::string& id, const Snapshot& snap) const {
    std::filesystem::create_directories(*options_.persist_dir);
    const auto path = *options_.persist_dir / (id + ".json");
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp);
      out << snap.state.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
  }

  std::map<std::string, harness::Scenario> scenarios_;
  ServiceOptions options_;
  std::uint64_t id_salt_;
  std::atomic<std::uint64_t> counter_{0};
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace actowl::service
