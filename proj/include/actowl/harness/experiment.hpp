#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "actowl/harness/scripted_user.hpp"
#include "actowl/harness/session.hpp"

namespace actowl::harness {

/// A failed interpretation, kept alongside the step records.
struct TrialEvent {
  int step = 0;  ///< step at which the question was asked
  std::size_t object_id = 0;
  std::string message;
  std::string raw_text;
};

struct TrialResult {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  Method method = Method::IGMax;
  std::vector<StepMetrics> metrics;
  std::vector<TrialEvent> events;
  bool aborted = false;
};

/// One-shot owner prediction for every object, scenario order. Objects of
/// classes classified as shared are given to the backend already labeled.
inline std::vector<AnswerLabel> llm_only_predict(const Scenario& s, dialogue::DialogueBackend& backend,
                                                 std::size_t* owned_count = nullptr) {
  const auto c = backend.classify_shared_owned(s.distinct_classes(), s.environment);
  AnswerOverlay labels;
  for (const auto& o : s.objects)
    if (c.shared.contains(o.class_name)) labels[o.id] = AnswerLabel::shared();
  if (owned_count) *owned_count = s.objects.size() - labels.size();
  std::vector<dialogue::ObjectRow> rows;
  for (const auto& o : s.objects) rows.push_back(s.row(o, labels));
  auto out = backend.predict_owners(rows, s.users);
  if (out.size() != rows.size()) throw Error("owner prediction returned the wrong number of labels");
  return out;
}

/// The full teaching loop with a scripted answerer. LLM-only yields one ARI
/// point replicated over steps -1..T with no questions asked.
inline TrialResult run_trial(const Scenario& scenario, Method method,
                             std::shared_ptr<dialogue::DialogueBackend> backend, const TrialConfig& config,
                             std::uint64_t seed, std::size_t trial = 0, AnswerSource* source = nullptr) {
  TrialResult result;
  result.trial = trial;
  result.seed = seed;
  result.method = method;

  if (method == Method::LLMOnly) {
    std::size_t owned = 0;
    const auto predicted = llm_only_predict(scenario, *backend, &owned);
    std::vector<std::string> pred, truth;
    for (std::size_t n = 0; n < scenario.objects.size(); ++n) {
      pred.push_back(predicted[n].to_string());
      truth.push_back(scenario.true_label(scenario.objects[n]).to_string());
    }
    const double ari = adjusted_rand_index(pred, truth);
    for (int step = -1; step <= static_cast<int>(owned); ++step) {
      StepMetrics m;
      m.trial = trial;
      m.step = step;
      m.strategy = to_string(method);
      m.ari = ari;
      result.metrics.push_back(m);
    }
    return result;
  }

  ScriptedUser scripted(scenario, seed);
  AnswerSource& answers = source ? *source : scripted;
  Session session(scenario, method, std::move(backend), config, seed, trial);
  session.start();
  while (!session.complete()) {
    const auto& q = session.ask();
    const auto reply = answers.answer(q.target_object_id);
    try {
      session.submit_answer(reply.text, reply.responder);
    } catch (const dialogue::InterpretationError& e) {
      result.events.push_back({session.step() + 1, q.target_object_id, e.what(), e.raw_text()});
      if (config.policy == InterpretationPolicy::AbortTrial) {
        result.aborted = true;
        break;
      }
      session.abandon_question();
    }
  }
  result.metrics = session.history();
  return result;
}

struct AggregateRow {
  int step = 0;
  double mean_ari = 0.0;
  double std_ari = 0.0;  ///< population standard deviation
  std::optional<double> mean_ig;
  std::size_t trials = 0;
};

/// Per-step mean/std of ARI and mean IG of the selected object.
inline std::vector<AggregateRow> aggregate(const std::vector<TrialResult>& trials) {
  std::map<int, std::vector<double>> ari;
  std::map<int, std::vector<double>> ig;
  for (const auto& t : trials)
    for (const auto& m : t.metrics) {
      ari[m.step].push_back(m.ari);
      if (m.ig_value) ig[m.step].push_back(*m.ig_value);
    }
  std::vector<AggregateRow> out;
  for (const auto& [step, values] : ari) {
    AggregateRow row;
    row.step = step;
    row.trials = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    row.mean_ari = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - row.mean_ari) * (v - row.mean_ari);
    row.std_ari = std::sqrt(sq / static_cast<double>(values.size()));
    if (auto it = ig.find(step); it != ig.end()) {
      double s = 0.0;
      for (double v : it->second) s += v;
      row.mean_ig = s / static_cast<double>(it->second.size());
    }
    out.push_back(row);
  }
  return out;
}

using BackendFactory = std::function<std::shared_ptr<dialogue::DialogueBackend>()>;

struct ExperimentResult {
  std::vector<Method> methods;
  std::map<Method, std::vector<TrialResult>> trials;

  std::map<Method, std::vector<AggregateRow>> aggregates() const {
    std::map<Method, std::vector<AggregateRow>> out;
    for (const auto& [m, t] : trials) out[m] = aggregate(t);
    return out;
  }
};

/// Trials use seeds base_seed .. base_seed + trials - 1 for every method.
/// Up to `jobs` trials run concurrently; results are stored by index, so the
/// output does not depend on scheduling.
inline ExperimentResult run_experiment(const Scenario& scenario, const std::vector<Method>& methods,
                                       std::size_t trials, std::uint64_t base_seed, const TrialConfig& config,
                                       const BackendFactory& make_backend, std::size_t jobs = 1) {
  if (trials == 0) throw InputError("trials must be at least 1");
  if (methods.empty()) throw InputError("at least one strategy is required");
  ExperimentResult result;
  result.methods = methods;
  std::vector<std::pair<Method, std::size_t>> work;
  for (auto m : methods) {
    result.trials[m].resize(trials);
    for (std::size_t t = 0; t < trials; ++t) work.emplace_back(m, t);
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= work.size()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      const auto [m, t] = work[i];
      try {
        result.trials.at(m)[t] = run_trial(scenario, m, make_backend(), config, base_seed + t, t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(jobs, work.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < n; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

}  // namespace actowl::harness
