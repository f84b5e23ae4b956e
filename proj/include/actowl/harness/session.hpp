#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "actowl/active/information_gain.hpp"
#include "actowl/dialogue/backend.hpp"
#include "actowl/harness/ari.hpp"
#include "actowl/harness/scenario.hpp"
#include "actowl/inference/particle_filter.hpp"

namespace actowl::harness {

/// Comparison methods. NoLLM selects like IGMax but skips classification.
enum class Method { IGMax, IGMin, Random, NoLLM, LLMOnly };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::IGMax: return "ig-max";
    case Method::IGMin: return "ig-min";
    case Method::Random: return "random";
    case Method::NoLLM: return "no-llm";
    case Method::LLMOnly: return "llm-only";
  }
  return "ig-max";
}

inline Method parse_method(const std::string& s) {
  if (s == "ig-max") return Method::IGMax;
  if (s == "ig-min") return Method::IGMin;
  if (s == "random") return Method::Random;
  if (s == "no-llm") return Method::NoLLM;
  if (s == "llm-only") return Method::LLMOnly;
  throw InputError("unknown strategy '" + s + "'");
}

struct StepMetrics {
  std::size_t trial = 0;
  int step = -1;
  std::string strategy;
  std::optional<std::size_t> selected_object;
  std::optional<double> ig_value;
  std::optional<std::string> question;
  std::optional<std::string> answer;  ///< interpreted label: owner name or "Shared"
  double ari = 0.0;
  std::size_t n_questions = 0;
};

enum class InterpretationPolicy { SkipAndRequeue, AbortTrial };

struct TrialConfig {
  std::size_t particles = 100;
  IgMode ig_mode = IgMode::sampled(10);
  bool clamp_components = true;
  Ablation ablation = Ablation::Full;
  std::optional<double> w_answer;
  std::optional<double> w_attribute;
  std::optional<double> w_position;
  InterpretationPolicy policy = InterpretationPolicy::SkipAndRequeue;
  std::size_t max_attempts = 2;  ///< per object, under SkipAndRequeue
  double resample_fraction = 0.5;

  Hyperparameters effective_hyperparameters(const Scenario& s) const {
    Hyperparameters h = s.hyperparameters;
    if (w_answer) h.w_answer = *w_answer;
    if (w_attribute) h.w_attribute = *w_attribute;
    if (w_position) h.w_position = *w_position;
    return ablate(h, ablation);
  }
};

/// The teaching loop as a state machine: step -1 (exploration), step 0 (classification),
/// then one ask/answer pair per step. Shared by batch trials and live sessions.
class Session {
 public:
  Session(Scenario scenario, Method method, std::shared_ptr<dialogue::DialogueBackend> backend, TrialConfig config,
          std::uint64_t seed, std::size_t trial = 0)
      : scenario_(std::move(scenario)),
        method_(method),
        backend_(std::move(backend)),
        config_(config),
        seed_(seed),
        trial_(trial),
        h_(config.effective_hyperparameters(scenario_)),
        vocab_(scenario_.users),
        observations_(to_observations(scenario_, config.clamp_components, config.ablation)) {
    if (method_ == Method::LLMOnly) throw InputError("llm-only has no session loop; use llm_only_predict");
    if (!backend_) throw InputError("session needs a dialogue backend");
    if (config_.particles == 0) throw InputError("particles must be at least 1");
    h_.validate();
    for (const auto& o : scenario_.objects) truth_.push_back(scenario_.true_label(o).to_string());
  }

  /// Steps -1 and 0.
  void start() {
    explore();
    classify();
  }

  void explore() {
    if (step_ != kNotStarted) throw PreconditionError("exploration already ran");
    step_ = -1;
    refit();
    record({});
  }

  void classify() {
    if (step_ != -1) throw PreconditionError("classification follows exploration");
    step_ = 0;
    candidates_.clear();
    if (method_ == Method::NoLLM) {
      for (const auto& o : scenario_.objects) candidates_.insert(o.id);
      record({});
      return;
    }
    const auto c = backend_->classify_shared_owned(scenario_.distinct_classes(), scenario_.environment);
    shared_classes_ = c.shared;
    for (const auto& o : scenario_.objects) {
      if (c.shared.contains(o.class_name)) {
        answers_[o.id] = AnswerLabel::shared();
      } else {
        candidates_.insert(o.id);
      }
    }
    if (!answers_.empty()) refit();
    record({});
  }

  bool started() const { return step_ != kNotStarted; }
  bool complete() const { return step_ >= 0 && candidates_.empty(); }

  /// Select the next object and phrase the question. Leaves it in flight.
  const dialogue::QuestionRecord& ask() {
    if (step_ < 0) throw PreconditionError("session has not finished classification");
    if (in_flight_) throw PreconditionError("a question is already in flight");
    if (candidates_.empty()) throw NoCandidatesError();

    std::vector<std::size_t> pool;
    for (auto id : candidates_)
      if (!deferred_.contains(id)) pool.push_back(id);
    if (pool.empty()) pool.assign(candidates_.begin(), candidates_.end());

    const auto next = static_cast<std::uint64_t>(step_ + 1);
    Strategy strategy = Strategy::ig_max();
    if (method_ == Method::IGMin) strategy = Strategy::ig_min();
    if (method_ == Method::Random) strategy = Strategy::random(derive_seed(seed_, {tag(StreamTag::kSelection), next}));
    IgConfig ig{config_.ig_mode, derive_seed(seed_, {tag(StreamTag::kPseudoAnswer), next})};
    selection_ = select_next(*state_, pool, strategy, ig);

    const auto& target = scenario_.object(selection_->object_id);
    std::vector<dialogue::ObjectRow> others;
    for (const auto& o : scenario_.objects)
      if (o.id != target.id) others.push_back(scenario_.row(o, answers_));
    in_flight_ = backend_->generate_question(scenario_.row(target), others);
    return *in_flight_;
  }

  /// Interpret and apply. InterpretationError leaves the question in flight.
  StepMetrics submit_answer(const std::string& text, const std::string& responder) {
    if (!in_flight_) throw PreconditionError("no question in flight");
    const auto label = backend_->interpret_answer(*in_flight_, text, responder, scenario_.users);
    return apply_answer(label);
  }

  StepMetrics apply_answer(const AnswerLabel& label) {
    if (!in_flight_) throw PreconditionError("no question in flight");
    if (label.is_unknown()) throw InputError("an answer cannot be Unknown");
    vocab_.index_of(label);
    const auto id = in_flight_->target_object_id;
    answers_[id] = label;
    candidates_.erase(id);
    deferred_.clear();
    ++step_;
    ++questions_;
    refit();
    StepMetrics m;
    m.selected_object = id;
    if (selection_)
      if (const auto* e = selection_->estimate_for(id)) m.ig_value = e->value;
    m.question = in_flight_->question_text;
    m.answer = label.to_string();
    in_flight_.reset();
    return record(m);
  }

  /// Drop the in-flight question after a failed interpretation. The object is
  /// skipped at the next selection and abandoned after max_attempts failures.
  void abandon_question() {
    if (!in_flight_) throw PreconditionError("no question in flight");
    const auto id = in_flight_->target_object_id;
    in_flight_.reset();
    if (++attempts_[id] >= config_.max_attempts) {
      candidates_.erase(id);
      deferred_.erase(id);
    } else {
      deferred_.insert(id);
    }
  }

  const Scenario& scenario() const { return scenario_; }
  Method method() const { return method_; }
  const TrialConfig& config() const { return config_; }
  const Hyperparameters& hyperparameters() const { return h_; }
  int step() const { return step_; }
  std::size_t questions() const { return questions_; }
  const std::set<std::size_t>& candidates() const { return candidates_; }
  const AnswerOverlay& answers() const { return answers_; }
  const std::set<std::string>& shared_classes() const { return shared_classes_; }
  const std::optional<dialogue::QuestionRecord>& in_flight() const { return in_flight_; }
  const std::optional<Selection>& last_selection() const { return selection_; }
  const std::vector<StepMetrics>& history() const { return history_; }
  const ParticleState& particles() const {
    if (!state_) throw PreconditionError("model has not been fit yet");
    return *state_;
  }

  /// MAP concept per object, scenario order.
  std::vector<std::size_t> map_concepts() const { return map_assignments(particles()); }

  /// Entropy (nats) of the ensemble's predicted answer; 0 for answered objects.
  double answer_entropy(std::size_t object_id) const {
    if (answers_.contains(object_id)) return 0.0;
    const auto& st = particles();
    const auto& obs = st.processed()[*st.index_of(object_id)];
    std::vector<double> mix(vocab_.size(), 0.0);
    for (std::size_t r = 0; r < st.size(); ++r) {
      const auto p = predictive_answer_distribution(st, r, obs);
      for (std::size_t v = 0; v < mix.size(); ++v) mix[v] += st.weights()[r] * p[v];
    }
    double h = 0.0;
    for (double p : mix)
      if (p > 0.0) h -= p * std::log(p);
    return h;
  }

 private:
  static constexpr int kNotStarted = -2;

  void refit() {
    FilterOptions opts;
    opts.resample_fraction = config_.resample_fraction;
    state_ = update_model(answers_, observations_, h_, vocab_, config_.particles, derive_seed(seed_, {0x0F17}), opts);
  }

  StepMetrics record(StepMetrics m) {
    m.trial = trial_;
    m.step = step_;
    m.strategy = to_string(method_);
    m.ari = adjusted_rand_index(map_concepts(), truth_);
    m.n_questions = questions_;
    history_.push_back(m);
    return m;
  }

  Scenario scenario_;
  Method method_;
  std::shared_ptr<dialogue::DialogueBackend> backend_;
  TrialConfig config_;
  std::uint64_t seed_;
  std::size_t trial_;
  Hyperparameters h_;
  AnswerVocabulary vocab_;
  std::vector<Observation> observations_;
  std::vector<std::string> truth_;

  int step_ = kNotStarted;
  std::size_t questions_ = 0;
  std::set<std::size_t> candidates_;
  AnswerOverlay answers_;
  std::set<std::string> shared_classes_;
  std::optional<ParticleState> state_;
  std::optional<Selection> selection_;
  std::optional<dialogue::QuestionRecord> in_flight_;
  std::map<std::size_t, std::size_t> attempts_;
  std::set<std::size_t> deferred_;
  std::vector<StepMetrics> history_;
};

}  // namespace actowl::harness
