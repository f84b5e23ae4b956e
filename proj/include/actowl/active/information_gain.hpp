#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actowl/core/errors.hpp"
#include "actowl/core/predictive.hpp"
#include "actowl/core/random.hpp"
#include "actowl/core/types.hpp"
#include "actowl/inference/particle_filter.hpp"

namespace actowl {

/// How the expectation over the unseen answer is evaluated.
struct IgMode {
  enum class Kind { Sampled, ExactEnumeration };
  Kind kind = Kind::Sampled;
  std::size_t samples = 10;  ///< J, pseudo-answers per particle (Sampled only)

  static IgMode sampled(std::size_t j) { return {Kind::Sampled, j}; }
  static IgMode exact() { return {Kind::ExactEnumeration, 0}; }
  bool is_exact() const { return kind == Kind::ExactEnumeration; }
};

struct IGEstimate {
  std::size_t object_id = 0;
  double value = 0.0;  ///< nats
  IgMode mode;
  std::vector<std::vector<double>> per_particle_predictives;  ///< R x V_w, kept for diagnostics
};

/// Mixture of the per-concept answer predictives, weighted by the concept
/// marginal of the collapsed conditional for `obs` (its own answer ignored).
inline std::vector<double> answer_mixture(const SufficientStats& stats, const Hyperparameters& h,
                                          const Observation& obs) {
  const auto table = assignment_posterior(stats, h, obs, std::nullopt);
  const auto concept_mass = table.concept_marginal();
  std::vector<double> p(stats.answer_vocab(), 0.0);
  for (std::size_t l = 0; l < stats.concepts(); ++l) {
    if (concept_mass[l] == 0.0) continue;
    const auto q = answer_predictive(stats, h, l);
    for (std::size_t v = 0; v < p.size(); ++v) p[v] += concept_mass[l] * q[v];
  }
  return p;
}

/// p(w_a | Z^[r], x_a, o_a, W_known) for one particle. The candidate's own
/// contribution is removed from the particle's statistics first, so the
/// object is not conditioned on itself.
inline std::vector<double> predictive_answer_distribution(const ParticleState& state, std::size_t particle,
                                                          const Observation& obs, const AnswerOverlay& known = {}) {
  if (!obs.answer.is_unknown() || known.contains(obs.object_id))
    throw PreconditionError("object " + std::to_string(obs.object_id) + " is already answered");
  if (particle >= state.size()) throw InputError("particle index out of range");
  const auto& p = state.particles()[particle];
  if (auto n = state.index_of(obs.object_id); n && *n < p.assignments.size()) {
    const auto& processed = state.processed()[*n];
    if (!processed.answer.is_unknown())
      throw PreconditionError("object " + std::to_string(obs.object_id) + " is already answered");
    auto stats = p.stats;
    stats.remove(processed, std::nullopt, p.assignments[*n]);
    return answer_mixture(stats, state.hyperparameters(), obs);
  }
  return answer_mixture(p.stats, state.hyperparameters(), obs);
}

/// J i.i.d. vocabulary indices drawn from `predictive`.
inline std::vector<std::size_t> sample_pseudo_answers(std::span<const double> predictive, std::size_t samples,
                                                      std::uint64_t seed) {
  if (samples == 0) throw InputError("need at least one pseudo-answer sample");
  Rng rng(seed);
  std::vector<std::size_t> out(samples);
  for (auto& s : out) s = rng.categorical(predictive);
  return out;
}

inline std::vector<AnswerLabel> sample_pseudo_answers(const ParticleState& state, std::size_t particle,
                                                      const Observation& obs, std::size_t samples,
                                                      std::uint64_t seed) {
  const auto predictive = predictive_answer_distribution(state, particle, obs);
  std::vector<AnswerLabel> labels;
  for (std::size_t v : sample_pseudo_answers(predictive, samples, seed))
    labels.push_back(state.vocabulary().label_at(v));
  return labels;
}

/// Information gain from a table of per-particle answer predictives.
///
/// Exact mode:   sum_r w_r sum_v p_r(v) log(p_r(v) / p_mix(v)).
/// Sampled mode: sum_r w_r (1/J) sum_j log(p_r(W_rj) / p_mix(W_rj)), W_rj ~ p_r.
///
/// Particles whose predictive rows are bitwise identical are pooled first, so
/// a candidate every particle agrees on scores exactly zero.
inline double information_gain_from_predictives(std::span<const double> weights,
                                                const std::vector<std::vector<double>>& predictives, IgMode mode,
                                                std::uint64_t seed) {
  if (weights.size() != predictives.size() || weights.empty())
    throw InputError("weights and predictive table disagree in size");
  const std::size_t V = predictives.front().size();

  std::vector<std::size_t> group_of(predictives.size());
  std::vector<std::size_t> representatives;
  std::vector<double> group_weight;
  for (std::size_t r = 0; r < predictives.size(); ++r) {
    if (predictives[r].size() != V) throw InputError("ragged predictive table");
    std::size_t g = 0;
    while (g < representatives.size() && predictives[representatives[g]] != predictives[r]) ++g;
    if (g == representatives.size()) {
      representatives.push_back(r);
      group_weight.push_back(0.0);
    }
    group_of[r] = g;
    group_weight[g] += weights[r];
  }
  if (representatives.size() == 1) return 0.0;

  double total = 0.0;
  for (double w : group_weight) total += w;
  std::vector<double> mix(V, 0.0);
  for (std::size_t g = 0; g < representatives.size(); ++g)
    for (std::size_t v = 0; v < V; ++v) mix[v] += group_weight[g] / total * predictives[representatives[g]][v];

  double ig = 0.0;
  if (mode.is_exact()) {
    for (std::size_t g = 0; g < representatives.size(); ++g) {
      const auto& p = predictives[representatives[g]];
      double kl = 0.0;
      for (std::size_t v = 0; v < V; ++v)
        if (p[v] > 0.0) kl += p[v] * (std::log(p[v]) - std::log(mix[v]));
      ig += group_weight[g] / total * kl;
    }
    return ig;
  }

  if (mode.samples == 0) throw InputError("sampled information gain needs J >= 1");
  // Streams are keyed by (row content, occurrence of that row) rather than by
  // particle index, so reordering the particles reorders terms but not draws.
  std::vector<std::uint64_t> row_hash(representatives.size());
  for (std::size_t g = 0; g < representatives.size(); ++g) {
    std::uint64_t hsh = tag(StreamTag::kPseudoAnswer);
    for (double x : predictives[representatives[g]]) hsh = splitmix64(hsh ^ std::bit_cast<std::uint64_t>(x));
    row_hash[g] = hsh;
  }
  // Within a group, occurrences are numbered in weight order; equal weights
  // give equal terms, so the ordering among them does not matter.
  std::vector<std::size_t> order(predictives.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (group_of[a] != group_of[b]) return group_of[a] < group_of[b];
    return weights[a] < weights[b];
  });
  std::vector<std::uint64_t> occurrence(representatives.size(), 0);
  const double inv_j = 1.0 / static_cast<double>(mode.samples);
  for (std::size_t r : order) {
    const std::size_t g = group_of[r];
    const std::uint64_t stream = derive_seed(seed, {row_hash[g], occurrence[g]++});
    if (weights[r] == 0.0) continue;
    const auto& p = predictives[r];
    double inner = 0.0;
    for (std::size_t v : sample_pseudo_answers(p, mode.samples, stream)) {
      if (!(mix[v] > 0.0)) throw NumericalError("sampled answer has zero mixture probability");
      inner += std::log(p[v]) - std::log(mix[v]);
    }
    ig += weights[r] / total * inner * inv_j;
  }
  return ig;
}

/// IG(Z; W_a | W_known) for one unanswered candidate over the particle ensemble.
inline IGEstimate information_gain(const ParticleState& state, const Observation& obs, IgMode mode,
                                   std::uint64_t seed, const AnswerOverlay& known = {}) {
  IGEstimate est;
  est.object_id = obs.object_id;
  est.mode = mode;
  est.per_particle_predictives.reserve(state.size());
  for (std::size_t r = 0; r < state.size(); ++r)
    est.per_particle_predictives.push_back(predictive_answer_distribution(state, r, obs, known));
  est.value = information_gain_from_predictives(state.weights(), est.per_particle_predictives, mode,
                                                derive_seed(seed, {obs.object_id}));
  return est;
}

/// Selection rule for the next question.
struct Strategy {
  enum class Kind { IGMax, IGMin, Random };
  Kind kind = Kind::IGMax;
  std::optional<std::uint64_t> seed;  ///< present iff Random

  static Strategy ig_max() { return {Kind::IGMax, std::nullopt}; }
  static Strategy ig_min() { return {Kind::IGMin, std::nullopt}; }
  static Strategy random(std::uint64_t s) { return {Kind::Random, s}; }
};

struct IgConfig {
  IgMode mode = IgMode::sampled(10);
  std::uint64_t seed = 0;
};

struct Selection {
  std::size_t object_id = 0;
  std::vector<IGEstimate> estimates;  ///< one per candidate, ascending object id

  const IGEstimate* estimate_for(std::size_t id) const {
    for (const auto& e : estimates)
      if (e.object_id == id) return &e;
    return nullptr;
  }
};

/// Scores every candidate and picks one. Ties go to the lowest object id.
/// Random draws uniformly with its own seed but still reports the IG values.
inline Selection select_next(const ParticleState& state, std::vector<std::size_t> candidates, const Strategy& strategy,
                             const IgConfig& config, const AnswerOverlay& known = {}) {
  if (candidates.empty()) throw NoCandidatesError();
  if ((strategy.kind == Strategy::Kind::Random) != strategy.seed.has_value())
    throw InputError("a strategy carries a seed exactly when it is Random");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  Selection sel;
  for (std::size_t id : candidates) {
    auto n = state.index_of(id);
    if (!n) throw InputError("candidate " + std::to_string(id) + " is not an observed object");
    sel.estimates.push_back(information_gain(state, state.processed()[*n], config.mode, config.seed, known));
  }

  switch (strategy.kind) {
    case Strategy::Kind::IGMax: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < sel.estimates.size(); ++i)
        if (sel.estimates[i].value > sel.estimates[best].value) best = i;
      sel.object_id = sel.estimates[best].object_id;
      break;
    }
    case Strategy::Kind::IGMin: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < sel.estimates.size(); ++i)
        if (sel.estimates[i].value < sel.estimates[best].value) best = i;
      sel.object_id = sel.estimates[best].object_id;
      break;
    }
    case Strategy::Kind::Random: {
      Rng rng(derive_seed(*strategy.seed, {tag(StreamTag::kSelection)}));
      sel.object_id = candidates[rng.uniform_index(candidates.size())];
      break;
    }
  }
  return sel;
}

}  // namespace actowl
