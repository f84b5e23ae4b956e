#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "actowl/core/errors.hpp"
#include "actowl/core/predictive.hpp"
#include "actowl/core/random.hpp"
#include "actowl/core/sufficient_stats.hpp"
#include "actowl/core/types.hpp"

namespace actowl {

/// One hypothesis Z^[r]: the sampled assignment of every processed object plus
/// the collapsed statistics those assignments imply.
struct Particle {
  std::vector<Assignment> assignments;  ///< parallel to ParticleState::processed()
  SufficientStats stats;
  double log_weight = 0.0;  ///< accumulated since the last resampling
};

struct FilterOptions {
  /// Resample when ESS drops below this fraction of R.
  double resample_fraction = 0.5;
};

inline double effective_sample_size(std::span<const double> weights) {
  double s = 0.0;
  for (double w : weights) s += w * w;
  if (!(s > 0.0)) throw NumericalError("effective sample size of an all-zero weight vector");
  return 1.0 / s;
}

/// Ancestor indices from systematic resampling. One uniform offset, R evenly
/// spaced pointers into the cumulative weights.
inline std::vector<std::size_t> systematic_ancestors(std::span<const double> weights, std::size_t count, Rng& rng) {
  if (count == 0) throw InputError("resampling to zero particles");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) throw NumericalError("resampling weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw NumericalError("resampling from all-zero weights");

  std::vector<std::size_t> ancestors(count);
  const double step = 1.0 / static_cast<double>(count);
  const double offset = rng.uniform() * step;
  std::size_t i = 0;
  double cumulative = weights[0] / total;
  for (std::size_t j = 0; j < count; ++j) {
    const double u = offset + static_cast<double>(j) * step;
    while (u >= cumulative && i + 1 < weights.size()) {
      ++i;
      cumulative += weights[i] / total;
    }
    ancestors[j] = i;
  }
  return ancestors;
}

/// The particle ensemble after a sequential pass over the observations.
class ParticleState {
 public:
  ParticleState(Hyperparameters h, AnswerVocabulary vocab, std::size_t attribute_dim, std::uint64_t seed)
      : h_(std::move(h)), vocab_(std::move(vocab)), attribute_dim_(attribute_dim), seed_(seed) {}

  const Hyperparameters& hyperparameters() const { return h_; }
  const AnswerVocabulary& vocabulary() const { return vocab_; }
  std::size_t attribute_dim() const { return attribute_dim_; }
  std::uint64_t seed() const { return seed_; }

  std::size_t size() const { return particles_.size(); }
  const std::vector<Particle>& particles() const { return particles_; }
  const std::vector<double>& weights() const { return weights_; }

  /// Observations in processing order, with the answer overlay applied.
  const std::vector<Observation>& processed() const { return processed_; }

  /// Position of object_id in processed(), or nullopt.
  std::optional<std::size_t> index_of(std::size_t object_id) const {
    auto it = index_.find(object_id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  SufficientStats empty_stats() const { return {h_.L, h_.K, attribute_dim_, vocab_.size()}; }

  /// Folds particle r's assignment list into fresh statistics.
  SufficientStats rebuild_stats(std::size_t r) const {
    auto s = empty_stats();
    const auto& p = particles_.at(r);
    for (std::size_t n = 0; n < p.assignments.size(); ++n)
      s.add(processed_[n], vocab_.index_of(processed_[n].answer), p.assignments[n]);
    return s;
  }

  /// Builds a state directly from particles; weights are normalized from the
  /// particles' log weights. Intended for constructing states by hand.
  static ParticleState from_particles(Hyperparameters h, AnswerVocabulary vocab, std::size_t attribute_dim,
                                      std::vector<Observation> processed, std::vector<Particle> particles,
                                      std::uint64_t seed = 0) {
    if (particles.empty()) throw InputError("a particle state needs at least one particle");
    ParticleState s(std::move(h), std::move(vocab), attribute_dim, seed);
    s.set_processed(std::move(processed));
    for (const auto& p : particles)
      if (p.assignments.size() != s.processed_.size()) throw InputError("particle does not cover every observation");
    s.particles_ = std::move(particles);
    s.normalize();
    return s;
  }

 private:
  friend ParticleState update_model(const AnswerOverlay&, std::span<const Observation>, const Hyperparameters&,
                                    const AnswerVocabulary&, std::size_t, std::uint64_t, const FilterOptions&);
  friend ParticleState resample(const ParticleState&, std::uint64_t);

  void set_processed(std::vector<Observation> obs) {
    processed_ = std::move(obs);
    index_.clear();
    for (std::size_t n = 0; n < processed_.size(); ++n)
      if (!index_.emplace(processed_[n].object_id, n).second) throw InputError("duplicate object id in observations");
  }

  void normalize() {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& p : particles_) m = std::max(m, p.log_weight);
    if (!std::isfinite(m)) throw NumericalError("every particle has zero weight");
    weights_.resize(particles_.size());
    double total = 0.0;
    for (std::size_t r = 0; r < particles_.size(); ++r) total += (weights_[r] = std::exp(particles_[r].log_weight - m));
    for (double& w : weights_) w /= total;
  }

  void resample_in_place(Rng& rng) {
    const auto ancestors = systematic_ancestors(weights_, particles_.size(), rng);
    std::vector<Particle> next;
    next.reserve(particles_.size());
    for (std::size_t a : ancestors) {
      next.push_back(particles_[a]);
      next.back().log_weight = 0.0;
    }
    particles_ = std::move(next);
    weights_.assign(particles_.size(), 1.0 / static_cast<double>(particles_.size()));
  }

  Hyperparameters h_;
  AnswerVocabulary vocab_;
  std::size_t attribute_dim_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<Particle> particles_;
  std::vector<double> weights_;
  std::vector<Observation> processed_;
  std::unordered_map<std::size_t, std::size_t> index_;
};

/// Full sequential RBPF pass over `observations` in order, with `answers`
/// overlaid on the observations' own answers. Each assignment is drawn from
/// the collapsed conditional (the locally optimal proposal) and the particle's
/// log weight accumulates that conditional's normalizer. Deterministic in seed.
inline ParticleState update_model(const AnswerOverlay& answers, std::span<const Observation> observations,
                                  const Hyperparameters& h, const AnswerVocabulary& vocab, std::size_t particles,
                                  std::uint64_t seed, const FilterOptions& options = {}) {
  if (observations.empty()) throw InputError("update_model needs at least one observation");
  if (particles == 0) throw InputError("update_model needs at least one particle");
  h.validate();

  std::vector<Observation> processed(observations.begin(), observations.end());
  const std::size_t dim = processed.front().attributes.dim();
  for (const auto& o : processed)
    if (o.attributes.dim() != dim) throw InputError("observations disagree on attribute dimension");

  ParticleState state(h, vocab, dim, seed);
  state.set_processed(std::move(processed));
  for (const auto& [id, label] : answers) {
    auto n = state.index_of(id);
    if (!n) throw InputError("answer given for object " + std::to_string(id) + " which is not observed");
    state.processed_[*n].answer = label;
  }

  std::vector<std::optional<std::size_t>> encoded;
  encoded.reserve(state.processed_.size());
  for (const auto& o : state.processed_) encoded.push_back(vocab.index_of(o.answer));

  state.particles_.assign(particles, Particle{{}, state.empty_stats(), 0.0});
  for (auto& p : state.particles_) p.assignments.reserve(state.processed_.size());
  state.weights_.assign(particles, 1.0 / static_cast<double>(particles));

  const double threshold = options.resample_fraction * static_cast<double>(particles);
  for (std::size_t n = 0; n < state.processed_.size(); ++n) {
    const auto& obs = state.processed_[n];
    for (std::size_t r = 0; r < particles; ++r) {
      auto& p = state.particles_[r];
      const auto table = assignment_posterior(p.stats, h, obs, encoded[n]);
      Rng rng(derive_seed(seed, {tag(StreamTag::kAssignment), r, n}));
      const auto a = table.assignment_of(rng.categorical(table.prob));
      p.stats.add(obs, encoded[n], a);
      p.assignments.push_back(a);
      p.log_weight += table.log_marginal;
    }
    state.normalize();
    if (effective_sample_size(state.weights_) < threshold) {
      Rng rng(derive_seed(seed, {tag(StreamTag::kResample), n}));
      state.resample_in_place(rng);
    }
  }
  return state;
}

/// Systematic resampling of a whole state; every output weight is 1/R.
inline ParticleState resample(const ParticleState& state, std::uint64_t seed) {
  ParticleState out = state;
  Rng rng(seed);
  out.resample_in_place(rng);
  return out;
}

/// Concept labels C_{1:N} (in processing order) of the highest-weight
/// particle; ties go to the lowest particle index.
inline std::vector<std::size_t> map_assignments(const ParticleState& state) {
  if (state.size() == 0) throw PreconditionError("map_assignments on an empty state");
  std::size_t best = 0;
  for (std::size_t r = 1; r < state.size(); ++r)
    if (state.weights()[r] > state.weights()[best]) best = r;
  std::vector<std::size_t> labels;
  labels.reserve(state.particles()[best].assignments.size());
  for (const auto& a : state.particles()[best].assignments) labels.push_back(a.owner_concept);
  return labels;
}

}  // namespace actowl
