#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "actowl/active/information_gain.hpp"
#include "unit/helpers.hpp"

using namespace actowl;
using testing_support::obs;
using testing_support::onehot;

namespace {

const double kLn2 = std::numbers::ln2;

/// Random particle state over a small random scene; a few objects answered.
ParticleState fuzzed_state(std::uint64_t seed, std::size_t R = 12) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> pos(-2.0, 2.0), lw(-3.0, 0.0);
  Hyperparameters h;
  h.L = 3;
  h.K = 3;
  AnswerVocabulary v({"anna", "ben"});
  std::vector<Observation> o;
  for (std::size_t n = 0; n < 6; ++n) {
    AnswerLabel a;
    if (n < 3) a = n == 2 ? AnswerLabel::shared() : v.label_at(n);
    o.push_back(obs(n + 1, pos(g), pos(g), onehot(14, g() % 14), a, g() % 3));
  }
  std::vector<Particle> ps;
  for (std::size_t r = 0; r < R; ++r) {
    Particle p;
    p.stats = SufficientStats(3, 3, 14, 3);
    for (std::size_t n = 0; n < o.size(); ++n) {
      p.assignments.push_back({g() % 3, *o[n].fixed_position_component});
      p.stats.add(o[n], v.index_of(o[n].answer), p.assignments.back());
    }
    p.log_weight = lw(g);
    ps.push_back(p);
  }
  return ParticleState::from_particles(h, v, 14, o, ps);
}

}  // namespace

TEST(PredictiveAnswer, EmptyParticleIsUniform) {
  Hyperparameters h;
  std::vector<Observation> o = {obs(1, 0, 0, onehot(21, 0))};
  Particle p;
  p.stats = SufficientStats(4, 4, 21, 4);
  p.assignments = {{0, 0}};
  p.stats.add(o[0], std::nullopt, {0, 0});
  const auto s = ParticleState::from_particles(h, AnswerVocabulary({"a", "b", "c"}), 21, o, {p});
  for (double x : predictive_answer_distribution(s, 0, o[0])) EXPECT_NEAR(x, 0.25, 1e-12);
}

TEST(PredictiveAnswer, SingleConceptComposition) {
  Hyperparameters h;
  h.L = 1;
  h.K = 1;
  AnswerVocabulary v({"a", "b", "c"});
  std::vector<Observation> o;
  Particle p;
  p.stats = SufficientStats(1, 1, 13, 4);
  for (std::size_t n = 0; n < 10; ++n) {
    o.push_back(obs(n + 1, 0.1 * n, 0, onehot(13, 0), AnswerLabel::owner("a")));
    p.assignments.push_back({0, 0});
    p.stats.add(o.back(), 0, {0, 0});
  }
  const auto s = ParticleState::from_particles(h, v, 13, o, {p});
  const auto q = predictive_answer_distribution(s, 0, obs(99, 0.3, 0.1, onehot(13, 0)));
  EXPECT_NEAR(q[0], 10.01 / (10.0 + 4 * 0.01), 1e-12);
}

TEST(PredictiveAnswer, AnsweredCandidateIsPrecondition) {
  auto s = fuzzed_state(1);
  EXPECT_THROW(predictive_answer_distribution(s, 0, s.processed()[0]), PreconditionError);
  EXPECT_THROW(predictive_answer_distribution(s, 0, s.processed()[4], {{5, AnswerLabel::shared()}}),
               PreconditionError);
}

TEST(IgProperty, PredictiveNormalizedOnFuzz) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = fuzzed_state(seed);
    for (std::size_t r = 0; r < s.size(); ++r)
      for (std::size_t n = 3; n < 6; ++n) {
        double t = 0.0;
        for (double x : predictive_answer_distribution(s, r, s.processed()[n])) {
          EXPECT_GE(x, 0.0);
          t += x;
        }
        EXPECT_NEAR(t, 1.0, 1e-12);
      }
  }
}

TEST(PseudoAnswers, DegenerateAlwaysFirst) {
  const std::vector<double> p = {1, 0, 0, 0};
  for (std::size_t v : sample_pseudo_answers(p, 500, 3)) EXPECT_EQ(v, 0u);
}

TEST(PseudoAnswers, UniformFrequencies) {
  const std::vector<double> p(4, 0.25);
  std::vector<double> freq(4, 0.0);
  const std::size_t J = 100000;
  for (std::size_t v : sample_pseudo_answers(p, J, 17)) freq[v] += 1.0 / J;
  for (double f : freq) EXPECT_NEAR(f, 0.25, 0.01);
}

TEST(PseudoAnswers, ArityAndDeterminism) {
  auto s = fuzzed_state(2);
  const auto a = sample_pseudo_answers(s, 0, s.processed()[4], 1, 8);
  EXPECT_EQ(a.size(), 1u);
  EXPECT_EQ(sample_pseudo_answers(s, 1, s.processed()[4], 30, 8), sample_pseudo_answers(s, 1, s.processed()[4], 30, 8));
  EXPECT_THROW(sample_pseudo_answers(std::vector<double>{1.0}, 0, 1), InputError);
}

TEST(InformationGain, OppositeDeterministicParticlesGiveLn2) {
  const std::vector<double> w = {0.5, 0.5};
  const std::vector<std::vector<double>> p = {{1, 0}, {0, 1}};
  EXPECT_NEAR(information_gain_from_predictives(w, p, IgMode::exact(), 0), kLn2, 1e-12);
  for (std::size_t J : {1u, 7u, 200u})
    for (std::uint64_t seed : {0u, 1u, 99u})
      EXPECT_NEAR(information_gain_from_predictives(w, p, IgMode::sampled(J), seed), kLn2, 1e-12);
}

TEST(InformationGain, IdenticalParticlesGiveExactlyZero) {
  const std::vector<double> w = {0.2, 0.3, 0.5};
  const std::vector<std::vector<double>> p(3, {0.1, 0.6, 0.3});
  EXPECT_EQ(information_gain_from_predictives(w, p, IgMode::exact(), 0), 0.0);
  EXPECT_EQ(information_gain_from_predictives(w, p, IgMode::sampled(10), 4), 0.0);
}

TEST(IgProperty, ExactIsNonNegativeOnFuzz) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto s = fuzzed_state(seed);
    for (std::size_t n = 3; n < 6; ++n) EXPECT_GE(information_gain(s, s.processed()[n], IgMode::exact(), 0).value, -1e-12);
  }
}

TEST(IgProperty, SampledConvergesToExact) {
  for (std::uint64_t state_seed = 0; state_seed < 5; ++state_seed) {
    auto s = fuzzed_state(100 + state_seed);
    const auto& o = s.processed()[4];
    const double exact = information_gain(s, o, IgMode::exact(), 0).value;
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) mean += information_gain(s, o, IgMode::sampled(200), seed).value / 50;
    EXPECT_LE(std::abs(mean - exact), 0.05) << "state " << state_seed;
  }
}

TEST(IgProperty, InvariantUnderParticlePermutation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto s = fuzzed_state(seed);
    auto ps = s.particles();
    std::mt19937_64 g(seed);
    std::shuffle(ps.begin(), ps.end(), g);
    auto t = ParticleState::from_particles(s.hyperparameters(), s.vocabulary(), 14, s.processed(), ps);
    for (std::size_t n = 3; n < 6; ++n) {
      EXPECT_NEAR(information_gain(s, s.processed()[n], IgMode::exact(), 0).value,
                  information_gain(t, t.processed()[n], IgMode::exact(), 0).value, 1e-12);
      EXPECT_NEAR(information_gain(s, s.processed()[n], IgMode::sampled(10), 5).value,
                  information_gain(t, t.processed()[n], IgMode::sampled(10), 5).value, 1e-12);
    }
  }
}

TEST(IgProperty, AgreedCandidateIsZeroEvenWhenParticlesDiffer) {
  auto s = fuzzed_state(7);
  const std::vector<std::vector<double>> same(s.size(), {0.2, 0.5, 0.3});
  EXPECT_EQ(information_gain_from_predictives(s.weights(), same, IgMode::exact(), 0), 0.0);
  EXPECT_EQ(information_gain_from_predictives(s.weights(), same, IgMode::sampled(10), 0), 0.0);
}

namespace {

/// Candidate 10 sits at an anna-only desk in both particles, so its answer
/// is all but settled. Candidate 11 sits at the desk where the particles
/// disagree about which concept the unanswered object 3 joined.
ParticleState two_candidate_state() {
  Hyperparameters h;
  h.L = 2;
  h.K = 2;
  h.beta = 1e-6;
  h.lambda = 1e-6;
  h.gamma = 1.0;
  h.w_attribute = 0.0;
  h.w_position = 0.0;
  AnswerVocabulary v({"anna", "ben"});
  std::vector<Observation> o = {obs(1, 0, 0, onehot(13, 0), AnswerLabel::owner("anna"), 0),
                                obs(2, 0, 0, onehot(13, 0), AnswerLabel::owner("ben"), 1),
                                obs(3, 0, 0, onehot(13, 0), {}, 1), obs(10, 0, 0, onehot(13, 0), {}, 0),
                                obs(11, 0, 0, onehot(13, 0), {}, 1)};
  auto make = [&](std::vector<Assignment> as) {
    Particle p;
    p.stats = SufficientStats(2, 2, 13, 3);
    for (std::size_t n = 0; n < o.size(); ++n) p.stats.add(o[n], v.index_of(o[n].answer), as[n]);
    p.assignments = std::move(as);
    return p;
  };
  return ParticleState::from_particles(
      h, v, 13, o,
      {make({{0, 0}, {1, 1}, {1, 1}, {0, 0}, {1, 1}}), make({{0, 0}, {1, 1}, {0, 1}, {0, 0}, {1, 1}})});
}

}  // namespace

TEST(SelectNext, StrategiesOnConstructedCandidates) {
  const auto s = two_candidate_state();
  const IgConfig cfg{IgMode::exact(), 0};
  const auto max = select_next(s, {11, 10}, Strategy::ig_max(), cfg);
  EXPECT_LT(max.estimate_for(10)->value, 1e-5);
  EXPECT_GT(max.estimate_for(11)->value, 0.1);
  EXPECT_EQ(max.object_id, 11u);
  EXPECT_EQ(select_next(s, {10, 11}, Strategy::ig_min(), cfg).object_id, 10u);
  EXPECT_EQ(max.estimates.size(), 2u);
}

TEST(SelectNext, RandomIsReproducibleMember) {
  const auto s = fuzzed_state(3);
  const std::vector<std::size_t> cand = {4, 5, 6};
  std::set<std::size_t> seen;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto a = select_next(s, cand, Strategy::random(seed), {});
    EXPECT_EQ(a.object_id, select_next(s, cand, Strategy::random(seed), {}).object_id);
    EXPECT_TRUE(std::find(cand.begin(), cand.end(), a.object_id) != cand.end());
    seen.insert(a.object_id);
  }
  EXPECT_EQ(seen.size(), 3u);
}

TEST(SelectNext, IdenticalParticlesDegenerateToLowestId) {
  auto s = fuzzed_state(5, 1);
  std::vector<Particle> ps(4, s.particles()[0]);
  auto t = ParticleState::from_particles(s.hyperparameters(), s.vocabulary(), 14, s.processed(), ps);
  const auto sel = select_next(t, {6, 5, 4}, Strategy::ig_max(), {IgMode::sampled(10), 1});
  for (const auto& e : sel.estimates) EXPECT_EQ(e.value, 0.0);
  EXPECT_EQ(sel.object_id, 4u);
}

TEST(SelectNext, Errors) {
  const auto s = fuzzed_state(3);
  EXPECT_THROW(select_next(s, {}, Strategy::ig_max(), {}), NoCandidatesError);
  EXPECT_THROW(select_next(s, {1}, Strategy::ig_max(), {}), PreconditionError);
  EXPECT_THROW(select_next(s, {42}, Strategy::ig_max(), {}), InputError);
  EXPECT_THROW(select_next(s, {4}, Strategy{Strategy::Kind::IGMax, 3}, {}), InputError);
}
