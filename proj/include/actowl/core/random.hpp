#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

#include "actowl/core/errors.hpp"

namespace actowl {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a list of keys into a seed. Used to give every (seed, particle,
/// step) or (seed, object) pair its own independent stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

/// Stream tags so derived seeds from different subsystems never collide.
enum class StreamTag : std::uint64_t {
  kAssignment = 0xA551,
  kResample = 0x5E5A,
  kPseudoAnswer = 0x96A0,
  kSelection = 0x5E1E,
  kPersona = 0x9E50,
};

inline std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

/// mt19937_64 with hand-rolled uniform/categorical draws, so streams are
/// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw InputError("uniform_index over an empty range");
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  /// Inverse-CDF draw from unnormalized non-negative weights.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw NumericalError("categorical draw over zero total mass");
    const double u = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      acc += weights[i];
      last_positive = i;
      if (u < acc) return i;
    }
    return last_positive;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace actowl
