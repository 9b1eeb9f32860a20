// Seeded random sampling primitives.
//
// All continuous draws go through the inverse CDF of a single uniform
// variate, so every sampler also has a pure "from_uniform" form that tests can
// drive directly.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>

#include "convmix/timeline.h"

namespace convmix {

// Stream contract (version 1): std::mt19937_64 seeded with the 64-bit seed;
// uniform() takes the top 53 bits of one engine output, giving a value in
// [0, 1). mt19937_64 output is fixed by the C++ standard, so the stream is
// identical on every conforming platform.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/u53-v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  Rng(const Rng&) = delete;
  Rng& operator=(const Rng&) = delete;
  Rng(Rng&&) = default;
  Rng& operator=(Rng&&) = default;

 private:
  std::mt19937_64 engine_;
};

// Per-item substream seed: splitmix64 finalizer applied to the base seed
// mixed with the splitmix64 hash of the index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

double exponential_from_uniform(double beta, double u);
double sample_exponential(double beta, Rng& rng);

// Density proportional to exp(-rho / beta) on [epsilon, 1 - epsilon].
double truncated_exponential_from_uniform(double beta, double epsilon, double u);
double sample_truncated_exponential(double beta, double epsilon, Rng& rng);

// Analytic mean of the truncated exponential above.
double truncated_exponential_mean(double beta, double epsilon);

// Smallest i whose cumulative probability exceeds u.
std::size_t categorical_from_uniform(std::span<const double> probs, double u);
std::size_t sample_categorical(std::span<const double> probs, Rng& rng);

// Random mode ignores prev; Markov mode draws from column prev of p_markov,
// or from p_ind when there is no previous transition yet.
TransitionType next_transition(SelectionMode mode, std::optional<TransitionType> prev,
                               const SimParams& params, Rng& rng);

}  // namespace convmix
