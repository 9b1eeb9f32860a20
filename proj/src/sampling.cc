#include "convmix/sampling.h"

#include <cmath>
#include <string>

namespace convmix {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_truncation(double beta, double epsilon) {
  if (!(beta > 0.0)) throw DataError("truncated exponential needs beta > 0");
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw DataError("truncated exponential needs 0 < epsilon < 0.5");
  }
}

}  // namespace

std::size_t Rng::index(std::size_t n) {
  auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return i < n ? i : n - 1;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index));
}

double exponential_from_uniform(double beta, double u) {
  if (!(beta > 0.0)) throw DataError("exponential needs beta > 0");
  return -beta * std::log1p(-u);
}

double sample_exponential(double beta, Rng& rng) {
  return exponential_from_uniform(beta, rng.uniform());
}

double truncated_exponential_from_uniform(double beta, double epsilon, double u) {
  check_truncation(beta, epsilon);
  // Inverse CDF restricted to [F(eps), F(1 - eps)], shifted to start at eps:
  //   rho = eps - beta * log(1 - u * (1 - exp(-w / beta))),  w = 1 - 2 eps.
  const double width = 1.0 - 2.0 * epsilon;
  const double mass = -std::expm1(-width / beta);
  double rho = epsilon - beta * std::log1p(-u * mass);
  if (rho < epsilon) rho = epsilon;
  if (rho > 1.0 - epsilon) rho = 1.0 - epsilon;
  return rho;
}

double sample_truncated_exponential(double beta, double epsilon, Rng& rng) {
  return truncated_exponential_from_uniform(beta, epsilon, rng.uniform());
}

double truncated_exponential_mean(double beta, double epsilon) {
  check_truncation(beta, epsilon);
  const double width = 1.0 - 2.0 * epsilon;
  const double t = width / beta;
  if (t < 1e-4) {
    // beta -> infinity: series of beta - width / expm1(t) around t = 0.
    return epsilon + width / 2.0 - width * t / 12.0;
  }
  if (t > 700.0) return epsilon + beta;
  return epsilon + beta - width / std::expm1(t);
}

std::size_t categorical_from_uniform(std::span<const double> probs, double u) {
  if (probs.empty()) throw DataError("categorical needs a non-empty probability vector");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw DataError("categorical probabilities must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DataError("categorical probabilities sum to " + std::to_string(sum));
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) last_positive = i;
    cum += probs[i];
    if (cum > u && probs[i] > 0.0) return i;
  }
  // Rounding left the cumulative sum just below u.
  return last_positive;
}

std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
  return categorical_from_uniform(probs, rng.uniform());
}

TransitionType next_transition(SelectionMode mode, std::optional<TransitionType> prev,
                               const SimParams& params, Rng& rng) {
  if (mode == SelectionMode::kRandom || !prev) {
    return kTransitionOrder[sample_categorical(params.p_ind, rng)];
  }
  TypeVector column{};
  for (std::size_t next = 0; next < kNumTransitionTypes; ++next) {
    column[next] = params.p_markov[next][index_of(*prev)];
  }
  return kTransitionOrder[sample_categorical(column, rng)];
}

}  // namespace convmix
