// Turn-taking statistics from annotated conversations.
//
// classify_transitions replays an annotation through the same u_prev /
// u'_prev bookkeeping the simulator uses, labelling every segment after the
// first as TH, TS, IR or BC. estimate_params turns the labelled observations
// into a parameter set the simulator can consume.

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convmix/timeline.h"

namespace convmix {

struct TransitionObservation {
  TransitionType type = TransitionType::kTurnHold;
  // Silence in seconds for TH/TS; overlap ratio in (0, 1] for IR/BC.
  double measurement = 0.0;
};

struct Classification {
  std::vector<TransitionObservation> observations;
  std::size_t merged_segments = 0;  // same-speaker overlaps folded together
};

Classification classify_transitions(const Annotation& a);

// Inverts truncated_exponential_mean for beta. Means at or beyond the flat
// limit (midpoint of the support) saturate at kMaxRate.
inline constexpr double kMinRate = 1e-6;
inline constexpr double kMaxRate = 1e6;
double invert_truncated_mean(double mean, double epsilon);

struct EstimateOptions {
  SelectionMode mode = SelectionMode::kMarkov;
  double epsilon = kDefaultEpsilon;
  // Replace unsupported P_Markov columns by a uniform column instead of
  // failing.
  bool uniform_fallback = false;
};

struct Estimate {
  std::array<std::optional<double>, kNumTransitionTypes> beta;
  std::array<std::optional<double>, kNumTransitionTypes> beta_stderr;
  std::array<bool, kNumTransitionTypes> beta_saturated{};
  double epsilon = kDefaultEpsilon;
  SelectionMode mode = SelectionMode::kMarkov;
  TypeVector p_ind{};
  std::array<long, kNumTransitionTypes> counts{};
  // bigrams[next][current]
  std::array<std::array<long, kNumTransitionTypes>, kNumTransitionTypes> bigrams{};
  TypeMatrix p_markov{};
  std::array<bool, kNumTransitionTypes> column_fallback{};
  int n_spk = 0;
  int n_utt = 0;
  std::size_t recordings = 0;
  std::size_t merged_segments = 0;

  bool complete() const;
  // Requires complete(); p_markov falls back to the independent chain
  // (every column = p_ind) in random mode.
  SimParams to_params(std::vector<double> snr_choices) const;
};

Estimate estimate_params(std::span<const Annotation> annotations, const EstimateOptions& opts = {});

}  // namespace convmix
