// Label-level conversation construction.
//
// simulate_plan arranges utterances one at a time, attaching each to the
// conversation so far through one of four transitions:
//
//   TH  same speaker continues after an exponential pause (mean beta_TH)
//   TS  another speaker starts after an exponential gap (mean beta_TS)
//   IR  another speaker starts before u_prev ends; overlap
//       delta = rho * min(|u'_prev|, |u_next|), rho ~ TruncExp(beta_IR, eps)
//   BC  another speaker utters something entirely inside the free tail of
//       u_prev, starting uniformly at random; u_prev is kept
//
// u_prev is the utterance with the latest end so far and u'_prev its tail
// that no earlier utterance overlaps. concat_and_sum_plan is the baseline
// that chains each speaker's utterances independently from time zero.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "convmix/sampling.h"
#include "convmix/timeline.h"

namespace convmix {

struct SimState {
  double timeline_end = 0.0;
  std::size_t u_prev = 0;  // index into the placement list
  double u_prev_onset = 0.0;
  double u_prev_end = 0.0;
  double free_start = 0.0;  // start of u'_prev
  // Speaker of u_prev. TH keeps this speaker; TS/IR/BC pick another one.
  std::string last_speaker;
  std::optional<TransitionType> last_type;
  std::size_t placed = 0;

  double free_span() const { return u_prev_end - free_start; }

  static SimState start(const PlacedUtterance& first);
};

// Random variates consumed by one transition. `amount` is the silence delta
// for TH/TS and the overlap ratio rho for IR/BC; `position` is the uniform
// variate choosing the backchannel start.
struct TransitionDraw {
  double amount = 0.0;
  double position = 0.0;
};

struct TransitionStep {
  SimState state;
  PlacedUtterance placed;
  double delta = 0.0;  // silence (TH/TS) or overlap (IR/BC) duration
};

// Deterministic core of a transition: places u_next given the drawn values.
TransitionStep place_transition(const SimState& state, TransitionType type,
                                const UtteranceRecord& u_next, const std::string& next_speaker,
                                const TransitionDraw& draw);

// Draws the variates for `type` from rng and places u_next.
TransitionStep apply_transition(const SimState& state, TransitionType type,
                                const UtteranceRecord& u_next, const std::string& next_speaker,
                                Rng& rng, const SimParams& params);

// Candidate utterances tried before an infeasible backchannel becomes an
// interruption.
inline constexpr int kBackchannelRetries = 10;

MixturePlan simulate_plan(const UtterancePool& pool, const SimParams& params,
                          std::uint64_t seed, std::string mixture_id = "mix");

// Ordered speakers with their ordered utterance lists.
using SpeakerScripts = std::vector<std::pair<std::string, std::vector<UtteranceRecord>>>;

MixturePlan concat_and_sum_plan(const SpeakerScripts& scripts, double beta, std::uint64_t seed,
                                std::string mixture_id = "mix");

// Picks n_spk speakers and n_utt utterances (split round-robin over the
// speakers, without replacement) for one concat-and-sum mixture.
SpeakerScripts draw_concat_scripts(const UtterancePool& pool, int n_spk, int n_utt, Rng& rng);

}  // namespace convmix
