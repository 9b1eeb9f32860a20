// Speaker-activity timelines, utterance inventories and simulation knobs.
//
// Everything here is a plain value type in continuous time (seconds).

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace convmix {

// Raised for invalid inputs at module boundaries (bad files, violated
// preconditions). The CLI maps it to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TimedSegment {
  std::string speaker;
  double onset = 0.0;
  double duration = 0.0;

  double end() const { return onset + duration; }
  bool operator==(const TimedSegment&) const = default;
};

// Orders by onset, then speaker, then duration.
bool segment_less(const TimedSegment& a, const TimedSegment& b);

struct Annotation {
  std::string recording_id;
  std::vector<TimedSegment> segments;  // sorted with segment_less
  double extent = 0.0;

  std::vector<std::string> speakers() const;
  bool operator==(const Annotation&) const = default;
};

// Sorts the segments, checks onset >= 0, duration > 0 and end <= extent.
// If extent is negative it is set to the latest segment end.
Annotation make_annotation(std::string recording_id,
                           std::vector<TimedSegment> segments,
                           double extent = -1.0);

struct UtteranceRecord {
  std::string id;
  std::string speaker;
  double duration = 0.0;
  std::string audio;  // path of the PCM16 WAV holding this utterance

  bool operator==(const UtteranceRecord&) const = default;
};

using UtterancePool = std::map<std::string, std::vector<UtteranceRecord>>;

// Checks that every speaker has at least one utterance, durations are
// positive and utterance ids are unique across the pool.
void check_pool(const UtterancePool& pool);

enum class TransitionType : int { kTurnHold = 0, kTurnSwitch = 1, kInterruption = 2, kBackchannel = 3 };

inline constexpr std::size_t kNumTransitionTypes = 4;
inline constexpr std::array<TransitionType, kNumTransitionTypes> kTransitionOrder = {
    TransitionType::kTurnHold, TransitionType::kTurnSwitch,
    TransitionType::kInterruption, TransitionType::kBackchannel};

inline std::size_t index_of(TransitionType t) { return static_cast<std::size_t>(t); }
std::string_view to_string(TransitionType t);  // "TH", "TS", "IR", "BC"
std::optional<TransitionType> parse_transition(std::string_view s);

enum class SelectionMode { kRandom, kMarkov };
std::string_view to_string(SelectionMode m);
std::optional<SelectionMode> parse_selection(std::string_view s);

using TypeVector = std::array<double, kNumTransitionTypes>;
// markov[next][current]: every column is a conditional distribution.
using TypeMatrix = std::array<TypeVector, kNumTransitionTypes>;

inline constexpr double kDefaultEpsilon = 0.03;

struct SimParams {
  // beta[TH], beta[TS] are mean silences in seconds; beta[IR], beta[BC] are
  // the dimensionless rate of the truncated-exponential overlap ratio.
  TypeVector beta{};
  double epsilon = kDefaultEpsilon;
  SelectionMode mode = SelectionMode::kRandom;
  TypeVector p_ind{};
  TypeMatrix p_markov{};
  int n_spk = 2;
  int n_utt = 1;
  std::vector<double> snr_choices;

  bool operator==(const SimParams&) const = default;
};

// The values extracted from the first CALLHOME adaptation set.
SimParams callhome_params();

// Every violated invariant, one human-readable message each. Empty means ok.
std::vector<std::string> validate_params(const SimParams& p);

struct PlacedUtterance {
  std::string id;
  std::string speaker;
  double onset = 0.0;
  double duration = 0.0;
  // How this utterance was attached to the conversation; empty for the
  // first utterance and for concat-and-sum placements.
  std::optional<TransitionType> transition;

  double end() const { return onset + duration; }
  bool operator==(const PlacedUtterance&) const = default;
};

struct MixturePlan {
  std::string mixture_id;
  std::vector<PlacedUtterance> placements;  // in placement order
  SimParams params;
  std::uint64_t seed = 0;

  double extent() const;
  bool operator==(const MixturePlan&) const = default;
};

Annotation annotation_from_plan(const MixturePlan& plan);

struct CountInterval {
  double start = 0.0;
  double end = 0.0;
  int count = 0;

  double length() const { return end - start; }
  bool operator==(const CountInterval&) const = default;
};

// Partitions [0, extent] into maximal intervals of constant number of active
// speakers. A speaker overlapping itself counts once.
std::vector<CountInterval> speaker_count_intervals(const Annotation& a);

}  // namespace convmix
