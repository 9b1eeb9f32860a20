#include "convmix/simulator.h"

#include <algorithm>
#include <cmath>
#include <utility>

namespace convmix {

namespace {

void require_valid(const SimParams& params) {
  auto violations = validate_params(params);
  if (violations.empty()) return;
  std::string msg = "invalid simulation parameters:";
  for (const auto& v : violations) msg += " " + v + ";";
  throw DataError(msg);
}

// Partial Fisher-Yates over the (sorted) speaker list.
std::vector<std::string> sample_speakers(const UtterancePool& pool, int n, Rng& rng) {
  if (n < 1) throw DataError("need at least one speaker per mixture");
  if (pool.size() < static_cast<std::size_t>(n)) {
    throw DataError("pool has " + std::to_string(pool.size()) + " speakers, mixture needs " +
                    std::to_string(n));
  }
  std::vector<std::string> all;
  all.reserve(pool.size());
  for (const auto& [spk, utts] : pool) all.push_back(spk);
  for (int i = 0; i < n; ++i) {
    std::size_t j = i + rng.index(all.size() - i);
    std::swap(all[i], all[j]);
  }
  all.resize(n);
  return all;
}

class RemainingUtterances {
 public:
  RemainingUtterances(const UtterancePool& pool, const std::vector<std::string>& speakers) {
    for (const auto& s : speakers) left_[s] = pool.at(s);
  }

  std::vector<UtteranceRecord>& of(const std::string& speaker) {
    auto& v = left_.at(speaker);
    if (v.empty()) throw DataError("speaker " + speaker + " has no utterances left in this mixture");
    return v;
  }

  UtteranceRecord take(const std::string& speaker, std::size_t i) {
    auto& v = left_.at(speaker);
    UtteranceRecord u = std::move(v[i]);
    v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
    return u;
  }

  UtteranceRecord take_random(const std::string& speaker, Rng& rng) {
    auto& v = of(speaker);
    return take(speaker, rng.index(v.size()));
  }

 private:
  std::map<std::string, std::vector<UtteranceRecord>> left_;
};

std::string other_speaker(const std::vector<std::string>& speakers, const std::string& current,
                          Rng& rng) {
  std::vector<const std::string*> others;
  for (const auto& s : speakers) {
    if (s != current) others.push_back(&s);
  }
  return *others[rng.index(others.size())];
}

}  // namespace

SimState SimState::start(const PlacedUtterance& first) {
  SimState s;
  s.timeline_end = first.end();
  s.u_prev = 0;
  s.u_prev_onset = first.onset;
  s.u_prev_end = first.end();
  s.free_start = first.onset;
  s.last_speaker = first.speaker;
  s.placed = 1;
  return s;
}

TransitionStep place_transition(const SimState& state, TransitionType type,
                                const UtteranceRecord& u_next, const std::string& next_speaker,
                                const TransitionDraw& draw) {
  const bool same = next_speaker == state.last_speaker;
  if (type == TransitionType::kTurnHold && !same) {
    throw DataError("turn-hold must keep speaker " + state.last_speaker);
  }
  if (type != TransitionType::kTurnHold && same) {
    throw DataError(std::string(to_string(type)) + " needs a speaker other than " +
                    state.last_speaker);
  }

  TransitionStep step;
  step.state = state;
  step.placed = {u_next.id, next_speaker, 0.0, u_next.duration, type};
  SimState& next = step.state;
  const double dur = u_next.duration;

  switch (type) {
    case TransitionType::kTurnHold:
    case TransitionType::kTurnSwitch:
    case TransitionType::kInterruption: {
      double onset;
      if (type == TransitionType::kInterruption) {
        step.delta = draw.amount * std::min(state.free_span(), dur);
        onset = state.timeline_end - step.delta;
      } else {
        step.delta = draw.amount;
        onset = state.timeline_end + step.delta;
      }
      step.placed.onset = onset;
      next.u_prev = state.placed;
      next.u_prev_onset = onset;
      next.u_prev_end = onset + dur;
      // The head of an interrupting utterance is overlapped up to the old end.
      next.free_start = std::max(state.u_prev_end, onset);
      next.timeline_end = std::max(state.timeline_end, next.u_prev_end);
      next.last_speaker = next_speaker;
      break;
    }
    case TransitionType::kBackchannel: {
      const double free = state.free_span();
      if (dur > free) throw DataError("backchannel longer than free span");
      step.delta = draw.amount * std::min(free, dur);
      const double onset = state.free_start + draw.position * (free - dur);
      step.placed.onset = onset;
      next.free_start = std::min(onset + dur, state.u_prev_end);
      break;
    }
  }
  next.last_type = type;
  next.placed = state.placed + 1;
  return step;
}

TransitionStep apply_transition(const SimState& state, TransitionType type,
                                const UtteranceRecord& u_next, const std::string& next_speaker,
                                Rng& rng, const SimParams& params) {
  TransitionDraw draw;
  const double beta = params.beta[index_of(type)];
  switch (type) {
    case TransitionType::kTurnHold:
    case TransitionType::kTurnSwitch:
      draw.amount = sample_exponential(beta, rng);
      break;
    case TransitionType::kInterruption:
      draw.amount = sample_truncated_exponential(beta, params.epsilon, rng);
      break;
    case TransitionType::kBackchannel:
      draw.amount = sample_truncated_exponential(beta, params.epsilon, rng);
      draw.position = rng.uniform();
      break;
  }
  return place_transition(state, type, u_next, next_speaker, draw);
}

MixturePlan simulate_plan(const UtterancePool& pool, const SimParams& params, std::uint64_t seed,
                          std::string mixture_id) {
  require_valid(params);
  Rng rng(seed);
  const auto speakers = sample_speakers(pool, params.n_spk, rng);
  RemainingUtterances remaining(pool, speakers);

  MixturePlan plan;
  plan.mixture_id = std::move(mixture_id);
  plan.params = params;
  plan.seed = seed;
  plan.placements.reserve(params.n_utt);

  const std::string& first_speaker = speakers[rng.index(speakers.size())];
  UtteranceRecord first = remaining.take_random(first_speaker, rng);
  plan.placements.push_back({first.id, first_speaker, 0.0, first.duration, std::nullopt});
  SimState state = SimState::start(plan.placements.front());

  for (int t = 1; t < params.n_utt; ++t) {
    TransitionType type = TransitionType::kTurnHold;
    if (speakers.size() > 1) type = next_transition(params.mode, state.last_type, params, rng);

    const std::string speaker = type == TransitionType::kTurnHold
                                    ? state.last_speaker
                                    : other_speaker(speakers, state.last_speaker, rng);

    UtteranceRecord u;
    if (type == TransitionType::kBackchannel) {
      // Try distinct candidates; keep the first that fits inside u'_prev.
      auto& left = remaining.of(speaker);
      std::vector<std::size_t> order(left.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      const std::size_t tries = std::min<std::size_t>(kBackchannelRetries, order.size());
      std::optional<std::size_t> chosen;
      std::size_t first_candidate = 0;
      for (std::size_t k = 0; k < tries; ++k) {
        std::size_t j = k + rng.index(order.size() - k);
        std::swap(order[k], order[j]);
        if (k == 0) first_candidate = order[0];
        if (left[order[k]].duration <= state.free_span()) {
          chosen = order[k];
          break;
        }
      }
      if (chosen) {
        u = remaining.take(speaker, *chosen);
      } else {
        type = TransitionType::kInterruption;
        u = remaining.take(speaker, first_candidate);
      }
    } else {
      u = remaining.take_random(speaker, rng);
    }

    TransitionStep step = apply_transition(state, type, u, speaker, rng, params);
    plan.placements.push_back(std::move(step.placed));
    state = std::move(step.state);
  }
  return plan;
}

MixturePlan concat_and_sum_plan(const SpeakerScripts& scripts, double beta, std::uint64_t seed,
                                std::string mixture_id) {
  if (!(beta > 0.0)) throw DataError("concat-and-sum needs beta > 0");
  if (scripts.empty()) throw DataError("concat-and-sum needs at least one speaker");
  Rng rng(seed);
  MixturePlan plan;
  plan.mixture_id = std::move(mixture_id);
  plan.seed = seed;
  for (const auto& [speaker, utts] : scripts) {
    if (utts.empty()) throw DataError("speaker " + speaker + " has an empty utterance list");
    double t = 0.0;
    for (std::size_t i = 0; i < utts.size(); ++i) {
      if (i > 0) t += sample_exponential(beta, rng);
      plan.placements.push_back({utts[i].id, speaker, t, utts[i].duration, std::nullopt});
      t += utts[i].duration;
    }
  }
  return plan;
}

SpeakerScripts draw_concat_scripts(const UtterancePool& pool, int n_spk, int n_utt, Rng& rng) {
  if (n_utt < n_spk) throw DataError("concat-and-sum needs at least one utterance per speaker");
  const auto speakers = sample_speakers(pool, n_spk, rng);
  RemainingUtterances remaining(pool, speakers);
  SpeakerScripts scripts;
  for (const auto& s : speakers) scripts.emplace_back(s, std::vector<UtteranceRecord>{});
  for (int k = 0; k < n_utt; ++k) {
    auto& [speaker, list] = scripts[k % n_spk];
    list.push_back(remaining.take_random(speaker, rng));
  }
  return scripts;
}

}  // namespace convmix
