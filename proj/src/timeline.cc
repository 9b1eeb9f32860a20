#include "convmix/timeline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

namespace convmix {

namespace {

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

bool segment_less(const TimedSegment& a, const TimedSegment& b) {
  if (a.onset != b.onset) return a.onset < b.onset;
  if (a.speaker != b.speaker) return a.speaker < b.speaker;
  return a.duration < b.duration;
}

std::vector<std::string> Annotation::speakers() const {
  std::set<std::string> s;
  for (const auto& seg : segments) s.insert(seg.speaker);
  return {s.begin(), s.end()};
}

Annotation make_annotation(std::string recording_id,
                           std::vector<TimedSegment> segments, double extent) {
  double last_end = 0.0;
  for (const auto& s : segments) {
    if (!(s.onset >= 0.0) || !std::isfinite(s.onset)) {
      throw DataError("segment of " + s.speaker + " has invalid onset " + fmt_num(s.onset));
    }
    if (!(s.duration > 0.0) || !std::isfinite(s.end())) {
      throw DataError("segment of " + s.speaker + " has invalid duration " +
                      fmt_num(s.duration));
    }
    last_end = std::max(last_end, s.end());
  }
  if (extent < 0.0) extent = last_end;
  if (last_end > extent) {
    throw DataError("segment ends at " + fmt_num(last_end) + " beyond extent " +
                    fmt_num(extent));
  }
  std::sort(segments.begin(), segments.end(), segment_less);
  return Annotation{std::move(recording_id), std::move(segments), extent};
}

void check_pool(const UtterancePool& pool) {
  std::set<std::string> ids;
  for (const auto& [speaker, utts] : pool) {
    if (utts.empty()) throw DataError("speaker " + speaker + " has no utterances");
    for (const auto& u : utts) {
      if (!(u.duration > 0.0)) throw DataError("utterance " + u.id + " has non-positive duration");
      if (u.speaker != speaker) {
        throw DataError("utterance " + u.id + " filed under " + speaker + " but spoken by " +
                        u.speaker);
      }
      if (!ids.insert(u.id).second) throw DataError("duplicate utterance id " + u.id);
    }
  }
}

std::string_view to_string(TransitionType t) {
  switch (t) {
    case TransitionType::kTurnHold: return "TH";
    case TransitionType::kTurnSwitch: return "TS";
    case TransitionType::kInterruption: return "IR";
    case TransitionType::kBackchannel: return "BC";
  }
  return "?";
}

std::optional<TransitionType> parse_transition(std::string_view s) {
  for (auto t : kTransitionOrder) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::string_view to_string(SelectionMode m) {
  return m == SelectionMode::kMarkov ? "markov" : "random";
}

std::optional<SelectionMode> parse_selection(std::string_view s) {
  if (s == "random") return SelectionMode::kRandom;
  if (s == "markov") return SelectionMode::kMarkov;
  return std::nullopt;
}

SimParams callhome_params() {
  SimParams p;
  p.beta = {0.57, 0.40, 0.10, 0.44};
  p.epsilon = 0.03;
  p.mode = SelectionMode::kMarkov;
  p.p_ind = {0.15, 0.31, 0.44, 0.10};
  p.p_markov = {{{0.26, 0.11, 0.09, 0.31},
                 {0.23, 0.38, 0.29, 0.29},
                 {0.27, 0.45, 0.53, 0.31},
                 {0.24, 0.06, 0.09, 0.09}}};
  p.n_spk = 2;
  p.n_utt = 30;
  p.snr_choices = {5, 10, 15, 20};
  return p;
}

std::vector<std::string> validate_params(const SimParams& p) {
  constexpr double kSumTol = 1e-9;
  std::vector<std::string> out;
  for (auto t : kTransitionOrder) {
    double b = p.beta[index_of(t)];
    if (!(b > 0.0) || !std::isfinite(b)) {
      out.push_back("beta." + std::string(to_string(t)) + " must be positive, got " + fmt_num(b));
    }
  }
  if (!(p.epsilon > 0.0 && p.epsilon < 0.5)) {
    out.push_back("epsilon must lie in (0, 0.5), got " + fmt_num(p.epsilon));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumTransitionTypes; ++i) {
    if (!(p.p_ind[i] >= 0.0)) out.push_back("p_ind entry " + std::to_string(i + 1) + " is negative");
    sum += p.p_ind[i];
  }
  if (std::abs(sum - 1.0) > kSumTol) out.push_back("p_ind sums to " + fmt_num(sum));
  for (std::size_t col = 0; col < kNumTransitionTypes; ++col) {
    double s = 0.0;
    for (std::size_t row = 0; row < kNumTransitionTypes; ++row) {
      if (!(p.p_markov[row][col] >= 0.0)) {
        out.push_back("p_markov entry (" + std::to_string(row + 1) + "," + std::to_string(col + 1) +
                      ") is negative");
      }
      s += p.p_markov[row][col];
    }
    if (std::abs(s - 1.0) > kSumTol) {
      out.push_back("p_markov column " + std::to_string(col + 1) + " sums to " + fmt_num(s));
    }
  }
  if (p.n_spk < 1) out.push_back("n_spk must be at least 1, got " + std::to_string(p.n_spk));
  if (p.n_utt < 1) out.push_back("n_utt must be at least 1, got " + std::to_string(p.n_utt));
  return out;
}

double MixturePlan::extent() const {
  double e = 0.0;
  for (const auto& p : placements) e = std::max(e, p.end());
  return e;
}

Annotation annotation_from_plan(const MixturePlan& plan) {
  if (plan.placements.empty()) throw DataError("empty plan");
  std::vector<TimedSegment> segs;
  segs.reserve(plan.placements.size());
  for (const auto& p : plan.placements) segs.push_back({p.speaker, p.onset, p.duration});
  return make_annotation(plan.mixture_id, std::move(segs), plan.extent());
}

std::vector<CountInterval> speaker_count_intervals(const Annotation& a) {
  // Merge each speaker's own segments so self-overlap counts once.
  std::map<std::string, std::vector<std::pair<double, double>>> by_speaker;
  for (const auto& s : a.segments) by_speaker[s.speaker].emplace_back(s.onset, s.end());

  std::vector<std::pair<double, int>> events;
  for (auto& [spk, spans] : by_speaker) {
    std::sort(spans.begin(), spans.end());
    double cur_start = spans.front().first;
    double cur_end = spans.front().second;
    for (std::size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].first <= cur_end) {
        cur_end = std::max(cur_end, spans[i].second);
      } else {
        events.emplace_back(cur_start, +1);
        events.emplace_back(cur_end, -1);
        cur_start = spans[i].first;
        cur_end = spans[i].second;
      }
    }
    events.emplace_back(cur_start, +1);
    events.emplace_back(cur_end, -1);
  }
  std::sort(events.begin(), events.end());

  std::vector<CountInterval> out;
  auto emit = [&out](double start, double end, int count) {
    if (!(end > start)) return;
    if (!out.empty() && out.back().count == count) {
      out.back().end = end;
    } else {
      out.push_back({start, end, count});
    }
  };

  double cursor = 0.0;
  int count = 0;
  std::size_t i = 0;
  while (i < events.size()) {
    double t = events[i].first;
    emit(cursor, t, count);
    cursor = std::max(cursor, t);
    while (i < events.size() && events[i].first == t) count += events[i++].second;
  }
  emit(cursor, a.extent, count);
  if (out.empty()) out.push_back({0.0, a.extent, 0});
  return out;
}

}  // namespace convmix
