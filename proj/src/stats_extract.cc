#include "convmix/stats_extract.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "convmix/log.h"
#include "convmix/sampling.h"

namespace convmix {

namespace {

// Folds each speaker's overlapping segments into one.
std::vector<TimedSegment> merge_self_overlaps(const Annotation& a, std::size_t& merged) {
  std::map<std::string, std::vector<TimedSegment>> by_speaker;
  for (const auto& s : a.segments) by_speaker[s.speaker].push_back(s);
  std::vector<TimedSegment> out;
  for (auto& [spk, segs] : by_speaker) {
    std::sort(segs.begin(), segs.end(), segment_less);
    TimedSegment cur = segs.front();
    for (std::size_t i = 1; i < segs.size(); ++i) {
      if (segs[i].onset < cur.end()) {
        cur.duration = std::max(cur.end(), segs[i].end()) - cur.onset;
        ++merged;
      } else {
        out.push_back(cur);
        cur = segs[i];
      }
    }
    out.push_back(cur);
  }
  std::sort(out.begin(), out.end(), segment_less);
  return out;
}

double overlap_fraction(double overlap, double denom) {
  if (!(denom > 0.0)) return 1.0;
  return std::clamp(overlap / denom, std::numeric_limits<double>::min(), 1.0);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::optional<double> stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return std::nullopt;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

}  // namespace

Classification classify_transitions(const Annotation& a) {
  Classification out;
  if (a.segments.size() < 2) return out;
  const auto segs = merge_self_overlaps(a, out.merged_segments);
  if (out.merged_segments > 0) {
    warn(a.recording_id + ": merged " + std::to_string(out.merged_segments) +
         " overlapping same-speaker segment(s)");
  }

  const TimedSegment* prev = &segs.front();
  double free_start = prev->onset;
  for (std::size_t i = 1; i < segs.size(); ++i) {
    const TimedSegment& next = segs[i];
    const double prev_end = prev->end();
    TransitionObservation obs;
    if (next.onset >= prev_end) {
      obs.type = next.speaker == prev->speaker ? TransitionType::kTurnHold
                                               : TransitionType::kTurnSwitch;
      obs.measurement = next.onset - prev_end;
      prev = &next;
      free_start = next.onset;
    } else if (next.end() > prev_end) {
      obs.type = TransitionType::kInterruption;
      obs.measurement =
          overlap_fraction(prev_end - next.onset, std::min(prev_end - free_start, next.duration));
      prev = &next;
      free_start = prev_end;
    } else {
      // Fully contained: u_prev stays, its free tail shrinks past the
      // backchannel. The ratio is the share of u'_prev it covers.
      obs.type = TransitionType::kBackchannel;
      obs.measurement = overlap_fraction(next.duration, prev_end - free_start);
      free_start = std::max(free_start, next.end());
    }
    out.observations.push_back(obs);
  }
  return out;
}

double invert_truncated_mean(double mean, double epsilon) {
  double lo = std::log(kMinRate);
  double hi = std::log(kMaxRate);
  if (mean <= truncated_exponential_mean(kMinRate, epsilon)) return kMinRate;
  if (mean >= truncated_exponential_mean(kMaxRate, epsilon)) return kMaxRate;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (truncated_exponential_mean(std::exp(mid), epsilon) < mean) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(0.5 * (lo + hi));
}

bool Estimate::complete() const {
  for (const auto& b : beta) {
    if (!b || !(*b > 0.0)) return false;
  }
  return true;
}

SimParams Estimate::to_params(std::vector<double> snr_choices) const {
  if (!complete()) throw DataError("estimate lacks a beta for at least one transition type");
  SimParams p;
  for (std::size_t i = 0; i < kNumTransitionTypes; ++i) p.beta[i] = *beta[i];
  p.epsilon = epsilon;
  p.mode = mode;
  p.p_ind = p_ind;
  if (mode == SelectionMode::kMarkov) {
    p.p_markov = p_markov;
  } else {
    for (std::size_t r = 0; r < kNumTransitionTypes; ++r) {
      for (std::size_t c = 0; c < kNumTransitionTypes; ++c) p.p_markov[r][c] = p_ind[r];
    }
  }
  p.n_spk = std::max(1, n_spk);
  p.n_utt = std::max(1, n_utt);
  p.snr_choices = std::move(snr_choices);
  return p;
}

Estimate estimate_params(std::span<const Annotation> annotations, const EstimateOptions& opts) {
  if (annotations.empty()) throw DataError("no annotations");
  Estimate est;
  est.epsilon = opts.epsilon;
  est.mode = opts.mode;
  est.recordings = annotations.size();

  std::array<std::vector<double>, kNumTransitionTypes> samples;
  std::size_t total_segments = 0;
  for (const auto& a : annotations) {
    total_segments += a.segments.size();
    est.n_spk = std::max(est.n_spk, static_cast<int>(a.speakers().size()));
    auto cls = classify_transitions(a);
    est.merged_segments += cls.merged_segments;
    std::optional<TransitionType> prev;
    // Bigrams never bridge two recordings.
    for (const auto& obs : cls.observations) {
      const std::size_t k = index_of(obs.type);
      ++est.counts[k];
      samples[k].push_back(obs.measurement);
      if (prev) ++est.bigrams[k][index_of(*prev)];
      prev = obs.type;
    }
  }
  est.n_utt = static_cast<int>(std::lround(static_cast<double>(total_segments) /
                                           static_cast<double>(annotations.size())));

  long total = 0;
  for (long c : est.counts) total += c;
  if (total == 0) throw DataError("annotations contain no transitions");
  for (std::size_t k = 0; k < kNumTransitionTypes; ++k) {
    est.p_ind[k] = static_cast<double>(est.counts[k]) / static_cast<double>(total);
  }

  for (auto t : {TransitionType::kTurnHold, TransitionType::kTurnSwitch}) {
    const auto& v = samples[index_of(t)];
    if (v.empty()) continue;
    const double m = mean_of(v);
    if (m > 0.0) est.beta[index_of(t)] = m;
    est.beta_stderr[index_of(t)] = stderr_of(v);
  }
  const double lo = opts.epsilon;
  const double hi = 1.0 - opts.epsilon;
  for (auto t : {TransitionType::kInterruption, TransitionType::kBackchannel}) {
    auto v = samples[index_of(t)];
    if (v.empty()) continue;
    for (double& rho : v) rho = std::clamp(rho, lo, hi);
    const double m = mean_of(v);
    const double b = invert_truncated_mean(m, opts.epsilon);
    est.beta[index_of(t)] = b;
    est.beta_saturated[index_of(t)] = b >= kMaxRate || b <= kMinRate;
    // Delta method through the slope of the mean in beta.
    auto se_mean = stderr_of(v);
    if (se_mean && !est.beta_saturated[index_of(t)]) {
      const double h = b * 1e-4;
      const double slope = (truncated_exponential_mean(b + h, opts.epsilon) -
                            truncated_exponential_mean(b - h, opts.epsilon)) /
                           (2.0 * h);
      if (slope > 0.0) est.beta_stderr[index_of(t)] = *se_mean / slope;
    }
  }

  if (opts.mode == SelectionMode::kMarkov) {
    for (std::size_t c = 0; c < kNumTransitionTypes; ++c) {
      long col = 0;
      for (std::size_t r = 0; r < kNumTransitionTypes; ++r) col += est.bigrams[r][c];
      if (col == 0) {
        if (!opts.uniform_fallback) {
          throw DataError("P_Markov column " + std::string(to_string(kTransitionOrder[c])) +
                          " has no observations");
        }
        est.column_fallback[c] = true;
        for (std::size_t r = 0; r < kNumTransitionTypes; ++r) est.p_markov[r][c] = 0.25;
        continue;
      }
      for (std::size_t r = 0; r < kNumTransitionTypes; ++r) {
        est.p_markov[r][c] = static_cast<double>(est.bigrams[r][c]) / static_cast<double>(col);
      }
    }
  }
  return est;
}

}  // namespace convmix
