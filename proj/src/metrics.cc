#include "convmix/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace convmix {

SpeechTotals speech_totals(const Annotation& a) {
  SpeechTotals t;
  for (const auto& iv : speaker_count_intervals(a)) {
    if (iv.count == 0) {
      t.silence += iv.length();
    } else {
      t.speech += iv.length();
      if (iv.count >= 2) t.overlap += iv.length();
    }
  }
  return t;
}

double silence_ratio(const Annotation& a) {
  if (!(a.extent > 0.0)) throw DataError("silence ratio of " + a.recording_id + ": zero extent");
  auto t = speech_totals(a);
  return t.silence / (t.silence + t.speech);
}

double overlap_ratio(const Annotation& a) {
  auto t = speech_totals(a);
  if (!(t.speech > 0.0)) throw DataError("overlap ratio of " + a.recording_id + ": no speech");
  return t.overlap / t.speech;
}

DurationSamples duration_samples(const Annotation& a) {
  DurationSamples out;
  const auto intervals = speaker_count_intervals(a);
  // Intervals are maximal per count, so consecutive >=2 runs must be joined.
  std::optional<double> overlap_start;
  double overlap_end = 0.0;
  bool seen_speech = false;
  for (const auto& iv : intervals) {
    if (iv.count >= 2) {
      if (!overlap_start) overlap_start = iv.start;
      overlap_end = iv.end;
    } else if (overlap_start) {
      out.overlap.push_back(overlap_end - *overlap_start);
      overlap_start.reset();
    }
    if (iv.count == 0 && seen_speech) out.silence.push_back(iv.length());
    if (iv.count > 0) seen_speech = true;
  }
  if (overlap_start) out.overlap.push_back(overlap_end - *overlap_start);
  // A final zero-speaker interval is trailing silence, not a pause.
  if (!intervals.empty() && intervals.back().count == 0 && seen_speech && !out.silence.empty()) {
    out.silence.pop_back();
  }
  return out;
}

double emd_1d(std::span<const double> u, std::span<const double> v) {
  if (u.empty() || v.empty()) throw DataError("no samples");
  std::vector<double> a(u.begin(), u.end());
  std::vector<double> b(v.begin(), v.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double m = static_cast<double>(a.size());
  const double n = static_cast<double>(b.size());

  // Sweep the merged support; between breakpoints both CDFs are constant.
  std::size_t i = 0;
  std::size_t j = 0;
  double x = std::min(a.front(), b.front());
  double area = 0.0;
  while (i < a.size() || j < b.size()) {
    double next;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      next = a[i];
    } else {
      next = b[j];
    }
    area += std::abs(static_cast<double>(i) / m - static_cast<double>(j) / n) * (next - x);
    x = next;
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
  }
  return area;
}

double similarity_from_emd(double emd, double gamma) {
  if (!(gamma > 0.0)) throw DataError("gamma must be positive");
  return std::exp(-gamma * emd);
}

double similarity_score(std::span<const double> u, std::span<const double> v, double gamma) {
  return similarity_from_emd(emd_1d(u, v), gamma);
}

DatasetStats dataset_stats(std::span<const Annotation> annotations) {
  DatasetStats s;
  double silence = 0.0;
  double speech = 0.0;
  double overlap = 0.0;
  for (const auto& a : annotations) {
    auto t = speech_totals(a);
    silence += t.silence;
    speech += t.speech;
    overlap += t.overlap;
    auto d = duration_samples(a);
    s.silence_durations.insert(s.silence_durations.end(), d.silence.begin(), d.silence.end());
    s.overlap_durations.insert(s.overlap_durations.end(), d.overlap.begin(), d.overlap.end());
  }
  if (!(silence + speech > 0.0)) throw DataError("dataset has zero total duration");
  if (!(speech > 0.0)) throw DataError("dataset has no speech");
  s.silence_ratio = silence / (silence + speech);
  s.overlap_ratio = overlap / speech;
  s.total_hours = (silence + speech) / 3600.0;
  s.recordings = annotations.size();
  return s;
}

namespace {

std::vector<double> to_ms(const std::vector<double>& seconds) {
  std::vector<double> ms(seconds.size());
  std::transform(seconds.begin(), seconds.end(), ms.begin(), [](double s) { return s * 1000.0; });
  return ms;
}

}  // namespace

ComparisonReport compare_datasets(const DatasetStats& a, const DatasetStats& b, double gamma) {
  ComparisonReport r;
  r.a = a;
  r.b = b;
  r.gamma = gamma;
  if (!a.silence_durations.empty() && !b.silence_durations.empty()) {
    r.emd_silence_ms = emd_1d(to_ms(a.silence_durations), to_ms(b.silence_durations));
    r.silence_similarity = similarity_from_emd(*r.emd_silence_ms, gamma);
  }
  if (!a.overlap_durations.empty() && !b.overlap_durations.empty()) {
    r.emd_overlap_ms = emd_1d(to_ms(a.overlap_durations), to_ms(b.overlap_durations));
    r.overlap_similarity = similarity_from_emd(*r.emd_overlap_ms, gamma);
  }
  return r;
}

std::string format_report(const ComparisonReport& r, const std::string& name_a,
                          const std::string& name_b) {
  auto cell = [](const std::optional<double>& v) {
    char buf[32];
    if (v) {
      std::snprintf(buf, sizeof(buf), "%10.3f", *v);
    } else {
      std::snprintf(buf, sizeof(buf), "%10s", "n/a");
    }
    return std::string(buf);
  };
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "# durations in ms, gamma = %g\n", r.gamma);
  out += line;
  std::snprintf(line, sizeof(line), "%-24s %10s %10s %10s %10s %10s\n", "Dataset", "Total(h)",
                "Silence", "Overlap", "SilSim", "OvlSim");
  out += line;
  std::snprintf(line, sizeof(line), "%-24s %10.3f %10.3f %10.3f %s %s\n", name_a.c_str(),
                r.a.total_hours, r.a.silence_ratio, r.a.overlap_ratio,
                cell(1.0).c_str(), cell(1.0).c_str());
  out += line;
  std::snprintf(line, sizeof(line), "%-24s %10.3f %10.3f %10.3f %s %s\n", name_b.c_str(),
                r.b.total_hours, r.b.silence_ratio, r.b.overlap_ratio,
                cell(r.silence_similarity).c_str(), cell(r.overlap_similarity).c_str());
  out += line;
  return out;
}

}  // namespace convmix
