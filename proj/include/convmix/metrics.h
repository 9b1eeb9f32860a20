// Dataset statistics and realism scores.
//
//   silence ratio = T(no speaker) / extent
//   overlap ratio = T(>= 2 speakers) / T(>= 1 speaker)
//
// Similarity between two datasets is exp(-gamma * EMD) of their pooled
// silence (or overlap) duration samples, with durations in milliseconds.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convmix/timeline.h"

namespace convmix {

inline constexpr double kDefaultGamma = 0.001;

struct SpeechTotals {
  double silence = 0.0;  // T(#spk = 0)
  double speech = 0.0;   // T(#spk >= 1)
  double overlap = 0.0;  // T(#spk >= 2)
};

SpeechTotals speech_totals(const Annotation& a);

double silence_ratio(const Annotation& a);
double overlap_ratio(const Annotation& a);

struct DurationSamples {
  std::vector<double> silence;  // interior pauses only
  std::vector<double> overlap;
};

DurationSamples duration_samples(const Annotation& a);

// 1-D earth mover's distance between two empirical distributions: the area
// between their empirical CDFs.
double emd_1d(std::span<const double> u, std::span<const double> v);

double similarity_from_emd(double emd, double gamma = kDefaultGamma);
double similarity_score(std::span<const double> u, std::span<const double> v,
                        double gamma = kDefaultGamma);

struct DatasetStats {
  double silence_ratio = 0.0;
  double overlap_ratio = 0.0;
  std::vector<double> silence_durations;  // seconds
  std::vector<double> overlap_durations;  // seconds
  std::array<long, kNumTransitionTypes> transition_counts{};
  double total_hours = 0.0;
  std::size_t recordings = 0;
};

// Pools all recordings: ratios are ratios of summed durations, duration
// samples are concatenated in input order.
DatasetStats dataset_stats(std::span<const Annotation> annotations);

struct ComparisonReport {
  DatasetStats a;
  DatasetStats b;
  double gamma = kDefaultGamma;
  // Undefined when either side has no samples.
  std::optional<double> emd_silence_ms;
  std::optional<double> emd_overlap_ms;
  std::optional<double> silence_similarity;
  std::optional<double> overlap_similarity;

  double silence_ratio_delta() const { return b.silence_ratio - a.silence_ratio; }
  double overlap_ratio_delta() const { return b.overlap_ratio - a.overlap_ratio; }
};

ComparisonReport compare_datasets(const DatasetStats& a, const DatasetStats& b,
                                  double gamma = kDefaultGamma);

// Plain-text table: one row per dataset with ratios and similarities.
std::string format_report(const ComparisonReport& r, const std::string& name_a,
                          const std::string& name_b);

}  // namespace convmix
