// Batch commands behind the convmix CLI.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "convmix/audio_render.h"
#include "convmix/metrics.h"
#include "convmix/stats_extract.h"
#include "convmix/timeline.h"

namespace convmix {

// Bad command-line usage (exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Too many mixtures failed (exit code 3).
class PartialFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kPartialFailure = 3 };

// ---------------------------------------------------------------------------

enum class Method { kProposed, kConcatSum };

struct SimulateConfig {
  Method method = Method::kProposed;
  std::optional<SelectionMode> selection;  // overrides the params file
  std::filesystem::path params;            // required for the proposed method
  std::filesystem::path pool;
  std::filesystem::path out;
  long n = 0;
  std::uint64_t seed = 0;
  int workers = 1;
  bool labels_only = false;
  std::filesystem::path rir_dir;
  std::filesystem::path noise_dir;
  double beta = 2.0;  // concat-and-sum gap mean
  double min_duration = 0.0;
  std::optional<int> n_spk;
  std::optional<int> n_utt;
  int sample_rate = kDefaultSampleRate;
  ClipPolicy clip = ClipPolicy::kRescale;
  std::optional<std::filesystem::path> summary_json;  // default: <out>/summary.json
};

struct SimulateSummary {
  long mixtures = 0;
  long failed = 0;
  DatasetStats stats;
  std::array<long, kNumTransitionTypes> transition_counts{};
};

// Fraction of failed mixtures above which a run is aborted.
inline constexpr double kMaxFailureFraction = 0.01;

std::string mixture_id(long index, long total);

SimulateSummary cmd_simulate(const SimulateConfig& cfg);

// ---------------------------------------------------------------------------

struct ExtractConfig {
  std::vector<std::filesystem::path> inputs;
  SelectionMode mode = SelectionMode::kMarkov;
  std::filesystem::path out;  // params JSON
  std::optional<std::filesystem::path> diagnostics;
  double epsilon = kDefaultEpsilon;
  bool uniform_fallback = false;
  std::vector<double> snr_choices{5, 10, 15, 20};
};

Estimate cmd_extract(const ExtractConfig& cfg);

// Params JSON for an estimate. Absent betas are written as null; p_markov
// only in Markov mode.
std::string estimate_to_json(const Estimate& est, const std::vector<double>& snr_choices);
std::string estimate_diagnostics_json(const Estimate& est);

// ---------------------------------------------------------------------------

struct CompareConfig {
  std::vector<std::filesystem::path> a;
  std::vector<std::filesystem::path> b;
  std::optional<std::filesystem::path> json;
  double gamma = kDefaultGamma;
};

ComparisonReport cmd_compare(const CompareConfig& cfg);
std::string report_to_json(const ComparisonReport& r);

// ---------------------------------------------------------------------------

enum class DurationLaw { kExponential, kLogNormal };

struct SynthPoolConfig {
  std::filesystem::path out;
  int speakers = 20;
  int per_speaker = 50;
  DurationLaw law = DurationLaw::kExponential;
  double mean_duration = 3.0;  // mean of the untruncated law
  double sigma = 0.5;          // log-normal shape
  double min_duration = 0.3;
  double max_duration = 10.0;
  int sample_rate = kDefaultSampleRate;
  std::uint64_t seed = 0;
  int rirs = 0;    // synthetic RIRs written to <out>/rir
  int noises = 0;  // synthetic noises written to <out>/noise
};

// Duration drawn for the utterance by inverse CDF: exponential or log-normal
// with the given mean, conditioned on [min, max].
double synth_duration(const SynthPoolConfig& cfg, double u);

// Returns the manifest path.
std::filesystem::path cmd_synth_pool(const SynthPoolConfig& cfg);

}  // namespace convmix
