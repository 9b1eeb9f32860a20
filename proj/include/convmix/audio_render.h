// Rendering a MixturePlan to audio: per-speaker RIR convolution, placement
// at sample offsets, tiled background noise at a sampled SNR, and a final
// clipping policy.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "convmix/corpus_io.h"
#include "convmix/timeline.h"

namespace convmix {

// Linear convolution cut to the input length, then rescaled so the output
// peak equals the input peak.
Waveform convolve_rir(const Waveform& signal, const Waveform& rir);

double rms(std::span<const double> x);
// RMS over the samples where mask is true.
double masked_rms(std::span<const double> x, const std::vector<bool>& mask);

// Noise scale that puts `noise` snr_db below the active-speech level.
double mixing_scale(std::span<const double> speech, const std::vector<bool>& active_mask,
                    std::span<const double> noise, double snr_db);

// Repeats noise end to end until it is `length` samples long.
std::vector<double> tile_noise(std::span<const double> noise, std::size_t length);

enum class ClipPolicy { kRescale, kClamp };

struct RenderConfig {
  std::vector<Waveform> rirs;    // empty: no reverberation
  std::vector<Waveform> noises;  // empty: no background noise
  std::vector<double> snr_choices{5, 10, 15, 20};
  int sample_rate = kDefaultSampleRate;
  ClipPolicy clip = ClipPolicy::kRescale;
};

// Resolves an utterance's audio locator to its waveform.
using AudioLoader = std::function<Waveform(const std::string& locator)>;

struct RenderResult {
  Waveform audio;
  Annotation annotation;
  std::vector<bool> active;           // samples covered by a placement
  std::vector<std::size_t> rir_index;  // per speaker, in first-appearance order
  std::optional<std::size_t> noise_index;
  double snr_db = 0.0;
  double noise_scale = 0.0;
  double output_gain = 1.0;  // applied by the rescale policy
  std::size_t clamped = 0;
};

// Sample offset of an onset: round half up.
std::size_t onset_to_sample(double onset, int sample_rate);

// locator_of maps a placement to the audio locator of its utterance.
RenderResult render_mixture(const MixturePlan& plan,
                            const std::function<std::string(const PlacedUtterance&)>& locator_of,
                            const AudioLoader& load, const RenderConfig& config, std::uint64_t seed);

}  // namespace convmix
