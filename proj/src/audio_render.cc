#include "convmix/audio_render.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>

#include "convmix/sampling.h"

namespace convmix {

namespace {

// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex g_fftw_planner;

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

std::vector<double> convolve_direct(std::span<const double> x, std::span<const double> h,
                                    std::size_t out_len) {
  std::vector<double> y(out_len, 0.0);
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (h[k] == 0.0) continue;
    for (std::size_t n = k; n < out_len; ++n) y[n] += h[k] * x[n - k];
  }
  return y;
}

std::vector<double> convolve_fft(std::span<const double> x, std::span<const double> h,
                                 std::size_t out_len) {
  std::size_t n = 1;
  while (n < x.size() + h.size() - 1) n <<= 1;
  const std::size_t bins = n / 2 + 1;
  auto xa = fftw_buffer<double>(n);
  auto ha = fftw_buffer<double>(n);
  auto xf = fftw_buffer<fftw_complex>(bins);
  auto hf = fftw_buffer<fftw_complex>(bins);
  fftw_plan fx, fh, inv;
  {
    std::lock_guard<std::mutex> lock(g_fftw_planner);
    fx = fftw_plan_dft_r2c_1d(static_cast<int>(n), xa.get(), xf.get(), FFTW_ESTIMATE);
    fh = fftw_plan_dft_r2c_1d(static_cast<int>(n), ha.get(), hf.get(), FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), xf.get(), xa.get(), FFTW_ESTIMATE);
  }
  std::fill(xa.get(), xa.get() + n, 0.0);
  std::fill(ha.get(), ha.get() + n, 0.0);
  std::copy(x.begin(), x.end(), xa.get());
  std::copy(h.begin(), h.end(), ha.get());
  fftw_execute(fx);
  fftw_execute(fh);
  for (std::size_t k = 0; k < bins; ++k) {
    const double re = xf[k][0] * hf[k][0] - xf[k][1] * hf[k][1];
    const double im = xf[k][0] * hf[k][1] + xf[k][1] * hf[k][0];
    xf[k][0] = re;
    xf[k][1] = im;
  }
  fftw_execute(inv);
  std::vector<double> y(out_len);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < out_len; ++i) y[i] = xa[i] * scale;
  {
    std::lock_guard<std::mutex> lock(g_fftw_planner);
    fftw_destroy_plan(fx);
    fftw_destroy_plan(fh);
    fftw_destroy_plan(inv);
  }
  return y;
}

double peak(std::span<const double> x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

}  // namespace

Waveform convolve_rir(const Waveform& signal, const Waveform& rir) {
  if (signal.sample_rate != rir.sample_rate) {
    throw DataError("RIR sample rate " + std::to_string(rir.sample_rate) +
                    " does not match signal rate " + std::to_string(signal.sample_rate));
  }
  Waveform out;
  out.sample_rate = signal.sample_rate;
  if (signal.samples.empty() || rir.samples.empty()) {
    out.samples.assign(signal.samples.size(), 0.0);
    return out;
  }
  const std::size_t len = signal.samples.size();
  const std::size_t taps = std::min(rir.samples.size(), len);
  std::span<const double> h(rir.samples.data(), taps);  // later taps only reach past the cut
  constexpr std::size_t kDirectWork = 1u << 20;
  if (taps <= 64 || len * taps <= kDirectWork) {
    out.samples = convolve_direct(signal.samples, h, len);
  } else {
    out.samples = convolve_fft(signal.samples, h, len);
  }
  const double in_peak = peak(signal.samples);
  const double out_peak = peak(out.samples);
  if (out_peak > 0.0) {
    const double g = in_peak / out_peak;
    if (g != 1.0) {
      for (double& v : out.samples) v *= g;
    }
  }
  return out;
}

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double ss = 0.0;
  for (double v : x) ss += v * v;
  return std::sqrt(ss / static_cast<double>(x.size()));
}

double masked_rms(std::span<const double> x, const std::vector<bool>& mask) {
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size() && i < mask.size(); ++i) {
    if (mask[i]) {
      ss += x[i] * x[i];
      ++n;
    }
  }
  return n == 0 ? 0.0 : std::sqrt(ss / static_cast<double>(n));
}

double mixing_scale(std::span<const double> speech, const std::vector<bool>& active_mask,
                    std::span<const double> noise, double snr_db) {
  const double noise_rms = rms(noise);
  if (!(noise_rms > 0.0)) throw DataError("noise is silent (zero RMS)");
  return masked_rms(speech, active_mask) / (noise_rms * std::pow(10.0, snr_db / 20.0));
}

std::vector<double> tile_noise(std::span<const double> noise, std::size_t length) {
  if (noise.empty()) throw DataError("cannot tile an empty noise signal");
  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = noise[i % noise.size()];
  return out;
}

std::size_t onset_to_sample(double onset, int sample_rate) {
  return static_cast<std::size_t>(std::floor(onset * sample_rate + 0.5));
}

RenderResult render_mixture(const MixturePlan& plan,
                            const std::function<std::string(const PlacedUtterance&)>& locator_of,
                            const AudioLoader& load, const RenderConfig& config,
                            std::uint64_t seed) {
  if (plan.placements.empty()) throw DataError("empty plan");
  for (const auto& w : config.rirs) {
    if (w.sample_rate != config.sample_rate) throw DataError("RIR sample rate mismatch");
  }
  for (const auto& w : config.noises) {
    if (w.sample_rate != config.sample_rate) throw DataError("noise sample rate mismatch");
  }

  RenderResult res;
  Rng rng(seed);

  // One RIR per speaker, drawn in order of first appearance.
  std::map<std::string, std::size_t> speaker_rir;
  for (const auto& p : plan.placements) {
    if (speaker_rir.count(p.speaker)) continue;
    const std::size_t idx = config.rirs.empty() ? 0 : rng.index(config.rirs.size());
    speaker_rir[p.speaker] = idx;
    res.rir_index.push_back(idx);
  }

  std::vector<std::pair<std::size_t, std::vector<double>>> pieces;
  std::size_t length = 0;
  for (const auto& p : plan.placements) {
    Waveform utt = load(locator_of(p));
    if (utt.sample_rate != config.sample_rate) {
      throw DataError("utterance " + p.id + " has sample rate " + std::to_string(utt.sample_rate) +
                      ", expected " + std::to_string(config.sample_rate));
    }
    const auto labeled = static_cast<std::size_t>(std::llround(p.duration * config.sample_rate));
    if (utt.samples.size() > labeled) utt.samples.resize(labeled);
    if (!config.rirs.empty()) utt = convolve_rir(utt, config.rirs[speaker_rir[p.speaker]]);
    const std::size_t offset = onset_to_sample(p.onset, config.sample_rate);
    length = std::max(length, offset + std::max(labeled, utt.samples.size()));
    pieces.emplace_back(offset, std::move(utt.samples));
  }

  std::vector<double> mix(length, 0.0);
  res.active.assign(length, false);
  for (const auto& [offset, samples] : pieces) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      mix[offset + i] += samples[i];
      res.active[offset + i] = true;
    }
  }

  if (!config.noises.empty()) {
    if (config.snr_choices.empty()) throw DataError("no SNR choices for noisy rendering");
    const std::size_t ni = rng.index(config.noises.size());
    res.noise_index = ni;
    res.snr_db = config.snr_choices[rng.index(config.snr_choices.size())];
    const auto tiled = tile_noise(config.noises[ni].samples, length);
    res.noise_scale = mixing_scale(mix, res.active, tiled, res.snr_db);
    for (std::size_t i = 0; i < length; ++i) mix[i] += res.noise_scale * tiled[i];
  }

  const double pk = peak(mix);
  if (pk > 1.0) {
    if (config.clip == ClipPolicy::kRescale) {
      res.output_gain = 1.0 / pk;
      for (double& v : mix) v *= res.output_gain;
    } else {
      for (double& v : mix) {
        if (v > 1.0 || v < -1.0) {
          v = std::clamp(v, -1.0, 1.0);
          ++res.clamped;
        }
      }
    }
  }

  res.audio.samples = std::move(mix);
  res.audio.sample_rate = config.sample_rate;
  res.annotation = annotation_from_plan(plan);
  return res;
}

}  // namespace convmix
