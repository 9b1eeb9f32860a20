// File formats: RTTM annotations, JSON-lines utterance manifests, parameter
// JSON, plan sidecars and PCM16 mono WAV.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "convmix/timeline.h"

namespace convmix {

// ---------------------------------------------------------------------------
// RTTM: SPEAKER <file> <chan> <tbeg> <tdur> <NA> <NA> <speaker> <NA> <NA>

// One annotation per file id, in order of first appearance. Non-SPEAKER lines,
// blank lines and '#' comments are skipped.
std::vector<Annotation> parse_rttm(std::string_view text);
std::vector<Annotation> read_rttm(const std::filesystem::path& path);

// Times are rounded to milliseconds and printed with two decimals when the
// third is zero, three otherwise.
std::string write_rttm(const std::vector<Annotation>& annotations);
std::string format_rttm_time(double seconds);

// All annotations from a file, or from every *.rttm in a directory (sorted by
// file name).
std::vector<Annotation> read_rttm_inputs(const std::vector<std::filesystem::path>& inputs);

// ---------------------------------------------------------------------------
// Audio

inline constexpr int kDefaultSampleRate = 8000;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// int16 / 32768.
Waveform read_wav(const std::filesystem::path& path);
Waveform decode_wav(std::string_view bytes, const std::string& name = "<memory>");

// Rounds to nearest and clamps to the int16 range. Returns the number of
// samples that had to be clamped.
std::size_t write_wav(const std::filesystem::path& path, const Waveform& w);
std::string encode_wav(const Waveform& w, std::size_t* clipped = nullptr);

// Every *.wav in dir, sorted by file name.
std::vector<Waveform> read_wav_dir(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Utterance manifest: {"id": str, "speaker": str, "duration": float, "path": str}
// per line. Relative paths resolve against the manifest's directory.

UtterancePool load_pool(const std::filesystem::path& manifest, double min_duration = 0.0);
UtterancePool parse_pool(std::string_view jsonl, double min_duration = 0.0,
                         const std::filesystem::path& base_dir = {});

// ---------------------------------------------------------------------------
// Parameter files

std::string params_to_json(const SimParams& p, bool include_markov = true);
// `notes` receives remarks about defaulted fields.
SimParams params_from_json(std::string_view text, std::vector<std::string>* notes = nullptr);
SimParams load_params(const std::filesystem::path& path, std::vector<std::string>* notes = nullptr);
void save_params(const std::filesystem::path& path, const SimParams& p);

// ---------------------------------------------------------------------------
// Plan sidecar:
//   {"mixture_id": str, "seed": int,
//    "placements": [{"id", "speaker", "onset", "duration", "transition"}]}

std::string plan_to_json(const MixturePlan& plan);
MixturePlan plan_from_json(std::string_view text);

// Whole-file helpers.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace convmix
