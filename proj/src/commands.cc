#include "convmix/commands.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <thread>

#include <boost/math/distributions/lognormal.hpp>

#include "convmix/corpus_io.h"
#include "convmix/log.h"
#include "convmix/sampling.h"
#include "convmix/simulator.h"
#include "json.hpp"

namespace convmix {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Salt for the rendering substream of a mixture.
constexpr std::uint64_t kRenderStream = 0x72656e646572ULL;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json type_counts_json(const std::array<long, kNumTransitionTypes>& counts) {
  json j = json::object();
  for (auto t : kTransitionOrder) j[std::string(to_string(t))] = counts[index_of(t)];
  return j;
}

struct MixtureOutcome {
  bool ok = false;
  std::string error;
  std::string id;
  std::uint64_t seed = 0;
  std::string rttm;
  std::array<long, kNumTransitionTypes> transitions{};
  std::size_t placements = 0;
  double duration = 0.0;
};

}  // namespace

std::string mixture_id(long index, long total) {
  int width = 6;
  for (long t = total - 1; t >= 1000000; t /= 10) ++width;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "mix%0*ld", width, index);
  return buf;
}

SimulateSummary cmd_simulate(const SimulateConfig& cfg) {
  if (cfg.n < 1) throw UsageError("--n must be at least 1");
  if (cfg.workers < 1) throw UsageError("--workers must be at least 1");
  if (cfg.out.empty()) throw UsageError("--out is required");
  if (cfg.pool.empty()) throw UsageError("--pool is required");
  if (cfg.method == Method::kProposed && cfg.params.empty()) {
    throw UsageError("--params is required for the proposed method");
  }

  SimParams params;
  if (!cfg.params.empty()) {
    std::vector<std::string> notes;
    params = load_params(cfg.params, &notes);
    for (const auto& n : notes) warn(cfg.params.string() + ": " + n);
  } else {
    params.n_spk = 2;
    params.n_utt = 30;
    params.snr_choices = {5, 10, 15, 20};
  }
  if (cfg.selection) params.mode = *cfg.selection;
  if (cfg.n_spk) params.n_spk = *cfg.n_spk;
  if (cfg.n_utt) params.n_utt = *cfg.n_utt;
  if (cfg.method == Method::kConcatSum && !(cfg.beta > 0.0)) throw UsageError("--beta must be positive");

  const UtterancePool pool = load_pool(cfg.pool, cfg.min_duration);
  std::map<std::string, std::string> audio_of;
  for (const auto& [spk, utts] : pool) {
    for (const auto& u : utts) audio_of[u.id] = u.audio;
  }

  RenderConfig render;
  if (!cfg.labels_only) {
    if (!cfg.rir_dir.empty()) render.rirs = read_wav_dir(cfg.rir_dir);
    if (!cfg.noise_dir.empty()) render.noises = read_wav_dir(cfg.noise_dir);
    if (!params.snr_choices.empty()) render.snr_choices = params.snr_choices;
    render.sample_rate = cfg.sample_rate;
    render.clip = cfg.clip;
  }

  fs::create_directories(cfg.out / "rttm");
  fs::create_directories(cfg.out / "plan");
  if (!cfg.labels_only) fs::create_directories(cfg.out / "wav");

  auto run_one = [&](long index) {
    MixtureOutcome o;
    o.id = mixture_id(index, cfg.n);
    o.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(index));
    try {
      MixturePlan plan;
      if (cfg.method == Method::kProposed) {
        plan = simulate_plan(pool, params, o.seed, o.id);
      } else {
        Rng rng(o.seed);
        auto scripts = draw_concat_scripts(pool, params.n_spk, params.n_utt, rng);
        plan = concat_and_sum_plan(scripts, cfg.beta, derive_seed(o.seed, 1), o.id);
        plan.params = params;
        plan.seed = o.seed;
      }
      const Annotation ann = annotation_from_plan(plan);
      o.rttm = write_rttm({ann});
      for (const auto& p : plan.placements) {
        if (p.transition) ++o.transitions[index_of(*p.transition)];
      }
      o.placements = plan.placements.size();
      o.duration = ann.extent;
      if (!cfg.labels_only) {
        auto res = render_mixture(
            plan, [&](const PlacedUtterance& p) { return audio_of.at(p.id); },
            [](const std::string& path) { return read_wav(path); }, render,
            derive_seed(o.seed, kRenderStream));
        write_wav(cfg.out / "wav" / (o.id + ".wav"), res.audio);
      }
      write_text(cfg.out / "rttm" / (o.id + ".rttm"), o.rttm);
      write_text(cfg.out / "plan" / (o.id + ".json"), plan_to_json(plan));
      o.ok = true;
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    return o;
  };

  std::vector<MixtureOutcome> outcomes(static_cast<std::size_t>(cfg.n));
  std::atomic<long> next{0};
  auto worker = [&] {
    for (long i = next++; i < cfg.n; i = next++) outcomes[static_cast<std::size_t>(i)] = run_one(i);
  };
  const int n_threads = static_cast<int>(std::min<long>(cfg.workers, cfg.n));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool_threads;
    for (int t = 0; t < n_threads; ++t) pool_threads.emplace_back(worker);
    for (auto& t : pool_threads) t.join();
  }

  SimulateSummary summary;
  summary.mixtures = cfg.n;
  std::vector<Annotation> annotations;
  std::string log;
  for (const auto& o : outcomes) {
    json line;
    line["id"] = o.id;
    line["seed"] = o.seed;
    if (!o.ok) {
      ++summary.failed;
      line["error"] = o.error;
      warn(o.id + " failed: " + o.error);
    } else {
      line["n_utt"] = o.placements;
      line["duration"] = o.duration;
      line["transitions"] = type_counts_json(o.transitions);
      for (std::size_t k = 0; k < kNumTransitionTypes; ++k) summary.transition_counts[k] += o.transitions[k];
      // Statistics come from the RTTM exactly as written to disk.
      auto parsed = parse_rttm(o.rttm);
      annotations.insert(annotations.end(), parsed.begin(), parsed.end());
    }
    log += line.dump() + "\n";
  }
  write_text(cfg.out / "simulate.log.jsonl", log);

  if (static_cast<double>(summary.failed) > kMaxFailureFraction * static_cast<double>(cfg.n)) {
    throw PartialFailure(std::to_string(summary.failed) + " of " + std::to_string(cfg.n) +
                         " mixtures failed");
  }

  summary.stats = dataset_stats(annotations);
  summary.stats.transition_counts = summary.transition_counts;

  json s;
  s["method"] = cfg.method == Method::kProposed ? "proposed" : "concat-sum";
  if (cfg.method == Method::kProposed) {
    s["selection"] = std::string(to_string(params.mode));
  } else {
    s["beta"] = cfg.beta;
  }
  s["seed"] = cfg.seed;
  s["rng"] = Rng::kAlgorithm;
  s["n_mixtures"] = cfg.n;
  s["n_failed"] = summary.failed;
  s["n_spk"] = params.n_spk;
  s["n_utt"] = params.n_utt;
  s["labels_only"] = cfg.labels_only;
  s["silence_ratio"] = summary.stats.silence_ratio;
  s["overlap_ratio"] = summary.stats.overlap_ratio;
  s["total_hours"] = summary.stats.total_hours;
  s["transition_counts"] = type_counts_json(summary.transition_counts);
  write_text(cfg.summary_json.value_or(cfg.out / "summary.json"), s.dump(2) + "\n");
  return summary;
}

// ---------------------------------------------------------------------------

std::string estimate_to_json(const Estimate& est, const std::vector<double>& snr_choices) {
  const bool markov = est.mode == SelectionMode::kMarkov;
  if (est.complete()) return params_to_json(est.to_params(snr_choices), markov);
  // Same schema, with null where a type was never observed.
  json j;
  json order = json::array();
  for (auto t : kTransitionOrder) order.push_back(std::string(to_string(t)));
  j["type_order"] = order;
  const char* keys[] = {"th", "ts", "ir", "bc"};
  json beta = json::object();
  for (std::size_t i = 0; i < kNumTransitionTypes; ++i) beta[keys[i]] = optional_number(est.beta[i]);
  j["beta"] = beta;
  j["epsilon"] = est.epsilon;
  j["mode"] = std::string(to_string(est.mode));
  j["p_ind"] = est.p_ind;
  if (markov) {
    json rows = json::array();
    for (const auto& row : est.p_markov) rows.push_back(row);
    j["p_markov"] = rows;
  }
  j["n_spk"] = std::max(1, est.n_spk);
  j["n_utt"] = std::max(1, est.n_utt);
  j["snr_choices"] = snr_choices;
  return j.dump(2) + "\n";
}

std::string estimate_diagnostics_json(const Estimate& est) {
  json j;
  j["recordings"] = est.recordings;
  j["merged_segments"] = est.merged_segments;
  j["counts"] = type_counts_json(est.counts);
  json bigrams = json::object();
  for (auto cur : kTransitionOrder) {
    json col = json::object();
    for (auto next : kTransitionOrder) {
      col[std::string(to_string(next))] = est.bigrams[index_of(next)][index_of(cur)];
    }
    bigrams[std::string(to_string(cur))] = col;
  }
  j["bigrams_by_current"] = bigrams;
  json se = json::object();
  json sat = json::object();
  json fallback = json::object();
  for (auto t : kTransitionOrder) {
    se[std::string(to_string(t))] = optional_number(est.beta_stderr[index_of(t)]);
    sat[std::string(to_string(t))] = est.beta_saturated[index_of(t)];
    fallback[std::string(to_string(t))] = est.column_fallback[index_of(t)];
  }
  j["beta_stderr"] = se;
  j["beta_saturated"] = sat;
  j["p_markov_uniform_fallback"] = fallback;
  return j.dump(2) + "\n";
}

Estimate cmd_extract(const ExtractConfig& cfg) {
  if (cfg.inputs.empty()) throw UsageError("at least one RTTM input is required");
  if (cfg.out.empty()) throw UsageError("--out is required");
  const auto annotations = read_rttm_inputs(cfg.inputs);
  if (annotations.empty()) throw DataError("no annotations");
  EstimateOptions opts;
  opts.mode = cfg.mode;
  opts.epsilon = cfg.epsilon;
  opts.uniform_fallback = cfg.uniform_fallback;
  Estimate est = estimate_params(annotations, opts);
  write_text(cfg.out, estimate_to_json(est, cfg.snr_choices));
  if (cfg.diagnostics) write_text(*cfg.diagnostics, estimate_diagnostics_json(est));
  if (!est.complete()) warn("some transition types were never observed; their beta is null");
  return est;
}

// ---------------------------------------------------------------------------

std::string report_to_json(const ComparisonReport& r) {
  json j;
  j["duration_unit"] = "ms";
  j["gamma"] = r.gamma;
  j["silence_ratio_a"] = r.a.silence_ratio;
  j["overlap_ratio_a"] = r.a.overlap_ratio;
  j["total_hours_a"] = r.a.total_hours;
  j["silence_ratio_b"] = r.b.silence_ratio;
  j["overlap_ratio_b"] = r.b.overlap_ratio;
  j["total_hours_b"] = r.b.total_hours;
  j["silence_ratio_delta"] = r.silence_ratio_delta();
  j["overlap_ratio_delta"] = r.overlap_ratio_delta();
  j["silence_similarity"] = optional_number(r.silence_similarity);
  j["overlap_similarity"] = optional_number(r.overlap_similarity);
  j["emd_silence_ms"] = optional_number(r.emd_silence_ms);
  j["emd_overlap_ms"] = optional_number(r.emd_overlap_ms);
  return j.dump(2) + "\n";
}

ComparisonReport cmd_compare(const CompareConfig& cfg) {
  if (cfg.a.empty() || cfg.b.empty()) throw UsageError("compare needs two datasets");
  if (!(cfg.gamma > 0.0)) throw UsageError("--gamma must be positive");
  const auto a = read_rttm_inputs(cfg.a);
  const auto b = read_rttm_inputs(cfg.b);
  if (a.empty() || b.empty()) throw DataError("no annotations");
  auto report = compare_datasets(dataset_stats(a), dataset_stats(b), cfg.gamma);
  if (cfg.json) write_text(*cfg.json, report_to_json(report));
  return report;
}

// ---------------------------------------------------------------------------

double synth_duration(const SynthPoolConfig& cfg, double u) {
  if (cfg.law == DurationLaw::kLogNormal) {
    const double sigma = cfg.sigma;
    const boost::math::lognormal_distribution<double> law(std::log(cfg.mean_duration) - 0.5 * sigma * sigma,
                                                          sigma);
    const double lo = boost::math::cdf(law, cfg.min_duration);
    const double hi = boost::math::cdf(law, cfg.max_duration);
    return std::clamp(boost::math::quantile(law, lo + u * (hi - lo)), cfg.min_duration, cfg.max_duration);
  }
  const double width = cfg.max_duration - cfg.min_duration;
  const double mass = -std::expm1(-width / cfg.mean_duration);
  return cfg.min_duration - cfg.mean_duration * std::log1p(-u * mass);
}

namespace {

// Band-limited noise burst: white noise through a one-pole low-pass whose
// coefficient sets the speaker's spectral tilt, with 10 ms raised-cosine
// edges and a 4 Hz syllable-rate envelope.
Waveform synth_utterance(std::size_t n, int rate, double tilt, double level, Rng& rng) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(n);
  double y = 0.0;
  double pk = 0.0;
  constexpr double kPi = 3.14159265358979323846;
  const double phase = 2.0 * kPi * rng.uniform();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 2.0 * rng.uniform() - 1.0;
    y = tilt * y + (1.0 - tilt) * x;
    const double t = static_cast<double>(i) / rate;
    w.samples[i] = y * (0.65 + 0.35 * std::sin(2.0 * kPi * 4.0 * t + phase));
    pk = std::max(pk, std::abs(w.samples[i]));
  }
  const std::size_t fade = std::min<std::size_t>(n / 2, static_cast<std::size_t>(0.01 * rate));
  for (std::size_t i = 0; i < fade; ++i) {
    const double g = 0.5 - 0.5 * std::cos(kPi * static_cast<double>(i) / static_cast<double>(fade));
    w.samples[i] *= g;
    w.samples[n - 1 - i] *= g;
  }
  if (pk > 0.0) {
    for (double& v : w.samples) v *= level / pk;
  }
  return w;
}

Waveform synth_rir(int rate, Rng& rng) {
  Waveform w;
  w.sample_rate = rate;
  const auto n = static_cast<std::size_t>(0.25 * rate);
  w.samples.resize(n);
  const double decay = 0.03 + 0.07 * rng.uniform();  // seconds
  w.samples[0] = 0.9;
  for (std::size_t i = 1; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    w.samples[i] = 0.4 * (2.0 * rng.uniform() - 1.0) * std::exp(-t / decay);
  }
  return w;
}

Waveform synth_noise(int rate, Rng& rng) {
  Waveform w;
  w.sample_rate = rate;
  const auto n = static_cast<std::size_t>((2.5 + 2.0 * rng.uniform()) * rate);
  w.samples.resize(n);
  double y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    y = 0.95 * y + 0.05 * (2.0 * rng.uniform() - 1.0);
    w.samples[i] = 0.5 * y + 0.05 * (2.0 * rng.uniform() - 1.0);
  }
  return w;
}

}  // namespace

fs::path cmd_synth_pool(const SynthPoolConfig& cfg) {
  if (cfg.out.empty()) throw UsageError("--out is required");
  if (cfg.speakers < 1 || cfg.per_speaker < 1) throw UsageError("speaker and utterance counts must be positive");
  if (!(cfg.min_duration > 0.0 && cfg.max_duration > cfg.min_duration && cfg.mean_duration > 0.0)) {
    throw UsageError("need 0 < min-duration < max-duration and a positive mean duration");
  }
  if (cfg.law == DurationLaw::kLogNormal && !(cfg.sigma > 0.0)) throw UsageError("--sigma must be positive");
  if (cfg.sample_rate <= 0) throw UsageError("--rate must be positive");

  std::string manifest;
  char name[64];
  for (int s = 0; s < cfg.speakers; ++s) {
    std::snprintf(name, sizeof(name), "spk%03d", s);
    const std::string speaker = name;
    const double tilt = cfg.speakers == 1 ? 0.6 : 0.3 + 0.6 * s / (cfg.speakers - 1.0);
    Rng spk_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(s)));
    const double level = 0.2 + 0.2 * spk_rng.uniform();
    for (int u = 0; u < cfg.per_speaker; ++u) {
      Rng rng(derive_seed(derive_seed(cfg.seed, static_cast<std::uint64_t>(s)),
                          static_cast<std::uint64_t>(u) + 1));
      const double d = synth_duration(cfg, rng.uniform());
      const auto n = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(d * cfg.sample_rate)));
      std::snprintf(name, sizeof(name), "%s_u%04d", speaker.c_str(), u);
      const std::string id = name;
      const std::string rel = "wav/" + speaker + "/" + id + ".wav";
      write_wav(cfg.out / rel, synth_utterance(n, cfg.sample_rate, tilt, level, rng));
      json row;
      row["id"] = id;
      row["speaker"] = speaker;
      row["duration"] = static_cast<double>(n) / cfg.sample_rate;
      row["path"] = rel;
      manifest += row.dump() + "\n";
    }
  }
  for (int i = 0; i < cfg.rirs; ++i) {
    Rng rng(derive_seed(cfg.seed ^ 0x524952ULL, static_cast<std::uint64_t>(i)));
    std::snprintf(name, sizeof(name), "rir/rir%03d.wav", i);
    write_wav(cfg.out / name, synth_rir(cfg.sample_rate, rng));
  }
  for (int i = 0; i < cfg.noises; ++i) {
    Rng rng(derive_seed(cfg.seed ^ 0x4e4f495345ULL, static_cast<std::uint64_t>(i)));
    std::snprintf(name, sizeof(name), "noise/noise%03d.wav", i);
    write_wav(cfg.out / name, synth_noise(cfg.sample_rate, rng));
  }
  const fs::path manifest_path = cfg.out / "manifest.jsonl";
  write_text(manifest_path, manifest);
  return manifest_path;
}

}  // namespace convmix
