// convmix: simulate conversational diarization data, extract turn-taking
// statistics from RTTM, and compare datasets.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "convmix/commands.h"
#include "convmix/corpus_io.h"
#include "convmix/metrics.h"

namespace {

using convmix::ExitCode;

int code(ExitCode c) { return static_cast<int>(c); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conversational mixture simulation toolkit"};
  app.require_subcommand(1);

  // simulate ----------------------------------------------------------------
  convmix::SimulateConfig sim;
  std::string method = "proposed";
  std::string selection;
  std::string clip = "rescale";
  std::string sim_json;
  auto* simulate = app.add_subcommand("simulate", "Simulate a dataset of mixtures");
  simulate->add_option("--method", method, "proposed | concat-sum")
      ->check(CLI::IsMember({"proposed", "concat-sum"}));
  simulate->add_option("--selection", selection, "random | markov (overrides the params file)")
      ->check(CLI::IsMember({"random", "markov"}));
  simulate->add_option("--params", sim.params, "Parameter JSON");
  simulate->add_option("--pool", sim.pool, "Utterance manifest (JSON lines)")->required();
  simulate->add_option("--n", sim.n, "Number of mixtures")->required();
  simulate->add_option("--seed", sim.seed, "Base seed");
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--workers", sim.workers, "Worker threads");
  simulate->add_flag("--labels-only", sim.labels_only, "Write RTTM and plans only, no audio");
  simulate->add_option("--rir-dir", sim.rir_dir, "Directory of RIR WAVs");
  simulate->add_option("--noise-dir", sim.noise_dir, "Directory of noise WAVs");
  simulate->add_option("--beta", sim.beta, "Concat-and-sum mean gap (s)");
  simulate->add_option("--min-duration", sim.min_duration, "Drop utterances shorter than this (s)");
  simulate->add_option("--n-spk", sim.n_spk, "Speakers per mixture (overrides params)");
  simulate->add_option("--n-utt", sim.n_utt, "Utterances per mixture (overrides params)");
  simulate->add_option("--rate", sim.sample_rate, "Expected sample rate (Hz)");
  simulate->add_option("--clip", clip, "rescale | clamp")->check(CLI::IsMember({"rescale", "clamp"}));
  simulate->add_option("--json", sim_json, "Summary JSON path (default <out>/summary.json)");

  // extract-stats -----------------------------------------------------------
  convmix::ExtractConfig ext;
  std::string ext_mode = "markov";
  std::string ext_diag;
  auto* extract = app.add_subcommand("extract-stats", "Estimate simulation parameters from RTTM");
  extract->add_option("inputs", ext.inputs, "RTTM files or directories")->required();
  extract->add_option("--mode", ext_mode, "random | markov")->check(CLI::IsMember({"random", "markov"}));
  extract->add_option("--out", ext.out, "Parameter JSON to write")->required();
  extract->add_option("--json", ext_diag, "Diagnostics JSON to write");
  extract->add_option("--epsilon", ext.epsilon, "Truncation of the overlap ratio");
  extract->add_flag("--uniform-fallback", ext.uniform_fallback,
                    "Use a uniform column for unobserved Markov states");

  // compare -----------------------------------------------------------------
  convmix::CompareConfig cmp;
  std::string cmp_json;
  auto* compare = app.add_subcommand("compare", "Compare two RTTM datasets");
  compare->add_option("--a", cmp.a, "Reference dataset (RTTM files or directories)")->required();
  compare->add_option("--b", cmp.b, "Compared dataset (RTTM files or directories)")->required();
  compare->add_option("--json", cmp_json, "Report JSON to write");
  compare->add_option("--gamma", cmp.gamma, "Similarity scale (per ms)");

  // synth-pool --------------------------------------------------------------
  convmix::SynthPoolConfig syn;
  auto* synth = app.add_subcommand("synth-pool", "Write a synthetic utterance pool");
  synth->add_option("--out", syn.out, "Output directory")->required();
  synth->add_option("--speakers", syn.speakers, "Number of speakers");
  synth->add_option("--per-speaker", syn.per_speaker, "Utterances per speaker");
  std::string law = "exponential";
  synth->add_option("--duration-law", law, "exponential | lognormal")
      ->check(CLI::IsMember({"exponential", "lognormal"}));
  synth->add_option("--mean-duration", syn.mean_duration, "Mean duration before truncation (s)");
  synth->add_option("--sigma", syn.sigma, "Log-normal shape");
  synth->add_option("--min-duration", syn.min_duration, "Lower truncation (s)");
  synth->add_option("--max-duration", syn.max_duration, "Upper truncation (s)");
  synth->add_option("--rate", syn.sample_rate, "Sample rate (Hz)");
  synth->add_option("--seed", syn.seed, "Seed");
  synth->add_option("--rirs", syn.rirs, "Synthetic RIRs to write");
  synth->add_option("--noises", syn.noises, "Synthetic noises to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : code(ExitCode::kUsage);
  }

  try {
    if (*simulate) {
      sim.method = method == "concat-sum" ? convmix::Method::kConcatSum : convmix::Method::kProposed;
      if (!selection.empty()) sim.selection = convmix::parse_selection(selection);
      sim.clip = clip == "clamp" ? convmix::ClipPolicy::kClamp : convmix::ClipPolicy::kRescale;
      if (!sim_json.empty()) sim.summary_json = sim_json;
      auto s = convmix::cmd_simulate(sim);
      std::cout << "mixtures: " << s.mixtures - s.failed << "/" << s.mixtures
                << "  silence ratio: " << s.stats.silence_ratio
                << "  overlap ratio: " << s.stats.overlap_ratio
                << "  hours: " << s.stats.total_hours << "\n";
    } else if (*extract) {
      ext.mode = *convmix::parse_selection(ext_mode);
      if (!ext_diag.empty()) ext.diagnostics = ext_diag;
      auto est = convmix::cmd_extract(ext);
      std::cout << convmix::estimate_to_json(est, ext.snr_choices);
    } else if (*compare) {
      if (!cmp_json.empty()) cmp.json = cmp_json;
      auto report = convmix::cmd_compare(cmp);
      std::cout << convmix::format_report(report, "A", "B");
    } else if (*synth) {
      if (law == "lognormal") syn.law = convmix::DurationLaw::kLogNormal;
      auto manifest = convmix::cmd_synth_pool(syn);
      std::cout << manifest.string() << "\n";
    }
  } catch (const convmix::UsageError& e) {
    std::cerr << "convmix: usage: " << e.what() << "\n";
    return code(ExitCode::kUsage);
  } catch (const convmix::PartialFailure& e) {
    std::cerr << "convmix: " << e.what() << "\n";
    return code(ExitCode::kPartialFailure);
  } catch (const std::exception& e) {
    std::cerr << "convmix: error: " << e.what() << "\n";
    return code(ExitCode::kData);
  }
  return code(ExitCode::kOk);
}
