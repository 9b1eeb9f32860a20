#include "convmix/corpus_io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "convmix/log.h"
#include "json.hpp"

namespace convmix {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// RTTM

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

std::vector<Annotation> parse_rttm(std::string_view text) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<TimedSegment>> by_file;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::size_t dropped = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    auto f = split_ws(line);
    if (f.empty() || f[0].front() == '#' || f[0] != "SPEAKER") {
      if (nl == text.size()) break;
      continue;
    }
    const std::string where = " at line " + std::to_string(line_no);
    if (f.size() < 8 || f.size() > 10) {
      throw DataError("malformed RTTM line: expected 10 fields" + where);
    }
    double tbeg = 0.0;
    double tdur = 0.0;
    if (!parse_double(f[3], tbeg)) throw DataError("bad onset '" + std::string(f[3]) + "'" + where);
    if (!parse_double(f[4], tdur)) throw DataError("bad duration '" + std::string(f[4]) + "'" + where);
    if (tdur < 0.0) throw DataError("negative duration" + where);
    if (tbeg < 0.0) throw DataError("negative onset" + where);
    std::string file(f[1]);
    if (!by_file.count(file)) order.push_back(file);
    auto& segs = by_file[file];
    if (tdur == 0.0) {
      ++dropped;
    } else {
      segs.push_back({std::string(f[7]), tbeg, tdur});
    }
    if (nl == text.size()) break;
  }
  if (dropped > 0) warn("skipped " + std::to_string(dropped) + " zero-length RTTM segment(s)");
  std::vector<Annotation> out;
  out.reserve(order.size());
  for (const auto& file : order) out.push_back(make_annotation(file, std::move(by_file[file])));
  return out;
}

std::vector<Annotation> read_rttm(const fs::path& path) { return parse_rttm(read_text(path)); }

std::string format_rttm_time(double seconds) {
  const long long ms = std::llround(seconds * 1000.0);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%lld.%03lld", ms / 1000, ms % 1000);
  std::size_t len = std::strlen(buf);
  if (buf[len - 1] == '0') buf[len - 1] = '\0';
  return buf;
}

std::string write_rttm(const std::vector<Annotation>& annotations) {
  std::string out;
  for (const auto& a : annotations) {
    for (const auto& s : a.segments) {
      out += "SPEAKER " + a.recording_id + " 1 " + format_rttm_time(s.onset) + " " +
             format_rttm_time(s.duration) + " <NA> <NA> " + s.speaker + " <NA> <NA>\n";
    }
  }
  return out;
}

std::vector<Annotation> read_rttm_inputs(const std::vector<fs::path>& inputs) {
  std::vector<Annotation> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".rttm") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        auto anns = read_rttm(f);
        out.insert(out.end(), std::make_move_iterator(anns.begin()),
                   std::make_move_iterator(anns.end()));
      }
    } else {
      auto anns = read_rttm(in);
      out.insert(out.end(), std::make_move_iterator(anns.begin()),
                 std::make_move_iterator(anns.end()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// WAV

namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

Waveform decode_wav(std::string_view bytes, const std::string& name) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw DataError(name + ": not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  int channels = 0;
  int rate = 0;
  int bits = 0;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const unsigned char* chunk = p + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > n && std::memcmp(chunk, "data", 4) != 0) {
      throw DataError(name + ": truncated chunk");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw DataError(name + ": fmt chunk too short");
      std::uint16_t format = le16(p + body);
      channels = le16(p + body + 2);
      rate = static_cast<int>(le32(p + body + 4));
      bits = le16(p + body + 14);
      if (format == kFormatExtensible && size >= 40) format = le16(p + body + 24);
      if (format != kFormatPcm) throw DataError(name + ": not PCM (format " + std::to_string(format) + ")");
      if (channels != 1) throw DataError(name + ": expected mono, got " + std::to_string(channels) + " channels");
      if (bits != 16) throw DataError(name + ": expected 16-bit samples, got " + std::to_string(bits));
      if (rate <= 0) throw DataError(name + ": invalid sample rate");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw DataError(name + ": data chunk before fmt chunk");
      const std::size_t avail = std::min<std::size_t>(size, n - body);
      Waveform w;
      w.sample_rate = rate;
      w.samples.resize(avail / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        auto v = static_cast<std::int16_t>(le16(p + body + 2 * i));
        w.samples[i] = static_cast<double>(v) / 32768.0;
      }
      return w;
    }
    pos = body + size + (size & 1u);
  }
  throw DataError(name + ": no data chunk");
}

Waveform read_wav(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("missing audio file " + path.string());
  return decode_wav(read_text(path), path.string());
}

std::string encode_wav(const Waveform& w, std::size_t* clipped) {
  if (w.sample_rate <= 0) throw DataError("cannot encode WAV with sample rate " + std::to_string(w.sample_rate));
  std::size_t clip_count = 0;
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::string s;
  s.reserve(44 + data_bytes);
  s += "RIFF";
  put32(s, 36 + data_bytes);
  s += "WAVEfmt ";
  put32(s, 16);
  put16(s, kFormatPcm);
  put16(s, 1);
  put32(s, static_cast<std::uint32_t>(w.sample_rate));
  put32(s, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put16(s, 2);
  put16(s, 16);
  s += "data";
  put32(s, data_bytes);
  for (double x : w.samples) {
    if (!std::isfinite(x)) throw DataError("cannot encode non-finite sample");
    long v = std::lround(x * 32768.0);
    if (v > 32767) {
      v = 32767;
      ++clip_count;
    } else if (v < -32768) {
      v = -32768;
      ++clip_count;
    }
    put16(s, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  if (clipped) *clipped = clip_count;
  return s;
}

std::size_t write_wav(const fs::path& path, const Waveform& w) {
  std::size_t clipped = 0;
  write_text(path, encode_wav(w, &clipped));
  if (clipped > 0) warn(path.string() + ": clipped " + std::to_string(clipped) + " sample(s)");
  return clipped;
}

std::vector<Waveform> read_wav_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Waveform> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_wav(f));
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

UtterancePool parse_pool(std::string_view jsonl, double min_duration, const fs::path& base_dir) {
  UtterancePool pool;
  std::set<std::string> seen_speakers;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    std::string_view line = jsonl.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (split_ws(line).empty()) continue;
    const std::string where = "manifest line " + std::to_string(line_no);
    UtteranceRecord r;
    try {
      auto j = json::parse(line);
      r.id = j.at("id").get<std::string>();
      r.speaker = j.at("speaker").get<std::string>();
      r.duration = j.at("duration").get<double>();
      r.audio = j.at("path").get<std::string>();
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!(r.duration > 0.0)) throw DataError(where + ": duration must be positive");
    if (r.audio.empty()) throw DataError(where + ": empty path");
    if (!ids.insert(r.id).second) throw DataError(where + ": duplicate utterance id " + r.id);
    seen_speakers.insert(r.speaker);
    if (r.duration < min_duration) continue;
    if (!base_dir.empty() && fs::path(r.audio).is_relative()) r.audio = (base_dir / r.audio).string();
    pool[r.speaker].push_back(std::move(r));
  }
  for (const auto& s : seen_speakers) {
    if (!pool.count(s)) warn("speaker " + s + " has no utterances after filtering; dropped");
  }
  if (pool.empty()) throw DataError("empty pool");
  return pool;
}

UtterancePool load_pool(const fs::path& manifest, double min_duration) {
  return parse_pool(read_text(manifest), min_duration, manifest.parent_path());
}

// ---------------------------------------------------------------------------
// Parameters

namespace {

const char* const kBetaKeys[kNumTransitionTypes] = {"th", "ts", "ir", "bc"};

double number_field(const json& j, const std::string& name) {
  if (!j.is_number()) throw DataError("params: field " + name + " must be a number");
  return j.get<double>();
}

TypeVector vector_field(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != kNumTransitionTypes) {
    throw DataError("params: field " + name + " must be an array of 4 numbers");
  }
  TypeVector v{};
  for (std::size_t i = 0; i < kNumTransitionTypes; ++i) {
    v[i] = number_field(j[i], name + "[" + std::to_string(i) + "]");
  }
  return v;
}

const json& require(const json& j, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError("params: missing field " + key);
  return *it;
}

int int_field(const json& j, const std::string& name) {
  if (!j.is_number_integer()) throw DataError("params: field " + name + " must be an integer");
  return j.get<int>();
}

}  // namespace

std::string params_to_json(const SimParams& p, bool include_markov) {
  json j;
  json order = json::array();
  for (auto t : kTransitionOrder) order.push_back(std::string(to_string(t)));
  j["type_order"] = order;
  json beta = json::object();
  for (std::size_t i = 0; i < kNumTransitionTypes; ++i) beta[kBetaKeys[i]] = p.beta[i];
  j["beta"] = beta;
  j["epsilon"] = p.epsilon;
  j["mode"] = std::string(to_string(p.mode));
  j["p_ind"] = p.p_ind;
  if (include_markov) {
    json rows = json::array();
    for (const auto& row : p.p_markov) rows.push_back(row);
    j["p_markov"] = rows;
  }
  j["n_spk"] = p.n_spk;
  j["n_utt"] = p.n_utt;
  j["snr_choices"] = p.snr_choices;
  return j.dump(2) + "\n";
}

SimParams params_from_json(std::string_view text, std::vector<std::string>* notes) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("params: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("params: top level must be an object");

  // Position of each declared type within the canonical order.
  std::array<std::size_t, kNumTransitionTypes> perm{0, 1, 2, 3};
  if (auto it = j.find("type_order"); it != j.end()) {
    if (!it->is_array() || it->size() != kNumTransitionTypes) {
      throw DataError("params: field type_order must list the 4 transition types");
    }
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < kNumTransitionTypes; ++i) {
      auto t = (*it)[i].is_string() ? parse_transition((*it)[i].get<std::string>()) : std::nullopt;
      if (!t || !seen.insert(index_of(*t)).second) {
        throw DataError("params: field type_order must be a permutation of TH, TS, IR, BC");
      }
      perm[i] = index_of(*t);
    }
  }

  SimParams p;
  const json& beta = require(j, "beta");
  if (!beta.is_object()) throw DataError("params: field beta must be an object");
  for (std::size_t i = 0; i < kNumTransitionTypes; ++i) {
    const std::string key = std::string("beta.") + kBetaKeys[i];
    auto it = beta.find(kBetaKeys[i]);
    if (it == beta.end() || it->is_null()) throw DataError("params: missing field " + key);
    p.beta[i] = number_field(*it, key);
  }

  if (auto it = j.find("epsilon"); it != j.end()) {
    p.epsilon = number_field(*it, "epsilon");
  } else {
    p.epsilon = kDefaultEpsilon;
    if (notes) notes->push_back("epsilon missing; using default 0.03");
  }

  const json& mode = require(j, "mode");
  auto m = mode.is_string() ? parse_selection(mode.get<std::string>()) : std::nullopt;
  if (!m) throw DataError("params: field mode must be \"random\" or \"markov\"");
  p.mode = *m;

  TypeVector p_ind = vector_field(require(j, "p_ind"), "p_ind");
  for (std::size_t i = 0; i < kNumTransitionTypes; ++i) p.p_ind[perm[i]] = p_ind[i];

  if (auto it = j.find("p_markov"); it != j.end()) {
    if (!it->is_array() || it->size() != kNumTransitionTypes) {
      throw DataError("params: field p_markov must be a 4x4 array");
    }
    for (std::size_t r = 0; r < kNumTransitionTypes; ++r) {
      TypeVector row = vector_field((*it)[r], "p_markov[" + std::to_string(r) + "]");
      for (std::size_t c = 0; c < kNumTransitionTypes; ++c) p.p_markov[perm[r]][perm[c]] = row[c];
    }
  } else if (p.mode == SelectionMode::kRandom) {
    for (std::size_t r = 0; r < kNumTransitionTypes; ++r) {
      for (std::size_t c = 0; c < kNumTransitionTypes; ++c) p.p_markov[r][c] = p.p_ind[r];
    }
    if (notes) notes->push_back("p_markov missing; using the independent chain built from p_ind");
  } else {
    throw DataError("params: missing field p_markov");
  }

  p.n_spk = int_field(require(j, "n_spk"), "n_spk");
  p.n_utt = int_field(require(j, "n_utt"), "n_utt");
  const json& snr = require(j, "snr_choices");
  if (!snr.is_array()) throw DataError("params: field snr_choices must be an array");
  for (std::size_t i = 0; i < snr.size(); ++i) {
    p.snr_choices.push_back(number_field(snr[i], "snr_choices[" + std::to_string(i) + "]"));
  }

  auto violations = validate_params(p);
  if (!violations.empty()) {
    std::string msg = "params:";
    for (const auto& v : violations) msg += " " + v + ";";
    throw DataError(msg);
  }
  return p;
}

SimParams load_params(const fs::path& path, std::vector<std::string>* notes) {
  return params_from_json(read_text(path), notes);
}

void save_params(const fs::path& path, const SimParams& p) { write_text(path, params_to_json(p)); }

// ---------------------------------------------------------------------------
// Plan sidecar

std::string plan_to_json(const MixturePlan& plan) {
  json j;
  j["mixture_id"] = plan.mixture_id;
  j["seed"] = plan.seed;
  json placements = json::array();
  for (const auto& p : plan.placements) {
    json e;
    e["id"] = p.id;
    e["speaker"] = p.speaker;
    e["onset"] = p.onset;
    e["duration"] = p.duration;
    e["transition"] = p.transition ? json(std::string(to_string(*p.transition))) : json(nullptr);
    placements.push_back(std::move(e));
  }
  j["placements"] = placements;
  return j.dump() + "\n";
}

MixturePlan plan_from_json(std::string_view text) {
  MixturePlan plan;
  try {
    auto j = json::parse(text);
    plan.mixture_id = j.at("mixture_id").get<std::string>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("placements")) {
      PlacedUtterance p;
      p.id = e.at("id").get<std::string>();
      p.speaker = e.at("speaker").get<std::string>();
      p.onset = e.at("onset").get<double>();
      p.duration = e.value("duration", 0.0);
      if (auto it = e.find("transition"); it != e.end() && it->is_string()) {
        p.transition = parse_transition(it->get<std::string>());
      }
      plan.placements.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("plan sidecar: ") + e.what());
  }
  return plan;
}

}  // namespace convmix
