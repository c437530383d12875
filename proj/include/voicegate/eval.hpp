// voicegate/eval.hpp

// Copyright 2026  The voicegate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "voicegate/audio.hpp"
#include "voicegate/error.hpp"
#include "voicegate/frontend.hpp"
#include "voicegate/hmm.hpp"
#include "voicegate/speaker.hpp"
#include "voicegate/util.hpp"

namespace voicegate {

inline double signal_power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double p = 0.0;
  for (double v : x) p += v * v;
  return p / static_cast<double>(x.size());
}

/// Adds seeded zero-mean Gaussian noise. The realized noise is rescaled so
/// the measured SNR equals snr_db, not just its expectation.
inline AudioSignal add_white_noise(const AudioSignal &signal, double snr_db, std::uint64_t seed) {
  const double ps = signal_power(signal.samples);
  if (!(ps > 0.0)) throw Error(ErrorCode::SilentSignal, "signal power is zero; SNR undefined");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> noise(signal.samples.size());
  for (auto &v : noise) v = gauss(rng);
  const double pn = signal_power(noise);
  const double gain = std::sqrt(ps / std::pow(10.0, snr_db / 10.0) / pn);

  AudioSignal out = signal;
  for (std::size_t i = 0; i < noise.size(); ++i) out.samples[i] += gain * noise[i];
  return out;
}

/// Source-filter description of one synthetic talker.
struct SynthSpeakerSpec {
  double f0_hz = 120.0;
  std::array<double, 3> formants_hz{500.0, 1500.0, 2500.0};
  std::array<double, 3> formant_bandwidths_hz{80.0, 100.0, 120.0};
  double jitter_pct = 2.0;
  double duration_s = 0.5;
  int sample_rate_hz = 16000;

  void validate() const {
    if (!(f0_hz >= 50.0 && f0_hz <= 400.0))
      throw Error(ErrorCode::InvalidSpec, "f0 must lie in [50, 400] Hz");
    const double nyquist = sample_rate_hz / 2.0;
    for (std::size_t i = 0; i < 3; ++i) {
      if (!(formants_hz[i] > 0.0) || formants_hz[i] >= nyquist)
        throw Error(ErrorCode::InvalidSpec, "formant outside (0, Nyquist)");
      if (i > 0 && !(formants_hz[i] > formants_hz[i - 1]))
        throw Error(ErrorCode::InvalidSpec, "formants must be strictly increasing");
      if (!(formant_bandwidths_hz[i] > 0.0))
        throw Error(ErrorCode::InvalidSpec, "formant bandwidths must be positive");
    }
    if (!(jitter_pct >= 0.0 && jitter_pct < 50.0))
      throw Error(ErrorCode::InvalidSpec, "jitter_pct must lie in [0, 50)");
    if (!(duration_s > 0.0)) throw Error(ErrorCode::InvalidSpec, "duration must be positive");
    if (sample_rate_hz < kMinSampleRateHz || sample_rate_hz > kMaxSampleRateHz)
      throw Error(ErrorCode::InvalidSpec, "unsupported sample rate");
  }
};

/// Eight talkers spread over the vowel space and the pitch range.
inline std::vector<SynthSpeakerSpec> default_speaker_specs() {
  struct Row {
    double f0;
    std::array<double, 3> f;
  };
  static constexpr std::array<Row, 8> rows{{
      {110.0, {730.0, 1090.0, 2440.0}},
      {125.0, {300.0, 870.0, 2240.0}},
      {140.0, {270.0, 2290.0, 3010.0}},
      {165.0, {530.0, 1840.0, 2480.0}},
      {190.0, {570.0, 840.0, 2410.0}},
      {210.0, {660.0, 1720.0, 2410.0}},
      {235.0, {440.0, 1020.0, 2240.0}},
      {260.0, {490.0, 1350.0, 1690.0}},
  }};
  std::vector<SynthSpeakerSpec> specs;
  for (const auto &r : rows) {
    SynthSpeakerSpec s;
    s.f0_hz = r.f0;
    s.formants_hz = r.f;
    s.formant_bandwidths_hz = {60.0 + r.f[0] * 0.05, 70.0 + r.f[1] * 0.04, 110.0 + r.f[2] * 0.02};
    specs.push_back(s);
  }
  return specs;
}

inline std::string synth_speaker_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "spk%02zu", index + 1);
  return buf;
}

namespace detail {

/// Two-pole resonator with unit gain at DC, centre frequency given per
/// sample so formants can glide.
inline void resonate(std::vector<double> &x, std::span<const double> freq, double bandwidth,
                     int rate) {
  const double r = std::exp(-std::numbers::pi * bandwidth / rate);
  const double d = -r * r;
  double y1 = 0.0, y2 = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double c = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq[n] / rate);
    const double y = (1.0 - c - d) * x[n] + c * y1 + d * y2;
    y2 = y1;
    y1 = y;
    x[n] = y;
  }
}

}  // namespace detail

/// One utterance: a glottal impulse train through three formant resonators,
/// a -40 dB noise floor, peak-normalized to 0.5. Each of f0 and the formants
/// gets a per-utterance offset of up to jitter_pct plus a slow sinusoidal
/// glide of the same order within the utterance.
inline AudioSignal synth_utterance(const SynthSpeakerSpec &spec, std::mt19937_64 &rng) {
  spec.validate();
  const int rate = spec.sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * rate));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double j = spec.jitter_pct / 100.0;

  auto trajectory = [&](double base) {
    const double offset = unit(rng);
    const double cycles = 1.0 + 0.5 * unit(rng);
    const double phase = std::numbers::pi * unit(rng);
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n);
      f[i] = base * (1.0 + j * (offset + std::sin(2.0 * std::numbers::pi * cycles * t + phase)));
    }
    return f;
  };

  const std::vector<double> f0 = trajectory(spec.f0_hz);
  std::array<std::vector<double>, 3> formants;
  for (std::size_t i = 0; i < 3; ++i) formants[i] = trajectory(spec.formants_hz[i]);

  // Small cycle-to-cycle pitch and amplitude wobble on top of the glide.
  std::vector<double> x(n, 0.0);
  double pos = rate / f0[0] * 0.5 * (1.0 + unit(rng));
  while (pos < static_cast<double>(n)) {
    const auto idx = static_cast<std::size_t>(pos);
    x[idx] += 1.0 + 0.05 * unit(rng);
    pos += rate / f0[idx] * (1.0 + 0.005 * unit(rng));
  }
  for (std::size_t i = 0; i < 3; ++i)
    detail::resonate(x, formants[i], spec.formant_bandwidths_hz[i], rate);

  const double noise_std = std::sqrt(signal_power(x) * 1e-4);
  for (auto &v : x) v += noise_std * gauss(rng);

  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  AudioSignal out;
  out.sample_rate_hz = rate;
  out.samples = std::move(x);
  if (peak > 0.0)
    for (auto &v : out.samples) v *= 0.5 / peak;
  return out;
}

/// Deterministic corpus keyed spk01, spk02, ... Each speaker draws from its
/// own generator, so a speaker's utterances do not depend on the others.
inline std::map<std::string, std::vector<AudioSignal>> synth_corpus(
    const std::vector<SynthSpeakerSpec> &specs, int utterances_per_speaker, std::uint64_t seed) {
  if (specs.empty()) throw Error(ErrorCode::InvalidSpec, "no speaker specs");
  if (utterances_per_speaker < 1)
    throw Error(ErrorCode::InvalidSpec, "utterances_per_speaker must be >= 1");
  for (const auto &s : specs) s.validate();

  std::map<std::string, std::vector<AudioSignal>> corpus;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    std::mt19937_64 rng(detail::mix_seed(seed, i));
    auto &utts = corpus[synth_speaker_id(i)];
    for (int u = 0; u < utterances_per_speaker; ++u) utts.push_back(synth_utterance(specs[i], rng));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Trials and metrics

struct Trial {
  std::string claimed_id;
  std::string true_id;
  AudioSignal signal;
};

struct TrialSet {
  std::vector<Trial> genuine;
  std::vector<Trial> impostor;
};

struct Metrics {
  double identification_accuracy = 0.0;
  double far = 0.0;
  double frr = 0.0;
  std::map<std::pair<std::string, std::string>, int> confusion;  // (true, predicted)
  int n_genuine = 0;
  int n_impostor = 0;
  int n_identification = 0;
  int correct_identifications = 0;
  int false_rejections = 0;
  int false_acceptances = 0;

  /// (FAR + FRR) / 2.
  double half_total_error() const { return 0.5 * (far + frr); }
};

/// What happened to one trial.
struct TrialOutcome {
  bool genuine = true;
  std::string true_id;
  /// Identification winner; only meaningful for genuine trials.
  std::string predicted_id;
  /// Verification decision against the claimed identity.
  bool accepted = false;
};

/// Folds outcomes into rates and the confusion matrix. Empty categories
/// report a rate of 0.
inline Metrics tally(const std::vector<TrialOutcome> &outcomes) {
  Metrics m;
  for (const auto &o : outcomes) {
    if (o.genuine) {
      ++m.n_genuine;
      ++m.n_identification;
      ++m.confusion[{o.true_id, o.predicted_id}];
      if (o.predicted_id == o.true_id) ++m.correct_identifications;
      if (!o.accepted) ++m.false_rejections;
    } else {
      ++m.n_impostor;
      if (o.accepted) ++m.false_acceptances;
    }
  }
  auto rate = [](int num, int den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
  };
  m.identification_accuracy = rate(m.correct_identifications, m.n_identification);
  m.frr = rate(m.false_rejections, m.n_genuine);
  m.far = rate(m.false_acceptances, m.n_impostor);
  return m;
}

/// Scores every trial against the registry. Identification runs on genuine
/// trials; FAR/FRR come from verifying each trial against its claim.
inline Metrics evaluate(const std::vector<SpeakerProfile> &registry, const TrialSet &trials,
                        const FrontendConfig &frontend_cfg) {
  if (trials.genuine.empty() && trials.impostor.empty())
    throw Error(ErrorCode::EmptyTrialSet, "no trials");
  if (registry.empty()) throw Error(ErrorCode::EmptyRegistry, "no enrolled speakers");
  const std::uint64_t fp = frontend_cfg.fingerprint();
  std::map<std::string, const SpeakerProfile *> by_id;
  for (const auto &p : registry) {
    if (p.frontend_fingerprint != fp)
      throw Error(ErrorCode::ConfigMismatch, "profile '" + p.speaker_id + "' uses another front-end");
    by_id[p.speaker_id] = &p;
  }
  auto lookup = [&by_id](const std::string &id) -> const SpeakerProfile & {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorCode::BadArguments, "trial names unknown speaker '" + id + "'");
    return *it->second;
  };

  std::vector<TrialOutcome> outcomes;
  outcomes.reserve(trials.genuine.size() + trials.impostor.size());
  for (const auto &t : trials.genuine) {
    const SpeakerProfile &claimed = lookup(t.claimed_id);
    const FeatureSequence f = extract_features(t.signal, frontend_cfg);
    outcomes.push_back({true, t.true_id, identify_features(registry, f).best_speaker_id,
                        verify_features(claimed, f).accepted});
  }
  for (const auto &t : trials.impostor) {
    const SpeakerProfile &claimed = lookup(t.claimed_id);
    outcomes.push_back({false, t.true_id, {},
                        verify_features(claimed, extract_features(t.signal, frontend_cfg)).accepted});
  }
  return tally(outcomes);
}

/// `key=value` lines, one per field; confusion cells as
/// `confusion.<true>.<predicted>=<count>` in key order.
inline std::string metrics_kv(const Metrics &m) {
  std::ostringstream os;
  os << "identification_accuracy=" << format_exact(m.identification_accuracy) << '\n'
     << "far=" << format_exact(m.far) << '\n'
     << "frr=" << format_exact(m.frr) << '\n'
     << "half_total_error=" << format_exact(m.half_total_error()) << '\n'
     << "n_identification=" << m.n_identification << '\n'
     << "n_genuine=" << m.n_genuine << '\n'
     << "n_impostor=" << m.n_impostor << '\n'
     << "correct_identifications=" << m.correct_identifications << '\n'
     << "false_rejections=" << m.false_rejections << '\n'
     << "false_acceptances=" << m.false_acceptances << '\n';
  for (const auto &[key, count] : m.confusion)
    os << "confusion." << key.first << '.' << key.second << '=' << count << '\n';
  return os.str();
}

inline std::string metrics_table(const Metrics &m) {
  std::ostringstream os;
  os << "Identification accuracy : " << format_fixed(100.0 * m.identification_accuracy, 2) << " % ("
     << m.correct_identifications << "/" << m.n_identification << ")\n"
     << "False acceptance (FAR)  : " << format_fixed(100.0 * m.far, 2) << " % ("
     << m.false_acceptances << "/" << m.n_impostor << ")\n"
     << "False rejection (FRR)   : " << format_fixed(100.0 * m.frr, 2) << " % ("
     << m.false_rejections << "/" << m.n_genuine << ")\n";

  std::vector<std::string> ids;
  for (const auto &[key, count] : m.confusion) {
    ids.push_back(key.first);
    ids.push_back(key.second);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.empty()) return os.str();

  std::size_t width = 6;
  for (const auto &id : ids) width = std::max(width, id.size() + 1);
  auto pad = [width](const std::string &s) { return s + std::string(width - s.size(), ' '); };
  os << "\nConfusion (rows: true, columns: predicted)\n" << pad("");
  for (const auto &id : ids) os << pad(id);
  os << '\n';
  for (const auto &row : ids) {
    os << pad(row);
    for (const auto &col : ids) {
      auto it = m.confusion.find({row, col});
      os << pad(std::to_string(it == m.confusion.end() ? 0 : it->second));
    }
    os << '\n';
  }
  return os.str();
}

/// One manifest line: `genuine|impostor <claimed_id> <true_id> <wav_path>`.
struct ManifestEntry {
  bool genuine = true;
  std::string claimed_id;
  std::string true_id;
  std::string wav_path;

  friend bool operator==(const ManifestEntry &, const ManifestEntry &) = default;
};

/// Blank lines and lines starting with '#' are skipped.
inline std::vector<ManifestEntry> parse_manifest(std::istream &in) {
  std::vector<ManifestEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string kind, extra;
    ManifestEntry e;
    if (!(fields >> kind >> e.claimed_id >> e.true_id >> e.wav_path) || (fields >> extra))
      throw Error(ErrorCode::BadArguments, "manifest line " + std::to_string(line_no) +
                                               ": expected 4 fields");
    if (kind == "genuine")
      e.genuine = true;
    else if (kind == "impostor")
      e.genuine = false;
    else
      throw Error(ErrorCode::BadArguments, "manifest line " + std::to_string(line_no) +
                                               ": unknown trial kind '" + kind + "'");
    if (e.genuine != (e.claimed_id == e.true_id))
      throw Error(ErrorCode::BadArguments,
                  "manifest line " + std::to_string(line_no) +
                      ": genuine trials must claim their own speaker, impostor trials another");
    out.push_back(std::move(e));
  }
  return out;
}

inline std::string format_manifest(const std::vector<ManifestEntry> &entries) {
  std::string s;
  for (const auto &e : entries)
    s += std::string(e.genuine ? "genuine " : "impostor ") + e.claimed_id + ' ' + e.true_id + ' ' +
         e.wav_path + '\n';
  return s;
}

/// Loads the WAVs a manifest points to (relative paths resolve against
/// base_dir). With snr_db set, every signal gets white noise seeded from
/// `seed` and the path text, so repeated files receive identical noise.
inline TrialSet load_trials(const std::vector<ManifestEntry> &entries,
                            const std::filesystem::path &base_dir, std::optional<double> snr_db = {},
                            std::uint64_t seed = 0) {
  TrialSet trials;
  for (const auto &e : entries) {
    const std::filesystem::path p(e.wav_path);
    AudioSignal sig = load_wav(p.is_absolute() ? p : base_dir / p);
    if (snr_db) sig = add_white_noise(sig, *snr_db, detail::mix_seed(seed, fnv1a64(e.wav_path)));
    Trial t{e.claimed_id, e.true_id, std::move(sig)};
    (e.genuine ? trials.genuine : trials.impostor).push_back(std::move(t));
  }
  return trials;
}

}  // namespace voicegate
