// voicegate/speaker.hpp

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
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "voicegate/audio.hpp"
#include "voicegate/error.hpp"
#include "voicegate/frontend.hpp"
#include "voicegate/hmm.hpp"
#include "voicegate/util.hpp"

namespace voicegate {

inline constexpr int kProfileFormatVersion = 1;
inline constexpr double kDefaultThresholdK = 2.0;

/// Where the enrollment scores behind the threshold come from.
enum class ThresholdScoring {
  /// Utterance i is scored by a model trained on all the others. Tracks
  /// the score a fresh genuine utterance gets.
  LeaveOneOut,
  /// Every utterance is scored by the final model, which was trained on it.
  /// Optimistic: with few utterances most genuine attempts fall below.
  Resubstitution,
};

inline std::string_view to_string(ThresholdScoring s) {
  return s == ThresholdScoring::LeaveOneOut ? "leave_one_out" : "resubstitution";
}

inline ThresholdScoring parse_threshold_scoring(std::string_view s) {
  if (s == "leave_one_out") return ThresholdScoring::LeaveOneOut;
  if (s == "resubstitution") return ThresholdScoring::Resubstitution;
  throw Error(ErrorCode::InvalidConfig, "unknown threshold scoring '" + std::string(s) + "'");
}

struct EnrollStats {
  int n_utterances = 0;
  double mean_score = 0.0;
  double std_score = 0.0;

  friend bool operator==(const EnrollStats &, const EnrollStats &) = default;
};

struct SpeakerProfile {
  std::string speaker_id;
  GmmHmm model;
  /// Per-frame average log-likelihood; scores at or above it are accepted.
  double threshold = 0.0;
  double threshold_k = kDefaultThresholdK;
  ThresholdScoring threshold_scoring = ThresholdScoring::LeaveOneOut;
  EnrollStats enroll_stats;
  std::uint64_t frontend_fingerprint = 0;
  FrontendConfig frontend;
  int format_version = kProfileFormatVersion;

  friend bool operator==(const SpeakerProfile &, const SpeakerProfile &) = default;
};

struct VerificationResult {
  bool accepted = false;
  double score = 0.0;
  double threshold = 0.0;
  double margin = 0.0;
};

struct IdentificationResult {
  std::string best_speaker_id;
  std::vector<std::pair<std::string, double>> ranked_scores;
};

/// The one formula for the decision threshold. Enrollment and profile
/// validation both go through here so the value recomputes bit-exactly.
inline double compute_threshold(const EnrollStats &stats, double k) {
  return stats.mean_score - k * stats.std_score;
}

/// Speaker ids double as registry file names.
inline bool is_valid_speaker_id(std::string_view id) {
  if (id.empty() || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-' || c == '.';
  });
}

/// Per-frame average forward log-likelihood.
inline double score(const GmmHmm &model, const FeatureSequence &features) {
  const ForwardBackwardResult fb = forward_backward(model, features);
  return fb.log_likelihood / static_cast<double>(features.size());
}

/// Mean and population standard deviation (Welford), exact for constant input.
inline EnrollStats summarize_scores(std::span<const double> scores) {
  EnrollStats st;
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double s : scores) {
    ++k;
    const double delta = s - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (s - mean);
  }
  st.n_utterances = static_cast<int>(k);
  st.mean_score = mean;
  st.std_score = k > 0 ? std::sqrt(m2 / static_cast<double>(k)) : 0.0;
  return st;
}

/// Builds a profile from already extracted features.
inline SpeakerProfile enroll_features(const std::string &speaker_id,
                                      const std::vector<FeatureSequence> &features,
                                      const FrontendConfig &frontend_cfg,
                                      const TrainConfig &train_cfg, double threshold_k,
                                      ThresholdScoring scoring = ThresholdScoring::LeaveOneOut) {
  if (!is_valid_speaker_id(speaker_id))
    throw Error(ErrorCode::BadArguments, "invalid speaker id '" + speaker_id + "'");
  if (features.size() < 2)
    throw Error(ErrorCode::TooFewUtterances,
                "need at least 2 enrollment utterances, got " + std::to_string(features.size()));
  for (const auto &f : features)
    if (f.config_fingerprint != frontend_cfg.fingerprint())
      throw Error(ErrorCode::ConfigMismatch, "features were made with a different front-end");

  SpeakerProfile p;
  p.speaker_id = speaker_id;
  p.model = train(features, train_cfg).model;
  std::vector<double> scores;
  scores.reserve(features.size());
  if (scoring == ThresholdScoring::Resubstitution) {
    for (const auto &f : features) scores.push_back(score(p.model, f));
  } else {
    std::vector<FeatureSequence> rest;
    for (std::size_t i = 0; i < features.size(); ++i) {
      rest.clear();
      for (std::size_t j = 0; j < features.size(); ++j)
        if (j != i) rest.push_back(features[j]);
      scores.push_back(score(train(rest, train_cfg).model, features[i]));
    }
  }
  p.enroll_stats = summarize_scores(scores);
  p.threshold_k = threshold_k;
  p.threshold_scoring = scoring;
  p.threshold = compute_threshold(p.enroll_stats, threshold_k);
  p.frontend = frontend_cfg;
  p.frontend_fingerprint = frontend_cfg.fingerprint();
  return p;
}

/// Enrollment phase: features per utterance, model training, then a
/// speaker-specific threshold of mean - k * std over the enrollment scores.
inline SpeakerProfile enroll(const std::string &speaker_id, const std::vector<AudioSignal> &utterances,
                             const FrontendConfig &frontend_cfg, const TrainConfig &train_cfg,
                             double threshold_k = kDefaultThresholdK,
                             ThresholdScoring scoring = ThresholdScoring::LeaveOneOut) {
  if (utterances.size() < 2)
    throw Error(ErrorCode::TooFewUtterances,
                "need at least 2 enrollment utterances, got " + std::to_string(utterances.size()));
  std::vector<FeatureSequence> features;
  features.reserve(utterances.size());
  for (const auto &u : utterances) features.push_back(extract_features(u, frontend_cfg));
  return enroll_features(speaker_id, features, frontend_cfg, train_cfg, threshold_k, scoring);
}

inline VerificationResult verify_features(const SpeakerProfile &profile, const FeatureSequence &features) {
  if (features.config_fingerprint != profile.frontend_fingerprint)
    throw Error(ErrorCode::ConfigMismatch,
                "features for '" + profile.speaker_id + "' come from a different front-end");
  VerificationResult r;
  r.score = score(profile.model, features);
  r.threshold = profile.threshold;
  r.margin = r.score - r.threshold;
  r.accepted = r.margin >= 0.0;
  return r;
}

inline VerificationResult verify(const SpeakerProfile &profile, const AudioSignal &utterance,
                                 const FrontendConfig &frontend_cfg) {
  if (frontend_cfg.fingerprint() != profile.frontend_fingerprint)
    throw Error(ErrorCode::ConfigMismatch, "front-end config differs from the one '" +
                                               profile.speaker_id + "' enrolled with");
  return verify_features(profile, extract_features(utterance, frontend_cfg));
}

inline IdentificationResult identify_features(const std::vector<SpeakerProfile> &profiles,
                                              const FeatureSequence &features) {
  if (profiles.empty()) throw Error(ErrorCode::EmptyRegistry, "no enrolled speakers");
  IdentificationResult r;
  r.ranked_scores.reserve(profiles.size());
  for (const auto &p : profiles) {
    if (p.frontend_fingerprint != features.config_fingerprint)
      throw Error(ErrorCode::ConfigMismatch, "profile '" + p.speaker_id + "' uses another front-end");
    r.ranked_scores.emplace_back(p.speaker_id, score(p.model, features));
  }
  std::sort(r.ranked_scores.begin(), r.ranked_scores.end(), [](const auto &a, const auto &b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  r.best_speaker_id = r.ranked_scores.front().first;
  return r;
}

/// Closed-set identification: every profile is scored, best first.
inline IdentificationResult identify(const std::vector<SpeakerProfile> &profiles,
                                     const AudioSignal &utterance, const FrontendConfig &frontend_cfg) {
  if (profiles.empty()) throw Error(ErrorCode::EmptyRegistry, "no enrolled speakers");
  return identify_features(profiles, extract_features(utterance, frontend_cfg));
}

// ---------------------------------------------------------------------------
// Persistence

namespace detail {

using nlohmann::json;

inline json frontend_to_json(const FrontendConfig &c) {
  json j;
  j["frame_ms"] = c.frame_ms;
  j["hop_ms"] = c.hop_ms;
  j["fft_size"] = c.fft_size;
  j["n_filters"] = c.n_filters;
  j["n_coeffs"] = c.n_coeffs;
  j["f_min_hz"] = c.f_min_hz;
  j["f_max_hz"] = c.f_max_hz ? json(*c.f_max_hz) : json("nyquist");
  j["use_cmn"] = c.use_cmn;
  j["pre_emphasis"] = c.pre_emphasis;
  j["vad"] = {{"frame_ms", c.vad.frame_ms},
              {"energy_floor_ratio", c.vad.energy_floor_ratio},
              {"margin_frames", c.vad.margin_frames}};
  return j;
}

inline FrontendConfig frontend_from_json(const json &j) {
  FrontendConfig c;
  c.frame_ms = j.at("frame_ms").get<double>();
  c.hop_ms = j.at("hop_ms").get<double>();
  c.fft_size = j.at("fft_size").get<int>();
  c.n_filters = j.at("n_filters").get<int>();
  c.n_coeffs = j.at("n_coeffs").get<int>();
  c.f_min_hz = j.at("f_min_hz").get<double>();
  const json &fmax = j.at("f_max_hz");
  if (fmax.is_string()) {
    if (fmax.get<std::string>() != "nyquist") throw Error(ErrorCode::CorruptProfile, "bad f_max_hz");
    c.f_max_hz.reset();
  } else {
    c.f_max_hz = fmax.get<double>();
  }
  c.use_cmn = j.at("use_cmn").get<bool>();
  c.pre_emphasis = j.at("pre_emphasis").get<double>();
  const json &vad = j.at("vad");
  c.vad.frame_ms = vad.at("frame_ms").get<double>();
  c.vad.energy_floor_ratio = vad.at("energy_floor_ratio").get<double>();
  c.vad.margin_frames = vad.at("margin_frames").get<int>();
  return c;
}

inline json model_to_json(const GmmHmm &m) {
  json j;
  j["topology"] = std::string(to_string(m.topology));
  j["dim"] = m.dim;
  j["n_states"] = m.n_states();
  j["pi"] = m.pi;
  json trans = json::array();
  for (std::size_t i = 0; i < m.trans.rows(); ++i) {
    const auto row = m.trans.row(i);
    trans.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["trans"] = std::move(trans);
  j["var_floor"] = m.var_floor;
  json states = json::array();
  for (const auto &mix : m.states) {
    json comps = json::array();
    for (const auto &g : mix) comps.push_back({{"weight", g.weight}, {"mean", g.mean}, {"var", g.var}});
    states.push_back(std::move(comps));
  }
  j["states"] = std::move(states);
  return j;
}

inline GmmHmm model_from_json(const json &j) {
  GmmHmm m;
  m.topology = parse_topology(j.at("topology").get<std::string>());
  m.dim = j.at("dim").get<std::size_t>();
  const auto n = j.at("n_states").get<std::size_t>();
  m.pi = j.at("pi").get<std::vector<double>>();
  const auto rows = j.at("trans").get<std::vector<std::vector<double>>>();
  if (rows.size() != n) throw Error(ErrorCode::CorruptProfile, "transition matrix has wrong shape");
  m.trans = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) throw Error(ErrorCode::CorruptProfile, "transition row has wrong length");
    for (std::size_t k = 0; k < n; ++k) m.trans(i, k) = rows[i][k];
  }
  m.var_floor = j.at("var_floor").get<std::vector<double>>();
  for (const auto &comps : j.at("states")) {
    Mixture mix;
    for (const auto &c : comps) {
      GaussianComponent g;
      g.weight = c.at("weight").get<double>();
      g.mean = c.at("mean").get<std::vector<double>>();
      g.var = c.at("var").get<std::vector<double>>();
      mix.push_back(std::move(g));
    }
    m.states.push_back(std::move(mix));
  }
  if (m.states.size() != n) throw Error(ErrorCode::CorruptProfile, "state count mismatch");
  return m;
}

}  // namespace detail

/// Profile as a JSON document. Doubles are written in shortest round-trip
/// form, so load(save(p)) restores every parameter bit for bit.
inline std::string profile_to_string(const SpeakerProfile &p) {
  detail::json j;
  j["format_version"] = p.format_version;
  j["speaker_id"] = p.speaker_id;
  j["threshold"] = p.threshold;
  j["threshold_k"] = p.threshold_k;
  j["threshold_scoring"] = std::string(to_string(p.threshold_scoring));
  j["enroll_stats"] = {{"n_utterances", p.enroll_stats.n_utterances},
                       {"mean_score", p.enroll_stats.mean_score},
                       {"std_score", p.enroll_stats.std_score}};
  j["frontend_fingerprint"] = to_hex64(p.frontend_fingerprint);
  j["frontend"] = detail::frontend_to_json(p.frontend);
  j["model"] = detail::model_to_json(p.model);
  return j.dump(1) + "\n";
}

/// Parses and validates a profile document.
inline SpeakerProfile profile_from_string(std::string_view text) {
  detail::json j;
  try {
    j = detail::json::parse(text);
  } catch (const detail::json::exception &e) {
    throw Error(ErrorCode::CorruptProfile, e.what());
  }

  SpeakerProfile p;
  try {
    p.format_version = j.at("format_version").get<int>();
    if (p.format_version != kProfileFormatVersion)
      throw Error(ErrorCode::UnsupportedVersion,
                  "profile format_version " + std::to_string(p.format_version));
    p.speaker_id = j.at("speaker_id").get<std::string>();
    p.threshold = j.at("threshold").get<double>();
    p.threshold_k = j.at("threshold_k").get<double>();
    p.threshold_scoring = parse_threshold_scoring(j.at("threshold_scoring").get<std::string>());
    const auto &st = j.at("enroll_stats");
    p.enroll_stats.n_utterances = st.at("n_utterances").get<int>();
    p.enroll_stats.mean_score = st.at("mean_score").get<double>();
    p.enroll_stats.std_score = st.at("std_score").get<double>();
    p.frontend_fingerprint = std::stoull(j.at("frontend_fingerprint").get<std::string>(), nullptr, 16);
    p.frontend = detail::frontend_from_json(j.at("frontend"));
    p.model = detail::model_from_json(j.at("model"));
  } catch (const Error &e) {
    if (e.code() == ErrorCode::UnsupportedVersion) throw;
    throw Error(ErrorCode::CorruptProfile, e.what());
  } catch (const std::exception &e) {
    throw Error(ErrorCode::CorruptProfile, e.what());
  }

  if (!is_valid_speaker_id(p.speaker_id))
    throw Error(ErrorCode::CorruptProfile, "invalid speaker id");
  if (p.enroll_stats.n_utterances < 1)
    throw Error(ErrorCode::CorruptProfile, "n_utterances must be >= 1");
  if (p.threshold != compute_threshold(p.enroll_stats, p.threshold_k))
    throw Error(ErrorCode::CorruptProfile, "threshold does not match enrollment statistics");
  if (p.frontend_fingerprint != p.frontend.fingerprint())
    throw Error(ErrorCode::CorruptProfile, "front-end fingerprint does not match front-end config");
  if (auto bad = find_invariant_violation(p.model))
    throw Error(ErrorCode::CorruptProfile, *bad);
  return p;
}

/// Writes to a sibling temp file and renames it over the target, so readers
/// see either the old profile or the new one.
inline void save_profile(const SpeakerProfile &profile, const std::filesystem::path &path) {
  const std::string text = profile_to_string(profile);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "rename to " + path.string() + ": " + ec.message());
}

inline SpeakerProfile load_profile(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return profile_from_string(text);
}

inline std::filesystem::path profile_path(const std::filesystem::path &registry_dir,
                                          const std::string &speaker_id) {
  return registry_dir / (speaker_id + ".profile");
}

/// Every `*.profile` in the directory, ordered by speaker id.
inline std::vector<SpeakerProfile> load_registry(const std::filesystem::path &registry_dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(registry_dir, ec))
    throw Error(ErrorCode::EmptyRegistry, registry_dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto &entry : std::filesystem::directory_iterator(registry_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".profile")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<SpeakerProfile> out;
  out.reserve(files.size());
  for (const auto &f : files) out.push_back(load_profile(f));
  if (out.empty()) throw Error(ErrorCode::EmptyRegistry, "no profiles in " + registry_dir.string());
  return out;
}

}  // namespace voicegate
