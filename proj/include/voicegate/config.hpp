// voicegate/config.hpp

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

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "voicegate/error.hpp"
#include "voicegate/frontend.hpp"
#include "voicegate/hmm.hpp"
#include "voicegate/speaker.hpp"

namespace voicegate {

/// Everything the command-line tool can be configured with. The endpoint
/// detector settings sit inside `frontend.vad`.
struct EngineConfig {
  FrontendConfig frontend;
  TrainConfig training = TrainConfig::text_independent();
  double threshold_k = kDefaultThresholdK;
  ThresholdScoring threshold_scoring = ThresholdScoring::LeaveOneOut;
  std::filesystem::path registry_dir = "registry";

  void validate() const {
    frontend.validate();
    training.validate();
    if (!std::isfinite(threshold_k)) throw Error(ErrorCode::InvalidConfig, "threshold_k must be finite");
    if (registry_dir.empty()) throw Error(ErrorCode::InvalidConfig, "registry_dir is empty");
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw Error(ErrorCode::InvalidConfig,
                std::string(key) + ": cannot parse '" + std::string(v) + "'");
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::InvalidConfig, std::string(key) + ": expected true/false");
}

}  // namespace detail

/// Applies one `key=value` setting. Unknown keys are errors.
inline void apply_config_setting(EngineConfig &cfg, std::string_view key, std::string_view v) {
  using detail::parse_bool;
  using detail::parse_number;
  FrontendConfig &fe = cfg.frontend;
  TrainConfig &tr = cfg.training;

  if (key == "frontend.frame_ms") fe.frame_ms = parse_number<double>(key, v);
  else if (key == "frontend.hop_ms") fe.hop_ms = parse_number<double>(key, v);
  else if (key == "frontend.fft_size") fe.fft_size = v == "auto" ? 0 : parse_number<int>(key, v);
  else if (key == "frontend.n_filters") fe.n_filters = parse_number<int>(key, v);
  else if (key == "frontend.n_coeffs") fe.n_coeffs = parse_number<int>(key, v);
  else if (key == "frontend.f_min_hz") fe.f_min_hz = parse_number<double>(key, v);
  else if (key == "frontend.f_max_hz") {
    if (v == "nyquist") fe.f_max_hz.reset();
    else fe.f_max_hz = parse_number<double>(key, v);
  }
  else if (key == "frontend.use_cmn") fe.use_cmn = parse_bool(key, v);
  else if (key == "frontend.pre_emphasis") fe.pre_emphasis = parse_number<double>(key, v);
  else if (key == "vad.frame_ms") fe.vad.frame_ms = parse_number<double>(key, v);
  else if (key == "vad.energy_floor_ratio") fe.vad.energy_floor_ratio = parse_number<double>(key, v);
  else if (key == "vad.margin_frames") fe.vad.margin_frames = parse_number<int>(key, v);
  else if (key == "training.n_states") tr.n_states = parse_number<int>(key, v);
  else if (key == "training.n_mix") tr.n_mix = parse_number<int>(key, v);
  else if (key == "training.topology") tr.topology = parse_topology(v);
  else if (key == "training.max_iters") tr.max_iters = parse_number<int>(key, v);
  else if (key == "training.rel_tol") tr.rel_tol = parse_number<double>(key, v);
  else if (key == "training.var_floor_ratio") tr.var_floor_ratio = parse_number<double>(key, v);
  else if (key == "training.seed") tr.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "threshold_k") cfg.threshold_k = parse_number<double>(key, v);
  else if (key == "threshold_scoring") cfg.threshold_scoring = parse_threshold_scoring(v);
  else if (key == "registry_dir") cfg.registry_dir = std::string(v);
  else throw Error(ErrorCode::InvalidConfig, "unknown config key '" + std::string(key) + "'");
}

/// Flat `section.key=value` document; `#` starts a comment line.
inline EngineConfig parse_config(std::istream &in) {
  EngineConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view s = detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": missing '='");
    apply_config_setting(cfg, detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

inline EngineConfig parse_config(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_config(in);
}

inline EngineConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "config " + path.string());
  return parse_config(in);
}

}  // namespace voicegate
