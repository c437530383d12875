// voicegate/audio.hpp

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
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "voicegate/error.hpp"

namespace voicegate {

inline constexpr int kMinSampleRateHz = 8000;
inline constexpr int kMaxSampleRateHz = 48000;
/// Rates below this are accepted but flagged: the front-end defaults assume
/// the signal carries content up to at least 5 kHz.
inline constexpr int kRecommendedSampleRateHz = 10000;

/// Mono signal, samples nominally in [-1, 1). Decoded 16-bit PCM is exactly
/// value / 32768; processed signals may leave that range.
struct AudioSignal {
  std::vector<double> samples;
  int sample_rate_hz = 16000;

  bool below_recommended_rate() const noexcept {
    return sample_rate_hz < kRecommendedSampleRateHz;
  }
  double duration_s() const noexcept {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }

  friend bool operator==(const AudioSignal &, const AudioSignal &) = default;
};

/// Energy-based endpoint detector settings.
struct VadConfig {
  double frame_ms = 25.0;
  double energy_floor_ratio = 0.05;
  int margin_frames = 3;

  void validate() const {
    if (!(frame_ms > 0.0))
      throw Error(ErrorCode::InvalidConfig, "vad.frame_ms must be > 0");
    if (!(energy_floor_ratio > 0.0 && energy_floor_ratio < 1.0))
      throw Error(ErrorCode::InvalidConfig,
                  "vad.energy_floor_ratio must lie in (0, 1)");
    if (margin_frames < 0)
      throw Error(ErrorCode::InvalidConfig, "vad.margin_frames must be >= 0");
  }

  friend bool operator==(const VadConfig &, const VadConfig &) = default;
};

inline constexpr double kDefaultPreEmphasis = 0.97;

namespace detail {

inline std::uint32_t read_u32le(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) |
         (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

inline std::uint16_t read_u16le(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

inline void put_u32le(std::vector<std::uint8_t> &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u16le(std::vector<std::uint8_t> &out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char *tag) {
  return std::equal(b.begin() + at, b.begin() + at + 4, tag);
}

}  // namespace detail

/// Decodes an in-memory RIFF/WAVE image. Accepts PCM (format 1), mono,
/// 16-bit only; unknown chunks are skipped.
inline AudioSignal decode_wav(std::span<const std::uint8_t> bytes) {
  using detail::read_u16le;
  using detail::read_u32le;
  using detail::tag_is;

  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE"))
    throw Error(ErrorCode::MalformedContainer, "missing RIFF/WAVE header");

  bool have_fmt = false;
  int sample_rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_size = read_u32le(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (chunk_size > bytes.size() - body)
      throw Error(ErrorCode::MalformedContainer, "chunk runs past end of file");

    if (tag_is(bytes, pos, "fmt ")) {
      if (chunk_size < 16)
        throw Error(ErrorCode::MalformedContainer, "fmt chunk shorter than 16 bytes");
      const std::uint16_t format = read_u16le(bytes, body);
      const std::uint16_t channels = read_u16le(bytes, body + 2);
      const std::uint32_t rate = read_u32le(bytes, body + 4);
      const std::uint16_t bits = read_u16le(bytes, body + 14);
      if (format != 1)
        throw Error(ErrorCode::UnsupportedFormat,
                    "audio format " + std::to_string(format) + " is not PCM");
      if (channels != 1)
        throw Error(ErrorCode::UnsupportedFormat,
                    std::to_string(channels) + " channels; only mono is supported");
      if (bits != 16)
        throw Error(ErrorCode::UnsupportedFormat,
                    std::to_string(bits) + " bits per sample; only 16 is supported");
      if (rate < static_cast<std::uint32_t>(kMinSampleRateHz))
        throw Error(ErrorCode::SampleRateTooLow,
                    std::to_string(rate) + " Hz is below " +
                        std::to_string(kMinSampleRateHz) + " Hz");
      if (rate > static_cast<std::uint32_t>(kMaxSampleRateHz))
        throw Error(ErrorCode::UnsupportedFormat,
                    std::to_string(rate) + " Hz is above " +
                        std::to_string(kMaxSampleRateHz) + " Hz");
      sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      if (!have_fmt)
        throw Error(ErrorCode::MalformedContainer, "data chunk precedes fmt chunk");
      if (chunk_size % 2 != 0)
        throw Error(ErrorCode::MalformedContainer, "odd-sized 16-bit data chunk");
      AudioSignal out;
      out.sample_rate_hz = sample_rate;
      out.samples.resize(chunk_size / 2);
      for (std::size_t i = 0; i < out.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(read_u16le(bytes, body + 2 * i));
        out.samples[i] = static_cast<double>(raw) / 32768.0;
      }
      return out;
    }
    // RIFF chunks are word aligned.
    pos = body + chunk_size + (chunk_size & 1u);
  }
  throw Error(ErrorCode::MalformedContainer,
              have_fmt ? "no data chunk" : "no fmt chunk");
}

inline AudioSignal load_wav(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

/// Quantizes to 16-bit PCM (round to nearest, saturating). Exact inverse of
/// decode_wav for any signal that came out of it.
inline std::vector<std::uint8_t> encode_wav(const AudioSignal &signal) {
  using detail::put_u16le;
  using detail::put_u32le;
  const auto data_bytes = static_cast<std::uint32_t>(signal.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32le(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32le(out, 16);
  put_u16le(out, 1);
  put_u16le(out, 1);
  put_u32le(out, static_cast<std::uint32_t>(signal.sample_rate_hz));
  put_u32le(out, static_cast<std::uint32_t>(signal.sample_rate_hz) * 2);
  put_u16le(out, 2);
  put_u16le(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32le(out, data_bytes);
  for (double s : signal.samples) {
    const double q = std::clamp(std::nearbyint(s * 32768.0), -32768.0, 32767.0);
    put_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

inline void save_wav(const AudioSignal &signal, const std::filesystem::path &path) {
  const auto bytes = encode_wav(signal);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

/// DC removal followed by first-order pre-emphasis:
/// y[n] = (x[n] - mean) - alpha * (x[n-1] - mean).
inline AudioSignal preprocess(const AudioSignal &signal, double alpha = kDefaultPreEmphasis) {
  if (signal.samples.empty()) throw Error(ErrorCode::EmptySignal, "preprocess");
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw Error(ErrorCode::InvalidConfig, "pre-emphasis must lie in [0, 1)");

  const auto &x = signal.samples;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());

  AudioSignal out;
  out.sample_rate_hz = signal.sample_rate_hz;
  out.samples.resize(x.size());
  out.samples[0] = x[0] - mean;
  for (std::size_t n = 1; n < x.size(); ++n)
    out.samples[n] = (x[n] - mean) - alpha * (x[n - 1] - mean);
  return out;
}

inline std::size_t ms_to_samples(double ms, int sample_rate_hz) {
  return static_cast<std::size_t>(
      std::max(1.0, std::round(ms * sample_rate_hz / 1000.0)));
}

/// Keeps the span between the first and last frame whose energy reaches
/// energy_floor_ratio of the loudest frame, padded by margin_frames.
inline AudioSignal trim_endpoints(const AudioSignal &signal, const VadConfig &cfg = {}) {
  cfg.validate();
  const std::size_t frame_len = ms_to_samples(cfg.frame_ms, signal.sample_rate_hz);
  const auto &x = signal.samples;
  if (x.size() < frame_len)
    throw Error(ErrorCode::NoSpeechDetected,
                "signal shorter than one " + std::to_string(cfg.frame_ms) + " ms frame");

  const std::size_t n_frames = x.size() / frame_len;
  std::vector<double> energy(n_frames, 0.0);
  for (std::size_t f = 0; f < n_frames; ++f)
    for (std::size_t i = f * frame_len; i < (f + 1) * frame_len; ++i)
      energy[f] += x[i] * x[i];

  const double floor = cfg.energy_floor_ratio * *std::max_element(energy.begin(), energy.end());
  std::size_t first = 0;
  while (energy[first] < floor) ++first;
  std::size_t last = n_frames - 1;
  while (energy[last] < floor) --last;

  const auto margin = static_cast<std::size_t>(cfg.margin_frames);
  first = first > margin ? first - margin : 0;
  last = std::min(n_frames - 1, last + margin);

  const std::size_t begin = first * frame_len;
  // A trailing partial frame rides along when the span reaches the end.
  const std::size_t end = last + 1 == n_frames ? x.size() : (last + 1) * frame_len;

  AudioSignal out;
  out.sample_rate_hz = signal.sample_rate_hz;
  out.samples.assign(x.begin() + static_cast<std::ptrdiff_t>(begin),
                     x.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

}  // namespace voicegate
