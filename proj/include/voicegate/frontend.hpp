// voicegate/frontend.hpp

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
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "voicegate/audio.hpp"
#include "voicegate/error.hpp"
#include "voicegate/matrix.hpp"
#include "voicegate/util.hpp"

namespace voicegate {

/// MFCC front-end parameters. The pre-emphasis and endpointing settings live
/// here too so that a single fingerprint covers every knob that shapes the
/// features a model was trained on.
struct FrontendConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  /// 0 selects the smallest power of two holding one frame (512 at 16 kHz).
  int fft_size = 0;
  int n_filters = 26;
  int n_coeffs = 13;
  double f_min_hz = 0.0;
  /// Unset means the Nyquist frequency of the signal being analysed.
  std::optional<double> f_max_hz;
  bool use_cmn = false;
  double pre_emphasis = kDefaultPreEmphasis;
  VadConfig vad;

  std::size_t frame_samples(int rate) const { return ms_to_samples(frame_ms, rate); }
  std::size_t hop_samples(int rate) const { return ms_to_samples(hop_ms, rate); }

  std::size_t fft_size_for(int rate) const {
    if (fft_size > 0) return static_cast<std::size_t>(fft_size);
    std::size_t n = 1;
    while (n < frame_samples(rate)) n <<= 1;
    return n;
  }

  double f_max_for(int rate) const { return f_max_hz.value_or(rate / 2.0); }

  /// Rate-independent checks.
  void validate() const {
    if (!(frame_ms > 0.0) || !(hop_ms > 0.0) || hop_ms > frame_ms)
      throw Error(ErrorCode::InvalidConfig, "need 0 < hop_ms <= frame_ms");
    if (n_filters < 1) throw Error(ErrorCode::InvalidConfig, "n_filters must be >= 1");
    if (n_coeffs < 1 || n_coeffs >= n_filters)
      throw Error(ErrorCode::InvalidConfig, "need 1 <= n_coeffs < n_filters");
    if (fft_size < 0 || (fft_size > 0 && (fft_size & (fft_size - 1)) != 0))
      throw Error(ErrorCode::NonPowerOfTwoSize,
                  "fft_size " + std::to_string(fft_size) + " is not a power of two");
    if (!(pre_emphasis >= 0.0 && pre_emphasis < 1.0))
      throw Error(ErrorCode::InvalidConfig, "pre_emphasis must lie in [0, 1)");
    if (f_min_hz < 0.0) throw Error(ErrorCode::InvalidBand, "f_min_hz must be >= 0");
    if (f_max_hz && !(*f_max_hz > f_min_hz))
      throw Error(ErrorCode::InvalidBand, "f_max_hz must exceed f_min_hz");
    vad.validate();
  }

  void validate(int rate) const {
    validate();
    const double nyquist = rate / 2.0;
    if (f_max_for(rate) > nyquist)
      throw Error(ErrorCode::InvalidBand,
                  "f_max_hz " + format_exact(f_max_for(rate)) + " exceeds Nyquist " +
                      format_exact(nyquist));
    if (!(f_max_for(rate) > f_min_hz))
      throw Error(ErrorCode::InvalidBand, "f_max_hz must exceed f_min_hz");
    if (fft_size_for(rate) < frame_samples(rate))
      throw Error(ErrorCode::InvalidConfig, "fft_size is smaller than one frame");
  }

  /// Canonical `key=value` rendering; the fingerprint hashes exactly this.
  std::string canonical() const {
    std::string s;
    auto put = [&s](const char *k, const std::string &v) {
      s += k;
      s += '=';
      s += v;
      s += '\n';
    };
    put("frame_ms", format_exact(frame_ms));
    put("hop_ms", format_exact(hop_ms));
    put("fft_size", fft_size == 0 ? "auto" : std::to_string(fft_size));
    put("n_filters", std::to_string(n_filters));
    put("n_coeffs", std::to_string(n_coeffs));
    put("f_min_hz", format_exact(f_min_hz));
    put("f_max_hz", f_max_hz ? format_exact(*f_max_hz) : "nyquist");
    put("use_cmn", use_cmn ? "true" : "false");
    put("pre_emphasis", format_exact(pre_emphasis));
    put("vad.frame_ms", format_exact(vad.frame_ms));
    put("vad.energy_floor_ratio", format_exact(vad.energy_floor_ratio));
    put("vad.margin_frames", std::to_string(vad.margin_frames));
    return s;
  }

  std::uint64_t fingerprint() const { return fnv1a64(canonical()); }

  friend bool operator==(const FrontendConfig &, const FrontendConfig &) = default;
};

/// T x D cepstral frames plus the fingerprint of the config that made them.
struct FeatureSequence {
  Matrix frames;
  std::uint64_t config_fingerprint = 0;

  std::size_t size() const noexcept { return frames.rows(); }
  std::size_t dim() const noexcept { return frames.cols(); }
  std::span<const double> operator[](std::size_t t) const { return frames.row(t); }

  friend bool operator==(const FeatureSequence &, const FeatureSequence &) = default;
};

struct FilterBank {
  Matrix weights;  // n_filters x (fft_size / 2 + 1)
  std::vector<double> center_freqs_hz;
};

inline double hz_to_mel(double f_hz) {
  if (f_hz < 0.0) throw Error(ErrorCode::NegativeFrequency, format_exact(f_hz) + " Hz");
  return 2595.0 * std::log10(1.0 + f_hz / 700.0);
}

inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Only the band, filter count and FFT size matter here; the cepstral
/// settings are not checked.
inline FilterBank build_mel_filterbank(const FrontendConfig &cfg, int sample_rate_hz) {
  if (cfg.n_filters < 1) throw Error(ErrorCode::InvalidConfig, "n_filters must be >= 1");
  if (cfg.fft_size < 0 || (cfg.fft_size > 0 && (cfg.fft_size & (cfg.fft_size - 1)) != 0))
    throw Error(ErrorCode::NonPowerOfTwoSize, "fft_size " + std::to_string(cfg.fft_size));
  if (cfg.f_min_hz < 0.0) throw Error(ErrorCode::InvalidBand, "f_min_hz must be >= 0");
  if (cfg.f_max_for(sample_rate_hz) > sample_rate_hz / 2.0)
    throw Error(ErrorCode::InvalidBand, "f_max_hz " + format_exact(cfg.f_max_for(sample_rate_hz)) +
                                            " exceeds Nyquist");
  if (!(cfg.f_max_for(sample_rate_hz) > cfg.f_min_hz))
    throw Error(ErrorCode::InvalidBand, "f_max_hz must exceed f_min_hz");
  const auto n = static_cast<std::size_t>(cfg.n_filters);
  const std::size_t fft = cfg.fft_size_for(sample_rate_hz);
  const std::size_t n_bins = fft / 2 + 1;

  const double mel_lo = hz_to_mel(cfg.f_min_hz);
  const double mel_hi = hz_to_mel(cfg.f_max_for(sample_rate_hz));
  // n + 2 points: outer two are the band edges, inner n are the peaks.
  std::vector<double> edges(n + 2);
  for (std::size_t i = 0; i < n + 2; ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(n + 1));
  edges.front() = cfg.f_min_hz;
  edges.back() = cfg.f_max_for(sample_rate_hz);

  FilterBank bank;
  bank.weights = Matrix(n, n_bins);
  bank.center_freqs_hz.assign(edges.begin() + 1, edges.end() - 1);
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = edges[j], mid = edges[j + 1], hi = edges[j + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / static_cast<double>(fft);
      double w = 0.0;
      if (f >= lo && f <= mid)
        w = (f - lo) / (mid - lo);
      else if (f > mid && f <= hi)
        w = (hi - f) / (hi - mid);
      bank.weights(j, k) = w;
    }
  }
  return bank;
}

/// In-place iterative radix-2 FFT (forward, unnormalized).
inline void fft_inplace(std::vector<std::complex<double>> &a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw Error(ErrorCode::NonPowerOfTwoSize, "fft length " + std::to_string(n));

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  // Twiddles computed directly per index; the multiplicative recurrence
  // drifts past 1e-12 at n = 1024.
  std::vector<std::complex<double>> twiddle(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k)
    twiddle[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) /
                                     static_cast<double>(n));

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * twiddle[k * stride];
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

/// |X[k]|^2 for k = 0..fft_size/2 of the zero-padded frame.
inline std::vector<double> power_spectrum(std::span<const double> frame, std::size_t fft_size) {
  if (fft_size == 0 || (fft_size & (fft_size - 1)) != 0)
    throw Error(ErrorCode::NonPowerOfTwoSize, "fft_size " + std::to_string(fft_size));
  if (frame.size() > fft_size)
    throw Error(ErrorCode::InvalidLength, "frame longer than fft_size");

  std::vector<std::complex<double>> buf(fft_size);
  std::copy(frame.begin(), frame.end(), buf.begin());
  fft_inplace(buf);

  std::vector<double> p(fft_size / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(buf[k]);
  return p;
}

/// All M orthonormal DCT-II coefficients c0..c_{M-1}.
inline std::vector<double> dct_ii_full(std::span<const double> v) {
  const std::size_t m = v.size();
  if (m == 0) throw Error(ErrorCode::InvalidLength, "empty DCT input");
  std::vector<double> c(m);
  const double md = static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      acc += v[i] * std::cos(std::numbers::pi * static_cast<double>(k) *
                             (static_cast<double>(i) + 0.5) / md);
    c[k] = acc * std::sqrt((k == 0 ? 1.0 : 2.0) / md);
  }
  return c;
}

/// Orthonormal DCT-II returning c1..cn; c0 is dropped so a constant offset
/// in v (a gain change, after the log) has no effect on the output.
inline std::vector<double> dct_ii(std::span<const double> v, std::size_t n) {
  const std::size_t m = v.size();
  if (m == 0 || n < 1 || n > m)
    throw Error(ErrorCode::InvalidLength, "dct_ii needs 1 <= n <= M, got n=" +
                                              std::to_string(n) + " M=" + std::to_string(m));
  std::vector<double> c(n);
  const double md = static_cast<double>(m);
  const double w = std::sqrt(2.0 / md);
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      acc += v[i] * std::cos(std::numbers::pi * static_cast<double>(k) *
                             (static_cast<double>(i) + 0.5) / md);
    c[k - 1] = w * acc;
  }
  return c;
}

inline constexpr double kLogEnergyFloor = 1e-10;

inline std::vector<double> hamming_window(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(n - 1));
  return w;
}

/// Subtracts each coefficient's mean over time.
inline FeatureSequence cepstral_mean_normalize(const FeatureSequence &seq) {
  FeatureSequence out = seq;
  const std::size_t t_count = seq.size(), d_count = seq.dim();
  if (t_count == 0) return out;
  for (std::size_t d = 0; d < d_count; ++d) {
    double mean = 0.0;
    for (std::size_t t = 0; t < t_count; ++t) mean += seq.frames(t, d);
    mean /= static_cast<double>(t_count);
    for (std::size_t t = 0; t < t_count; ++t) out.frames(t, d) = seq.frames(t, d) - mean;
  }
  return out;
}

/// Frames -> Hamming -> power spectrum -> mel energies -> log -> DCT (c1..cN).
/// Does not pre-emphasise or trim; see extract_features for the full chain.
inline FeatureSequence extract_mfcc(const AudioSignal &signal, const FrontendConfig &cfg) {
  const int rate = signal.sample_rate_hz;
  cfg.validate(rate);
  const std::size_t win = cfg.frame_samples(rate);
  const std::size_t hop = cfg.hop_samples(rate);
  const std::size_t len = signal.samples.size();
  if (len < win)
    throw Error(ErrorCode::SignalTooShort, std::to_string(len) + " samples, need " +
                                               std::to_string(win));

  const std::size_t t_count = (len - win) / hop + 1;
  const auto n_coeffs = static_cast<std::size_t>(cfg.n_coeffs);
  const FilterBank bank = build_mel_filterbank(cfg, rate);
  const std::vector<double> window = hamming_window(win);
  const std::size_t fft = cfg.fft_size_for(rate);

  FeatureSequence out;
  out.config_fingerprint = cfg.fingerprint();
  out.frames = Matrix(t_count, n_coeffs);

  std::vector<double> frame(win);
  std::vector<double> log_energy(bank.weights.rows());
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t i = 0; i < win; ++i) frame[i] = signal.samples[t * hop + i] * window[i];
    const auto p = power_spectrum(frame, fft);
    for (std::size_t j = 0; j < bank.weights.rows(); ++j) {
      double e = 0.0;
      const auto w = bank.weights.row(j);
      for (std::size_t k = 0; k < p.size(); ++k) e += w[k] * p[k];
      log_energy[j] = std::log(std::max(e, kLogEnergyFloor));
    }
    const auto c = dct_ii(log_energy, n_coeffs);
    std::copy(c.begin(), c.end(), out.frames.row(t).begin());
  }
  return cfg.use_cmn ? cepstral_mean_normalize(out) : out;
}

/// The complete enrollment/verification chain: DC removal and pre-emphasis,
/// endpoint trimming, then MFCC.
inline FeatureSequence extract_features(const AudioSignal &signal, const FrontendConfig &cfg) {
  cfg.validate(signal.sample_rate_hz);
  return extract_mfcc(trim_endpoints(preprocess(signal, cfg.pre_emphasis), cfg.vad), cfg);
}

}  // namespace voicegate
