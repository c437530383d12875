// tests/test_audio.cpp

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

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "voicegate/audio.hpp"

using namespace voicegate;
using Catch::Approx;

namespace {

// Hand-rolled RIFF image so the tests don't depend on encode_wav.
std::vector<std::uint8_t> wav_bytes(std::uint16_t format, std::uint16_t channels,
                                    std::uint32_t rate, std::uint16_t bits,
                                    const std::vector<std::int16_t> &samples,
                                    bool extra_chunk = false) {
  std::vector<std::uint8_t> b;
  auto u32 = [&b](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto u16 = [&b](std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  auto tag = [&b](const char *t) { b.insert(b.end(), t, t + 4); };
  tag("RIFF");
  u32(0);  // patched below
  tag("WAVE");
  tag("fmt ");
  u32(16);
  u16(format);
  u16(channels);
  u32(rate);
  u32(rate * channels * bits / 8);
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(bits);
  if (extra_chunk) {
    tag("LIST");
    u32(5);  // odd size: one pad byte follows
    b.insert(b.end(), {'h', 'e', 'l', 'l', 'o', 0});
  }
  tag("data");
  u32(static_cast<std::uint32_t>(samples.size() * 2));
  for (auto s : samples) u16(static_cast<std::uint16_t>(s));
  const auto riff = static_cast<std::uint32_t>(b.size() - 8);
  for (int i = 0; i < 4; ++i) b[4 + i] = static_cast<std::uint8_t>(riff >> (8 * i));
  return b;
}

ErrorCode decode_error(const std::vector<std::uint8_t> &bytes) {
  try {
    decode_wav(bytes);
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("decode_wav did not throw");
  return ErrorCode::IoError;
}

AudioSignal make_signal(std::vector<double> s, int rate = 16000) {
  AudioSignal a;
  a.samples = std::move(s);
  a.sample_rate_hz = rate;
  return a;
}

}  // namespace

TEST_CASE("load_wav reads a one-second mono file", "[audio][wav]") {
  std::vector<std::int16_t> pcm(16000);
  for (std::size_t i = 0; i < pcm.size(); ++i) pcm[i] = static_cast<std::int16_t>((i * 37) % 2000 - 1000);
  const auto path = std::filesystem::temp_directory_path() / "voicegate_test_one_second.wav";
  {
    const auto bytes = wav_bytes(1, 1, 16000, 16, pcm);
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  const AudioSignal sig = load_wav(path);
  CHECK(sig.sample_rate_hz == 16000);
  REQUIRE(sig.samples.size() == 16000);
  CHECK(sig.samples[1] == static_cast<double>(pcm[1]) / 32768.0);
  CHECK_FALSE(sig.below_recommended_rate());
  std::filesystem::remove(path);
}

TEST_CASE("sample normalization extremes", "[audio][wav]") {
  const auto sig = decode_wav(wav_bytes(1, 1, 16000, 16, {INT16_MIN, INT16_MAX, 0}));
  CHECK(sig.samples[0] == -1.0);
  CHECK(sig.samples[1] == 32767.0 / 32768.0);
  CHECK(sig.samples[1] == Approx(0.99997).margin(1e-5));
  CHECK(sig.samples[2] == 0.0);
}

TEST_CASE("unsupported and malformed containers", "[audio][wav][errors]") {
  const std::vector<std::int16_t> pcm(100, 0);
  CHECK(decode_error(wav_bytes(1, 2, 16000, 16, pcm)) == ErrorCode::UnsupportedFormat);
  CHECK(decode_error(wav_bytes(3, 1, 16000, 16, pcm)) == ErrorCode::UnsupportedFormat);
  CHECK(decode_error(wav_bytes(1, 1, 16000, 8, pcm)) == ErrorCode::UnsupportedFormat);
  CHECK(decode_error(wav_bytes(1, 1, 96000, 16, pcm)) == ErrorCode::UnsupportedFormat);
  CHECK(decode_error(wav_bytes(1, 1, 7999, 16, pcm)) == ErrorCode::SampleRateTooLow);

  auto truncated = wav_bytes(1, 1, 16000, 16, pcm);
  truncated.resize(truncated.size() - 10);
  CHECK(decode_error(truncated) == ErrorCode::MalformedContainer);

  auto not_riff = wav_bytes(1, 1, 16000, 16, pcm);
  not_riff[0] = 'X';
  CHECK(decode_error(not_riff) == ErrorCode::MalformedContainer);
  CHECK(decode_error({}) == ErrorCode::MalformedContainer);

  try {
    load_wav("/nonexistent/voicegate/file.wav");
    FAIL("expected FileNotFound");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::FileNotFound);
  }
}

TEST_CASE("unknown chunks are skipped, including pad bytes", "[audio][wav]") {
  const auto sig = decode_wav(wav_bytes(1, 1, 8000, 16, {1, 2, 3}, true));
  REQUIRE(sig.samples.size() == 3);
  CHECK(sig.samples[2] == 3.0 / 32768.0);
  CHECK(sig.below_recommended_rate());
}

TEST_CASE("encode(decode(w)) reproduces the 16-bit payload", "[audio][wav][property]") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> sample(INT16_MIN, INT16_MAX);
  std::uniform_int_distribution<int> length(0, 3000);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::int16_t> pcm(static_cast<std::size_t>(length(rng)));
    for (auto &s : pcm) s = static_cast<std::int16_t>(sample(rng));
    const auto original = wav_bytes(1, 1, 16000, 16, pcm);
    CHECK(encode_wav(decode_wav(original)) == original);
  }
}

TEST_CASE("preprocess", "[audio][preprocess]") {
  SECTION("alpha = 0 on zero-mean input is the identity") {
    const auto x = make_signal({0.5, -0.25, -0.5, 0.25});
    CHECK(preprocess(x, 0.0).samples == x.samples);
  }
  SECTION("constant input becomes all zeros") {
    for (double v : preprocess(make_signal(std::vector<double>(50, 0.3)), 0.97).samples)
      CHECK(std::abs(v) < 1e-15);
  }
  SECTION("hand-evaluated recurrence on [0, 1, 0]") {
    // mean 1/3: y0 = -1/3, y1 = 2/3 + 0.97/3 = 0.99, y2 = -1/3 - 0.97 * 2/3 = -0.98
    const auto y = preprocess(make_signal({0.0, 1.0, 0.0}), 0.97).samples;
    REQUIRE(y.size() == 3);
    CHECK(y[0] == Approx(-1.0 / 3.0).margin(1e-15));
    CHECK(y[1] == Approx(0.99).margin(1e-15));
    CHECK(y[2] == Approx(-0.98).margin(1e-15));
  }
  SECTION("errors") {
    CHECK_THROWS_AS(preprocess(make_signal({}), 0.97), Error);
    CHECK_THROWS_AS(preprocess(make_signal({1.0}), 1.0), Error);
  }
}

TEST_CASE("trim_endpoints around a noise burst", "[audio][vad]") {
  // 0.2 s silence + 0.1 s full-scale noise + 0.2 s silence at 16 kHz, 25 ms
  // frames of 400 samples: frames 0-7 silent, 8-11 burst, 12-19 silent.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(3200, 0.0);
  std::vector<double> burst(1600);
  for (auto &v : burst) v = u(rng);
  x.insert(x.end(), burst.begin(), burst.end());
  x.insert(x.end(), 3200, 0.0);
  const auto sig = make_signal(x);

  VadConfig cfg;
  cfg.margin_frames = 0;
  CHECK(trim_endpoints(sig, cfg).samples == burst);

  cfg.margin_frames = 3;
  const auto padded = trim_endpoints(sig, cfg).samples;
  CHECK(padded == std::vector<double>(x.begin() + 2000, x.begin() + 6000));

  cfg.margin_frames = 100;
  CHECK(trim_endpoints(sig, cfg).samples == x);
}

TEST_CASE("trim_endpoints keeps loud signals and rejects short ones", "[audio][vad]") {
  std::vector<double> x(1234);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (i % 2 ? 0.5 : -0.5);
  const auto sig = make_signal(x);
  CHECK(trim_endpoints(sig).samples == x);  // includes the trailing partial frame

  try {
    trim_endpoints(make_signal(std::vector<double>(399, 0.1)));
    FAIL("expected NoSpeechDetected");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::NoSpeechDetected);
  }
}

TEST_CASE("trim_endpoints output is a contiguous sub-span", "[audio][vad][property]") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> len(400, 20000);
  std::uniform_real_distribution<double> amp(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(len(rng));
    // Piecewise random loudness so the detector has something to cut.
    double level = amp(rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i % 700 == 0) level = std::pow(amp(rng), 4);
      x[i] = level * g(rng);
    }
    const auto sig = make_signal(x);
    const auto out = trim_endpoints(sig).samples;
    REQUIRE(out.size() <= x.size());
    REQUIRE_FALSE(out.empty());
    const auto at = std::search(x.begin(), x.end(), out.begin(), out.end());
    CHECK(at != x.end());
    CHECK(trim_endpoints(sig).samples == out);
  }
}

TEST_CASE("VadConfig validation", "[audio][vad][errors]") {
  const auto sig = make_signal(std::vector<double>(1000, 0.1));
  VadConfig bad;
  bad.energy_floor_ratio = 1.0;
  CHECK_THROWS_AS(trim_endpoints(sig, bad), Error);
  bad = {};
  bad.frame_ms = 0.0;
  CHECK_THROWS_AS(trim_endpoints(sig, bad), Error);
}
