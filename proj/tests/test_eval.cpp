// tests/test_eval.cpp

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
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "voicegate/eval.hpp"

using namespace voicegate;
using Catch::Approx;

namespace {

AudioSignal noise_fixture(std::uint64_t seed, std::size_t n = 4000) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  AudioSignal a;
  a.samples.resize(n);
  for (auto &v : a.samples) v = u(rng);
  return a;
}

/// Hann-windowed DFT power summed over a 2 Hz grid.
double band_power(const std::vector<double> &x, double lo, double hi, int rate) {
  const double n_minus_1 = static_cast<double>(x.size() - 1);
  double total = 0.0;
  for (double f = lo; f <= hi; f += 2.0) {
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / n_minus_1);
      const double a = 2.0 * std::numbers::pi * f * static_cast<double>(n) / rate;
      re += w * x[n] * std::cos(a);
      im -= w * x[n] * std::sin(a);
    }
    total += re * re + im * im;
  }
  return total;
}

double measured_snr_db(const AudioSignal &clean, const AudioSignal &noisy) {
  std::vector<double> noise(clean.samples.size());
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = noisy.samples[i] - clean.samples[i];
  return 10.0 * std::log10(signal_power(clean.samples) / signal_power(noise));
}

TrialOutcome genuine(const std::string &t, const std::string &p, bool accepted) {
  return {true, t, p, accepted};
}
TrialOutcome impostor(const std::string &t, bool accepted) { return {false, t, {}, accepted}; }

}  // namespace

TEST_CASE("add_white_noise", "[eval][noise]") {
  SECTION("high SNR leaves the signal almost untouched") {
    const auto x = noise_fixture(1);
    const auto y = add_white_noise(x, 60.0, 5);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.samples.size(); ++i) {
      sxy += x.samples[i] * y.samples[i];
      sxx += x.samples[i] * x.samples[i];
      syy += y.samples[i] * y.samples[i];
    }
    CHECK(sxy / std::sqrt(sxx * syy) > 0.999);
  }

  SECTION("realized SNR matches the request") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> snr(-5.0, 40.0);
    for (std::uint64_t k = 0; k < 20; ++k) {
      const auto x = noise_fixture(100 + k, 1000 + 97 * k);
      const double target = snr(rng);
      const auto y = add_white_noise(x, target, k);
      CHECK(std::abs(measured_snr_db(x, y) - target) < 0.1);
      CHECK(y.sample_rate_hz == x.sample_rate_hz);
    }
  }

  SECTION("seeded") {
    const auto x = noise_fixture(2);
    CHECK(add_white_noise(x, 10.0, 3) == add_white_noise(x, 10.0, 3));
    CHECK_FALSE(add_white_noise(x, 10.0, 3) == add_white_noise(x, 10.0, 4));
  }

  SECTION("silence has no SNR") {
    try {
      add_white_noise(AudioSignal{std::vector<double>(100, 0.0), 16000}, 10.0, 1);
      FAIL("expected SilentSignal");
    } catch (const Error &e) {
      CHECK(e.code() == ErrorCode::SilentSignal);
    }
  }
}

TEST_CASE("synth_utterance", "[eval][synth]") {
  SECTION("length, peak and determinism") {
    const SynthSpeakerSpec spec;
    std::mt19937_64 a(4), b(4);
    const auto u = synth_utterance(spec, a);
    CHECK(u.samples.size() == 8000);
    CHECK(u.sample_rate_hz == 16000);
    double peak = 0.0;
    for (double v : u.samples) peak = std::max(peak, std::abs(v));
    CHECK(peak == Approx(0.5).epsilon(1e-12));
    CHECK(synth_utterance(spec, b) == u);
  }

  SECTION("formants show up as spectral peaks") {
    std::vector<SynthSpeakerSpec> specs{SynthSpeakerSpec{}, default_speaker_specs()[0]};
    for (auto spec : specs) {
      spec.jitter_pct = 0.0;
      std::mt19937_64 rng(11);
      const auto u = synth_utterance(spec, rng);
      for (double f : spec.formants_hz) {
        const double centre = band_power(u.samples, f - 60.0, f + 60.0, 16000);
        CHECK(centre > 1.5 * band_power(u.samples, f - 310.0, f - 190.0, 16000));
        CHECK(centre > 1.5 * band_power(u.samples, f + 190.0, f + 310.0, 16000));
      }
    }
  }

  SECTION("invalid specs") {
    auto code_of = [](SynthSpeakerSpec s) {
      try {
        s.validate();
      } catch (const Error &e) {
        return e.code();
      }
      return ErrorCode::BadArguments;
    };
    SynthSpeakerSpec s;
    s.f0_hz = 20.0;
    CHECK(code_of(s) == ErrorCode::InvalidSpec);
    s = {};
    s.formants_hz = {500.0, 400.0, 2500.0};
    CHECK(code_of(s) == ErrorCode::InvalidSpec);
    s = {};
    s.formants_hz[2] = 9000.0;
    CHECK(code_of(s) == ErrorCode::InvalidSpec);
    s = {};
    s.duration_s = 0.0;
    CHECK(code_of(s) == ErrorCode::InvalidSpec);
    s = {};
    s.formant_bandwidths_hz[1] = -1.0;
    CHECK(code_of(s) == ErrorCode::InvalidSpec);
    CHECK_THROWS_AS(synth_corpus({}, 3, 1), Error);
    CHECK_THROWS_AS(synth_corpus(default_speaker_specs(), 0, 1), Error);
  }

  SECTION("corpus layout") {
    const auto c = synth_corpus(default_speaker_specs(), 2, 5);
    REQUIRE(c.size() == 8);
    CHECK(c.begin()->first == "spk01");
    CHECK(c.rbegin()->first == "spk08");
    for (const auto &[id, utts] : c) CHECK(utts.size() == 2);
    // A speaker's audio does not depend on who else is in the corpus.
    const auto solo = synth_corpus({default_speaker_specs()[0]}, 2, 5);
    CHECK(solo.at("spk01") == c.at("spk01"));
  }
}

TEST_CASE("tally", "[eval][metrics]") {
  SECTION("counting example") {
    std::vector<TrialOutcome> o;
    for (int i = 0; i < 9; ++i) o.push_back(genuine("a", "a", true));
    o.push_back(genuine("a", "a", false));
    for (int i = 0; i < 9; ++i) o.push_back(impostor("b", false));
    o.push_back(impostor("b", true));
    const auto m = tally(o);
    CHECK(m.n_genuine == 10);
    CHECK(m.n_impostor == 10);
    CHECK(m.frr == Approx(0.1).epsilon(1e-15));
    CHECK(m.far == Approx(0.1).epsilon(1e-15));
    CHECK(m.identification_accuracy == 1.0);
    CHECK(m.half_total_error() == Approx(0.1).epsilon(1e-15));
    CHECK(m.confusion.size() == 1);
    CHECK(m.confusion.at({"a", "a"}) == 10);
  }

  SECTION("confusions") {
    const auto m = tally({genuine("a", "b", true), genuine("a", "a", true), genuine("b", "b", false),
                          genuine("c", "a", true)});
    CHECK(m.identification_accuracy == 0.5);
    CHECK(m.confusion.at({"a", "b"}) == 1);
    CHECK(m.confusion.at({"c", "a"}) == 1);
    CHECK(m.frr == 0.25);
    CHECK(m.far == 0.0);
  }

  SECTION("empty categories report zero") {
    const auto m = tally({});
    CHECK(m.far == 0.0);
    CHECK(m.frr == 0.0);
    CHECK(m.identification_accuracy == 0.0);
  }

  SECTION("properties on random outcomes") {
    std::mt19937_64 rng(15);
    const std::vector<std::string> ids{"a", "b", "c", "d"};
    std::uniform_int_distribution<std::size_t> pick(0, 3);
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 25; ++trial) {
      std::vector<TrialOutcome> o;
      for (int i = 0; i < 40; ++i)
        o.push_back(coin(rng) ? genuine(ids[pick(rng)], ids[pick(rng)], coin(rng))
                              : impostor(ids[pick(rng)], coin(rng)));
      const auto m = tally(o);
      int trace = 0, total = 0;
      for (const auto &[key, n] : m.confusion) {
        total += n;
        if (key.first == key.second) trace += n;
      }
      CHECK(total == m.n_identification);
      if (total > 0) CHECK(m.identification_accuracy == Approx(double(trace) / total).epsilon(1e-15));
      CHECK(m.far >= 0.0);
      CHECK(m.far <= 1.0);
      CHECK(m.frr >= 0.0);
      CHECK(m.frr <= 1.0);
      std::shuffle(o.begin(), o.end(), rng);
      const auto shuffled = tally(o);
      CHECK(shuffled.far == m.far);
      CHECK(shuffled.frr == m.frr);
      CHECK(shuffled.identification_accuracy == m.identification_accuracy);
      CHECK(shuffled.confusion == m.confusion);
    }
  }
}

TEST_CASE("metrics reports", "[eval][metrics]") {
  const auto m = tally({genuine("spk01", "spk01", true), genuine("spk02", "spk01", false),
                        impostor("spk02", true), impostor("spk01", false)});
  const std::string kv = metrics_kv(m);
  CHECK(kv.find("identification_accuracy=0.5\n") != std::string::npos);
  CHECK(kv.find("far=0.5\n") != std::string::npos);
  CHECK(kv.find("frr=0.5\n") != std::string::npos);
  CHECK(kv.find("half_total_error=0.5\n") != std::string::npos);
  CHECK(kv.find("confusion.spk01.spk01=1\n") != std::string::npos);
  CHECK(kv.find("confusion.spk02.spk01=1\n") != std::string::npos);
  const std::string table = metrics_table(m);
  CHECK(table.find("50.00 %") != std::string::npos);
  CHECK(table.find("spk02") != std::string::npos);
}

TEST_CASE("evaluate argument checks", "[eval]") {
  const FrontendConfig fe;
  TrialSet none;
  try {
    evaluate({}, none, fe);
    FAIL("expected EmptyTrialSet");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::EmptyTrialSet);
  }
  TrialSet one;
  one.genuine.push_back({"a", "a", noise_fixture(1)});
  try {
    evaluate({}, one, fe);
    FAIL("expected EmptyRegistry");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::EmptyRegistry);
  }
}

TEST_CASE("manifest", "[eval][manifest]") {
  SECTION("parse and format") {
    std::istringstream in(
        "# comment\n"
        "\n"
        "genuine spk01 spk01 wav/spk01_06.wav\r\n"
        "impostor spk02 spk01 /abs/x.wav\n");
    const auto entries = parse_manifest(in);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0] == ManifestEntry{true, "spk01", "spk01", "wav/spk01_06.wav"});
    CHECK(entries[1] == ManifestEntry{false, "spk02", "spk01", "/abs/x.wav"});
    std::istringstream again(format_manifest(entries));
    CHECK(parse_manifest(again) == entries);
  }

  SECTION("bad lines") {
    for (const char *text : {"genuine a a\n", "genuine a a x.wav extra\n", "maybe a a x.wav\n",
                             "genuine a b x.wav\n", "impostor a a x.wav\n"}) {
      std::istringstream in(text);
      try {
        parse_manifest(in);
        FAIL("expected BadArguments for: " << text);
      } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::BadArguments);
      }
    }
  }
}
