// tests/test_pitch.cpp

// Copyright 2026  f-DcAE lab authors

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

#include <catch2/catch_amalgamated.hpp>

#include "fdcae/augment.hpp"
#include "fdcae/pitch.hpp"

using namespace fdcae;

namespace {

Waveform sawtooth(double f0, double seconds, int sr = 16000,
                  double amp = 0.6) {
  Waveform w;
  w.sample_rate = sr;
  int n = int(seconds * sr);
  w.samples.resize(n);
  for (int i = 0; i < n; ++i) {
    double phase = std::fmod(f0 * i / sr, 1.0);
    w.samples[i] = amp * (2.0 * phase - 1.0);
  }
  return w;
}

Waveform sine(double f0, double seconds, int sr = 16000, double amp = 0.6) {
  Waveform w;
  w.sample_rate = sr;
  int n = int(seconds * sr);
  w.samples.resize(n);
  for (int i = 0; i < n; ++i)
    w.samples[i] = amp * std::sin(2.0 * M_PI * f0 * i / sr);
  return w;
}

double median_voiced_f0(const PitchTrack& t) {
  std::vector<double> f0s;
  for (const auto& f : t.frames)
    if (f.voiced) f0s.push_back(f.f0);
  REQUIRE(!f0s.empty());
  std::sort(f0s.begin(), f0s.end());
  return f0s[f0s.size() / 2];
}

double voiced_fraction(const PitchTrack& t) {
  if (t.frames.empty()) return 0.0;
  return double(t.num_voiced()) / t.frames.size();
}

}  // namespace

TEST_CASE("nccf of a sine at exact period and half period") {
  const int sr = 16000;
  const double f0 = 200.0;  // period exactly 80 samples
  Waveform w = sine(f0, 0.1, sr);
  std::vector<double> frame(w.samples.begin(), w.samples.begin() + 800);
  CHECK(nccf(frame, 80) == Catch::Approx(1.0).margin(1e-3));
  CHECK(nccf(frame, 40) == Catch::Approx(-1.0).margin(1e-3));
}

TEST_CASE("nccf of zero-energy frame is 0") {
  std::vector<double> frame(400, 0.0);
  CHECK(nccf(frame, 100) == 0.0);
}

TEST_CASE("nccf rejects lag >= frame length") {
  std::vector<double> frame(100, 0.1);
  CHECK_THROWS_AS(nccf(frame, 100), Error);
}

TEST_CASE("nccf of white noise at large lag is small") {
  // Monte-Carlo: decorrelated noise rarely shows strong periodicity
  int ok = 0;
  const int trials = 120;
  for (int s = 0; s < trials; ++s) {
    Rng rng = make_rng(1000 + s);
    std::normal_distribution<double> dist;
    std::vector<double> frame(600);
    for (double& v : frame) v = dist(rng);
    if (std::abs(nccf(frame, 250)) < 0.3) ++ok;
  }
  CHECK(ok >= trials * 95 / 100);
}

TEST_CASE("tracker recovers sawtooth fundamentals") {
  for (double f0 : {120.0, 200.0, 320.0}) {
    Waveform w = sawtooth(f0, 1.0);
    PitchTrack t = track_pitch(w);
    REQUIRE(!t.frames.empty());
    CHECK(voiced_fraction(t) >= 0.95);
    CHECK(median_voiced_f0(t) == Catch::Approx(f0).margin(3.0));
  }
}

TEST_CASE("tracker reports silence as unvoiced") {
  Waveform w;
  w.samples.assign(16000, 0.0);
  PitchTrack t = track_pitch(w);
  REQUIRE(!t.frames.empty());
  CHECK(t.num_voiced() == 0);
}

TEST_CASE("tracker returns empty track for too-short input") {
  Waveform w;
  w.samples.assign(100, 0.1);
  PitchTrack t = track_pitch(w);
  CHECK(t.frames.empty());
}

TEST_CASE("tracker f0 stays in the legal range") {
  Rng rng = make_rng(42);
  std::normal_distribution<double> dist;
  Waveform w;
  w.samples.resize(16000);
  for (double& s : w.samples) s = 0.3 * dist(rng);
  // add a weak tone so some frames are voiced
  for (int i = 0; i < 16000; ++i)
    w.samples[i] += 0.4 * std::sin(2.0 * M_PI * 150.0 * i / 16000.0);
  PitchTrack t = track_pitch(w);
  for (const auto& f : t.frames) {
    if (f.voiced)
      CHECK((f.f0 >= 50.0 && f.f0 <= 500.0));
    else
      CHECK(f.f0 == 0.0);
  }
}

TEST_CASE("pitch shift ratio definition") {
  CHECK(std::pow(2.0, 300.0 / 1200.0) == Catch::Approx(1.18921).margin(1e-5));
  CHECK(std::pow(2.0, 500.0 / 1200.0) == Catch::Approx(1.33484).margin(1e-5));
}

TEST_CASE("pitch shift +300 cents moves a 200 Hz tone to ~237.8 Hz") {
  Waveform w = sawtooth(200.0, 1.0);
  Waveform shifted = pitch_shift_cents(w, 300);
  CHECK(std::abs(double(shifted.samples.size()) - double(w.samples.size())) <
        0.01 * w.samples.size());
  PitchTrack t = track_pitch(shifted);
  CHECK(median_voiced_f0(t) == Catch::Approx(237.84).margin(3.0));
}

TEST_CASE("pitch shift +500 cents preserves duration within 1%") {
  Waveform w = sawtooth(150.0, 0.8);
  Waveform shifted = pitch_shift_cents(w, 500);
  CHECK(std::abs(double(shifted.samples.size()) - double(w.samples.size())) <
        0.01 * w.samples.size());
  PitchTrack t = track_pitch(shifted);
  CHECK(median_voiced_f0(t) ==
        Catch::Approx(150.0 * 1.33484).margin(4.0));
}

TEST_CASE("pitch shift by 0 cents is a no-op in f0 and length") {
  Waveform w = sawtooth(220.0, 0.7);
  Waveform out = pitch_shift_cents(w, 0);
  CHECK(out.samples.size() == w.samples.size());
  CHECK(median_voiced_f0(track_pitch(out)) ==
        Catch::Approx(median_voiced_f0(track_pitch(w))).margin(1.0));
}

TEST_CASE("pitch shift composition +300 then -300") {
  Waveform w = sawtooth(180.0, 0.8);
  Waveform out = pitch_shift_cents(pitch_shift_cents(w, 300), -300);
  CHECK(median_voiced_f0(track_pitch(out)) ==
        Catch::Approx(median_voiced_f0(track_pitch(w))).margin(2.0));
}

TEST_CASE("pitch shift rejects out-of-range cents") {
  Waveform w = sawtooth(200.0, 0.2);
  CHECK_THROWS_AS(pitch_shift_cents(w, 1300), Error);
}

TEST_CASE("speed perturb identity and duration scaling") {
  Waveform w = sawtooth(200.0, 1.0);
  Waveform same = speed_perturb(w, 1.0);
  CHECK(same.samples == w.samples);

  Waveform fast = speed_perturb(w, 1.1);
  CHECK(double(fast.samples.size()) ==
        Catch::Approx(16000.0 / 1.1).margin(1.5));
}

TEST_CASE("speed perturb 0.9 lowers tracked pitch to ~180 Hz") {
  Waveform w = sawtooth(200.0, 1.0);
  Waveform slow = speed_perturb(w, 0.9);
  CHECK(median_voiced_f0(track_pitch(slow)) ==
        Catch::Approx(180.0).margin(3.0));
}

TEST_CASE("speed perturb round trip preserves duration") {
  Waveform w = sawtooth(140.0, 0.5);
  Waveform rt = speed_perturb(speed_perturb(w, 1.1), 1.0 / 1.1);
  CHECK(std::abs(double(rt.samples.size()) - double(w.samples.size())) <= 2.0);
}

TEST_CASE("volume perturb scaling and clipping") {
  Waveform w;
  w.samples = {0.8, -0.9, 0.9};
  Waveform half = volume_perturb(w, 0.5);
  CHECK(half.samples[0] == Catch::Approx(0.4));
  Waveform twice = volume_perturb(w, 2.0);
  CHECK(twice.samples[2] == 1.0);
  CHECK(twice.samples[1] == -1.0);
  Waveform same = volume_perturb(w, 1.0);
  CHECK(same.samples == w.samples);
}

TEST_CASE("speaker pitch stats mean and histogram") {
  PitchTrack constant;
  constant.frames.assign(50, PitchFrame{200.0, 0.9, true});
  auto stats = compute_speaker_pitch_stats({{"spk1", constant}});
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].mean_f0 == Catch::Approx(200.0));
  REQUIRE(stats[0].histogram.size() == 1);
  CHECK(stats[0].histogram.begin()->first == 8);  // [200, 225)

  PitchTrack low, high;
  low.frames.assign(30, PitchFrame{150.0, 0.9, true});
  high.frames.assign(30, PitchFrame{250.0, 0.9, true});
  auto two = compute_speaker_pitch_stats({{"s", low}, {"s", high}});
  REQUIRE(two.size() == 1);
  CHECK(two[0].mean_f0 == Catch::Approx(200.0));

  PitchTrack unvoiced;
  unvoiced.frames.assign(30, PitchFrame{});
  auto excl = compute_speaker_pitch_stats({{"mute", unvoiced}});
  CHECK(excl.empty());
}
