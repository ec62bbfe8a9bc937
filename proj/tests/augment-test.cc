// tests/augment-test.cc

// Copyright 2026  cmkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "aug/noise-augment.h"
#include "aug/policy.h"
#include "aug/rir.h"
#include "test-util.h"

using namespace cmkit;

namespace {

Waveform RandomWave(int64 n, Rng *rng, real amp = 0.3, int32 sr = 16000) {
  std::vector<real> s(static_cast<size_t>(n));
  for (auto &v : s) v = rng->Uniform(-amp, amp);
  return Waveform(std::move(s), sr);
}

Waveform Tone(int64 n, real freq, real amp, int32 sr = 16000) {
  std::vector<real> s(static_cast<size_t>(n));
  for (int64 i = 0; i < n; ++i)
    s[static_cast<size_t>(i)] =
        amp * std::sin(2.0 * 3.14159265358979323846 * freq *
                       static_cast<real>(i) / sr);
  return Waveform(std::move(s), sr);
}

}  // namespace

TEST_CASE("noise gain is 1 for equal-RMS signals at 0 dB") {
  Rng rng(50);
  Waveform a = RandomWave(4000, &rng);
  Waveform b = a;
  for (auto &s : b.samples) s = -s;  // same RMS
  CHECK(NoiseGain(a, b, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("noise gain at 20 dB for equal-RMS signals is 0.1") {
  Rng rng(51);
  Waveform a = RandomWave(4000, &rng);
  std::vector<real> shifted(a.samples.rbegin(), a.samples.rend());
  Waveform b(shifted, 16000);
  CHECK(NoiseGain(a, b, 20.0) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("re-measured SNR equals the requested one") {
  Rng rng(52);
  Waveform clean = RandomWave(5000, &rng, 0.4);
  Waveform noise = RandomWave(9000, &rng, 0.2);
  real g = NoiseGain(clean, noise, 7.3);
  Waveform scaled = noise;
  for (auto &s : scaled.samples) s *= g;
  CHECK(MeasureSnrDb(clean, scaled) == doctest::Approx(7.3).epsilon(1e-9));
}

TEST_CASE("noise gain rejects silent inputs") {
  Rng rng(53);
  Waveform silent(std::vector<real>(1000, 0.0), 16000);
  Waveform live = RandomWave(1000, &rng);
  CHECK_THROWS_AS((void)NoiseGain(silent, live, 5.0), InvalidInputError);
  CHECK_THROWS_AS((void)NoiseGain(live, silent, 5.0), InvalidInputError);
}

TEST_CASE("add_noise with infinite SNR returns clean bit-exactly") {
  Rng rng(54);
  Waveform clean = RandomWave(3000, &rng);
  Waveform noise = RandomWave(3000, &rng);
  NoiseMixResult res = AddNoise(clean, noise, kSnrNoAugment, &rng);
  CHECK(res.mixed.samples == clean.samples);
}

TEST_CASE("uncorrelated 0 dB mixing roughly doubles the power") {
  Rng rng(55);
  Waveform clean = Tone(16000, 440.0, 0.1 * std::sqrt(2.0));  // RMS ~0.1
  Waveform noise = RandomWave(32000, &rng, 0.2);
  NoiseMixResult res = AddNoise(clean, noise, 0.0, &rng);
  real ratio = res.mixed.MeanSquare() / clean.MeanSquare();
  CHECK(ratio == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("add_noise is deterministic under a fixed seed") {
  Rng rng_a(56), rng_b(56);
  Rng wave_rng(57);
  Waveform clean = RandomWave(4000, &wave_rng);
  Waveform noise = RandomWave(2500, &wave_rng);  // shorter: loops
  NoiseMixResult a = AddNoise(clean, noise, 4.2, &rng_a);
  NoiseMixResult b = AddNoise(clean, noise, 4.2, &rng_b);
  CHECK(a.mixed.samples == b.mixed.samples);
  CHECK(a.segment.offset == b.segment.offset);
  CHECK(a.segment.looped);
}

TEST_CASE("SNR exactness holds across random triples") {
  Rng rng(58);
  for (int32 i = 0; i < 50; ++i) {
    Waveform clean = RandomWave(2000 + 37 * i, &rng, 0.3);
    Waveform noise = RandomWave(1000 + 53 * i, &rng, 0.25);
    real snr = rng.Uniform(0.0, 20.0);
    NoiseMixResult res = AddNoise(clean, noise, snr, &rng);
    // reconstruct the scaled segment that was added (pre-renormalization)
    Waveform seg = ExtractSegment(noise, clean.NumSamples(), res.segment);
    for (auto &s : seg.samples) s *= res.gain;
    CHECK(std::abs(MeasureSnrDb(clean, seg) - snr) < 0.1);
  }
}

TEST_CASE("make_babble sums constants") {
  std::vector<Waveform> clips(3,
                              Waveform(std::vector<real>(100, 1.0), 16000));
  Rng rng(59);
  BabbleResult res = MakeBabble(clips, 3, 100, 16000, &rng);
  for (real s : res.babble.samples) CHECK(s == doctest::Approx(3.0));
}

TEST_CASE("make_babble records exactly k distinct clips") {
  Rng rng(60);
  std::vector<Waveform> clips;
  for (int32 i = 0; i < 10; ++i) clips.push_back(RandomWave(500, &rng));
  BabbleResult res = MakeBabble(clips, 8, 400, 16000, &rng);
  CHECK(res.clip_indices.size() == 8);
  std::set<int32> unique(res.clip_indices.begin(), res.clip_indices.end());
  CHECK(unique.size() == 8);
}

TEST_CASE("make_babble equals the direct summation oracle") {
  Rng rng(61);
  std::vector<Waveform> clips;
  for (int32 i = 0; i < 6; ++i) clips.push_back(RandomWave(700, &rng));
  BabbleResult res = MakeBabble(clips, 5, 300, 16000, &rng);
  for (int64 t = 0; t < 300; ++t) {
    real acc = 0.0;
    for (size_t i = 0; i < res.clip_indices.size(); ++i) {
      const Waveform &clip =
          clips[static_cast<size_t>(res.clip_indices[i])];
      Waveform seg = ExtractSegment(clip, 300, res.segments[i]);
      acc += seg.samples[static_cast<size_t>(t)];
    }
    CHECK(res.babble.samples[static_cast<size_t>(t)] ==
          doctest::Approx(acc).epsilon(1e-7));
  }
}

TEST_CASE("make_babble rejects bad k and insufficient clips") {
  Rng rng(62);
  std::vector<Waveform> clips(4, RandomWave(100, &rng));
  CHECK_THROWS_AS((void)MakeBabble(clips, 2, 100, 16000, &rng),
                  InvalidInputError);
  CHECK_THROWS_AS((void)MakeBabble(clips, 9, 100, 16000, &rng),
                  InvalidInputError);
  CHECK_THROWS_AS((void)MakeBabble(clips, 5, 100, 16000, &rng),
                  InvalidInputError);
}

TEST_CASE("rt60 estimator recovers a synthetic exponential decay") {
  Rng rng(63);
  int32 sr = 16000;
  int64 n = sr;  // 1 s
  std::vector<real> h(static_cast<size_t>(n));
  real c = 3.0 * std::log(10.0) / 0.5;  // -60 dB energy at 0.5 s
  for (int64 i = 0; i < n; ++i)
    h[static_cast<size_t>(i)] = std::exp(-c * static_cast<real>(i) / sr) *
                                rng.Uniform(-1.0, 1.0);
  real est = EstimateRt60(Waveform(std::move(h), sr));
  CHECK(est == doctest::Approx(0.5).epsilon(0.10));
}

TEST_CASE("rt60 estimator rejects degenerate inputs") {
  std::vector<real> impulse(1000, 0.0);
  impulse[10] = 1.0;
  CHECK_THROWS_AS((void)EstimateRt60(Waveform(impulse, 16000)),
                  EstimationError);

  Rng rng(64);
  std::vector<real> grow(8000);
  real c = 3.0 * std::log(10.0) / 0.4;
  for (int64 i = 0; i < 8000; ++i)
    grow[static_cast<size_t>(i)] =
        std::exp(-c * static_cast<real>(8000 - i) / 16000.0) *
        rng.Uniform(-1.0, 1.0);
  CHECK_THROWS_AS((void)EstimateRt60(Waveform(grow, 16000)), EstimationError);
}

TEST_CASE("simulated rir hits its rt60 target within 20 percent") {
  Rng rng(65);
  std::array<real, 3> dmin{10, 8, 2.8}, dmax{15, 10, 4};
  for (real target : {0.5, 1.0}) {
    RoomSpec spec = DrawRoom(dmin, dmax, target, target, 0, &rng);
    Waveform rir = SimulateRir(spec, 16000);
    real est = EstimateRt60(rir);
    CHECK(std::abs(est - target) / target < 0.2);
  }
}

TEST_CASE("rir with absorption ~1 and mic at source is a scaled impulse") {
  RoomSpec spec;
  spec.dims = {5, 4, 3};
  spec.source = {2.5, 2.0, 1.5};
  spec.mic = {2.5, 2.0, 1.5};
  spec.rt60_target = 1e-4;
  Waveform rir = SimulateRir(spec, 16000);
  int64 peak = 0;
  for (int64 i = 1; i < rir.NumSamples(); ++i)
    if (std::abs(rir.samples[static_cast<size_t>(i)]) >
        std::abs(rir.samples[static_cast<size_t>(peak)]))
      peak = i;
  CHECK(peak == 0);
  real rest = 0.0;
  for (int64 i = 1; i < rir.NumSamples(); ++i)
    rest = std::max(rest, std::abs(rir.samples[static_cast<size_t>(i)]));
  CHECK(rest < 1e-6 * std::abs(rir.samples[0]));
}

TEST_CASE("direct-path delay equals distance over the speed of sound") {
  RoomSpec spec;
  spec.dims = {6, 5, 3};
  spec.source = {1.0, 1.0, 1.0};
  spec.mic = {4.43, 1.0, 1.0};  // 3.43 m -> exactly 160 samples at 16 kHz
  spec.rt60_target = 0.3;
  Waveform rir = SimulateRir(spec, 16000);
  int64 first = -1;
  real thresh = 0.2 * rir.PeakAbs();
  for (int64 i = 0; i < rir.NumSamples(); ++i)
    if (std::abs(rir.samples[static_cast<size_t>(i)]) > thresh) {
      first = i;
      break;
    }
  CHECK(std::abs(static_cast<real>(first) - 160.0) <= 1.0);
}

TEST_CASE("schroeder decay is non-increasing after the peak") {
  Rng rng(66);
  RoomSpec spec = DrawRoom({10, 8, 2.8}, {15, 10, 4}, 0.4, 0.4, 0, &rng);
  Waveform rir = SimulateRir(spec, 16000);
  int64 peak = 0;
  std::vector<real> db = SchroederDecayDb(rir, &peak);
  for (size_t i = static_cast<size_t>(peak) + 1; i < db.size(); ++i)
    CHECK(db[i] <= db[i - 1] + 1e-12);
}

TEST_CASE("room spec validation rejects bad geometry") {
  RoomSpec bad;
  bad.dims = {4, 3, 2.5};
  bad.source = {0.05, 1.0, 1.0};  // inside the wall margin
  bad.mic = {2.0, 1.5, 1.2};
  CHECK_THROWS_AS(bad.Validate(), InvalidInputError);
  bad.source = {1.0, 1.0, 1.0};
  bad.rt60_target = 0.0;
  CHECK_THROWS_AS(bad.Validate(), InvalidInputError);
}

TEST_CASE("add_reverb truncates to the clean length") {
  Rng rng(67);
  Waveform clean = RandomWave(8000, &rng);
  RoomSpec spec;
  spec.rt60_target = 0.3;
  Waveform rir = SimulateRir(spec, 16000);
  ReverbResult res = AddReverb(clean, rir);
  CHECK(res.wet.NumSamples() == clean.NumSamples());
  CHECK(res.wet.PeakAbs() <= 1.0);
}
