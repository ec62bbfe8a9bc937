// tests/signal-test.cc

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

#include <cstdio>
#include <filesystem>

#include "feat/fbank.h"
#include "feat/signal.h"
#include "feat/wave.h"
#include "test-util.h"

using namespace cmkit;

namespace {

Waveform RandomWave(int64 n, Rng *rng, int32 sr = 16000) {
  std::vector<real> s(static_cast<size_t>(n));
  for (auto &v : s) v = rng->Uniform(-0.5, 0.5);
  return Waveform(std::move(s), sr);
}

// O(n^2) per-frame DFT oracle, completely independent of Fft().
Tensor DirectDftMagnitudes(const Waveform &w, const StftParams &p) {
  int64 win = p.WindowLength(w.sample_rate);
  int64 hop = p.HopLength(w.sample_rate);
  int64 fft = p.FftSize(w.sample_rate);
  int64 frames = NumStftFrames(w.NumSamples(), win, hop);
  int64 bins = fft / 2 + 1;
  std::vector<real> window = HammingWindow(win);
  Tensor mags({frames, bins});
  const real pi = 3.14159265358979323846;
  for (int64 f = 0; f < frames; ++f) {
    for (int64 b = 0; b < bins; ++b) {
      real re = 0.0, im = 0.0;
      for (int64 i = 0; i < win; ++i) {
        real x = w.samples[static_cast<size_t>(f * hop + i)] *
                 window[static_cast<size_t>(i)];
        real ang = -2.0 * pi * static_cast<real>(b) * static_cast<real>(i) /
                   static_cast<real>(fft);
        re += x * std::cos(ang);
        im += x * std::sin(ang);
      }
      mags(f, b) = std::sqrt(re * re + im * im);
    }
  }
  return mags;
}

}  // namespace

TEST_CASE("stft of DC signal concentrates energy at bin zero") {
  Waveform w(std::vector<real>(4096, 1.0), 16000);
  StftParams p;
  ComplexSpectrogram spec = Stft(w, p);
  real peak = 0.0;
  for (int64 f = 0; f < spec.NumFrames(); ++f)
    peak = std::max(peak, spec.magnitude(f, 0));
  CHECK(peak > 0.0);
  for (int64 f = 0; f < spec.NumFrames(); ++f) {
    // bin 0 dominates; the Hamming window contributes exactly one sideband
    // bin on each side, and everything past it is zero
    CHECK(spec.magnitude(f, 1) < 0.5 * spec.magnitude(f, 0));
    for (int64 b = 2; b < spec.NumBins(); ++b)
      CHECK(spec.magnitude(f, b) <= 1e-6 * peak);
  }
}

TEST_CASE("stft sine at a bin center peaks at that bin") {
  int32 sr = 16000;
  StftParams p;
  int64 fft = p.FftSize(sr);
  int64 bin = 100;
  real freq = static_cast<real>(bin) * sr / static_cast<real>(fft);
  std::vector<real> s(4096);
  for (size_t i = 0; i < s.size(); ++i)
    s[i] = std::sin(2.0 * 3.14159265358979323846 * freq *
                    static_cast<real>(i) / sr);
  ComplexSpectrogram spec = Stft(Waveform(std::move(s), sr), p);
  for (int64 f = 0; f < spec.NumFrames(); ++f) {
    int64 best = 0;
    for (int64 b = 1; b < spec.NumBins(); ++b)
      if (spec.magnitude(f, b) > spec.magnitude(f, best)) best = b;
    CHECK(best == bin);
  }
}

TEST_CASE("stft matches the direct DFT oracle within 1e-6 relative") {
  Rng rng(31);
  Waveform w = RandomWave(4096, &rng);
  StftParams p;
  ComplexSpectrogram spec = Stft(w, p);
  Tensor oracle = DirectDftMagnitudes(w, p);
  CHECK(spec.magnitude.SameShape(oracle));
  CHECK(test::PeakRelativeError(spec.magnitude, oracle) < 1e-6);
}

TEST_CASE("stft rejects waveforms shorter than one window") {
  Rng rng(32);
  Waveform w = RandomWave(512, &rng);
  StftParams p;  // window = 1024 at 16 kHz
  CHECK_THROWS_AS((void)Stft(w, p), InvalidInputError);
}

TEST_CASE("istft(stft(w)) reconstructs the interior within 1e-4") {
  Rng rng(33);
  Waveform w = RandomWave(8000, &rng);
  StftParams p;
  ComplexSpectrogram spec = Stft(w, p);
  Waveform rec = Istft(spec);
  int64 win = p.WindowLength(16000);
  int64 hop = p.HopLength(16000);
  int64 covered = (spec.NumFrames() - 1) * hop + win;
  CHECK(rec.NumSamples() == covered);
  real max_err = 0.0;
  for (int64 i = 0; i < covered; ++i)
    max_err = std::max(max_err, std::abs(rec.samples[static_cast<size_t>(i)] -
                                         w.samples[static_cast<size_t>(i)]));
  CHECK(max_err < 1e-4);
}

TEST_CASE("istft of an all-zero spectrogram is silence") {
  StftParams p;
  ComplexSpectrogram spec;
  spec.params = p;
  spec.sample_rate = 16000;
  spec.magnitude = Tensor({10, 513});
  spec.phase = Tensor({10, 513});
  Waveform rec = Istft(spec);
  for (real s : rec.samples) CHECK(s == 0.0);
}

TEST_CASE("istft rejects mismatched magnitude/phase shapes") {
  ComplexSpectrogram spec;
  spec.sample_rate = 16000;
  spec.magnitude = Tensor({10, 513});
  spec.phase = Tensor({9, 513});
  CHECK_THROWS_AS((void)Istft(spec), InvalidInputError);
}

TEST_CASE("istft round trip recovers a sine with high correlation") {
  int32 sr = 16000;
  std::vector<real> s(8000);
  for (size_t i = 0; i < s.size(); ++i)
    s[i] = 0.5 * std::sin(2.0 * 3.14159265358979323846 * 440.0 *
                          static_cast<real>(i) / sr);
  Waveform w(s, sr);
  StftParams p;
  Waveform rec = Istft(Stft(w, p));
  real dot = 0.0, na = 0.0, nb = 0.0;
  for (int64 i = 0; i < rec.NumSamples(); ++i) {
    real a = w.samples[static_cast<size_t>(i)];
    real b = rec.samples[static_cast<size_t>(i)];
    dot += a * b;
    na += a * a;
    nb += b * b;
  }
  CHECK(dot / std::sqrt(na * nb) > 0.999);
}

TEST_CASE("convolve with a unit impulse is the identity") {
  Rng rng(34);
  Waveform w = RandomWave(1000, &rng);
  Waveform delta(std::vector<real>{1.0}, 16000);
  Waveform out = Convolve(w, delta);
  CHECK(out.NumSamples() == w.NumSamples());
  CHECK(test::PeakRelativeError(Tensor({out.NumSamples()}, out.samples),
                                Tensor({w.NumSamples()}, w.samples)) < 1e-10);
}

TEST_CASE("convolve with a delayed impulse shifts the signal") {
  Rng rng(35);
  Waveform w = RandomWave(500, &rng);
  std::vector<real> d(17, 0.0);
  d[16] = 1.0;
  Waveform out = Convolve(w, Waveform(d, 16000));
  for (int64 i = 0; i < 16; ++i)
    CHECK(std::abs(out.samples[static_cast<size_t>(i)]) < 1e-9);
  for (int64 i = 16; i < 500; ++i)
    CHECK(out.samples[static_cast<size_t>(i)] ==
          doctest::Approx(w.samples[static_cast<size_t>(i - 16)])
              .epsilon(1e-9));
}

TEST_CASE("convolve matches the direct double-loop oracle") {
  Rng rng(36);
  Waveform sig = RandomWave(1000, &rng);
  Waveform rir = RandomWave(64, &rng);
  Waveform out = Convolve(sig, rir);
  Tensor oracle({1000});
  for (int64 t = 0; t < 1000; ++t) {
    real acc = 0.0;
    for (int64 m = 0; m < 64; ++m)
      if (t - m >= 0)
        acc += sig.samples[static_cast<size_t>(t - m)] *
               rir.samples[static_cast<size_t>(m)];
    oracle[t] = acc;
  }
  CHECK(test::PeakRelativeError(Tensor({1000}, out.samples), oracle) < 1e-6);
}

TEST_CASE("convolve rejects mismatched sample rates") {
  Rng rng(37);
  Waveform a = RandomWave(100, &rng, 16000);
  Waveform b = RandomWave(10, &rng, 8000);
  CHECK_THROWS_AS((void)Convolve(a, b), InvalidInputError);
}

TEST_CASE("convolution is linear") {
  Rng rng(38);
  Waveform x = RandomWave(800, &rng);
  Waveform y = RandomWave(800, &rng);
  Waveform h = RandomWave(32, &rng);
  real a = 1.7, b = -0.6;
  Waveform mix(std::vector<real>(800), 16000);
  for (int64 i = 0; i < 800; ++i)
    mix.samples[static_cast<size_t>(i)] =
        a * x.samples[static_cast<size_t>(i)] +
        b * y.samples[static_cast<size_t>(i)];
  Waveform lhs = Convolve(mix, h);
  Waveform cx = Convolve(x, h), cy = Convolve(y, h);
  Tensor rhs({800});
  for (int64 i = 0; i < 800; ++i)
    rhs[i] = a * cx.samples[static_cast<size_t>(i)] +
             b * cy.samples[static_cast<size_t>(i)];
  CHECK(test::PeakRelativeError(Tensor({800}, lhs.samples), rhs) < 1e-6);
}

TEST_CASE("operations are pure: identical inputs give identical outputs") {
  Rng rng(39);
  Waveform w = RandomWave(4096, &rng);
  StftParams p;
  ComplexSpectrogram s1 = Stft(w, p), s2 = Stft(w, p);
  CHECK(test::MaxAbsDiff(s1.magnitude, s2.magnitude) == 0.0);
  FbankFeatures f1 = Fbank(w, 80, p), f2 = Fbank(w, 80, p);
  CHECK(test::MaxAbsDiff(f1.values, f2.values) == 0.0);
}

TEST_CASE("fbank of silence is log(log_floor) everywhere") {
  // Validate() rejects all-zero-free requirement? silence is fine: finite.
  Waveform w(std::vector<real>(2048, 0.0), 16000);
  StftParams p;
  FbankFeatures f = Fbank(w, 80, p);
  real expect = std::log(1e-10);
  for (int64 i = 0; i < f.values.NumElements(); ++i)
    CHECK(f.values[i] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("doubling the waveform raises fbank by log 4") {
  Rng rng(40);
  Waveform w = RandomWave(4096, &rng);
  Waveform w2 = w;
  for (auto &s : w2.samples) s *= 2.0;
  StftParams p;
  FbankFeatures f1 = Fbank(w, 80, p);
  FbankFeatures f2 = Fbank(w2, 80, p);
  real lg4 = std::log(4.0);
  for (int64 i = 0; i < f1.values.NumElements(); ++i)
    CHECK(f2.values[i] - f1.values[i] == doctest::Approx(lg4).epsilon(1e-6));
}

TEST_CASE("one second of 16 kHz audio yields 118 frames") {
  Rng rng(41);
  Waveform w = RandomWave(16000, &rng);
  StftParams p;
  FbankFeatures f = Fbank(w, 80, p);
  CHECK(f.NumFrames() == 1 + (16000 - 1024) / 128);
  CHECK(f.NumFrames() == 118);
  CHECK(f.values.Dim(1) == 80);
}

TEST_CASE("fbank rejects non-positive mel counts") {
  Rng rng(42);
  Waveform w = RandomWave(2048, &rng);
  StftParams p;
  CHECK_THROWS_AS((void)Fbank(w, 0, p), InvalidInputError);
  CHECK_THROWS_AS((void)Fbank(w, -3, p), InvalidInputError);
}

TEST_CASE("adding uncorrelated noise never reduces total mel energy much") {
  Rng rng(43);
  Waveform clean = RandomWave(4096, &rng);
  for (auto &s : clean.samples) s *= 0.3;
  Waveform noisy = clean;
  Rng rng2(44);
  for (auto &s : noisy.samples) s += rng2.Uniform(-0.2, 0.2);
  StftParams p;
  FbankFeatures fc = Fbank(clean, 80, p);
  FbankFeatures fn = Fbank(noisy, 80, p);
  // per-frame total energy in linear terms
  for (int64 t = 0; t < fc.NumFrames(); ++t) {
    real ec = 0.0, en = 0.0;
    for (int64 m = 0; m < 80; ++m) {
      ec += std::exp(fc.values(t, m));
      en += std::exp(fn.values(t, m));
    }
    CHECK(en >= 0.9 * ec);
  }
}

TEST_CASE("wav round trip is lossless at 16-bit quantization") {
  Rng rng(45);
  Waveform w = RandomWave(3000, &rng);
  std::string path = "/tmp/cmkit-wave-test.wav";
  WriteWav(path, w);
  Waveform r = ReadWav(path);
  CHECK(r.sample_rate == 16000);
  CHECK(r.NumSamples() == w.NumSamples());
  real step = 1.0 / 32768.0;
  for (int64 i = 0; i < r.NumSamples(); ++i)
    CHECK(std::abs(r.samples[static_cast<size_t>(i)] -
                   w.samples[static_cast<size_t>(i)]) <= step);
  std::remove(path.c_str());
}

TEST_CASE("wav reader rejects malformed input") {
  std::string path = "/tmp/cmkit-wave-bad.wav";
  {
    std::ofstream f(path, std::ios::binary);  // zero-length file
  }
  CHECK_THROWS_AS((void)ReadWav(path), FormatError);
  std::remove(path.c_str());
}

TEST_CASE("wav reader passes through the declared sample rate") {
  Waveform w(std::vector<real>(100, 0.25), 8000);
  std::string path = "/tmp/cmkit-wave-8k.wav";
  WriteWav(path, w);
  Waveform r = ReadWav(path);
  CHECK(r.sample_rate == 8000);
  std::remove(path.c_str());
}

TEST_CASE("wav reader rejects stereo and non-16-bit layouts") {
  // hand-build a stereo header
  std::string path = "/tmp/cmkit-wave-stereo.wav";
  {
    Waveform w(std::vector<real>(10, 0.0), 16000);
    WriteWav(path, w);
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(22);          // channel-count field
    char two[2] = {2, 0};
    f.write(two, 2);
  }
  CHECK_THROWS_AS((void)ReadWav(path), FormatError);
  std::remove(path.c_str());
}
