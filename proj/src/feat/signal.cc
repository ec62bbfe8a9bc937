// feat/signal.cc

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

#include "feat/signal.h"

#include <cmath>

namespace cmkit {

namespace {
constexpr real kPi = 3.14159265358979323846;

int64 NextPowerOfTwo(int64 n) {
  int64 p = 1;
  while (p < n) p <<= 1;
  return p;
}
}  // namespace

int64 StftParams::FftSize(int32 sample_rate) const {
  return NextPowerOfTwo(WindowLength(sample_rate));
}

void StftParams::Validate(int32 sample_rate) const {
  if (hop_ms > window_ms)
    CMKIT_ERR(InvalidInputError)
        << "hop_ms (" << hop_ms << ") must not exceed window_ms ("
        << window_ms << ")";
  if (window_ms <= 0 || hop_ms <= 0)
    CMKIT_ERR(InvalidInputError) << "window_ms and hop_ms must be positive";
  if (window_kind != "hamming")
    CMKIT_ERR(InvalidInputError) << "unsupported window kind: " << window_kind;
  if (WindowLength(sample_rate) < 1 || HopLength(sample_rate) < 1)
    CMKIT_ERR(InvalidInputError)
        << "window/hop shorter than one sample at rate " << sample_rate;
}

void Fft(std::vector<std::complex<real>> *buf, bool inverse) {
  std::vector<std::complex<real>> &a = *buf;
  size_t n = a.size();
  CMKIT_ASSERT(n > 0 && (n & (n - 1)) == 0);
  // bit-reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    real ang = 2.0 * kPi / static_cast<real>(len) * (inverse ? 1.0 : -1.0);
    std::complex<real> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<real> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        std::complex<real> u = a[i + j];
        std::complex<real> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    real inv = 1.0 / static_cast<real>(n);
    for (auto &x : a) x *= inv;
  }
}

int64 NumStftFrames(int64 num_samples, int64 window, int64 hop) {
  if (num_samples < window) return 0;
  return 1 + (num_samples - window) / hop;
}

std::vector<real> HammingWindow(int64 n) {
  // Periodic form: a DC input then leaks only into bins 0 and +-1, and a
  // sine at an exact bin center has support {k-1, k, k+1}.
  std::vector<real> w(static_cast<size_t>(n));
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  for (int64 i = 0; i < n; ++i)
    w[static_cast<size_t>(i)] =
        0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<real>(i) /
                               static_cast<real>(n));
  return w;
}

ComplexSpectrogram Stft(const Waveform &w, const StftParams &params) {
  w.Validate();
  params.Validate(w.sample_rate);
  int64 win = params.WindowLength(w.sample_rate);
  int64 hop = params.HopLength(w.sample_rate);
  int64 fft_size = params.FftSize(w.sample_rate);
  int64 frames = NumStftFrames(w.NumSamples(), win, hop);
  if (frames == 0)
    CMKIT_ERR(InvalidInputError)
        << "waveform shorter than one window: " << w.NumSamples() << " < "
        << win << " samples";
  int64 bins = fft_size / 2 + 1;

  std::vector<real> window = HammingWindow(win);
  ComplexSpectrogram spec;
  spec.magnitude = Tensor({frames, bins});
  spec.phase = Tensor({frames, bins});
  spec.params = params;
  spec.sample_rate = w.sample_rate;

  std::vector<std::complex<real>> buf(static_cast<size_t>(fft_size));
  for (int64 f = 0; f < frames; ++f) {
    int64 start = f * hop;
    for (int64 i = 0; i < win; ++i)
      buf[static_cast<size_t>(i)] = w.samples[static_cast<size_t>(start + i)] *
                                    window[static_cast<size_t>(i)];
    for (int64 i = win; i < fft_size; ++i) buf[static_cast<size_t>(i)] = 0.0;
    Fft(&buf, false);
    for (int64 b = 0; b < bins; ++b) {
      spec.magnitude(f, b) = std::abs(buf[static_cast<size_t>(b)]);
      spec.phase(f, b) = std::arg(buf[static_cast<size_t>(b)]);
    }
  }
  return spec;
}

Waveform Istft(const ComplexSpectrogram &spec) {
  if (!spec.magnitude.SameShape(spec.phase))
    CMKIT_ERR(InvalidInputError)
        << "magnitude shape " << spec.magnitude.ShapeString()
        << " differs from phase shape " << spec.phase.ShapeString();
  spec.params.Validate(spec.sample_rate);
  int64 win = spec.params.WindowLength(spec.sample_rate);
  int64 hop = spec.params.HopLength(spec.sample_rate);
  int64 fft_size = spec.params.FftSize(spec.sample_rate);
  int64 frames = spec.NumFrames();
  int64 bins = fft_size / 2 + 1;
  if (spec.NumBins() != bins)
    CMKIT_ERR(InvalidInputError)
        << "bin count " << spec.NumBins() << " inconsistent with fft size "
        << fft_size;
  for (int64 i = 0; i < spec.magnitude.NumElements(); ++i)
    if (spec.magnitude[i] < 0.0)
      CMKIT_ERR(InvalidInputError) << "negative magnitude in spectrogram";

  int64 out_len = (frames - 1) * hop + win;
  std::vector<real> out(static_cast<size_t>(out_len), 0.0);
  std::vector<real> norm(static_cast<size_t>(out_len), 0.0);
  std::vector<real> window = HammingWindow(win);

  std::vector<std::complex<real>> buf(static_cast<size_t>(fft_size));
  for (int64 f = 0; f < frames; ++f) {
    for (int64 b = 0; b < bins; ++b) {
      real m = spec.magnitude(f, b);
      real p = spec.phase(f, b);
      buf[static_cast<size_t>(b)] =
          std::complex<real>(m * std::cos(p), m * std::sin(p));
    }
    // Hermitian symmetry for the real inverse transform.
    for (int64 b = bins; b < fft_size; ++b)
      buf[static_cast<size_t>(b)] =
          std::conj(buf[static_cast<size_t>(fft_size - b)]);
    Fft(&buf, true);
    int64 start = f * hop;
    for (int64 i = 0; i < win; ++i) {
      real wv = window[static_cast<size_t>(i)];
      out[static_cast<size_t>(start + i)] +=
          wv * buf[static_cast<size_t>(i)].real();
      norm[static_cast<size_t>(start + i)] += wv * wv;
    }
  }
  for (int64 i = 0; i < out_len; ++i) {
    if (norm[static_cast<size_t>(i)] > 1e-12)
      out[static_cast<size_t>(i)] /= norm[static_cast<size_t>(i)];
  }
  return Waveform(std::move(out), spec.sample_rate);
}

Waveform Convolve(const Waveform &signal, const Waveform &rir) {
  signal.Validate();
  rir.Validate();
  if (signal.sample_rate != rir.sample_rate)
    CMKIT_ERR(InvalidInputError)
        << "sample-rate mismatch: signal " << signal.sample_rate << " vs rir "
        << rir.sample_rate;
  int64 n = signal.NumSamples(), m = rir.NumSamples();
  int64 full = n + m - 1;
  int64 size = NextPowerOfTwo(full);
  std::vector<std::complex<real>> a(static_cast<size_t>(size)),
      b(static_cast<size_t>(size));
  for (int64 i = 0; i < n; ++i)
    a[static_cast<size_t>(i)] = signal.samples[static_cast<size_t>(i)];
  for (int64 i = 0; i < m; ++i)
    b[static_cast<size_t>(i)] = rir.samples[static_cast<size_t>(i)];
  Fft(&a, false);
  Fft(&b, false);
  for (int64 i = 0; i < size; ++i)
    a[static_cast<size_t>(i)] *= b[static_cast<size_t>(i)];
  Fft(&a, true);
  std::vector<real> out(static_cast<size_t>(n));
  for (int64 i = 0; i < n; ++i)
    out[static_cast<size_t>(i)] = a[static_cast<size_t>(i)].real();
  return Waveform(std::move(out), signal.sample_rate);
}

}  // namespace cmkit
