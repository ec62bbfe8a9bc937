// feat/fbank.cc

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

#include "feat/fbank.h"

#include <cmath>

namespace cmkit {

real HzToMel(real hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
real MelToHz(real mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

Tensor MelFilterbank(int32 n_mels, int64 fft_size, int32 sample_rate) {
  if (n_mels <= 0)
    CMKIT_ERR(InvalidInputError) << "n_mels must be positive, got " << n_mels;
  int64 bins = fft_size / 2 + 1;
  real nyquist = static_cast<real>(sample_rate) / 2.0;
  real mel_lo = HzToMel(0.0), mel_hi = HzToMel(nyquist);
  // n_mels + 2 edge points, uniformly spaced on the mel scale
  std::vector<real> edges_hz(static_cast<size_t>(n_mels) + 2);
  for (int32 i = 0; i < n_mels + 2; ++i)
    edges_hz[static_cast<size_t>(i)] = MelToHz(
        mel_lo + (mel_hi - mel_lo) * static_cast<real>(i) / (n_mels + 1));

  Tensor fb({n_mels, bins});
  for (int32 m = 0; m < n_mels; ++m) {
    real left = edges_hz[static_cast<size_t>(m)];
    real center = edges_hz[static_cast<size_t>(m) + 1];
    real right = edges_hz[static_cast<size_t>(m) + 2];
    for (int64 b = 0; b < bins; ++b) {
      real freq = static_cast<real>(b) * sample_rate /
                  static_cast<real>(fft_size);
      real wgt = 0.0;
      if (freq > left && freq < right) {
        wgt = (freq <= center) ? (freq - left) / (center - left)
                               : (right - freq) / (right - center);
      }
      fb(m, b) = wgt;
    }
  }
  return fb;
}

FbankFeatures FbankFromSpectrogram(const ComplexSpectrogram &spec,
                                   int32 n_mels, real log_floor) {
  if (n_mels <= 0)
    CMKIT_ERR(InvalidInputError) << "n_mels must be positive, got " << n_mels;
  int64 fft_size = spec.params.FftSize(spec.sample_rate);
  Tensor fb = MelFilterbank(n_mels, fft_size, spec.sample_rate);
  int64 frames = spec.NumFrames(), bins = spec.NumBins();
  FbankFeatures out;
  out.n_mels = n_mels;
  out.params = spec.params;
  out.log_floor = log_floor;
  out.values = Tensor({frames, n_mels});
  for (int64 f = 0; f < frames; ++f) {
    for (int32 m = 0; m < n_mels; ++m) {
      real acc = 0.0;
      for (int64 b = 0; b < bins; ++b) {
        real mag = spec.magnitude(f, b);
        acc += fb(m, b) * mag * mag;
      }
      out.values(f, m) = std::log(acc + log_floor);
    }
  }
  return out;
}

FbankFeatures Fbank(const Waveform &w, int32 n_mels, const StftParams &params,
                    real log_floor) {
  if (n_mels <= 0)
    CMKIT_ERR(InvalidInputError) << "n_mels must be positive, got " << n_mels;
  return FbankFromSpectrogram(Stft(w, params), n_mels, log_floor);
}

}  // namespace cmkit
