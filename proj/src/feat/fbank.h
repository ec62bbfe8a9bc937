// feat/fbank.h

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

#ifndef CMKIT_FEAT_FBANK_H_
#define CMKIT_FEAT_FBANK_H_

#include "feat/signal.h"

namespace cmkit {

// Log-mel filterbank matrix [frames x mels].
struct FbankFeatures {
  Tensor values;
  int32 n_mels = 80;
  StftParams params;
  real log_floor = 1e-10;

  int64 NumFrames() const { return values.Dim(0); }
};

constexpr real kDefaultLogFloor = 1e-10;

real HzToMel(real hz);
real MelToHz(real mel);

// Triangular filters on the mel scale spanning 0 Hz .. Nyquist.
// Returns [n_mels x bins] weights.
Tensor MelFilterbank(int32 n_mels, int64 fft_size, int32 sample_rate);

// values = log(mel_weights * power_spectrum + log_floor).
FbankFeatures Fbank(const Waveform &w, int32 n_mels, const StftParams &params,
                    real log_floor = kDefaultLogFloor);

// Same, starting from an existing spectrogram (saves the repeated STFT when
// both the spectrogram and the features are needed).
FbankFeatures FbankFromSpectrogram(const ComplexSpectrogram &spec,
                                   int32 n_mels,
                                   real log_floor = kDefaultLogFloor);

}  // namespace cmkit

#endif  // CMKIT_FEAT_FBANK_H_
