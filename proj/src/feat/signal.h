// feat/signal.h

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

#ifndef CMKIT_FEAT_SIGNAL_H_
#define CMKIT_FEAT_SIGNAL_H_

#include <complex>
#include <vector>

#include "feat/wave.h"
#include "matrix/tensor.h"

namespace cmkit {

struct StftParams {
  int32 window_ms = 64;
  int32 hop_ms = 8;
  // Only Hamming analysis windows are supported; the field exists so the
  // configuration can say so explicitly.
  std::string window_kind = "hamming";

  int64 WindowLength(int32 sample_rate) const {
    return static_cast<int64>(window_ms) * sample_rate / 1000;
  }
  int64 HopLength(int32 sample_rate) const {
    return static_cast<int64>(hop_ms) * sample_rate / 1000;
  }
  // Window length rounded up to the next power of two (1024 at 16 kHz).
  int64 FftSize(int32 sample_rate) const;

  void Validate(int32 sample_rate) const;
};

// Magnitude/phase pair of equal [frames x bins] shape.
struct ComplexSpectrogram {
  Tensor magnitude;  // >= 0
  Tensor phase;      // radians
  StftParams params;
  int32 sample_rate = 16000;

  int64 NumFrames() const { return magnitude.Dim(0); }
  int64 NumBins() const { return magnitude.Dim(1); }
};

// In-place radix-2 FFT; size must be a power of two.
void Fft(std::vector<std::complex<real>> *buf, bool inverse);

// Frame count with no padding; trailing partial frames are dropped.
// Returns 0 when the waveform is shorter than one window.
int64 NumStftFrames(int64 num_samples, int64 window, int64 hop);

// Hamming analysis window of length n.
std::vector<real> HammingWindow(int64 n);

ComplexSpectrogram Stft(const Waveform &w, const StftParams &params);

// Overlap-add synthesis with squared-window normalization.  For an
// unmodified Stft output this reconstructs the analyzed span exactly up to
// rounding; output length is (frames-1)*hop + window.
Waveform Istft(const ComplexSpectrogram &spec);

// FFT-based linear convolution truncated to the length of `signal`, so a
// corrupted utterance keeps its original duration.  Sample rates must match.
Waveform Convolve(const Waveform &signal, const Waveform &rir);

}  // namespace cmkit

#endif  // CMKIT_FEAT_SIGNAL_H_
