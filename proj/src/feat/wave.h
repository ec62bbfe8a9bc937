// feat/wave.h

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

#ifndef CMKIT_FEAT_WAVE_H_
#define CMKIT_FEAT_WAVE_H_

#include <string>
#include <vector>

#include "base/common.h"

namespace cmkit {

// Mono PCM audio in linear amplitude, nominally within [-1, 1).
struct Waveform {
  std::vector<real> samples;
  int32 sample_rate = 16000;

  Waveform() = default;
  Waveform(std::vector<real> s, int32 sr)
      : samples(std::move(s)), sample_rate(sr) {}

  int64 NumSamples() const { return static_cast<int64>(samples.size()); }
  real DurationSeconds() const {
    return static_cast<real>(samples.size()) / sample_rate;
  }
  // Root mean square over the full length.
  real Rms() const;
  real MeanSquare() const;
  real PeakAbs() const;

  // Throws InvalidInputError unless sample_rate > 0, length >= 1 and all
  // samples are finite.
  void Validate() const;
};

// Reads a 16-bit PCM mono RIFF/WAVE file.  Rejects anything else with a
// FormatError naming the offending header field; never resamples.
Waveform ReadWav(const std::string &path);

// Writes 16-bit PCM mono.  Samples are clipped to the representable range.
void WriteWav(const std::string &path, const Waveform &w);

}  // namespace cmkit

#endif  // CMKIT_FEAT_WAVE_H_
