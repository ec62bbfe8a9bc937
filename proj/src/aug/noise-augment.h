// aug/noise-augment.h

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

#ifndef CMKIT_AUG_NOISE_AUGMENT_H_
#define CMKIT_AUG_NOISE_AUGMENT_H_

#include <limits>
#include <string>
#include <vector>

#include "base/rng.h"
#include "feat/wave.h"

namespace cmkit {

// Sentinel SNR meaning "no noise is added"; add_noise returns the clean
// waveform bit-exactly.
constexpr real kSnrNoAugment = std::numeric_limits<real>::infinity();

// Peak-renormalization target when mixing would clip.
constexpr real kClipPeak = 0.999;

// Gain g such that 10*log10(P_clean / (g^2 * P_noise)) = snr_db, with
// powers as mean squares over the full (aligned) lengths.
real NoiseGain(const Waveform &clean, const Waveform &noise, real snr_db);

// How a noise clip was aligned to the clean utterance: looped clips start
// at `offset` and wrap; longer clips are cropped starting at `offset`.
struct SegmentSpec {
  int64 offset = 0;
  bool looped = false;
};

// Extracts a clean-length noise segment per the spec.
Waveform ExtractSegment(const Waveform &noise, int64 target_len,
                        const SegmentSpec &seg);
// Draws the alignment for a clip of length `noise_len` against
// `target_len` samples.
SegmentSpec DrawSegment(int64 noise_len, int64 target_len, Rng *rng);

struct NoiseMixResult {
  Waveform mixed;
  real gain = 0.0;          // applied to the noise segment
  real renorm = 1.0;        // post-mix scale (< 1 when the peak clipped)
  SegmentSpec segment;
};

// clean + g * segment(noise); peak-renormalized to kClipPeak if |sample|
// would exceed 1.  snr_db = +inf returns clean unchanged.
NoiseMixResult AddNoise(const Waveform &clean, const Waveform &noise,
                        real snr_db, Rng *rng);

// Deterministic replay of AddNoise from a recorded segment alignment.
NoiseMixResult AddNoiseWithSegment(const Waveform &clean,
                                   const Waveform &noise, real snr_db,
                                   const SegmentSpec &seg);

struct BabbleResult {
  Waveform babble;
  std::vector<int32> clip_indices;
  std::vector<SegmentSpec> segments;
};

// Sum of k distinct speech clips, each aligned to `target_len`.  The sum is
// the noise term handed to AddNoise.  k must lie in [3, 8].
BabbleResult MakeBabble(const std::vector<Waveform> &speech_clips,
                        int32 k, int64 target_len, int32 sample_rate,
                        Rng *rng);
// Replay from recorded indices/segments.
Waveform MakeBabbleWith(const std::vector<Waveform> &speech_clips,
                        const std::vector<int32> &clip_indices,
                        const std::vector<SegmentSpec> &segments,
                        int64 target_len, int32 sample_rate);

// Measured SNR of a (clean, scaled-noise) pair in dB.
real MeasureSnrDb(const Waveform &clean, const Waveform &scaled_noise);

}  // namespace cmkit

#endif  // CMKIT_AUG_NOISE_AUGMENT_H_
