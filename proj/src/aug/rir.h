// aug/rir.h

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

#ifndef CMKIT_AUG_RIR_H_
#define CMKIT_AUG_RIR_H_

#include <array>

#include "base/rng.h"
#include "feat/wave.h"

namespace cmkit {

constexpr real kSpeedOfSound = 343.0;  // m/s
constexpr real kMinWallMargin = 0.1;   // m

// Shoebox room with one source and one microphone.
struct RoomSpec {
  std::array<real, 3> dims{6.0, 5.0, 3.0};   // Lx, Ly, Lz (m)
  std::array<real, 3> source{2.0, 2.0, 1.5};
  std::array<real, 3> mic{4.0, 3.0, 1.5};
  real rt60_target = 0.5;  // s
  // Per-axis cap on the image order; 0 selects it from rt60_target so the
  // modeled tail reaches the region the Schroeder fit needs.
  int32 max_image_order = 0;

  // Positions strictly inside and >= 0.1 m from every wall; rt60 > 0.
  void Validate() const;
};

// Image-source simulation with frequency-independent wall reflectivity
// solved from Eyring's formula for the target RT60.  Fractional delays are
// placed with a Hann-windowed sinc.  Deterministic.
Waveform SimulateRir(const RoomSpec &spec, int32 sample_rate);

// Schroeder backward integration; least-squares line on the -5..-25 dB
// span of the decay curve, extrapolated to -60 dB (T20).  Throws
// EstimationError when there is no usable decay segment.
real EstimateRt60(const Waveform &rir);

// Schroeder decay curve in dB relative to the energy at the direct-path
// peak; exposed for tests of the monotonicity property.
std::vector<real> SchroederDecayDb(const Waveform &rir, int64 *peak_index);

struct ReverbResult {
  Waveform wet;
  real renorm = 1.0;
};

// Convolve with the RIR, truncate to the clean length, peak-renormalize if
// the result would clip.
ReverbResult AddReverb(const Waveform &clean, const Waveform &rir);

// Uniform room draw within [dims_min, dims_max]; source/mic uniform inside
// the wall margins; rt60 uniform in [rt60_min, rt60_max].
RoomSpec DrawRoom(const std::array<real, 3> &dims_min,
                  const std::array<real, 3> &dims_max, real rt60_min,
                  real rt60_max, int32 max_image_order, Rng *rng);

}  // namespace cmkit

#endif  // CMKIT_AUG_RIR_H_
