// aug/noise-augment.cc

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

#include "aug/noise-augment.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace cmkit {

real NoiseGain(const Waveform &clean, const Waveform &noise, real snr_db) {
  clean.Validate();
  noise.Validate();
  real pc = clean.MeanSquare();
  real pn = noise.MeanSquare();
  if (pc <= 0.0)
    CMKIT_ERR(InvalidInputError) << "clean signal is silent (zero RMS)";
  if (pn <= 0.0)
    CMKIT_ERR(InvalidInputError) << "noise signal is silent (zero RMS)";
  // 10*log10(pc / (g^2 pn)) = snr  =>  g = sqrt(pc / (pn * 10^(snr/10)))
  return std::sqrt(pc / (pn * std::pow(10.0, snr_db / 10.0)));
}

Waveform ExtractSegment(const Waveform &noise, int64 target_len,
                        const SegmentSpec &seg) {
  int64 n = noise.NumSamples();
  std::vector<real> out(static_cast<size_t>(target_len));
  if (seg.looped) {
    for (int64 i = 0; i < target_len; ++i)
      out[static_cast<size_t>(i)] =
          noise.samples[static_cast<size_t>((seg.offset + i) % n)];
  } else {
    CMKIT_ASSERT(seg.offset + target_len <= n);
    std::copy(noise.samples.begin() + seg.offset,
              noise.samples.begin() + seg.offset + target_len, out.begin());
  }
  return Waveform(std::move(out), noise.sample_rate);
}

SegmentSpec DrawSegment(int64 noise_len, int64 target_len, Rng *rng) {
  SegmentSpec seg;
  if (noise_len >= target_len) {
    seg.looped = false;
    seg.offset = rng->UniformInt(0, noise_len - target_len);
  } else {
    seg.looped = true;
    seg.offset = rng->UniformInt(0, noise_len - 1);
  }
  return seg;
}

NoiseMixResult AddNoiseWithSegment(const Waveform &clean,
                                   const Waveform &noise, real snr_db,
                                   const SegmentSpec &seg) {
  clean.Validate();
  if (std::isinf(snr_db) && snr_db > 0.0) {
    NoiseMixResult res;
    res.mixed = clean;
    res.gain = 0.0;
    return res;
  }
  if (clean.sample_rate != noise.sample_rate)
    CMKIT_ERR(InvalidInputError)
        << "sample-rate mismatch: clean " << clean.sample_rate << " vs noise "
        << noise.sample_rate;
  Waveform segment = ExtractSegment(noise, clean.NumSamples(), seg);
  NoiseMixResult res;
  res.segment = seg;
  res.gain = NoiseGain(clean, segment, snr_db);
  res.mixed = clean;
  for (int64 i = 0; i < clean.NumSamples(); ++i)
    res.mixed.samples[static_cast<size_t>(i)] +=
        res.gain * segment.samples[static_cast<size_t>(i)];
  real peak = res.mixed.PeakAbs();
  if (peak > 1.0) {
    res.renorm = kClipPeak / peak;
    for (real &s : res.mixed.samples) s *= res.renorm;
  }
  return res;
}

NoiseMixResult AddNoise(const Waveform &clean, const Waveform &noise,
                        real snr_db, Rng *rng) {
  if (std::isinf(snr_db) && snr_db > 0.0) {
    NoiseMixResult res;
    res.mixed = clean;
    res.gain = 0.0;
    return res;
  }
  noise.Validate();
  SegmentSpec seg = DrawSegment(noise.NumSamples(), clean.NumSamples(), rng);
  return AddNoiseWithSegment(clean, noise, snr_db, seg);
}

BabbleResult MakeBabble(const std::vector<Waveform> &speech_clips, int32 k,
                        int64 target_len, int32 sample_rate, Rng *rng) {
  if (k < 3 || k > 8)
    CMKIT_ERR(InvalidInputError) << "babble k must be in [3, 8], got " << k;
  if (static_cast<int32>(speech_clips.size()) < k)
    CMKIT_ERR(InvalidInputError)
        << "need at least " << k << " distinct speech clips, have "
        << speech_clips.size();
  // draw k distinct indices
  std::vector<int32> pool(speech_clips.size());
  for (size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<int32>(i);
  BabbleResult res;
  for (int32 i = 0; i < k; ++i) {
    int64 j = rng->UniformInt(i, static_cast<int64>(pool.size()) - 1);
    std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
    res.clip_indices.push_back(pool[static_cast<size_t>(i)]);
  }
  for (int32 idx : res.clip_indices) {
    const Waveform &clip = speech_clips[static_cast<size_t>(idx)];
    res.segments.push_back(DrawSegment(clip.NumSamples(), target_len, rng));
  }
  res.babble = MakeBabbleWith(speech_clips, res.clip_indices, res.segments,
                              target_len, sample_rate);
  return res;
}

Waveform MakeBabbleWith(const std::vector<Waveform> &speech_clips,
                        const std::vector<int32> &clip_indices,
                        const std::vector<SegmentSpec> &segments,
                        int64 target_len, int32 sample_rate) {
  CMKIT_ASSERT(clip_indices.size() == segments.size());
  Waveform out(std::vector<real>(static_cast<size_t>(target_len), 0.0),
               sample_rate);
  for (size_t i = 0; i < clip_indices.size(); ++i) {
    const Waveform &clip = speech_clips[static_cast<size_t>(clip_indices[i])];
    if (clip.sample_rate != sample_rate)
      CMKIT_ERR(InvalidInputError)
          << "babble clip sample rate " << clip.sample_rate
          << " differs from " << sample_rate;
    Waveform seg = ExtractSegment(clip, target_len, segments[i]);
    for (int64 t = 0; t < target_len; ++t)
      out.samples[static_cast<size_t>(t)] +=
          seg.samples[static_cast<size_t>(t)];
  }
  return out;
}

real MeasureSnrDb(const Waveform &clean, const Waveform &scaled_noise) {
  real pc = clean.MeanSquare();
  real pn = scaled_noise.MeanSquare();
  CMKIT_ASSERT(pc > 0.0 && pn > 0.0);
  return 10.0 * std::log10(pc / pn);
}

}  // namespace cmkit
