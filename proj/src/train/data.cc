// train/data.cc

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

#include "train/data.h"

namespace cmkit {

Waveform CropOrTile(const Waveform &w, int64 target_len, Rng *rng) {
  int64 n = w.NumSamples();
  std::vector<real> out(static_cast<size_t>(target_len));
  if (n >= target_len) {
    int64 start = rng->UniformInt(0, n - target_len);
    std::copy(w.samples.begin() + start, w.samples.begin() + start + target_len,
              out.begin());
  } else {
    int64 phase = rng->UniformInt(0, n - 1);
    for (int64 i = 0; i < target_len; ++i)
      out[static_cast<size_t>(i)] =
          w.samples[static_cast<size_t>((phase + i) % n)];
  }
  return Waveform(std::move(out), w.sample_rate);
}

Waveform CenterCropOrTile(const Waveform &w, int64 target_len) {
  int64 n = w.NumSamples();
  std::vector<real> out(static_cast<size_t>(target_len));
  if (n >= target_len) {
    int64 start = (n - target_len) / 2;
    std::copy(w.samples.begin() + start, w.samples.begin() + start + target_len,
              out.begin());
  } else {
    for (int64 i = 0; i < target_len; ++i)
      out[static_cast<size_t>(i)] = w.samples[static_cast<size_t>(i % n)];
  }
  return Waveform(std::move(out), w.sample_rate);
}

UtteranceDataset::UtteranceDataset(std::vector<ManifestEntry> entries)
    : entries_(std::move(entries)), cache_(entries_.size()) {
  if (entries_.empty())
    CMKIT_ERR(ConfigError) << "dataset manifest is empty";
}

const Waveform &UtteranceDataset::wave(int64 i) const {
  auto &slot = cache_[static_cast<size_t>(i)];
  if (!slot.has_value()) slot = ReadWav(entries_[static_cast<size_t>(i)].path);
  return *slot;
}

}  // namespace cmkit
