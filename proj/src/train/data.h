// train/data.h

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

#ifndef CMKIT_TRAIN_DATA_H_
#define CMKIT_TRAIN_DATA_H_

#include <optional>
#include <vector>

#include "config/config.h"
#include "config/manifest.h"
#include "feat/fbank.h"

namespace cmkit {

// Feature settings bundled with extraction.
struct FeatureExtractor {
  StftParams stft;
  int32 n_mels = 80;
  real log_floor = kDefaultLogFloor;

  static FeatureExtractor FromConfig(const RunConfig &cfg) {
    return {cfg.stft, cfg.fbank.n_mels, cfg.fbank.log_floor};
  }
  Tensor Features(const Waveform &w) const {
    return Fbank(w, n_mels, stft, log_floor).values;
  }
};

// Fixed-length view for batching: random crop of longer utterances,
// cyclic tiling from a random phase for shorter ones.
Waveform CropOrTile(const Waveform &w, int64 target_len, Rng *rng);
// Deterministic variant used on the dev split: center crop / zero-phase
// tiling.
Waveform CenterCropOrTile(const Waveform &w, int64 target_len);

// Manifest-backed utterance set with an in-memory waveform cache.
class UtteranceDataset {
 public:
  explicit UtteranceDataset(std::vector<ManifestEntry> entries);

  int64 size() const { return static_cast<int64>(entries_.size()); }
  const ManifestEntry &entry(int64 i) const {
    return entries_[static_cast<size_t>(i)];
  }
  const Waveform &wave(int64 i) const;
  // 1 = bona fide, 0 = spoof
  int32 label(int64 i) const {
    return entries_[static_cast<size_t>(i)].label == "bonafide" ? 1 : 0;
  }

 private:
  std::vector<ManifestEntry> entries_;
  mutable std::vector<std::optional<Waveform>> cache_;
};

}  // namespace cmkit

#endif  // CMKIT_TRAIN_DATA_H_
