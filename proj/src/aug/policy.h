// aug/policy.h

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

#ifndef CMKIT_AUG_POLICY_H_
#define CMKIT_AUG_POLICY_H_

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "aug/noise-augment.h"
#include "aug/rir.h"

namespace cmkit {

enum class NoiseCategory { kSpeech, kMusic, kEnvironmental };

std::string NoiseCategoryName(NoiseCategory c);
NoiseCategory NoiseCategoryFromName(const std::string &name);

// Clips partitioned into the three source categories.  Train and eval
// inventories are loaded from the same manifest with different partition
// tags; disjointness by clip id is asserted at load time.
class NoiseInventory {
 public:
  struct Clip {
    std::string id;
    std::string path;
    NoiseCategory category;
  };

  // Manifest line: clip_id<TAB>relative_path<TAB>category<TAB>partition
  // with category in {speech, music, environmental} and partition in
  // {train, eval}.  Clips land in the inventory whose partition matches.
  static NoiseInventory Load(const std::string &manifest_path,
                             const std::string &partition);

  const std::vector<Clip> &clips(NoiseCategory c) const;
  // Waveforms are cached after the first read.
  const Waveform &ClipWave(const Clip &clip) const;
  const Clip &FindClip(const std::string &id) const;
  bool empty() const;
  // Every category non-empty; required before sampling.
  void ValidateForSampling() const;

 private:
  std::array<std::vector<Clip>, 3> clips_;
  mutable std::map<std::string, Waveform> cache_;
  std::map<std::string, Clip> by_id_;
};

// Asserted whenever both partitions are in play.
void CheckInventoriesDisjoint(const NoiseInventory &train,
                              const NoiseInventory &eval);

enum class AugmentMode { kNoiseOnly, kReverbOnly, kMixed };

std::string AugmentModeName(AugmentMode m);
AugmentMode AugmentModeFromName(const std::string &name);

// Probabilistic recipe for one corruption draw.
struct AugmentationPolicy {
  real p_augment = 0.7;
  // babble, music, environmental
  std::array<real, 3> noise_type_probs{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  real snr_min_db = 0.0, snr_max_db = 20.0;
  int32 babble_k_min = 3, babble_k_max = 8;
  std::array<real, 3> room_dims_min{3.0, 3.0, 2.5};
  std::array<real, 3> room_dims_max{10.0, 6.0, 4.0};
  real rt60_min_s = 0.2, rt60_max_s = 1.0;
  AugmentMode mode = AugmentMode::kNoiseOnly;
  // Image-order cap handed to the simulator for online draws (0 = exact).
  int32 max_image_order = 0;

  void Validate() const;
};

// Everything needed to regenerate a corrupted waveform bit-exactly.
struct CorruptionRecord {
  std::string utt_id;
  // "none", "babble", "music", "environmental" or "reverb"
  std::string kind = "none";
  uint64 seed = 0;

  // noise corruption
  std::vector<std::string> clip_ids;       // 1 clip, or k for babble
  std::vector<SegmentSpec> clip_segments;  // alignment per clip
  real snr_db = 0.0;
  real gain = 0.0;
  // reverb corruption
  RoomSpec room;
  real rt60_s = 0.0;
  // post-mix renormalization applied (1.0 = none)
  real renorm = 1.0;

  std::string ToJson() const;
  static CorruptionRecord FromJson(const std::string &json);
};

// Applies the policy to one utterance, or replays a recorded corruption.
class Augmentor {
 public:
  Augmentor(AugmentationPolicy policy, const NoiseInventory *inventory);

  const AugmentationPolicy &policy() const { return policy_; }

  // With probability 1 - p_augment returns the input untouched; otherwise
  // exactly one corruption drawn per the policy.  The record fully
  // determines the output.
  std::pair<Waveform, CorruptionRecord> Apply(const Waveform &clean,
                                              const std::string &utt_id,
                                              Rng *rng) const;

  // Deterministic regeneration; bit-exact with the original Apply output.
  Waveform Replay(const Waveform &clean, const CorruptionRecord &rec) const;

 private:
  std::pair<Waveform, CorruptionRecord> ApplyNoise(const Waveform &clean,
                                                   const std::string &utt_id,
                                                   Rng *rng) const;
  std::pair<Waveform, CorruptionRecord> ApplyReverb(const Waveform &clean,
                                                    const std::string &utt_id,
                                                    Rng *rng) const;

  AugmentationPolicy policy_;
  const NoiseInventory *inventory_;
};

}  // namespace cmkit

#endif  // CMKIT_AUG_POLICY_H_
