// aug/testsets.h

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

#ifndef CMKIT_AUG_TESTSETS_H_
#define CMKIT_AUG_TESTSETS_H_

#include "aug/policy.h"
#include "config/manifest.h"

namespace cmkit {

// The 15 noise conditions (babble/music/noise x 0/5/10/15/20 dB) followed
// by the 4 reverberation conditions, in canonical report order.
std::vector<std::string> CanonicalConditionNames();

struct TestSetSpec {
  std::vector<real> snrs_db{20.0, 15.0, 10.0, 5.0, 0.0};
  std::vector<real> rt60s_s{0.25, 0.5, 0.75, 1.0};
  std::array<real, 3> room_dims_min{10.0, 8.0, 2.8};
  std::array<real, 3> room_dims_max{15.0, 10.0, 4.0};
  int32 babble_k_min = 3, babble_k_max = 8;
};

// Writes one directory per condition under out_dir:
//   <condition>/wav/<utt_id>.wav        corrupted audio
//   <condition>/manifest.tsv            utt_id, path, label, corruption json
//   rt60_*/rir/<utt_id>.wav             the peak-normalized impulse response
// Condition names follow {babble|music|noise}_{0|5|10|15|20}db and
// rt60_{025|050|075|100}.  Deterministic for a fixed seed.  Refuses to
// overwrite an existing condition directory unless force is set.
void GenerateTestSets(const std::vector<ManifestEntry> &eval_utts,
                      const NoiseInventory &eval_inventory,
                      const TestSetSpec &spec, const std::string &out_dir,
                      uint64 seed, bool force);

}  // namespace cmkit

#endif  // CMKIT_AUG_TESTSETS_H_
