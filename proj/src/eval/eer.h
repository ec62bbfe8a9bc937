// eval/eer.h

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

#ifndef CMKIT_EVAL_EER_H_
#define CMKIT_EVAL_EER_H_

#include <string>
#include <vector>

#include "base/common.h"

namespace cmkit {

// Per-utterance detection score with its ground-truth label.
// Polarity: higher score = more bona fide.
struct ScoreEntry {
  std::string utt_id;
  real score = 0.0;
  bool bonafide = false;
};

struct ScoreSet {
  std::vector<ScoreEntry> entries;

  int64 CountBonafide() const;
  int64 CountSpoof() const;
  // Finite scores, both classes present.
  void ValidateForEer() const;
};

struct EerResult {
  real eer = 0.0;        // fraction in [0, 1]
  real threshold = 0.0;  // score value at the crossing
};

// Equal error rate.  P_fa(t) counts spoof trials with score > t, P_miss(t)
// counts bona fide trials with score <= t; thresholds sweep the midpoints
// between adjacent distinct scores (plus one point below the minimum and
// one at the maximum) and the crossing is located by linear interpolation
// of the ROC segment between adjacent operating points.
EerResult ComputeEer(const ScoreSet &scores);

// Score file: one line per trial, `utt_id<SPACE>score` with 6 decimals.
void WriteScores(const std::string &path, const ScoreSet &scores);
// Reads scores and joins labels by utt_id; every score line must have a
// label and vice versa.
ScoreSet ReadScores(const std::string &path,
                    const std::vector<std::pair<std::string, bool>> &labels);

}  // namespace cmkit

#endif  // CMKIT_EVAL_EER_H_
