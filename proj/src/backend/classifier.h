// backend/classifier.h

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

#ifndef CMKIT_BACKEND_CLASSIFIER_H_
#define CMKIT_BACKEND_CLASSIFIER_H_

#include "nnet/layers.h"

namespace cmkit {

// Common face of the three anti-spoofing backbones: FBANK features in,
// two-class logits out.  Class index 1 is bona fide.
class SpoofClassifier : public nn::Module {
 public:
  // features [B, T, F] -> logits [B, 2]
  virtual nn::Variable ForwardLogits(const nn::Variable &features) = 0;
  // Minimum frame count the architecture supports.
  virtual int64 MinFrames() const = 0;
};

// Detection score: logit(bona fide) - logit(spoof); higher = more bona fide.
inline Tensor ScoresFromLogits(const Tensor &logits) {
  CMKIT_ASSERT(logits.NumAxes() == 2 && logits.Dim(1) == 2);
  Tensor scores({logits.Dim(0)});
  for (int64 i = 0; i < logits.Dim(0); ++i)
    scores[i] = logits(i, 1) - logits(i, 0);
  return scores;
}

}  // namespace cmkit

#endif  // CMKIT_BACKEND_CLASSIFIER_H_
