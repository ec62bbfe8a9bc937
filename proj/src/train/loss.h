// train/loss.h

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

#ifndef CMKIT_TRAIN_LOSS_H_
#define CMKIT_TRAIN_LOSS_H_

#include <vector>

#include "nnet/autograd.h"

namespace cmkit {

// Binary cross-entropy over softmaxed 2-class logits, mean over the batch.
// Labels are {0,1} with 1 = bona fide; p = P(bona fide) clamped to
// [eps, 1-eps], eps = 1e-7.
nn::Variable BceLoss(const nn::Variable &logits,
                     const std::vector<int32> &labels);

// ce + w_mse * mse; throws NumericError on non-finite inputs.
nn::Variable JointLoss(const nn::Variable &ce, const nn::Variable &mse,
                       real w_mse = 1.0);

}  // namespace cmkit

#endif  // CMKIT_TRAIN_LOSS_H_
