// train/loss.cc

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

#include "train/loss.h"

#include <cmath>

namespace cmkit {

namespace {
constexpr real kProbEps = 1e-7;
}

nn::Variable BceLoss(const nn::Variable &logits,
                     const std::vector<int32> &labels) {
  const Tensor &t = logits.Value();
  if (t.NumAxes() != 2 || t.Dim(1) != 2)
    CMKIT_ERR(ShapeError) << "bce expects [B, 2] logits, got "
                          << t.ShapeString();
  int64 B = t.Dim(0);
  if (static_cast<int64>(labels.size()) != B)
    CMKIT_ERR(ShapeError) << "label count " << labels.size()
                          << " does not match batch " << B;
  Tensor y({B});
  for (int64 i = 0; i < B; ++i) {
    if (labels[static_cast<size_t>(i)] != 0 &&
        labels[static_cast<size_t>(i)] != 1)
      CMKIT_ERR(InvalidInputError)
          << "label must be 0 or 1, got " << labels[static_cast<size_t>(i)];
    y[i] = static_cast<real>(labels[static_cast<size_t>(i)]);
  }
  nn::Variable target(y);
  nn::Variable p = nn::Softmax(logits);                     // [B, 2]
  nn::Variable p1 = nn::Reshape(nn::Slice(p, 1, 1, 1), {B});  // P(bona fide)
  p1 = nn::Clamp(p1, kProbEps, 1.0 - kProbEps);
  nn::Variable ones(Tensor({B}, 1.0));
  nn::Variable term = nn::Add(nn::Mul(target, nn::Log(p1)),
                              nn::Mul(nn::Sub(ones, target),
                                      nn::Log(nn::Sub(ones, p1))));
  return nn::Neg(nn::MeanAll(term));
}

nn::Variable JointLoss(const nn::Variable &ce, const nn::Variable &mse,
                       real w_mse) {
  if (!std::isfinite(ce.Value()[0]) || !std::isfinite(mse.Value()[0]))
    CMKIT_ERR(NumericError) << "non-finite loss term: ce=" << ce.Value()[0]
                            << " mse=" << mse.Value()[0];
  return nn::Add(ce, nn::Scale(mse, w_mse));
}

}  // namespace cmkit
