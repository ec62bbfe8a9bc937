// backend/lcnn.h

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

#ifndef CMKIT_BACKEND_LCNN_H_
#define CMKIT_BACKEND_LCNN_H_

#include <memory>
#include <vector>

#include "backend/classifier.h"

namespace cmkit {

struct LcnnConfig {
  int64 n_mels = 80;
  int64 lstm_hidden = 80;  // per direction
  int64 embedding_dim = 128;
  int64 asp_bottleneck = 64;
  // Channel ladder of the conv/MFM stack, scaled down for miniature
  // configurations; the defaults follow the published table.
  int64 width = 64;  // channels of Conv_1 before its MFM halving

  void Validate() const;
};

// Light CNN: conv/max-feature-map ladder with four 2x2 max-poolings, a
// bidirectional LSTM over the time axis, attentive statistics pooling and
// a linear embedding + 2-class head.  Feature maps are laid out
// [freq D x time L x channels] as in the published table.
class Lcnn : public SpoofClassifier {
 public:
  Lcnn(const LcnnConfig &config, Rng *rng);
  nn::Variable ForwardLogits(const nn::Variable &features) override;
  int64 MinFrames() const override { return 16; }

  // The [B, C, D/16, L/16] map after the final pooling; exposed because the
  // published table pins its shape.
  nn::Variable ForwardConvStack(const nn::Variable &features);

  const LcnnConfig &config() const { return config_; }

 private:
  LcnnConfig config_;
  std::unique_ptr<nn::Conv2dLayer> conv1_, conv4_, conv7_, conv11_, conv14_,
      conv17_, conv20_, conv23_, conv26_;
  std::unique_ptr<nn::BatchNorm> bn6_, bn10_, bn13_, bn19_, bn22_, bn25_;
  std::unique_ptr<nn::BiLstm> lstm_;
  std::unique_ptr<nn::AttentiveStatsPooling> asp_;
  std::unique_ptr<nn::Linear> fc_, head_;
};

}  // namespace cmkit

#endif  // CMKIT_BACKEND_LCNN_H_
