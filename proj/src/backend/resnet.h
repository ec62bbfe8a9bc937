// backend/resnet.h

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

#ifndef CMKIT_BACKEND_RESNET_H_
#define CMKIT_BACKEND_RESNET_H_

#include <array>
#include <memory>
#include <vector>

#include "backend/classifier.h"

namespace cmkit {

struct ResnetConfig {
  int64 n_mels = 80;
  std::array<int64, 4> channels{16, 32, 64, 128};
  int64 embedding_dim = 128;
  int64 asp_bottleneck = 64;
  // Squeeze-and-excitation bottleneck width; 0 = channels/4.
  int64 se_bottleneck = 0;

  void Validate() const;
};

// Channel gate: global average pool, two fully connected layers, sigmoid.
class SeBlock : public nn::Module {
 public:
  SeBlock(int64 channels, int64 bottleneck, Rng *rng);
  nn::Variable Forward(const nn::Variable &x) const;  // [B,C,H,W] scaled

 private:
  int64 channels_;
  nn::Linear fc1_, fc2_;
};

// Basic residual unit with squeeze-and-excitation on the residual branch.
class ResidualUnit : public nn::Module {
 public:
  ResidualUnit(int64 cin, int64 cout, int32 stride, int64 se_bottleneck,
               Rng *rng);
  nn::Variable Forward(const nn::Variable &x);

 private:
  bool has_shortcut_;
  nn::Conv2dLayer conv1_, conv2_;
  nn::BatchNorm bn1_, bn2_;
  std::unique_ptr<nn::Conv2dLayer> shortcut_conv_;
  std::unique_ptr<nn::BatchNorm> shortcut_bn_;
  SeBlock se_;
};

// Four-stage residual network (two units per stage, stride 2 from stage 2)
// with attentive statistics pooling over time and a linear embedding +
// 2-class head.
class ResNet18 : public SpoofClassifier {
 public:
  ResNet18(const ResnetConfig &config, Rng *rng);
  nn::Variable ForwardLogits(const nn::Variable &features) override;
  int64 MinFrames() const override { return 8; }

  // Stage outputs [B,C,D/k,L/k]; the published table pins these shapes.
  std::vector<nn::Variable> ForwardStages(const nn::Variable &features);

  const ResnetConfig &config() const { return config_; }

 private:
  ResnetConfig config_;
  nn::Conv2dLayer conv1_;
  nn::BatchNorm bn1_;
  std::vector<std::unique_ptr<ResidualUnit>> units_;
  std::unique_ptr<nn::AttentiveStatsPooling> asp_;
  std::unique_ptr<nn::Linear> fc_, head_;
};

}  // namespace cmkit

#endif  // CMKIT_BACKEND_RESNET_H_
