// backend/resnet.cc

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

#include "backend/resnet.h"

namespace cmkit {

using nn::Variable;

void ResnetConfig::Validate() const {
  for (int64 c : channels)
    if (c < 4) CMKIT_ERR(ConfigError) << "resnet channels must be >= 4";
  if (n_mels < 8) CMKIT_ERR(ConfigError) << "resnet needs at least 8 mel bins";
  if (se_bottleneck < 0)
    CMKIT_ERR(ConfigError) << "se_bottleneck must be >= 0";
}

SeBlock::SeBlock(int64 channels, int64 bottleneck, Rng *rng)
    : channels_(channels),
      fc1_(channels, bottleneck, rng),
      fc2_(bottleneck, channels, rng) {
  RegisterChild("fc1", &fc1_);
  RegisterChild("fc2", &fc2_);
}

Variable SeBlock::Forward(const Variable &x) const {
  const Tensor &t = x.Value();
  CMKIT_ASSERT(t.NumAxes() == 4 && t.Dim(1) == channels_);
  Variable squeeze = nn::Mean(x, {2, 3}, false);  // [B, C]
  Variable gate = nn::Sigmoid(fc2_.Forward(nn::Relu(fc1_.Forward(squeeze))));
  gate = nn::Reshape(gate, {t.Dim(0), channels_, 1, 1});
  return nn::Mul(x, gate);
}

ResidualUnit::ResidualUnit(int64 cin, int64 cout, int32 stride,
                           int64 se_bottleneck, Rng *rng)
    : has_shortcut_(stride != 1 || cin != cout),
      conv1_(cin, cout, 3, stride, 1, rng),
      conv2_(cout, cout, 3, 1, 1, rng),
      bn1_(cout),
      bn2_(cout),
      se_(cout, se_bottleneck > 0 ? se_bottleneck : std::max<int64>(1, cout / 4),
          rng) {
  RegisterChild("conv1", &conv1_);
  RegisterChild("conv2", &conv2_);
  RegisterChild("bn1", &bn1_);
  RegisterChild("bn2", &bn2_);
  RegisterChild("se", &se_);
  if (has_shortcut_) {
    shortcut_conv_ =
        std::make_unique<nn::Conv2dLayer>(cin, cout, 1, stride, 0, rng);
    shortcut_bn_ = std::make_unique<nn::BatchNorm>(cout);
    RegisterChild("shortcut_conv", shortcut_conv_.get());
    RegisterChild("shortcut_bn", shortcut_bn_.get());
  }
}

Variable ResidualUnit::Forward(const Variable &x) {
  Variable h = nn::Relu(bn1_.Forward(conv1_.Forward(x)));
  h = bn2_.Forward(conv2_.Forward(h));
  h = se_.Forward(h);
  Variable shortcut =
      has_shortcut_ ? shortcut_bn_->Forward(shortcut_conv_->Forward(x)) : x;
  return nn::Relu(nn::Add(h, shortcut));
}

ResNet18::ResNet18(const ResnetConfig &config, Rng *rng)
    : config_(config),
      conv1_(1, config.channels[0], 3, 1, 1, rng),
      bn1_(config.channels[0]) {
  config_.Validate();
  RegisterChild("conv1", &conv1_);
  RegisterChild("bn1", &bn1_);
  int64 cin = config_.channels[0];
  for (int32 stage = 0; stage < 4; ++stage) {
    int64 cout = config_.channels[static_cast<size_t>(stage)];
    for (int32 unit = 0; unit < 2; ++unit) {
      int32 stride = (stage > 0 && unit == 0) ? 2 : 1;
      units_.push_back(std::make_unique<ResidualUnit>(
          cin, cout, stride, config_.se_bottleneck, rng));
      RegisterChild(
          "layer" + std::to_string(stage + 1) + ".unit" + std::to_string(unit),
          units_.back().get());
      cin = cout;
    }
  }
  int64 pooled_dim = config_.channels[3] * (config_.n_mels / 8);
  asp_ = std::make_unique<nn::AttentiveStatsPooling>(
      pooled_dim, config_.asp_bottleneck, rng);
  fc_ = std::make_unique<nn::Linear>(2 * pooled_dim, config_.embedding_dim,
                                     rng);
  head_ = std::make_unique<nn::Linear>(config_.embedding_dim, 2, rng);
  RegisterChild("asp", asp_.get());
  RegisterChild("fc", fc_.get());
  RegisterChild("head", head_.get());
}

std::vector<Variable> ResNet18::ForwardStages(const Variable &features) {
  const Tensor &t = features.Value();
  CMKIT_ASSERT(t.NumAxes() == 3 && t.Dim(2) == config_.n_mels);
  int64 B = t.Dim(0), T = t.Dim(1);
  if (T < MinFrames())
    CMKIT_ERR(InvalidInputError) << "resnet needs T >= " << MinFrames()
                                 << " frames, got " << T;
  Variable x = nn::MeanVarNormalize(features);
  x = nn::Permute(x, {0, 2, 1});                  // [B, D, L]
  x = nn::Reshape(x, {B, 1, config_.n_mels, T});  // freq-major
  x = nn::Relu(bn1_.Forward(conv1_.Forward(x)));
  std::vector<Variable> stages;
  for (size_t i = 0; i < units_.size(); ++i) {
    x = units_[i]->Forward(x);
    if (i % 2 == 1) stages.push_back(x);
  }
  return stages;
}

Variable ResNet18::ForwardLogits(const Variable &features) {
  Variable x = ForwardStages(features).back();  // [B, C, D/8, L/8]
  const Tensor &t = x.Value();
  int64 B = t.Dim(0), C = t.Dim(1), Dp = t.Dim(2), S = t.Dim(3);
  x = nn::Permute(x, {0, 3, 1, 2});  // [B, S, C, D/8]
  x = nn::Reshape(x, {B, S, C * Dp});
  Variable pooled = asp_->Forward(x);
  return head_->Forward(fc_->Forward(pooled));
}

}  // namespace cmkit
