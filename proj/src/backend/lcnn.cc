// backend/lcnn.cc

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

#include "backend/lcnn.h"

namespace cmkit {

using nn::Variable;

void LcnnConfig::Validate() const {
  if (width < 4 || width % 4 != 0)
    CMKIT_ERR(ConfigError) << "LCNN width must be a positive multiple of 4, "
                           << "got " << width;
  if (n_mels < 16)
    CMKIT_ERR(ConfigError) << "LCNN needs at least 16 mel bins";
  if (lstm_hidden < 1 || embedding_dim < 1 || asp_bottleneck < 1)
    CMKIT_ERR(ConfigError) << "LCNN dimensions must be positive";
}

Lcnn::Lcnn(const LcnnConfig &config, Rng *rng) : config_(config) {
  config_.Validate();
  const int64 w = config_.width;           // 64 in the published table
  const int64 w2 = w / 2;                  // 32
  const int64 w3 = 3 * w / 2;              // 96
  const int64 w4 = 2 * w;                  // 128
  conv1_ = std::make_unique<nn::Conv2dLayer>(1, w, 5, 1, 2, rng);
  conv4_ = std::make_unique<nn::Conv2dLayer>(w2, w, 1, 1, 0, rng);
  bn6_ = std::make_unique<nn::BatchNorm>(w2);
  conv7_ = std::make_unique<nn::Conv2dLayer>(w2, w3, 3, 1, 1, rng);
  bn10_ = std::make_unique<nn::BatchNorm>(w3 / 2);
  conv11_ = std::make_unique<nn::Conv2dLayer>(w3 / 2, w3, 1, 1, 0, rng);
  bn13_ = std::make_unique<nn::BatchNorm>(w3 / 2);
  conv14_ = std::make_unique<nn::Conv2dLayer>(w3 / 2, w4, 3, 1, 1, rng);
  conv17_ = std::make_unique<nn::Conv2dLayer>(w4 / 2, w4, 1, 1, 0, rng);
  bn19_ = std::make_unique<nn::BatchNorm>(w4 / 2);
  conv20_ = std::make_unique<nn::Conv2dLayer>(w4 / 2, w, 3, 1, 1, rng);
  bn22_ = std::make_unique<nn::BatchNorm>(w2);
  conv23_ = std::make_unique<nn::Conv2dLayer>(w2, w, 1, 1, 0, rng);
  bn25_ = std::make_unique<nn::BatchNorm>(w2);
  conv26_ = std::make_unique<nn::Conv2dLayer>(w2, w, 3, 1, 1, rng);

  int64 lstm_in = w2 * (config_.n_mels / 16);
  lstm_ = std::make_unique<nn::BiLstm>(lstm_in, config_.lstm_hidden, rng);
  asp_ = std::make_unique<nn::AttentiveStatsPooling>(
      2 * config_.lstm_hidden, config_.asp_bottleneck, rng);
  fc_ = std::make_unique<nn::Linear>(4 * config_.lstm_hidden,
                                     config_.embedding_dim, rng);
  head_ = std::make_unique<nn::Linear>(config_.embedding_dim, 2, rng);

  RegisterChild("conv1", conv1_.get());
  RegisterChild("conv4", conv4_.get());
  RegisterChild("bn6", bn6_.get());
  RegisterChild("conv7", conv7_.get());
  RegisterChild("bn10", bn10_.get());
  RegisterChild("conv11", conv11_.get());
  RegisterChild("bn13", bn13_.get());
  RegisterChild("conv14", conv14_.get());
  RegisterChild("conv17", conv17_.get());
  RegisterChild("bn19", bn19_.get());
  RegisterChild("conv20", conv20_.get());
  RegisterChild("bn22", bn22_.get());
  RegisterChild("conv23", conv23_.get());
  RegisterChild("bn25", bn25_.get());
  RegisterChild("conv26", conv26_.get());
  RegisterChild("lstm", lstm_.get());
  RegisterChild("asp", asp_.get());
  RegisterChild("fc", fc_.get());
  RegisterChild("head", head_.get());
}

Variable Lcnn::ForwardConvStack(const Variable &features) {
  const Tensor &t = features.Value();
  CMKIT_ASSERT(t.NumAxes() == 3 && t.Dim(2) == config_.n_mels);
  int64 B = t.Dim(0), T = t.Dim(1);
  if (T < MinFrames())
    CMKIT_ERR(InvalidInputError) << "LCNN needs T >= " << MinFrames()
                                 << " frames, got " << T;
  Variable x = nn::MeanVarNormalize(features);
  // [B, T, F] -> [B, 1, D=F, L=T], the table's freq-major layout
  x = nn::Permute(x, {0, 2, 1});
  x = nn::Reshape(x, {B, 1, config_.n_mels, T});

  x = nn::MaxFeatureMap(conv1_->Forward(x));
  x = nn::MaxPool2d(x, 2, 2);
  x = bn6_->Forward(nn::MaxFeatureMap(conv4_->Forward(x)));
  x = nn::MaxFeatureMap(conv7_->Forward(x));
  x = bn10_->Forward(nn::MaxPool2d(x, 2, 2));
  x = bn13_->Forward(nn::MaxFeatureMap(conv11_->Forward(x)));
  x = nn::MaxFeatureMap(conv14_->Forward(x));
  x = nn::MaxPool2d(x, 2, 2);
  x = bn19_->Forward(nn::MaxFeatureMap(conv17_->Forward(x)));
  x = bn22_->Forward(nn::MaxFeatureMap(conv20_->Forward(x)));
  x = bn25_->Forward(nn::MaxFeatureMap(conv23_->Forward(x)));
  x = nn::MaxFeatureMap(conv26_->Forward(x));
  return nn::MaxPool2d(x, 2, 2);  // [B, w/2, D/16, L/16]
}

Variable Lcnn::ForwardLogits(const Variable &features) {
  Variable x = ForwardConvStack(features);
  const Tensor &t = x.Value();
  int64 B = t.Dim(0), C = t.Dim(1), Dp = t.Dim(2), S = t.Dim(3);
  // one flattened feature vector per time step
  x = nn::Permute(x, {0, 3, 1, 2});       // [B, S, C, D/16]
  x = nn::Reshape(x, {B, S, C * Dp});
  x = lstm_->Forward(x);                   // [B, S, 2H]
  Variable pooled = asp_->Forward(x);      // [B, 4H]
  return head_->Forward(fc_->Forward(pooled));
}

}  // namespace cmkit
