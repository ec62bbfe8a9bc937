// enhance/mask-unet.cc

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

#include "enhance/mask-unet.h"

#include <array>

namespace cmkit {

using nn::Variable;

void MaskUnetConfig::Validate() const {
  if (encoder_channels.size() != 4)
    CMKIT_ERR(ConfigError) << "mask U-net expects 4 encoder channel counts, "
                           << "got " << encoder_channels.size();
  for (int64 c : encoder_channels)
    if (c < 1) CMKIT_ERR(ConfigError) << "encoder channel counts must be >= 1";
}

MaskUnet::MaskUnet(const MaskUnetConfig &config, Rng *rng) : config_(config) {
  config_.Validate();
  const auto &ch = config_.encoder_channels;

  entry_.conv = std::make_unique<nn::Conv2dLayer>(1, ch[0], 3, 1, 1, rng);
  entry_.norm = std::make_unique<nn::BatchNorm>(ch[0]);
  RegisterChild("entry.conv", entry_.conv.get());
  RegisterChild("entry.norm", entry_.norm.get());

  // encoder i: ch_in -> ch[i], stride 2
  int64 prev = ch[0];
  encoder_.resize(4);
  for (int32 i = 0; i < 4; ++i) {
    encoder_[static_cast<size_t>(i)].conv =
        std::make_unique<nn::Conv2dLayer>(prev, ch[static_cast<size_t>(i)], 3,
                                          2, 1, rng);
    encoder_[static_cast<size_t>(i)].norm =
        std::make_unique<nn::BatchNorm>(ch[static_cast<size_t>(i)]);
    std::string name = "enc" + std::to_string(i + 1);
    RegisterChild(name + ".conv", encoder_[static_cast<size_t>(i)].conv.get());
    RegisterChild(name + ".norm", encoder_[static_cast<size_t>(i)].norm.get());
    prev = ch[static_cast<size_t>(i)];
  }

  // decoder j upsamples and then concatenates the mirrored encoder output:
  // dec1: ch3 -> ch2 (+skip ch2), dec2: 2*ch2 -> ch1 (+skip ch1),
  // dec3: 2*ch1 -> ch0 (+skip ch0), dec4: 2*ch0 -> ch0 (+skip entry ch0)
  decoder_.resize(4);
  std::array<int64, 4> dec_in = {ch[3], 2 * ch[2], 2 * ch[1], 2 * ch[0]};
  std::array<int64, 4> dec_out = {ch[2], ch[1], ch[0], ch[0]};
  for (int32 i = 0; i < 4; ++i) {
    decoder_[static_cast<size_t>(i)].tconv =
        std::make_unique<nn::ConvTranspose2dLayer>(
            dec_in[static_cast<size_t>(i)], dec_out[static_cast<size_t>(i)],
            3, 2, 1, 1, rng);
    decoder_[static_cast<size_t>(i)].norm =
        std::make_unique<nn::BatchNorm>(dec_out[static_cast<size_t>(i)]);
    std::string name = "dec" + std::to_string(i + 1);
    RegisterChild(name + ".tconv",
                  decoder_[static_cast<size_t>(i)].tconv.get());
    RegisterChild(name + ".norm", decoder_[static_cast<size_t>(i)].norm.get());
  }

  exit_ = std::make_unique<nn::ConvTranspose2dLayer>(2 * ch[0], 1, 3, 1, 1, 0,
                                                     rng);
  RegisterChild("exit.tconv", exit_.get());
}

Variable MaskUnet::Forward(const Variable &features) {
  const Tensor &t = features.Value();
  if (t.NumAxes() != 3)
    CMKIT_ERR(ShapeError) << "mask U-net expects [B, T, F], got "
                          << t.ShapeString();
  int64 B = t.Dim(0), T = t.Dim(1), F = t.Dim(2);
  // Four stride-2 levels need multiples of 16; short or ragged inputs are
  // zero-padded and the mask cropped back afterwards.
  int64 pad_t = ((T + 15) / 16) * 16 - T;
  int64 pad_f = ((F + 15) / 16) * 16 - F;

  Variable x = nn::Reshape(features, {B, 1, T, F});
  if (pad_t || pad_f) x = nn::Pad2d(x, 0, pad_t, 0, pad_f);

  Variable e0 = nn::Relu(entry_.norm->Forward(entry_.conv->Forward(x)));
  std::vector<Variable> skips = {e0};
  Variable h = e0;
  for (auto &blk : encoder_) {
    h = nn::Relu(blk.norm->Forward(blk.conv->Forward(h)));
    skips.push_back(h);
  }
  // skips: e0, e1, e2, e3, e4 — the bottleneck e4 is not a skip
  for (int32 i = 0; i < 4; ++i) {
    auto &blk = decoder_[static_cast<size_t>(i)];
    h = nn::Relu(blk.norm->Forward(blk.tconv->Forward(h)));
    h = nn::Concat({h, skips[static_cast<size_t>(3 - i)]}, 1);
  }
  Variable mask = nn::Sigmoid(exit_->Forward(h));  // [B, 1, T+pt, F+pf]
  mask = nn::Reshape(mask, {B, T + pad_t, F + pad_f});
  if (pad_t || pad_f) {
    mask = nn::Slice(mask, 1, 0, T);
    mask = nn::Slice(mask, 2, 0, F);
  }
  return mask;
}

Variable MaskUnet::Enhance(const Variable &features) {
  return ApplyMask(features, Forward(features));
}

Variable ApplyMask(const Variable &features, const Variable &mask) {
  if (!features.Value().SameShape(mask.Value()))
    CMKIT_ERR(ShapeError) << "mask shape " << mask.Value().ShapeString()
                          << " does not match features "
                          << features.Value().ShapeString();
  return nn::Mul(features, mask);
}

DualBatch MakeDualBatch(const std::vector<Tensor> &noisy,
                        const std::vector<Tensor> &clean,
                        const std::vector<int32> &authenticity) {
  CMKIT_ASSERT(!noisy.empty());
  CMKIT_ASSERT(noisy.size() == clean.size());
  CMKIT_ASSERT(noisy.size() == authenticity.size());
  int64 B = static_cast<int64>(noisy.size());
  int64 T = noisy[0].Dim(0), F = noisy[0].Dim(1);
  Tensor inputs({2 * B, T, F});
  Tensor labels({2 * B, T, F});
  for (int64 i = 0; i < B; ++i) {
    const Tensor &xn = noisy[static_cast<size_t>(i)];
    const Tensor &xc = clean[static_cast<size_t>(i)];
    CMKIT_ASSERT(xn.Dim(0) == T && xn.Dim(1) == F);
    CMKIT_ASSERT(xc.Dim(0) == T && xc.Dim(1) == F);
    for (int64 j = 0; j < T * F; ++j) {
      inputs[i * T * F + j] = xn[j];
      inputs[(B + i) * T * F + j] = xc[j];
      labels[i * T * F + j] = xc[j];
      labels[(B + i) * T * F + j] = xc[j];
    }
  }
  DualBatch batch;
  batch.inputs = nn::Variable(std::move(inputs));
  batch.labels = nn::Variable(std::move(labels));
  batch.authenticity.reserve(2 * static_cast<size_t>(B));
  for (int32 a : authenticity) batch.authenticity.push_back(a);
  for (int32 a : authenticity) batch.authenticity.push_back(a);
  return batch;
}

Variable MaskedMseLoss(const DualBatch &batch, const Variable &masks) {
  if (!batch.inputs.Value().SameShape(masks.Value()))
    CMKIT_ERR(ShapeError) << "masks shape " << masks.Value().ShapeString()
                          << " does not match dual batch inputs "
                          << batch.inputs.Value().ShapeString();
  Variable diff = nn::Sub(ApplyMask(batch.inputs, masks), batch.labels);
  // Both branch terms share one 1/(T*F) prefactor and the result is
  // averaged over the B pairs: that is 2x the mean over all 2B rows.
  return nn::Scale(nn::MeanAll(nn::Square(diff)), 2.0);
}

}  // namespace cmkit
