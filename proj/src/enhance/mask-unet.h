// enhance/mask-unet.h

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

#ifndef CMKIT_ENHANCE_MASK_UNET_H_
#define CMKIT_ENHANCE_MASK_UNET_H_

#include <memory>
#include <vector>

#include "nnet/layers.h"

namespace cmkit {

// U-shaped mask estimator: four stride-2 encoder blocks, a mirrored
// decoder with skip concatenations, one entry convolution lifting the
// single input channel and one exit transposed convolution projecting back
// to it.  The sigmoid output is a per-bin multiplicative gain in (0,1) of
// the same shape as the input features.
struct MaskUnetConfig {
  std::vector<int64> encoder_channels{16, 32, 64, 128};
  void Validate() const;
};

class MaskUnet : public nn::Module {
 public:
  MaskUnet(const MaskUnetConfig &config, Rng *rng);

  // features [B, T, F] -> mask [B, T, F], values in (0,1).
  // T and F are padded internally to multiples of 16 and cropped back;
  // T must be at least 16.
  nn::Variable Forward(const nn::Variable &features);

  // features element-wise multiplied by the estimated mask; the only path
  // used at scoring time.
  nn::Variable Enhance(const nn::Variable &features);

 private:
  struct Block {
    std::unique_ptr<nn::Conv2dLayer> conv;
    std::unique_ptr<nn::ConvTranspose2dLayer> tconv;
    std::unique_ptr<nn::BatchNorm> norm;
  };
  MaskUnetConfig config_;
  Block entry_;
  std::vector<Block> encoder_;
  std::vector<Block> decoder_;
  std::unique_ptr<nn::ConvTranspose2dLayer> exit_;
};

// Element-wise product with a shape check.
nn::Variable ApplyMask(const nn::Variable &features, const nn::Variable &mask);

// Noisy and clean features interleaved for the dual-input training scheme:
// inputs = [noisy_0..noisy_{B-1}, clean_0..clean_{B-1}], labels = the clean
// half concatenated twice, authenticity labels repeated twice.
struct DualBatch {
  nn::Variable inputs;               // [2B, T, F]
  nn::Variable labels;               // [2B, T, F], constant
  std::vector<int32> authenticity;   // size 2B; 1 = bonafide, 0 = spoof

  int64 pair_count() const { return inputs.Value().Dim(0) / 2; }
};

DualBatch MakeDualBatch(const std::vector<Tensor> &noisy,
                        const std::vector<Tensor> &clean,
                        const std::vector<int32> &authenticity);

// (1/(T*F)) * sum_tf (|X.Mx - S|^2 + |S.Ms - S|^2), averaged over the
// batch pairs.  `masks` must come from Forward on batch.inputs.
nn::Variable MaskedMseLoss(const DualBatch &batch, const nn::Variable &masks);

}  // namespace cmkit

#endif  // CMKIT_ENHANCE_MASK_UNET_H_
