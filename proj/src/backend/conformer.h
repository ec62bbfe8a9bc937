// backend/conformer.h

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

#ifndef CMKIT_BACKEND_CONFORMER_H_
#define CMKIT_BACKEND_CONFORMER_H_

#include <memory>
#include <vector>

#include "backend/classifier.h"

namespace cmkit {

struct ConformerConfig {
  int32 n_blocks = 16;
  int64 model_dim = 176;
  int64 ffn_dim = 704;
  int32 n_heads = 4;
  int32 conv_kernel = 15;
  int64 embedding_dim = 256;
  int64 asp_bottleneck = 128;
  int64 n_mels = 80;

  int64 mfa_dim() const { return model_dim * n_blocks; }
  void Validate() const;
};

// Multi-head self-attention with the relative sinusoidal positional
// scheme: score(i,j) = (q_i+u)'k_j + (q_i+v)'r_{i-j}, both learned biases
// shared per head.
class RelMultiHeadAttention : public nn::Module {
 public:
  RelMultiHeadAttention(int64 dim, int32 n_heads, Rng *rng);
  nn::Variable Forward(const nn::Variable &x) const;  // [B,T,d] -> [B,T,d]

 private:
  int64 dim_, head_dim_;
  int32 n_heads_;
  nn::Linear q_, k_, v_, out_, pos_;
  nn::Variable u_bias_, v_bias_;  // [h, dh]
};

// Half-FFN / self-attention / convolution / half-FFN sandwich with a final
// layer normalization.
class ConformerBlock : public nn::Module {
 public:
  ConformerBlock(const ConformerConfig &config, Rng *rng);
  nn::Variable Forward(const nn::Variable &x);  // [B,T,d] -> [B,T,d]

 private:
  nn::Variable FeedForward1(const nn::Variable &x) const;
  nn::Variable FeedForward2(const nn::Variable &x) const;
  nn::Variable ConvModule(const nn::Variable &x);

  nn::LayerNorm ffn1_norm_, mhsa_norm_, conv_norm_, ffn2_norm_, final_norm_;
  nn::Linear ffn1_in_, ffn1_out_, ffn2_in_, ffn2_out_;
  RelMultiHeadAttention attn_;
  nn::Linear conv_pw1_, conv_pw2_;  // pointwise d->2d (GLU) and d->d
  nn::Variable dw_weight_, dw_bias_;  // depthwise conv [d, k], [d]
  nn::BatchNorm conv_bn_;
};

// Two stride-2 3x3 convolutions and a linear projection: T' = ceil(T/4).
class ConformerSubsampling : public nn::Module {
 public:
  ConformerSubsampling(int64 n_mels, int64 model_dim, Rng *rng);
  nn::Variable Forward(const nn::Variable &features) const;  // [B,T,F]->[B,T',d]

 private:
  int64 n_mels_, model_dim_;
  nn::Conv2dLayer conv1_, conv2_;
  nn::Linear proj_;
};

class ConformerEncoder : public nn::Module {
 public:
  ConformerEncoder(const ConformerConfig &config, Rng *rng);
  // Outputs of every block, each [B, T', d], in block order.
  std::vector<nn::Variable> ForwardBlocks(const nn::Variable &features);

  const ConformerConfig &config() const { return config_; }

 private:
  ConformerConfig config_;
  ConformerSubsampling subsampling_;
  std::vector<std::unique_ptr<ConformerBlock>> blocks_;
};

// Feature-axis concatenation of all block outputs followed by per-time-step
// layer normalization over the stacked dimension D = d*L.
nn::Variable MfaConcat(const std::vector<nn::Variable> &block_outputs,
                       const nn::LayerNorm &norm);

// Encoder + MFA + attentive statistics pooling + FC embedding + 2-class
// head.  The encoder parameter subtree ("encoder.*") is the unit that
// pretrained manifests are loaded into.
class ConformerClassifier : public SpoofClassifier {
 public:
  ConformerClassifier(const ConformerConfig &config, Rng *rng);
  nn::Variable ForwardLogits(const nn::Variable &features) override;
  int64 MinFrames() const override { return 8; }

  ConformerEncoder &encoder() { return encoder_; }
  const ConformerConfig &config() const { return config_; }

 private:
  ConformerConfig config_;
  ConformerEncoder encoder_;
  nn::LayerNorm mfa_norm_;
  nn::AttentiveStatsPooling asp_;
  nn::Linear fc_, head_;
};

}  // namespace cmkit

#endif  // CMKIT_BACKEND_CONFORMER_H_
