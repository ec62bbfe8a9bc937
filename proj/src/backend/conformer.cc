// backend/conformer.cc

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

#include "backend/conformer.h"

#include <cmath>

namespace cmkit {

using nn::Variable;

void ConformerConfig::Validate() const {
  if (model_dim % n_heads != 0)
    CMKIT_ERR(ConfigError) << "model_dim (" << model_dim
                           << ") must be divisible by n_heads (" << n_heads
                           << ")";
  if (n_blocks < 1 || ffn_dim < 1 || embedding_dim < 1 || asp_bottleneck < 1)
    CMKIT_ERR(ConfigError) << "conformer dimensions must be positive";
  if (conv_kernel % 2 != 1)
    CMKIT_ERR(ConfigError) << "conv_kernel must be odd, got " << conv_kernel;
}

namespace {

// Sinusoidal embeddings for relative positions T-1 .. -(T-1): [2T-1, d].
Tensor SinusoidPositions(int64 T, int64 dim) {
  int64 M = 2 * T - 1;
  Tensor pe({M, dim});
  for (int64 m = 0; m < M; ++m) {
    real pos = static_cast<real>(T - 1 - m);
    for (int64 i = 0; i < dim; i += 2) {
      real freq = std::pow(10000.0, -static_cast<real>(i) /
                                        static_cast<real>(dim));
      pe(m, i) = std::sin(pos * freq);
      if (i + 1 < dim) pe(m, i + 1) = std::cos(pos * freq);
    }
  }
  return pe;
}

}  // namespace

RelMultiHeadAttention::RelMultiHeadAttention(int64 dim, int32 n_heads,
                                             Rng *rng)
    : dim_(dim),
      head_dim_(dim / n_heads),
      n_heads_(n_heads),
      q_(dim, dim, rng),
      k_(dim, dim, rng),
      v_(dim, dim, rng),
      out_(dim, dim, rng),
      pos_(dim, dim, rng, /*bias=*/false) {
  RegisterChild("q", &q_);
  RegisterChild("k", &k_);
  RegisterChild("v", &v_);
  RegisterChild("out", &out_);
  RegisterChild("pos", &pos_);
  u_bias_ = RegisterParam("u_bias",
                          nn::LinearInit({n_heads, head_dim_}, dim, rng));
  v_bias_ = RegisterParam("v_bias",
                          nn::LinearInit({n_heads, head_dim_}, dim, rng));
}

Variable RelMultiHeadAttention::Forward(const Variable &x) const {
  const Tensor &t = x.Value();
  CMKIT_ASSERT(t.NumAxes() == 3 && t.Dim(2) == dim_);
  int64 B = t.Dim(0), T = t.Dim(1);
  int64 H = n_heads_, dh = head_dim_;

  auto split_heads = [&](const Variable &v) {
    // [B,T,d] -> [B*H, T, dh]
    Variable r = nn::Reshape(v, {B, T, H, dh});
    r = nn::Permute(r, {0, 2, 1, 3});
    return nn::Reshape(r, {B * H, T, dh});
  };
  Variable q = split_heads(q_.Forward(x));
  Variable k = split_heads(k_.Forward(x));
  Variable v = split_heads(v_.Forward(x));

  // relative position projections, shared across the batch
  Variable pe(SinusoidPositions(T, dim_));
  Variable r = pos_.Forward(pe);  // [2T-1, d]
  r = nn::Reshape(r, {2 * T - 1, H, dh});
  r = nn::Permute(r, {1, 0, 2});  // [H, 2T-1, dh]
  std::vector<Variable> tiles(static_cast<size_t>(B), r);
  Variable r_tiled = nn::Concat(tiles, 0);  // [B*H, 2T-1, dh]

  // biases broadcast over batch and time
  Variable u4 = nn::Reshape(u_bias_, {1, H, 1, dh});
  Variable v4 = nn::Reshape(v_bias_, {1, H, 1, dh});
  auto with_bias = [&](const Variable &bias) {
    Variable q4 = nn::Reshape(q, {B, H, T, dh});
    return nn::Reshape(nn::Add(q4, bias), {B * H, T, dh});
  };
  Variable content = nn::BatchMatMul(with_bias(u4), k, false, true);
  Variable pos_score = nn::BatchMatMul(with_bias(v4), r_tiled, false, true);
  pos_score = nn::Reshape(pos_score, {B, H, T, 2 * T - 1});
  pos_score = nn::RelShift(pos_score);
  pos_score = nn::Reshape(pos_score, {B * H, T, T});

  real scale = 1.0 / std::sqrt(static_cast<real>(dh));
  Variable attn = nn::Softmax(nn::Scale(nn::Add(content, pos_score), scale));
  Variable ctx = nn::BatchMatMul(attn, v);  // [B*H, T, dh]
  ctx = nn::Reshape(ctx, {B, H, T, dh});
  ctx = nn::Permute(ctx, {0, 2, 1, 3});
  ctx = nn::Reshape(ctx, {B, T, dim_});
  return out_.Forward(ctx);
}

ConformerBlock::ConformerBlock(const ConformerConfig &config, Rng *rng)
    : ffn1_norm_(config.model_dim),
      mhsa_norm_(config.model_dim),
      conv_norm_(config.model_dim),
      ffn2_norm_(config.model_dim),
      final_norm_(config.model_dim),
      ffn1_in_(config.model_dim, config.ffn_dim, rng),
      ffn1_out_(config.ffn_dim, config.model_dim, rng),
      ffn2_in_(config.model_dim, config.ffn_dim, rng),
      ffn2_out_(config.ffn_dim, config.model_dim, rng),
      attn_(config.model_dim, config.n_heads, rng),
      conv_pw1_(config.model_dim, 2 * config.model_dim, rng),
      conv_pw2_(config.model_dim, config.model_dim, rng),
      conv_bn_(config.model_dim) {
  RegisterChild("ffn1_norm", &ffn1_norm_);
  RegisterChild("mhsa_norm", &mhsa_norm_);
  RegisterChild("conv_norm", &conv_norm_);
  RegisterChild("ffn2_norm", &ffn2_norm_);
  RegisterChild("final_norm", &final_norm_);
  RegisterChild("ffn1_in", &ffn1_in_);
  RegisterChild("ffn1_out", &ffn1_out_);
  RegisterChild("ffn2_in", &ffn2_in_);
  RegisterChild("ffn2_out", &ffn2_out_);
  RegisterChild("attn", &attn_);
  RegisterChild("conv_pw1", &conv_pw1_);
  RegisterChild("conv_pw2", &conv_pw2_);
  RegisterChild("conv_bn", &conv_bn_);
  dw_weight_ = RegisterParam(
      "dw_weight",
      nn::LinearInit({config.model_dim, config.conv_kernel},
                     config.conv_kernel, rng));
  dw_bias_ = RegisterParam(
      "dw_bias", nn::LinearInit({config.model_dim}, config.conv_kernel, rng));
}

Variable ConformerBlock::FeedForward1(const Variable &x) const {
  return ffn1_out_.Forward(nn::Silu(ffn1_in_.Forward(ffn1_norm_.Forward(x))));
}

Variable ConformerBlock::FeedForward2(const Variable &x) const {
  return ffn2_out_.Forward(nn::Silu(ffn2_in_.Forward(ffn2_norm_.Forward(x))));
}

Variable ConformerBlock::ConvModule(const Variable &x) {
  const Tensor &t = x.Value();
  int64 B = t.Dim(0), T = t.Dim(1), d = t.Dim(2);
  Variable h = conv_norm_.Forward(x);
  h = conv_pw1_.Forward(h);  // [B,T,2d]
  // gated linear unit over the feature axis
  Variable a = nn::Slice(h, 2, 0, d);
  Variable b = nn::Slice(h, 2, d, d);
  h = nn::Mul(a, nn::Sigmoid(b));
  // depthwise 1-D convolution over time
  h = nn::Permute(h, {0, 2, 1});  // [B,d,T]
  h = nn::DepthwiseConv1d(h, dw_weight_, dw_bias_);
  h = conv_bn_.Forward(h);
  h = nn::Silu(h);
  h = nn::Permute(h, {0, 2, 1});  // [B,T,d]
  (void)B;
  (void)T;
  return conv_pw2_.Forward(h);
}

Variable ConformerBlock::Forward(const Variable &x) {
  Variable g = nn::Add(x, nn::Scale(FeedForward1(x), 0.5));
  g = nn::Add(g, attn_.Forward(mhsa_norm_.Forward(g)));
  g = nn::Add(g, ConvModule(g));
  Variable h = nn::Add(g, nn::Scale(FeedForward2(g), 0.5));
  return final_norm_.Forward(h);
}

ConformerSubsampling::ConformerSubsampling(int64 n_mels, int64 model_dim,
                                           Rng *rng)
    : n_mels_(n_mels),
      model_dim_(model_dim),
      conv1_(1, model_dim, 3, 2, 1, rng),
      conv2_(model_dim, model_dim, 3, 2, 1, rng),
      proj_(model_dim * ((n_mels + 3) / 4), model_dim, rng) {
  RegisterChild("conv1", &conv1_);
  RegisterChild("conv2", &conv2_);
  RegisterChild("proj", &proj_);
}

Variable ConformerSubsampling::Forward(const Variable &features) const {
  const Tensor &t = features.Value();
  CMKIT_ASSERT(t.NumAxes() == 3 && t.Dim(2) == n_mels_);
  int64 B = t.Dim(0), T = t.Dim(1);
  Variable x = nn::Reshape(features, {B, 1, T, n_mels_});
  x = nn::Relu(conv1_.Forward(x));
  x = nn::Relu(conv2_.Forward(x));  // [B, d, T', F']
  const Tensor &xt = x.Value();
  int64 Tp = xt.Dim(2), Fp = xt.Dim(3);
  x = nn::Permute(x, {0, 2, 1, 3});  // [B, T', d, F']
  x = nn::Reshape(x, {B, Tp, model_dim_ * Fp});
  return proj_.Forward(x);  // [B, T', d]
}

ConformerEncoder::ConformerEncoder(const ConformerConfig &config, Rng *rng)
    : config_(config), subsampling_(config.n_mels, config.model_dim, rng) {
  config_.Validate();
  RegisterChild("subsampling", &subsampling_);
  for (int32 i = 0; i < config_.n_blocks; ++i) {
    blocks_.push_back(std::make_unique<ConformerBlock>(config_, rng));
    RegisterChild("block" + std::to_string(i), blocks_.back().get());
  }
}

std::vector<Variable> ConformerEncoder::ForwardBlocks(
    const Variable &features) {
  Variable h = subsampling_.Forward(features);
  std::vector<Variable> outs;
  outs.reserve(blocks_.size());
  for (auto &block : blocks_) {
    h = block->Forward(h);
    outs.push_back(h);
  }
  return outs;
}

Variable MfaConcat(const std::vector<Variable> &block_outputs,
                   const nn::LayerNorm &norm) {
  if (block_outputs.empty())
    CMKIT_ERR(InvalidInputError) << "MFA needs at least one block output";
  const Tensor &first = block_outputs.front().Value();
  for (const Variable &h : block_outputs)
    if (!h.Value().SameShape(first))
      CMKIT_ERR(ShapeError) << "MFA block outputs disagree in shape: "
                            << h.Value().ShapeString() << " vs "
                            << first.ShapeString();
  Variable cat = nn::Concat(block_outputs, 2);  // [B, T', D]
  return norm.Forward(cat);
}

ConformerClassifier::ConformerClassifier(const ConformerConfig &config,
                                         Rng *rng)
    : config_(config),
      encoder_(config, rng),
      mfa_norm_(config.mfa_dim()),
      asp_(config.mfa_dim(), config.asp_bottleneck, rng),
      fc_(2 * config.mfa_dim(), config.embedding_dim, rng),
      head_(config.embedding_dim, 2, rng) {
  RegisterChild("encoder", &encoder_);
  RegisterChild("mfa_norm", &mfa_norm_);
  RegisterChild("asp", &asp_);
  RegisterChild("fc", &fc_);
  RegisterChild("head", &head_);
}

Variable ConformerClassifier::ForwardLogits(const Variable &features) {
  Variable x = nn::MeanVarNormalize(features);
  std::vector<Variable> blocks = encoder_.ForwardBlocks(x);
  Variable mfa = MfaConcat(blocks, mfa_norm_);
  Variable pooled = asp_.Forward(mfa);       // [B, 2D]
  Variable embedding = fc_.Forward(pooled);  // [B, emb]
  return head_.Forward(embedding);           // [B, 2]
}

}  // namespace cmkit
