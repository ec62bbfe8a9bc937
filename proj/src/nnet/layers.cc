// nnet/layers.cc

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

#include "nnet/layers.h"

#include <cmath>

namespace cmkit {
namespace nn {

Tensor UniformInit(std::vector<int64> shape, real bound, Rng *rng) {
  Tensor t(std::move(shape));
  for (int64 i = 0; i < t.NumElements(); ++i)
    t[i] = rng->Uniform(-bound, bound);
  return t;
}

Tensor LinearInit(std::vector<int64> shape, int64 fan_in, Rng *rng) {
  real bound = 1.0 / std::sqrt(static_cast<real>(fan_in));
  return UniformInit(std::move(shape), bound, rng);
}

// ---- Linear ----

Linear::Linear(int64 in_dim, int64 out_dim, Rng *rng, bool with_bias)
    : in_dim_(in_dim), out_dim_(out_dim) {
  weight = RegisterParam("weight", LinearInit({out_dim, in_dim}, in_dim, rng));
  if (with_bias)
    bias = RegisterParam("bias", LinearInit({out_dim}, in_dim, rng));
}

Variable Linear::Forward(const Variable &x) const {
  const Tensor &tx = x.Value();
  CMKIT_ASSERT(tx.Dim(tx.NumAxes() - 1) == in_dim_);
  std::vector<int64> out_shape = tx.shape();
  out_shape.back() = out_dim_;
  Variable flat = Reshape(x, {tx.NumElements() / in_dim_, in_dim_});
  Variable y = MatMul(flat, weight, false, true);
  if (bias.Defined()) y = Add(y, bias);
  return Reshape(y, out_shape);
}

// ---- Conv2dLayer ----

Conv2dLayer::Conv2dLayer(int64 cin, int64 cout, int32 kh, int32 kw,
                         int32 stride_h, int32 stride_w, int32 pad_h,
                         int32 pad_w, Rng *rng)
    : stride_h_(stride_h), stride_w_(stride_w), pad_h_(pad_h), pad_w_(pad_w) {
  int64 fan_in = cin * kh * kw;
  weight = RegisterParam("weight",
                         LinearInit({cout, cin, kh, kw}, fan_in, rng));
  bias = RegisterParam("bias", LinearInit({cout}, fan_in, rng));
}

Variable Conv2dLayer::Forward(const Variable &x) const {
  return Conv2d(x, weight, bias, stride_h_, stride_w_, pad_h_, pad_w_);
}

// ---- ConvTranspose2dLayer ----

ConvTranspose2dLayer::ConvTranspose2dLayer(int64 cin, int64 cout, int32 k,
                                           int32 stride, int32 pad,
                                           int32 output_pad, Rng *rng)
    : stride_(stride), pad_(pad), output_pad_(output_pad) {
  int64 fan_in = cin * k * k;
  weight = RegisterParam("weight", LinearInit({cin, cout, k, k}, fan_in, rng));
  bias = RegisterParam("bias", LinearInit({cout}, fan_in, rng));
}

Variable ConvTranspose2dLayer::Forward(const Variable &x) const {
  return ConvTranspose2d(x, weight, bias, stride_, pad_, output_pad_);
}

// ---- BatchNorm ----

BatchNorm::BatchNorm(int64 channels, real eps, real momentum)
    : channels_(channels), eps_(eps), momentum_(momentum) {
  gamma = RegisterParam("gamma", Tensor({channels}, 1.0));
  beta = RegisterParam("beta", Tensor({channels}, 0.0));
  running_mean = RegisterBuffer("running_mean", Tensor({channels}, 0.0));
  running_var = RegisterBuffer("running_var", Tensor({channels}, 1.0));
}

Variable BatchNorm::Forward(const Variable &x) {
  const Tensor &tx = x.Value();
  CMKIT_ASSERT(tx.NumAxes() == 3 || tx.NumAxes() == 4);
  CMKIT_ASSERT(tx.Dim(1) == channels_);
  std::vector<int32> axes = (tx.NumAxes() == 3) ? std::vector<int32>{0, 2}
                                                : std::vector<int32>{0, 2, 3};
  std::vector<int64> cshape(tx.NumAxes(), 1);
  cshape[1] = channels_;

  Variable mean_v, var_v;
  if (IsTraining()) {
    mean_v = Mean(x, axes, true);
    var_v = Mean(Square(Sub(x, mean_v)), axes, true);
    {
      // running-statistics update is bookkeeping, not part of the graph
      NoGradGuard ng;
      const Tensor &bm = mean_v.Value();
      const Tensor &bv = var_v.Value();
      for (int64 c = 0; c < channels_; ++c) {
        running_mean.MutableValue()[c] =
            (1.0 - momentum_) * running_mean.Value()[c] + momentum_ * bm[c];
        running_var.MutableValue()[c] =
            (1.0 - momentum_) * running_var.Value()[c] + momentum_ * bv[c];
      }
    }
  } else {
    Tensor m = running_mean.Value();
    Tensor v = running_var.Value();
    m.Reshape(cshape);
    v.Reshape(cshape);
    mean_v = Variable(std::move(m));
    var_v = Variable(std::move(v));
  }
  Variable xhat = Div(Sub(x, mean_v), SqrtClamped(var_v, eps_));
  Variable g = Reshape(gamma, cshape);
  Variable b = Reshape(beta, cshape);
  return Add(Mul(xhat, g), b);
}

// ---- LayerNorm ----

LayerNorm::LayerNorm(int64 dim, real eps) : eps_(eps) {
  gamma = RegisterParam("gamma", Tensor({dim}, 1.0));
  beta = RegisterParam("beta", Tensor({dim}, 0.0));
}

Variable LayerNorm::Forward(const Variable &x) const {
  return LayerNormOp(x, gamma, beta, eps_);
}

// ---- Lstm ----

Lstm::Lstm(int64 input_dim, int64 hidden_dim, bool reverse, Rng *rng)
    : input_dim_(input_dim), hidden_dim_(hidden_dim), reverse_(reverse) {
  wx = RegisterParam("wx",
                     LinearInit({4 * hidden_dim, input_dim}, hidden_dim, rng));
  wh = RegisterParam("wh",
                     LinearInit({4 * hidden_dim, hidden_dim}, hidden_dim, rng));
  b = RegisterParam("b", LinearInit({4 * hidden_dim}, hidden_dim, rng));
}

Variable Lstm::Forward(const Variable &x) const {
  const Tensor &tx = x.Value();
  CMKIT_ASSERT(tx.NumAxes() == 3 && tx.Dim(2) == input_dim_);
  int64 B = tx.Dim(0), S = tx.Dim(1);
  int64 H = hidden_dim_;
  Variable h(Tensor({B, H}));
  Variable c(Tensor({B, H}));
  std::vector<Variable> outs(static_cast<size_t>(S));
  for (int64 step = 0; step < S; ++step) {
    int64 t = reverse_ ? S - 1 - step : step;
    Variable xt = Reshape(Slice(x, 1, t, 1), {B, input_dim_});
    Variable z = Add(Add(MatMul(xt, wx, false, true),
                         MatMul(h, wh, false, true)),
                     b);
    Variable ig = Sigmoid(Slice(z, 1, 0, H));
    Variable fg = Sigmoid(Slice(z, 1, H, H));
    Variable gg = Tanh(Slice(z, 1, 2 * H, H));
    Variable og = Sigmoid(Slice(z, 1, 3 * H, H));
    c = Add(Mul(fg, c), Mul(ig, gg));
    h = Mul(og, Tanh(c));
    outs[static_cast<size_t>(t)] = Reshape(h, {B, 1, H});
  }
  return Concat(outs, 1);
}

BiLstm::BiLstm(int64 input_dim, int64 hidden_dim, Rng *rng)
    : fwd_(input_dim, hidden_dim, false, rng),
      bwd_(input_dim, hidden_dim, true, rng) {
  RegisterChild("fwd", &fwd_);
  RegisterChild("bwd", &bwd_);
}

Variable BiLstm::Forward(const Variable &x) const {
  return Concat({fwd_.Forward(x), bwd_.Forward(x)}, 2);
}

// ---- AttentiveStatsPooling ----

AttentiveStatsPooling::AttentiveStatsPooling(int64 feat_dim, int64 bottleneck,
                                             Rng *rng)
    : feat_dim_(feat_dim),
      proj_(feat_dim, bottleneck, rng),
      score_(bottleneck, 1, rng) {
  RegisterChild("proj", &proj_);
  RegisterChild("score", &score_);
}

Variable AttentiveStatsPooling::Scores(const Variable &x) const {
  // e_t = v' tanh(W h_t + b) + k
  return score_.Forward(Tanh(proj_.Forward(x)));
}

Variable AttentiveStatsPooling::AttentionWeights(const Variable &x) const {
  const Tensor &tx = x.Value();
  int64 B = tx.Dim(0), T = tx.Dim(1);
  Variable e = Reshape(Scores(x), {B, T});
  return Softmax(e);
}

Variable AttentiveStatsPooling::Forward(const Variable &x) const {
  const Tensor &tx = x.Value();
  CMKIT_ASSERT(tx.NumAxes() == 3 && tx.Dim(2) == feat_dim_);
  int64 B = tx.Dim(0), T = tx.Dim(1);
  if (T < 1)
    CMKIT_ERR(InvalidInputError) << "attentive pooling needs T >= 1";
  Variable alpha = Reshape(AttentionWeights(x), {B, T, 1});
  Variable mu = Sum(Mul(x, alpha), {1}, false);             // [B, D]
  Variable m2 = Sum(Mul(Mul(x, x), alpha), {1}, false);     // [B, D]
  Variable sigma = SqrtClamped(Sub(m2, Square(mu)), 1e-20);
  return Concat({mu, sigma}, 1);  // [B, 2D]
}

Variable MeanVarNormalize(const Variable &x, real eps) {
  CMKIT_ASSERT(x.Value().NumAxes() == 3);
  Variable mean = Mean(x, {1}, true);
  Variable centered = Sub(x, mean);
  Variable var = Mean(Square(centered), {1}, true);
  return Div(centered, SqrtClamped(var, eps));
}

}  // namespace nn
}  // namespace cmkit
