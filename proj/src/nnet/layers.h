// nnet/layers.h

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

#ifndef CMKIT_NNET_LAYERS_H_
#define CMKIT_NNET_LAYERS_H_

#include <string>
#include <utility>
#include <vector>

#include "base/rng.h"
#include "nnet/autograd.h"

namespace cmkit {
namespace nn {

// Base class for anything with trainable parameters.  Parameters and
// buffers (non-trained state such as batch-norm running statistics) are
// registered by name; NamedParameters/NamedArrays walk the child tree and
// produce dotted paths, which is also the naming scheme of the on-disk
// weight manifests.
class Module {
 public:
  virtual ~Module() = default;
  Module() = default;
  Module(const Module &) = delete;
  Module &operator=(const Module &) = delete;

  void SetTraining(bool training) {
    training_ = training;
    for (auto &c : children_) c.second->SetTraining(training);
  }
  bool IsTraining() const { return training_; }

  std::vector<std::pair<std::string, Variable>> NamedParameters() const {
    std::vector<std::pair<std::string, Variable>> out;
    Collect("", true, false, &out);
    return out;
  }
  // Parameters plus buffers; the unit of checkpointing.
  std::vector<std::pair<std::string, Variable>> NamedArrays() const {
    std::vector<std::pair<std::string, Variable>> out;
    Collect("", true, true, &out);
    return out;
  }
  std::vector<Variable> Parameters() const {
    std::vector<Variable> out;
    for (auto &p : NamedParameters()) out.push_back(p.second);
    return out;
  }
  int64 NumParameters() const {
    int64 n = 0;
    for (auto &p : NamedParameters()) n += p.second.Value().NumElements();
    return n;
  }

 protected:
  Variable RegisterParam(const std::string &name, Tensor init) {
    Variable v(std::move(init), true);
    params_.push_back({name, v});
    return v;
  }
  Variable RegisterBuffer(const std::string &name, Tensor init) {
    Variable v(std::move(init), false);
    buffers_.push_back({name, v});
    return v;
  }
  void RegisterChild(const std::string &name, Module *child) {
    children_.push_back({name, child});
  }

 private:
  void Collect(const std::string &prefix, bool params, bool buffers,
               std::vector<std::pair<std::string, Variable>> *out) const {
    if (params)
      for (auto &p : params_) out->push_back({prefix + p.first, p.second});
    if (buffers)
      for (auto &b : buffers_) out->push_back({prefix + b.first, b.second});
    for (auto &c : children_)
      c.second->Collect(prefix + c.first + ".", params, buffers, out);
  }

  bool training_ = true;
  std::vector<std::pair<std::string, Variable>> params_;
  std::vector<std::pair<std::string, Variable>> buffers_;
  std::vector<std::pair<std::string, Module *>> children_;
};

// ---- initialization ----
Tensor UniformInit(std::vector<int64> shape, real bound, Rng *rng);
// U(-1/sqrt(fan_in), 1/sqrt(fan_in)); fan_in from the shape.
Tensor LinearInit(std::vector<int64> shape, int64 fan_in, Rng *rng);

class Linear : public Module {
 public:
  Linear(int64 in_dim, int64 out_dim, Rng *rng, bool bias = true);
  // x [..., in] -> [..., out]; leading axes are flattened internally.
  Variable Forward(const Variable &x) const;
  int64 in_dim() const { return in_dim_; }
  int64 out_dim() const { return out_dim_; }

  Variable weight;  // [out, in]
  Variable bias;    // [out] (may be undefined)

 private:
  int64 in_dim_, out_dim_;
};

class Conv2dLayer : public Module {
 public:
  Conv2dLayer(int64 cin, int64 cout, int32 kh, int32 kw, int32 stride_h,
              int32 stride_w, int32 pad_h, int32 pad_w, Rng *rng);
  Conv2dLayer(int64 cin, int64 cout, int32 k, int32 stride, int32 pad,
              Rng *rng)
      : Conv2dLayer(cin, cout, k, k, stride, stride, pad, pad, rng) {}
  Variable Forward(const Variable &x) const;

  Variable weight, bias;

 private:
  int32 stride_h_, stride_w_, pad_h_, pad_w_;
};

class ConvTranspose2dLayer : public Module {
 public:
  ConvTranspose2dLayer(int64 cin, int64 cout, int32 k, int32 stride, int32 pad,
                       int32 output_pad, Rng *rng);
  Variable Forward(const Variable &x) const;

  Variable weight, bias;

 private:
  int32 stride_, pad_, output_pad_;
};

// Channel batch normalization for [B,C,T] or [B,C,H,W] inputs.  Batch
// statistics in training mode, running statistics in eval mode.
class BatchNorm : public Module {
 public:
  explicit BatchNorm(int64 channels, real eps = 1e-5, real momentum = 0.1);
  Variable Forward(const Variable &x);

  Variable gamma, beta;
  Variable running_mean, running_var;  // buffers

 private:
  int64 channels_;
  real eps_, momentum_;
};

class LayerNorm : public Module {
 public:
  explicit LayerNorm(int64 dim, real eps = 1e-5);
  Variable Forward(const Variable &x) const;

  Variable gamma, beta;

 private:
  real eps_;
};

// Single-direction LSTM over [B, S, I] -> [B, S, H].
class Lstm : public Module {
 public:
  Lstm(int64 input_dim, int64 hidden_dim, bool reverse, Rng *rng);
  Variable Forward(const Variable &x) const;
  int64 hidden_dim() const { return hidden_dim_; }

  Variable wx, wh, b;  // [4H, I], [4H, H], [4H]; gate order i,f,g,o

 private:
  int64 input_dim_, hidden_dim_;
  bool reverse_;
};

class BiLstm : public Module {
 public:
  BiLstm(int64 input_dim, int64 hidden_dim, Rng *rng);
  // [B, S, I] -> [B, S, 2H]
  Variable Forward(const Variable &x) const;

 private:
  Lstm fwd_, bwd_;
};

// Attention-weighted mean and standard deviation over time.
// Input [B, T, D] -> [B, 2D].
class AttentiveStatsPooling : public Module {
 public:
  AttentiveStatsPooling(int64 feat_dim, int64 bottleneck, Rng *rng);
  Variable Forward(const Variable &x) const;
  // The normalized attention weights for the last Forward-style call;
  // recomputed on demand (used by tests).
  Variable AttentionWeights(const Variable &x) const;

  int64 feat_dim() const { return feat_dim_; }

 private:
  Variable Scores(const Variable &x) const;
  int64 feat_dim_;
  Linear proj_;   // W, b
  Linear score_;  // v, k

 public:
  const Linear &proj() const { return proj_; }
  const Linear &score() const { return score_; }
};

// Per-utterance mean/variance normalization over the time axis of
// [B, T, F]; differentiable, no parameters.
Variable MeanVarNormalize(const Variable &x, real eps = 1e-8);

}  // namespace nn
}  // namespace cmkit

#endif  // CMKIT_NNET_LAYERS_H_
