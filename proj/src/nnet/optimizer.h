// nnet/optimizer.h

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

#ifndef CMKIT_NNET_OPTIMIZER_H_
#define CMKIT_NNET_OPTIMIZER_H_

#include <cmath>
#include <limits>
#include <vector>

#include "nnet/autograd.h"

namespace cmkit {
namespace nn {

class Adam {
 public:
  explicit Adam(std::vector<Variable> params, real lr = 1e-3,
                real beta1 = 0.9, real beta2 = 0.999, real eps = 1e-8)
      : params_(std::move(params)),
        lr_(lr),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps) {
    for (const Variable &p : params_) {
      m_.emplace_back(p.Value().shape());
      v_.emplace_back(p.Value().shape());
    }
  }

  void Step() {
    ++t_;
    real bc1 = 1.0 - std::pow(beta1_, static_cast<real>(t_));
    real bc2 = 1.0 - std::pow(beta2_, static_cast<real>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      Variable &p = params_[i];
      if (!p.HasGrad()) continue;
      const real *g = p.Grad().data();
      real *pm = m_[i].data();
      real *pv = v_[i].data();
      real *pw = p.MutableValue().data();
      int64 n = p.Value().NumElements();
      for (int64 j = 0; j < n; ++j) {
        pm[j] = beta1_ * pm[j] + (1.0 - beta1_) * g[j];
        pv[j] = beta2_ * pv[j] + (1.0 - beta2_) * g[j] * g[j];
        real mhat = pm[j] / bc1;
        real vhat = pv[j] / bc2;
        pw[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  void ZeroGrad() {
    for (Variable &p : params_) p.ZeroGrad();
  }

  real lr() const { return lr_; }
  void set_lr(real lr) { lr_ = lr; }
  int64 step_count() const { return t_; }
  void set_step_count(int64 t) { t_ = t; }
  // First/second-moment accumulators, in parameter order; exposed so a
  // checkpoint can carry them for exact resumption.
  std::vector<Tensor> &moments_m() { return m_; }
  std::vector<Tensor> &moments_v() { return v_; }

 private:
  std::vector<Variable> params_;
  std::vector<Tensor> m_, v_;
  real lr_, beta1_, beta2_, eps_;
  int64 t_ = 0;
};

// Halves (by `factor`) the learning rate when the monitored quantity has
// not improved for `patience` consecutive epochs.  The rate never rises.
class ReduceOnPlateau {
 public:
  ReduceOnPlateau(real factor = 0.5, int32 patience = 3, real min_lr = 1e-6)
      : factor_(factor), patience_(patience), min_lr_(min_lr) {}

  // Feeds one epoch's monitored value; returns the multiplier-adjusted lr.
  real Update(real metric, real current_lr) {
    if (metric < best_ - 1e-12) {
      best_ = metric;
      bad_epochs_ = 0;
      return current_lr;
    }
    ++bad_epochs_;
    if (bad_epochs_ > patience_) {
      bad_epochs_ = 0;
      return std::max(min_lr_, current_lr * factor_);
    }
    return current_lr;
  }

  real best() const { return best_; }
  int32 bad_epochs() const { return bad_epochs_; }
  void Restore(real best, int32 bad_epochs) {
    best_ = best;
    bad_epochs_ = bad_epochs;
  }

 private:
  real factor_;
  int32 patience_;
  real min_lr_;
  real best_ = std::numeric_limits<real>::infinity();
  int32 bad_epochs_ = 0;
};

}  // namespace nn
}  // namespace cmkit

#endif  // CMKIT_NNET_OPTIMIZER_H_
