// nnet/autograd.h

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

#ifndef CMKIT_NNET_AUTOGRAD_H_
#define CMKIT_NNET_AUTOGRAD_H_

#include <functional>
#include <memory>
#include <vector>

#include "matrix/tensor.h"

namespace cmkit {
namespace nn {

// Reverse-mode tape.  Ops build a DAG of Nodes; Backward() walks it once
// in reverse topological order.  Leaf nodes (parameters) keep their grads
// alive after the intermediate graph is released, which is what the
// optimizer reads.

struct Node;
typedef std::shared_ptr<Node> NodePtr;

struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily by GradRef()
  bool requires_grad = false;
  bool has_grad = false;
  std::vector<NodePtr> inputs;
  // Reads this->grad and accumulates into inputs' grads.
  std::function<void(Node &)> backward;

  Tensor &GradRef() {
    if (!has_grad) {
      grad = Tensor(value.shape());
      has_grad = true;
    }
    return grad;
  }
};

class Variable {
 public:
  Variable() = default;
  explicit Variable(Tensor value, bool requires_grad = false)
      : node_(std::make_shared<Node>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }
  explicit Variable(NodePtr node) : node_(std::move(node)) {}

  bool Defined() const { return node_ != nullptr; }
  const Tensor &Value() const { return node_->value; }
  Tensor &MutableValue() { return node_->value; }
  bool RequiresGrad() const { return node_ && node_->requires_grad; }
  bool HasGrad() const { return node_ && node_->has_grad; }
  Tensor &Grad() { return node_->GradRef(); }
  void ZeroGrad() {
    if (node_ && node_->has_grad) node_->grad.SetZero();
  }
  // Same value, no history; gradients stop here.
  Variable Detach() const { return Variable(node_->value, false); }

  const NodePtr &node() const { return node_; }

 private:
  NodePtr node_;
};

// Global switch recording whether ops should build the tape.  Scoring and
// statistics updates run under NoGradGuard.
bool GradEnabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();

 private:
  bool prev_;
};

// root must hold exactly one element; seeds d(root)/d(root) = 1.
void Backward(const Variable &root);

// ---- elementwise, broadcasting (numpy rules, right-aligned) ----
Variable Add(const Variable &a, const Variable &b);
Variable Sub(const Variable &a, const Variable &b);
Variable Mul(const Variable &a, const Variable &b);
Variable Div(const Variable &a, const Variable &b);

// ---- scalar / unary ----
Variable Scale(const Variable &x, real c);
Variable AddScalar(const Variable &x, real c);
Variable Neg(const Variable &x);
Variable Exp(const Variable &x);
Variable Log(const Variable &x);
Variable Square(const Variable &x);
Variable Sigmoid(const Variable &x);
Variable Tanh(const Variable &x);
Variable Relu(const Variable &x);
Variable Silu(const Variable &x);  // x * sigmoid(x)
Variable Clamp(const Variable &x, real lo, real hi);
// sqrt(max(x, 0) + eps); the non-negativity clamp used by the pooling std.
Variable SqrtClamped(const Variable &x, real eps);

// ---- shape ----
Variable Reshape(const Variable &x, std::vector<int64> shape);
Variable Permute(const Variable &x, const std::vector<int32> &perm);
Variable Slice(const Variable &x, int32 axis, int64 start, int64 len);
Variable Concat(const std::vector<Variable> &parts, int32 axis);
Variable Pad2d(const Variable &x, int64 top, int64 bottom, int64 left,
               int64 right);

// ---- reductions ----
Variable Sum(const Variable &x, const std::vector<int32> &axes, bool keepdim);
Variable Mean(const Variable &x, const std::vector<int32> &axes, bool keepdim);
Variable SumAll(const Variable &x);
Variable MeanAll(const Variable &x);

// ---- linear algebra ----
// 2-D matmul with optional operand transposes.
Variable MatMul(const Variable &a, const Variable &b, bool trans_a = false,
                bool trans_b = false);
// 3-D batched matmul [B,m,k]x[B,k,n].
Variable BatchMatMul(const Variable &a, const Variable &b,
                     bool trans_a = false, bool trans_b = false);

// ---- nnet ----
Variable Softmax(const Variable &x);  // over last axis
Variable LayerNormOp(const Variable &x, const Variable &gamma,
                     const Variable &beta, real eps);
Variable Conv2d(const Variable &x, const Variable &w, const Variable &b,
                int32 stride_h, int32 stride_w, int32 pad_h, int32 pad_w);
Variable ConvTranspose2d(const Variable &x, const Variable &w,
                         const Variable &b, int32 stride, int32 pad,
                         int32 output_pad);
Variable MaxPool2d(const Variable &x, int32 kernel, int32 stride);
// Element-wise max over the two halves of the channel axis: [B,2C,H,W] ->
// [B,C,H,W].
Variable MaxFeatureMap(const Variable &x);
Variable DepthwiseConv1d(const Variable &x, const Variable &w,
                         const Variable &b);  // same padding, odd kernel
// p[B,h,T,2T-1] indexed by relative position -> scores [B,h,T,T] with
// out(i,j) = p(i, T-1-i+j).
Variable RelShift(const Variable &p);

}  // namespace nn
}  // namespace cmkit

#endif  // CMKIT_NNET_AUTOGRAD_H_
