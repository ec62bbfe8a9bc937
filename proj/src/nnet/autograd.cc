// nnet/autograd.cc

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

#include "nnet/autograd.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>

namespace cmkit {
namespace nn {

namespace {

thread_local bool g_grad_enabled = true;

typedef Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
    EMat;
typedef Eigen::Map<EMat> EMap;
typedef Eigen::Map<const EMat> ECMap;

ECMap MapConst(const Tensor &t, int64 rows, int64 cols) {
  return ECMap(t.data(), rows, cols);
}
EMap MapMut(Tensor &t, int64 rows, int64 cols) {
  return EMap(t.data(), rows, cols);
}

Variable MakeNode(Tensor value, std::vector<NodePtr> inputs,
                  std::function<void(Node &)> backward) {
  NodePtr n = std::make_shared<Node>();
  n->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const NodePtr &in : inputs)
      if (in->requires_grad) {
        any = true;
        break;
      }
    if (any) {
      n->requires_grad = true;
      n->inputs = std::move(inputs);
      n->backward = std::move(backward);
    }
  }
  return Variable(n);
}

// ---- broadcasting helpers ----

std::vector<int64> AlignShape(const std::vector<int64> &s, size_t rank) {
  std::vector<int64> out(rank, 1);
  std::copy(s.begin(), s.end(), out.begin() + (rank - s.size()));
  return out;
}

std::vector<int64> BroadcastShape(const Tensor &a, const Tensor &b) {
  size_t rank = std::max(a.shape().size(), b.shape().size());
  std::vector<int64> sa = AlignShape(a.shape(), rank);
  std::vector<int64> sb = AlignShape(b.shape(), rank);
  std::vector<int64> out(rank);
  for (size_t i = 0; i < rank; ++i) {
    if (sa[i] == sb[i]) {
      out[i] = sa[i];
    } else if (sa[i] == 1 || sb[i] == 1) {
      out[i] = std::max(sa[i], sb[i]);
    } else {
      CMKIT_ERR(ShapeError) << "cannot broadcast " << Tensor(sa).ShapeString()
                            << " with " << Tensor(sb).ShapeString();
    }
  }
  return out;
}

// Element strides of `shape` aligned to an output of shape `out`; stride 0
// where the input dimension is broadcast.
std::vector<int64> BroadcastStrides(const std::vector<int64> &shape,
                                    const std::vector<int64> &out) {
  std::vector<int64> s = AlignShape(shape, out.size());
  std::vector<int64> strides(out.size(), 0);
  int64 acc = 1;
  for (int32 i = static_cast<int32>(out.size()) - 1; i >= 0; --i) {
    strides[i] = (s[i] == 1 && out[i] != 1) ? 0 : acc;
    acc *= s[i];
  }
  return strides;
}

// Walks every element of an out-shaped iteration space, handing the lambda
// the flat offsets into two broadcast operands.
template <class F>
void ForEachBroadcast(const std::vector<int64> &out_shape,
                      const std::vector<int64> &stride_a,
                      const std::vector<int64> &stride_b, F &&f) {
  size_t rank = out_shape.size();
  int64 total = Tensor::NumElementsOf(out_shape);
  std::vector<int64> idx(rank, 0);
  int64 oa = 0, ob = 0;
  for (int64 i = 0; i < total; ++i) {
    f(i, oa, ob);
    for (int32 ax = static_cast<int32>(rank) - 1; ax >= 0; --ax) {
      idx[ax]++;
      oa += stride_a[ax];
      ob += stride_b[ax];
      if (idx[ax] < out_shape[ax]) break;
      oa -= stride_a[ax] * out_shape[ax];
      ob -= stride_b[ax] * out_shape[ax];
      idx[ax] = 0;
    }
  }
}

enum class BinOp { kAdd, kSub, kMul, kDiv };

Variable BroadcastBinary(const Variable &a, const Variable &b, BinOp op) {
  const Tensor &ta = a.Value(), &tb = b.Value();
  std::vector<int64> out_shape = BroadcastShape(ta, tb);
  Tensor out(out_shape);
  std::vector<int64> sa = BroadcastStrides(ta.shape(), out_shape);
  std::vector<int64> sb = BroadcastStrides(tb.shape(), out_shape);
  const real *pa = ta.data(), *pb = tb.data();
  real *po = out.data();
  switch (op) {
    case BinOp::kAdd:
      ForEachBroadcast(out_shape, sa, sb, [&](int64 i, int64 oa, int64 ob) {
        po[i] = pa[oa] + pb[ob];
      });
      break;
    case BinOp::kSub:
      ForEachBroadcast(out_shape, sa, sb, [&](int64 i, int64 oa, int64 ob) {
        po[i] = pa[oa] - pb[ob];
      });
      break;
    case BinOp::kMul:
      ForEachBroadcast(out_shape, sa, sb, [&](int64 i, int64 oa, int64 ob) {
        po[i] = pa[oa] * pb[ob];
      });
      break;
    case BinOp::kDiv:
      ForEachBroadcast(out_shape, sa, sb, [&](int64 i, int64 oa, int64 ob) {
        po[i] = pa[oa] / pb[ob];
      });
      break;
  }
  return MakeNode(std::move(out), {a.node(), b.node()}, [op](Node &n) {
    NodePtr na = n.inputs[0], nb = n.inputs[1];
    const Tensor &g = n.grad;
    const Tensor &ta = na->value, &tb = nb->value;
    std::vector<int64> sa = BroadcastStrides(ta.shape(), g.shape());
    std::vector<int64> sb = BroadcastStrides(tb.shape(), g.shape());
    const real *pg = g.data();
    const real *pa = ta.data(), *pb = tb.data();
    if (na->requires_grad) {
      real *da = na->GradRef().data();
      switch (op) {
        case BinOp::kAdd:
        case BinOp::kSub:
          ForEachBroadcast(g.shape(), sa, sb,
                           [&](int64 i, int64 oa, int64) { da[oa] += pg[i]; });
          break;
        case BinOp::kMul:
          ForEachBroadcast(g.shape(), sa, sb, [&](int64 i, int64 oa, int64 ob) {
            da[oa] += pg[i] * pb[ob];
          });
          break;
        case BinOp::kDiv:
          ForEachBroadcast(g.shape(), sa, sb, [&](int64 i, int64 oa, int64 ob) {
            da[oa] += pg[i] / pb[ob];
          });
          break;
      }
    }
    if (nb->requires_grad) {
      real *db = nb->GradRef().data();
      switch (op) {
        case BinOp::kAdd:
          ForEachBroadcast(g.shape(), sa, sb,
                           [&](int64 i, int64, int64 ob) { db[ob] += pg[i]; });
          break;
        case BinOp::kSub:
          ForEachBroadcast(g.shape(), sa, sb,
                           [&](int64 i, int64, int64 ob) { db[ob] -= pg[i]; });
          break;
        case BinOp::kMul:
          ForEachBroadcast(g.shape(), sa, sb, [&](int64 i, int64 oa, int64 ob) {
            db[ob] += pg[i] * pa[oa];
          });
          break;
        case BinOp::kDiv:
          ForEachBroadcast(g.shape(), sa, sb, [&](int64 i, int64 oa, int64 ob) {
            db[ob] -= pg[i] * pa[oa] / (pb[ob] * pb[ob]);
          });
          break;
      }
    }
  });
}

template <class FwdF, class BwdF>
Variable UnaryOp(const Variable &x, FwdF fwd, BwdF bwd_factor) {
  const Tensor &tx = x.Value();
  Tensor out(tx.shape());
  const real *px = tx.data();
  real *po = out.data();
  for (int64 i = 0; i < tx.NumElements(); ++i) po[i] = fwd(px[i]);
  Tensor saved_out = out;  // some derivatives are cheapest from the output
  return MakeNode(
      std::move(out), {x.node()},
      [bwd_factor, saved_out = std::move(saved_out)](Node &n) {
        NodePtr in = n.inputs[0];
        if (!in->requires_grad) return;
        const real *px = in->value.data();
        const real *py = saved_out.data();
        const real *pg = n.grad.data();
        real *pd = in->GradRef().data();
        for (int64 i = 0; i < n.grad.NumElements(); ++i)
          pd[i] += pg[i] * bwd_factor(px[i], py[i]);
      });
}

// im2col for NCHW conv.  col has shape [C*kh*kw, Ho*Wo].
void Im2Col(const real *img, int64 C, int64 H, int64 W, int32 kh, int32 kw,
            int32 sh, int32 sw, int32 ph, int32 pw, int64 Ho, int64 Wo,
            real *col) {
  for (int64 c = 0; c < C; ++c) {
    for (int32 ki = 0; ki < kh; ++ki) {
      for (int32 kj = 0; kj < kw; ++kj) {
        real *dst = col + ((c * kh + ki) * kw + kj) * (Ho * Wo);
        for (int64 ho = 0; ho < Ho; ++ho) {
          int64 hi = ho * sh - ph + ki;
          if (hi < 0 || hi >= H) {
            std::fill(dst + ho * Wo, dst + (ho + 1) * Wo, 0.0);
            continue;
          }
          const real *src_row = img + (c * H + hi) * W;
          for (int64 wo = 0; wo < Wo; ++wo) {
            int64 wi = wo * sw - pw + kj;
            dst[ho * Wo + wo] = (wi < 0 || wi >= W) ? 0.0 : src_row[wi];
          }
        }
      }
    }
  }
}

// Adjoint of Im2Col: scatters col back into the image (accumulating).
void Col2Im(const real *col, int64 C, int64 H, int64 W, int32 kh, int32 kw,
            int32 sh, int32 sw, int32 ph, int32 pw, int64 Ho, int64 Wo,
            real *img) {
  for (int64 c = 0; c < C; ++c) {
    for (int32 ki = 0; ki < kh; ++ki) {
      for (int32 kj = 0; kj < kw; ++kj) {
        const real *src = col + ((c * kh + ki) * kw + kj) * (Ho * Wo);
        for (int64 ho = 0; ho < Ho; ++ho) {
          int64 hi = ho * sh - ph + ki;
          if (hi < 0 || hi >= H) continue;
          real *dst_row = img + (c * H + hi) * W;
          for (int64 wo = 0; wo < Wo; ++wo) {
            int64 wi = wo * sw - pw + kj;
            if (wi >= 0 && wi < W) dst_row[wi] += src[ho * Wo + wo];
          }
        }
      }
    }
  }
}

void CheckAxes(const Tensor &t, const std::vector<int32> &axes) {
  for (int32 a : axes) CMKIT_ASSERT(a >= 0 && a < t.NumAxes());
}

}  // namespace

bool GradEnabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

void Backward(const Variable &root) {
  CMKIT_ASSERT(root.Defined());
  CMKIT_ASSERT(root.Value().NumElements() == 1);
  if (!root.RequiresGrad()) return;

  // Iterative post-order DFS over grad-requiring nodes.
  std::vector<Node *> order;
  std::unordered_set<Node *> visited;
  std::vector<std::pair<Node *, size_t>> stack;
  stack.push_back({root.node().get(), 0});
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto &[node, child] = stack.back();
    if (child < node->inputs.size()) {
      Node *next = node->inputs[child++].get();
      if (next->requires_grad && !visited.count(next)) {
        visited.insert(next);
        stack.push_back({next, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->GradRef().Fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node *n = *it;
    if (n->backward && n->has_grad) n->backward(*n);
  }
}

Variable Add(const Variable &a, const Variable &b) {
  return BroadcastBinary(a, b, BinOp::kAdd);
}
Variable Sub(const Variable &a, const Variable &b) {
  return BroadcastBinary(a, b, BinOp::kSub);
}
Variable Mul(const Variable &a, const Variable &b) {
  return BroadcastBinary(a, b, BinOp::kMul);
}
Variable Div(const Variable &a, const Variable &b) {
  return BroadcastBinary(a, b, BinOp::kDiv);
}

Variable Scale(const Variable &x, real c) {
  return UnaryOp(
      x, [c](real v) { return c * v; }, [c](real, real) { return c; });
}

Variable AddScalar(const Variable &x, real c) {
  return UnaryOp(
      x, [c](real v) { return v + c; }, [](real, real) { return 1.0; });
}

Variable Neg(const Variable &x) { return Scale(x, -1.0); }

Variable Exp(const Variable &x) {
  return UnaryOp(
      x, [](real v) { return std::exp(v); }, [](real, real y) { return y; });
}

Variable Log(const Variable &x) {
  return UnaryOp(
      x, [](real v) { return std::log(v); },
      [](real v, real) { return 1.0 / v; });
}

Variable Square(const Variable &x) {
  return UnaryOp(
      x, [](real v) { return v * v; }, [](real v, real) { return 2.0 * v; });
}

Variable Sigmoid(const Variable &x) {
  return UnaryOp(
      x, [](real v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](real, real y) { return y * (1.0 - y); });
}

Variable Tanh(const Variable &x) {
  return UnaryOp(
      x, [](real v) { return std::tanh(v); },
      [](real, real y) { return 1.0 - y * y; });
}

Variable Relu(const Variable &x) {
  return UnaryOp(
      x, [](real v) { return v > 0.0 ? v : 0.0; },
      [](real v, real) { return v > 0.0 ? 1.0 : 0.0; });
}

Variable Silu(const Variable &x) {
  return UnaryOp(
      x,
      [](real v) { return v / (1.0 + std::exp(-v)); },
      [](real v, real) {
        real s = 1.0 / (1.0 + std::exp(-v));
        return s * (1.0 + v * (1.0 - s));
      });
}

Variable Clamp(const Variable &x, real lo, real hi) {
  return UnaryOp(
      x, [lo, hi](real v) { return std::min(std::max(v, lo), hi); },
      [lo, hi](real v, real) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Variable SqrtClamped(const Variable &x, real eps) {
  return UnaryOp(
      x,
      [eps](real v) { return std::sqrt(std::max(v, 0.0) + eps); },
      [](real v, real y) { return v > 0.0 ? 0.5 / y : 0.0; });
}

Variable Reshape(const Variable &x, std::vector<int64> shape) {
  Tensor out = x.Value();
  out.Reshape(std::move(shape));
  return MakeNode(std::move(out), {x.node()}, [](Node &n) {
    NodePtr in = n.inputs[0];
    if (!in->requires_grad) return;
    const real *pg = n.grad.data();
    real *pd = in->GradRef().data();
    for (int64 i = 0; i < n.grad.NumElements(); ++i) pd[i] += pg[i];
  });
}

Variable Permute(const Variable &x, const std::vector<int32> &perm) {
  const Tensor &tx = x.Value();
  CMKIT_ASSERT(static_cast<int32>(perm.size()) == tx.NumAxes());
  std::vector<int64> out_shape(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) out_shape[i] = tx.Dim(perm[i]);
  // in-strides re-ordered by perm give the gather pattern
  std::vector<int64> in_strides(perm.size());
  {
    int64 acc = 1;
    std::vector<int64> st(perm.size());
    for (int32 i = static_cast<int32>(perm.size()) - 1; i >= 0; --i) {
      st[i] = acc;
      acc *= tx.Dim(i);
    }
    for (size_t i = 0; i < perm.size(); ++i) in_strides[i] = st[perm[i]];
  }
  Tensor out(out_shape);
  const real *px = tx.data();
  real *po = out.data();
  std::vector<int64> zero(perm.size(), 0);
  ForEachBroadcast(out_shape, in_strides, zero,
                   [&](int64 i, int64 oi, int64) { po[i] = px[oi]; });
  return MakeNode(std::move(out), {x.node()},
                  [out_shape, in_strides](Node &n) {
                    NodePtr in = n.inputs[0];
                    if (!in->requires_grad) return;
                    const real *pg = n.grad.data();
                    real *pd = in->GradRef().data();
                    std::vector<int64> zero(out_shape.size(), 0);
                    ForEachBroadcast(out_shape, in_strides, zero,
                                     [&](int64 i, int64 oi, int64) {
                                       pd[oi] += pg[i];
                                     });
                  });
}

Variable Slice(const Variable &x, int32 axis, int64 start, int64 len) {
  const Tensor &tx = x.Value();
  CMKIT_ASSERT(axis >= 0 && axis < tx.NumAxes());
  CMKIT_ASSERT(start >= 0 && len >= 0 && start + len <= tx.Dim(axis));
  std::vector<int64> out_shape = tx.shape();
  out_shape[axis] = len;
  int64 outer = 1, inner = 1;
  for (int32 i = 0; i < axis; ++i) outer *= tx.Dim(i);
  for (int32 i = axis + 1; i < tx.NumAxes(); ++i) inner *= tx.Dim(i);
  int64 in_axis = tx.Dim(axis);
  Tensor out(out_shape);
  const real *px = tx.data();
  real *po = out.data();
  for (int64 o = 0; o < outer; ++o)
    for (int64 a = 0; a < len; ++a)
      std::copy(px + (o * in_axis + start + a) * inner,
                px + (o * in_axis + start + a + 1) * inner,
                po + (o * len + a) * inner);
  return MakeNode(std::move(out), {x.node()},
                  [outer, inner, in_axis, start, len](Node &n) {
                    NodePtr in = n.inputs[0];
                    if (!in->requires_grad) return;
                    const real *pg = n.grad.data();
                    real *pd = in->GradRef().data();
                    for (int64 o = 0; o < outer; ++o)
                      for (int64 a = 0; a < len; ++a) {
                        const real *s = pg + (o * len + a) * inner;
                        real *d = pd + (o * in_axis + start + a) * inner;
                        for (int64 i = 0; i < inner; ++i) d[i] += s[i];
                      }
                  });
}

Variable Concat(const std::vector<Variable> &parts, int32 axis) {
  CMKIT_ASSERT(!parts.empty());
  const Tensor &t0 = parts[0].Value();
  CMKIT_ASSERT(axis >= 0 && axis < t0.NumAxes());
  std::vector<int64> out_shape = t0.shape();
  int64 total_axis = 0;
  for (const Variable &p : parts) {
    const Tensor &t = p.Value();
    CMKIT_ASSERT(t.NumAxes() == t0.NumAxes());
    for (int32 i = 0; i < t.NumAxes(); ++i)
      if (i != axis) CMKIT_ASSERT(t.Dim(i) == t0.Dim(i));
    total_axis += t.Dim(axis);
  }
  out_shape[axis] = total_axis;
  int64 outer = 1, inner = 1;
  for (int32 i = 0; i < axis; ++i) outer *= t0.Dim(i);
  for (int32 i = axis + 1; i < t0.NumAxes(); ++i) inner *= t0.Dim(i);
  Tensor out(out_shape);
  real *po = out.data();
  std::vector<int64> axis_dims;
  std::vector<NodePtr> inputs;
  int64 offset = 0;
  for (const Variable &p : parts) {
    const Tensor &t = p.Value();
    int64 alen = t.Dim(axis);
    const real *px = t.data();
    for (int64 o = 0; o < outer; ++o)
      std::copy(px + o * alen * inner, px + (o + 1) * alen * inner,
                po + (o * total_axis + offset) * inner);
    offset += alen;
    axis_dims.push_back(alen);
    inputs.push_back(p.node());
  }
  return MakeNode(std::move(out), std::move(inputs),
                  [outer, inner, total_axis, axis_dims](Node &n) {
                    const real *pg = n.grad.data();
                    int64 offset = 0;
                    for (size_t k = 0; k < n.inputs.size(); ++k) {
                      int64 alen = axis_dims[k];
                      NodePtr in = n.inputs[k];
                      if (in->requires_grad) {
                        real *pd = in->GradRef().data();
                        for (int64 o = 0; o < outer; ++o) {
                          const real *s = pg + (o * total_axis + offset) * inner;
                          real *d = pd + o * alen * inner;
                          for (int64 i = 0; i < alen * inner; ++i) d[i] += s[i];
                        }
                      }
                      offset += alen;
                    }
                  });
}

Variable Pad2d(const Variable &x, int64 top, int64 bottom, int64 left,
               int64 right) {
  const Tensor &tx = x.Value();
  CMKIT_ASSERT(tx.NumAxes() == 4);
  int64 B = tx.Dim(0), C = tx.Dim(1), H = tx.Dim(2), W = tx.Dim(3);
  int64 Ho = H + top + bottom, Wo = W + left + right;
  Tensor out({B, C, Ho, Wo});
  const real *px = tx.data();
  real *po = out.data();
  for (int64 bc = 0; bc < B * C; ++bc)
    for (int64 h = 0; h < H; ++h)
      std::copy(px + (bc * H + h) * W, px + (bc * H + h + 1) * W,
                po + (bc * Ho + h + top) * Wo + left);
  return MakeNode(std::move(out), {x.node()},
                  [B, C, H, W, Ho, Wo, top, left](Node &n) {
                    NodePtr in = n.inputs[0];
                    if (!in->requires_grad) return;
                    const real *pg = n.grad.data();
                    real *pd = in->GradRef().data();
                    for (int64 bc = 0; bc < B * C; ++bc)
                      for (int64 h = 0; h < H; ++h) {
                        const real *s = pg + (bc * Ho + h + top) * Wo + left;
                        real *d = pd + (bc * H + h) * W;
                        for (int64 w = 0; w < W; ++w) d[w] += s[w];
                      }
                  });
}

Variable Sum(const Variable &x, const std::vector<int32> &axes, bool keepdim) {
  const Tensor &tx = x.Value();
  CheckAxes(tx, axes);
  std::vector<bool> reduce(tx.NumAxes(), false);
  for (int32 a : axes) reduce[a] = true;
  std::vector<int64> kept_shape = tx.shape();  // with reduced dims set to 1
  for (int32 i = 0; i < tx.NumAxes(); ++i)
    if (reduce[i]) kept_shape[i] = 1;
  std::vector<int64> out_shape;
  for (int32 i = 0; i < tx.NumAxes(); ++i)
    if (!reduce[i])
      out_shape.push_back(tx.Dim(i));
    else if (keepdim)
      out_shape.push_back(1);

  Tensor out(kept_shape);
  // dst strides: 0 on reduced axes
  std::vector<int64> dst_strides = BroadcastStrides(kept_shape, tx.shape());
  std::vector<int64> zero(tx.shape().size(), 0);
  const real *px = tx.data();
  real *po = out.data();
  ForEachBroadcast(tx.shape(), dst_strides, zero,
                   [&](int64 i, int64 od, int64) { po[od] += px[i]; });
  out.Reshape(out_shape);
  std::vector<int64> in_shape = tx.shape();
  return MakeNode(std::move(out), {x.node()},
                  [kept_shape, in_shape, dst_strides](Node &n) {
                    NodePtr in = n.inputs[0];
                    if (!in->requires_grad) return;
                    const real *pg = n.grad.data();
                    real *pd = in->GradRef().data();
                    std::vector<int64> zero(in_shape.size(), 0);
                    ForEachBroadcast(in_shape, dst_strides, zero,
                                     [&](int64 i, int64 og, int64) {
                                       pd[i] += pg[og];
                                     });
                  });
}

Variable Mean(const Variable &x, const std::vector<int32> &axes,
              bool keepdim) {
  const Tensor &tx = x.Value();
  int64 count = 1;
  for (int32 a : axes) count *= tx.Dim(a);
  return Scale(Sum(x, axes, keepdim), 1.0 / static_cast<real>(count));
}

Variable SumAll(const Variable &x) {
  const Tensor &tx = x.Value();
  real acc = 0.0;
  const real *px = tx.data();
  for (int64 i = 0; i < tx.NumElements(); ++i) acc += px[i];
  return MakeNode(Tensor::Scalar(acc), {x.node()}, [](Node &n) {
    NodePtr in = n.inputs[0];
    if (!in->requires_grad) return;
    real g = n.grad[0];
    real *pd = in->GradRef().data();
    for (int64 i = 0; i < in->value.NumElements(); ++i) pd[i] += g;
  });
}

Variable MeanAll(const Variable &x) {
  return Scale(SumAll(x), 1.0 / static_cast<real>(x.Value().NumElements()));
}

Variable MatMul(const Variable &a, const Variable &b, bool trans_a,
                bool trans_b) {
  const Tensor &ta = a.Value(), &tb = b.Value();
  CMKIT_ASSERT(ta.NumAxes() == 2 && tb.NumAxes() == 2);
  int64 m = trans_a ? ta.Dim(1) : ta.Dim(0);
  int64 k = trans_a ? ta.Dim(0) : ta.Dim(1);
  int64 kb = trans_b ? tb.Dim(1) : tb.Dim(0);
  int64 n_cols = trans_b ? tb.Dim(0) : tb.Dim(1);
  if (k != kb)
    CMKIT_ERR(ShapeError) << "matmul inner dims differ: " << ta.ShapeString()
                          << " x " << tb.ShapeString();
  Tensor out({m, n_cols});
  {
    ECMap A = MapConst(ta, ta.Dim(0), ta.Dim(1));
    ECMap B = MapConst(tb, tb.Dim(0), tb.Dim(1));
    EMap Y = MapMut(out, m, n_cols);
    if (!trans_a && !trans_b)
      Y.noalias() = A * B;
    else if (trans_a && !trans_b)
      Y.noalias() = A.transpose() * B;
    else if (!trans_a && trans_b)
      Y.noalias() = A * B.transpose();
    else
      Y.noalias() = A.transpose() * B.transpose();
  }
  return MakeNode(std::move(out), {a.node(), b.node()},
                  [trans_a, trans_b, m, n_cols](Node &n) {
                    NodePtr na = n.inputs[0], nb = n.inputs[1];
                    const Tensor &ta = na->value, &tb = nb->value;
                    ECMap A = MapConst(ta, ta.Dim(0), ta.Dim(1));
                    ECMap B = MapConst(tb, tb.Dim(0), tb.Dim(1));
                    ECMap G = MapConst(n.grad, m, n_cols);
                    if (na->requires_grad) {
                      EMap GA = MapMut(na->GradRef(), ta.Dim(0), ta.Dim(1));
                      if (!trans_a && !trans_b)
                        GA.noalias() += G * B.transpose();
                      else if (!trans_a && trans_b)
                        GA.noalias() += G * B;
                      else if (trans_a && !trans_b)
                        GA.noalias() += B * G.transpose();
                      else
                        GA.noalias() += B.transpose() * G.transpose();
                    }
                    if (nb->requires_grad) {
                      EMap GB = MapMut(nb->GradRef(), tb.Dim(0), tb.Dim(1));
                      if (!trans_a && !trans_b)
                        GB.noalias() += A.transpose() * G;
                      else if (!trans_a && trans_b)
                        GB.noalias() += G.transpose() * A;
                      else if (trans_a && !trans_b)
                        GB.noalias() += A * G;
                      else
                        GB.noalias() += G.transpose() * A.transpose();
                    }
                  });
}

Variable BatchMatMul(const Variable &a, const Variable &b, bool trans_a,
                     bool trans_b) {
  const Tensor &ta = a.Value(), &tb = b.Value();
  CMKIT_ASSERT(ta.NumAxes() == 3 && tb.NumAxes() == 3);
  CMKIT_ASSERT(ta.Dim(0) == tb.Dim(0));
  int64 batch = ta.Dim(0);
  int64 ra = ta.Dim(1), ca = ta.Dim(2), rb = tb.Dim(1), cb = tb.Dim(2);
  int64 m = trans_a ? ca : ra;
  int64 k = trans_a ? ra : ca;
  int64 kb = trans_b ? cb : rb;
  int64 n_cols = trans_b ? rb : cb;
  if (k != kb)
    CMKIT_ERR(ShapeError) << "bmm inner dims differ: " << ta.ShapeString()
                          << " x " << tb.ShapeString();
  Tensor out({batch, m, n_cols});
  for (int64 i = 0; i < batch; ++i) {
    ECMap A(ta.data() + i * ra * ca, ra, ca);
    ECMap B(tb.data() + i * rb * cb, rb, cb);
    EMap Y(out.data() + i * m * n_cols, m, n_cols);
    if (!trans_a && !trans_b)
      Y.noalias() = A * B;
    else if (trans_a && !trans_b)
      Y.noalias() = A.transpose() * B;
    else if (!trans_a && trans_b)
      Y.noalias() = A * B.transpose();
    else
      Y.noalias() = A.transpose() * B.transpose();
  }
  return MakeNode(
      std::move(out), {a.node(), b.node()},
      [trans_a, trans_b, batch, ra, ca, rb, cb, m, n_cols](Node &n) {
        NodePtr na = n.inputs[0], nb = n.inputs[1];
        for (int64 i = 0; i < batch; ++i) {
          ECMap A(na->value.data() + i * ra * ca, ra, ca);
          ECMap B(nb->value.data() + i * rb * cb, rb, cb);
          ECMap G(n.grad.data() + i * m * n_cols, m, n_cols);
          if (na->requires_grad) {
            EMap GA(na->GradRef().data() + i * ra * ca, ra, ca);
            if (!trans_a && !trans_b)
              GA.noalias() += G * B.transpose();
            else if (!trans_a && trans_b)
              GA.noalias() += G * B;
            else if (trans_a && !trans_b)
              GA.noalias() += B * G.transpose();
            else
              GA.noalias() += B.transpose() * G.transpose();
          }
          if (nb->requires_grad) {
            EMap GB(nb->GradRef().data() + i * rb * cb, rb, cb);
            if (!trans_a && !trans_b)
              GB.noalias() += A.transpose() * G;
            else if (!trans_a && trans_b)
              GB.noalias() += G.transpose() * A;
            else if (trans_a && !trans_b)
              GB.noalias() += A * G;
            else
              GB.noalias() += G.transpose() * A.transpose();
          }
        }
      });
}

Variable Softmax(const Variable &x) {
  const Tensor &tx = x.Value();
  CMKIT_ASSERT(tx.NumAxes() >= 1);
  int64 C = tx.Dim(tx.NumAxes() - 1);
  int64 rows = tx.NumElements() / C;
  Tensor out(tx.shape());
  const real *px = tx.data();
  real *po = out.data();
  for (int64 r = 0; r < rows; ++r) {
    const real *xr = px + r * C;
    real *yr = po + r * C;
    real mx = xr[0];
    for (int64 c = 1; c < C; ++c) mx = std::max(mx, xr[c]);
    real sum = 0.0;
    for (int64 c = 0; c < C; ++c) {
      yr[c] = std::exp(xr[c] - mx);
      sum += yr[c];
    }
    for (int64 c = 0; c < C; ++c) yr[c] /= sum;
  }
  Tensor saved = out;
  return MakeNode(std::move(out), {x.node()},
                  [rows, C, saved = std::move(saved)](Node &n) {
                    NodePtr in = n.inputs[0];
                    if (!in->requires_grad) return;
                    const real *py = saved.data();
                    const real *pg = n.grad.data();
                    real *pd = in->GradRef().data();
                    for (int64 r = 0; r < rows; ++r) {
                      const real *y = py + r * C;
                      const real *g = pg + r * C;
                      real *d = pd + r * C;
                      real dot = 0.0;
                      for (int64 c = 0; c < C; ++c) dot += g[c] * y[c];
                      for (int64 c = 0; c < C; ++c)
                        d[c] += y[c] * (g[c] - dot);
                    }
                  });
}

Variable LayerNormOp(const Variable &x, const Variable &gamma,
                     const Variable &beta, real eps) {
  const Tensor &tx = x.Value();
  int64 D = tx.Dim(tx.NumAxes() - 1);
  CMKIT_ASSERT(gamma.Value().NumElements() == D &&
               beta.Value().NumElements() == D);
  int64 rows = tx.NumElements() / D;
  Tensor out(tx.shape());
  Tensor xhat(tx.shape());
  Tensor rstd({rows});
  const real *px = tx.data();
  const real *pgm = gamma.Value().data();
  const real *pbt = beta.Value().data();
  real *po = out.data();
  real *ph = xhat.data();
  for (int64 r = 0; r < rows; ++r) {
    const real *xr = px + r * D;
    real mu = 0.0;
    for (int64 c = 0; c < D; ++c) mu += xr[c];
    mu /= static_cast<real>(D);
    real var = 0.0;
    for (int64 c = 0; c < D; ++c) var += (xr[c] - mu) * (xr[c] - mu);
    var /= static_cast<real>(D);
    real rs = 1.0 / std::sqrt(var + eps);
    rstd[r] = rs;
    real *hr = ph + r * D;
    real *yr = po + r * D;
    for (int64 c = 0; c < D; ++c) {
      hr[c] = (xr[c] - mu) * rs;
      yr[c] = pgm[c] * hr[c] + pbt[c];
    }
  }
  return MakeNode(
      std::move(out), {x.node(), gamma.node(), beta.node()},
      [rows, D, xhat = std::move(xhat), rstd = std::move(rstd)](Node &n) {
        NodePtr nx = n.inputs[0], ngm = n.inputs[1], nbt = n.inputs[2];
        const real *pg = n.grad.data();
        const real *ph = xhat.data();
        const real *pgm = ngm->value.data();
        if (ngm->requires_grad) {
          real *d = ngm->GradRef().data();
          for (int64 r = 0; r < rows; ++r)
            for (int64 c = 0; c < D; ++c) d[c] += pg[r * D + c] * ph[r * D + c];
        }
        if (nbt->requires_grad) {
          real *d = nbt->GradRef().data();
          for (int64 r = 0; r < rows; ++r)
            for (int64 c = 0; c < D; ++c) d[c] += pg[r * D + c];
        }
        if (nx->requires_grad) {
          real *d = nx->GradRef().data();
          for (int64 r = 0; r < rows; ++r) {
            const real *g = pg + r * D;
            const real *h = ph + r * D;
            real mean_gh = 0.0, mean_ghh = 0.0;
            for (int64 c = 0; c < D; ++c) {
              real gh = g[c] * pgm[c];
              mean_gh += gh;
              mean_ghh += gh * h[c];
            }
            mean_gh /= static_cast<real>(D);
            mean_ghh /= static_cast<real>(D);
            real rs = rstd[r];
            real *dr = d + r * D;
            for (int64 c = 0; c < D; ++c) {
              real gh = g[c] * pgm[c];
              dr[c] += rs * (gh - mean_gh - h[c] * mean_ghh);
            }
          }
        }
      });
}

Variable Conv2d(const Variable &x, const Variable &w, const Variable &b,
                int32 stride_h, int32 stride_w, int32 pad_h, int32 pad_w) {
  const Tensor &tx = x.Value();
  const Tensor &tw = w.Value();
  CMKIT_ASSERT(tx.NumAxes() == 4 && tw.NumAxes() == 4);
  int64 B = tx.Dim(0), Cin = tx.Dim(1), H = tx.Dim(2), W = tx.Dim(3);
  int64 Cout = tw.Dim(0);
  int32 kh = static_cast<int32>(tw.Dim(2)), kw = static_cast<int32>(tw.Dim(3));
  if (tw.Dim(1) != Cin)
    CMKIT_ERR(ShapeError) << "conv2d channel mismatch: input " << Cin
                          << " weight " << tw.Dim(1);
  int64 Ho = (H + 2 * pad_h - kh) / stride_h + 1;
  int64 Wo = (W + 2 * pad_w - kw) / stride_w + 1;
  CMKIT_ASSERT(Ho >= 1 && Wo >= 1);
  int64 K = Cin * kh * kw;
  Tensor out({B, Cout, Ho, Wo});
  Tensor col({K, Ho * Wo});
  const bool has_bias = b.Defined();
  const real *pb = has_bias ? b.Value().data() : nullptr;
  for (int64 i = 0; i < B; ++i) {
    Im2Col(tx.data() + i * Cin * H * W, Cin, H, W, kh, kw, stride_h, stride_w,
           pad_h, pad_w, Ho, Wo, col.data());
    ECMap Wm(tw.data(), Cout, K);
    ECMap Cm(col.data(), K, Ho * Wo);
    EMap Ym(out.data() + i * Cout * Ho * Wo, Cout, Ho * Wo);
    Ym.noalias() = Wm * Cm;
    if (has_bias)
      for (int64 c = 0; c < Cout; ++c)
        Ym.row(c).array() += pb[c];
  }
  std::vector<NodePtr> inputs = {x.node(), w.node()};
  if (has_bias) inputs.push_back(b.node());
  // im2col is recomputed in the backward pass instead of being saved;
  // graphs hold many conv nodes at once and the columns dominate memory.
  return MakeNode(
      std::move(out), std::move(inputs),
      [B, Cin, H, W, Cout, kh, kw, stride_h, stride_w, pad_h, pad_w, Ho, Wo,
       K, has_bias](Node &n) {
        NodePtr nx = n.inputs[0], nw = n.inputs[1];
        const Tensor &tx = nx->value;
        const Tensor &tw = nw->value;
        Tensor col({K, Ho * Wo});
        for (int64 i = 0; i < B; ++i) {
          ECMap G(n.grad.data() + i * Cout * Ho * Wo, Cout, Ho * Wo);
          if (nw->requires_grad || nx->requires_grad)
            Im2Col(tx.data() + i * Cin * H * W, Cin, H, W, kh, kw, stride_h,
                   stride_w, pad_h, pad_w, Ho, Wo, col.data());
          if (nw->requires_grad) {
            EMap GW(nw->GradRef().data(), Cout, K);
            ECMap Cm(col.data(), K, Ho * Wo);
            GW.noalias() += G * Cm.transpose();
          }
          if (nx->requires_grad) {
            ECMap Wm(tw.data(), Cout, K);
            EMap Cm(col.data(), K, Ho * Wo);
            Cm.noalias() = Wm.transpose() * G;
            Col2Im(col.data(), Cin, H, W, kh, kw, stride_h, stride_w, pad_h,
                   pad_w, Ho, Wo, nx->GradRef().data() + i * Cin * H * W);
          }
        }
        if (has_bias && n.inputs[2]->requires_grad) {
          real *db = n.inputs[2]->GradRef().data();
          const real *pg = n.grad.data();
          for (int64 i = 0; i < B; ++i)
            for (int64 c = 0; c < Cout; ++c) {
              real acc = 0.0;
              const real *row = pg + (i * Cout + c) * Ho * Wo;
              for (int64 j = 0; j < Ho * Wo; ++j) acc += row[j];
              db[c] += acc;
            }
        }
      });
}

Variable ConvTranspose2d(const Variable &x, const Variable &w,
                         const Variable &b, int32 stride, int32 pad,
                         int32 output_pad) {
  const Tensor &tx = x.Value();
  const Tensor &tw = w.Value();  // [Cin, Cout, kh, kw]
  CMKIT_ASSERT(tx.NumAxes() == 4 && tw.NumAxes() == 4);
  int64 B = tx.Dim(0), Cin = tx.Dim(1), H = tx.Dim(2), W = tx.Dim(3);
  if (tw.Dim(0) != Cin)
    CMKIT_ERR(ShapeError) << "conv_transpose2d channel mismatch: input " << Cin
                          << " weight " << tw.Dim(0);
  int64 Cout = tw.Dim(1);
  int32 kh = static_cast<int32>(tw.Dim(2)), kw = static_cast<int32>(tw.Dim(3));
  int64 Ho = (H - 1) * stride - 2 * pad + kh + output_pad;
  int64 Wo = (W - 1) * stride - 2 * pad + kw + output_pad;
  CMKIT_ASSERT(Ho >= 1 && Wo >= 1);
  int64 K = Cout * kh * kw;
  Tensor out({B, Cout, Ho, Wo});
  Tensor col({K, H * W});
  const bool has_bias = b.Defined();
  for (int64 i = 0; i < B; ++i) {
    ECMap Wm(tw.data(), Cin, K);
    ECMap Xm(tx.data() + i * Cin * H * W, Cin, H * W);
    EMap Cm(col.data(), K, H * W);
    Cm.noalias() = Wm.transpose() * Xm;
    Col2Im(col.data(), Cout, Ho, Wo, kh, kw, stride, stride, pad, pad, H, W,
           out.data() + i * Cout * Ho * Wo);
    if (has_bias) {
      const real *pb = b.Value().data();
      real *py = out.data() + i * Cout * Ho * Wo;
      for (int64 c = 0; c < Cout; ++c)
        for (int64 j = 0; j < Ho * Wo; ++j) py[c * Ho * Wo + j] += pb[c];
    }
  }
  std::vector<NodePtr> inputs = {x.node(), w.node()};
  if (has_bias) inputs.push_back(b.node());
  return MakeNode(
      std::move(out), std::move(inputs),
      [B, Cin, H, W, Cout, kh, kw, stride, pad, Ho, Wo, K, has_bias](Node &n) {
        NodePtr nx = n.inputs[0], nw = n.inputs[1];
        const Tensor &tx = nx->value;
        const Tensor &tw = nw->value;
        Tensor col({K, H * W});
        for (int64 i = 0; i < B; ++i) {
          // columns of the output gradient under the same geometry
          Im2Col(n.grad.data() + i * Cout * Ho * Wo, Cout, Ho, Wo, kh, kw,
                 stride, stride, pad, pad, H, W, col.data());
          ECMap Cm(col.data(), K, H * W);
          if (nx->requires_grad) {
            ECMap Wm(tw.data(), Cin, K);
            EMap GX(nx->GradRef().data() + i * Cin * H * W, Cin, H * W);
            GX.noalias() += Wm * Cm;
          }
          if (nw->requires_grad) {
            ECMap Xm(tx.data() + i * Cin * H * W, Cin, H * W);
            EMap GW(nw->GradRef().data(), Cin, K);
            GW.noalias() += Xm * Cm.transpose();
          }
        }
        if (has_bias && n.inputs[2]->requires_grad) {
          real *db = n.inputs[2]->GradRef().data();
          const real *pg = n.grad.data();
          for (int64 i = 0; i < B; ++i)
            for (int64 c = 0; c < Cout; ++c) {
              real acc = 0.0;
              const real *row = pg + (i * Cout + c) * Ho * Wo;
              for (int64 j = 0; j < Ho * Wo; ++j) acc += row[j];
              db[c] += acc;
            }
        }
      });
}

Variable MaxPool2d(const Variable &x, int32 kernel, int32 stride) {
  const Tensor &tx = x.Value();
  CMKIT_ASSERT(tx.NumAxes() == 4);
  int64 B = tx.Dim(0), C = tx.Dim(1), H = tx.Dim(2), W = tx.Dim(3);
  int64 Ho = (H - kernel) / stride + 1;
  int64 Wo = (W - kernel) / stride + 1;
  CMKIT_ASSERT(Ho >= 1 && Wo >= 1);
  Tensor out({B, C, Ho, Wo});
  std::vector<int64> argmax(static_cast<size_t>(B * C * Ho * Wo));
  const real *px = tx.data();
  real *po = out.data();
  int64 oi = 0;
  for (int64 bc = 0; bc < B * C; ++bc) {
    const real *img = px + bc * H * W;
    for (int64 ho = 0; ho < Ho; ++ho)
      for (int64 wo = 0; wo < Wo; ++wo, ++oi) {
        int64 best = (ho * stride) * W + wo * stride;
        real bv = img[best];
        for (int32 ki = 0; ki < kernel; ++ki)
          for (int32 kj = 0; kj < kernel; ++kj) {
            int64 idx = (ho * stride + ki) * W + wo * stride + kj;
            if (img[idx] > bv) {
              bv = img[idx];
              best = idx;
            }
          }
        po[oi] = bv;
        argmax[static_cast<size_t>(oi)] = bc * H * W + best;
      }
  }
  return MakeNode(std::move(out), {x.node()},
                  [argmax = std::move(argmax)](Node &n) {
                    NodePtr in = n.inputs[0];
                    if (!in->requires_grad) return;
                    const real *pg = n.grad.data();
                    real *pd = in->GradRef().data();
                    for (int64 i = 0; i < n.grad.NumElements(); ++i)
                      pd[argmax[static_cast<size_t>(i)]] += pg[i];
                  });
}

Variable MaxFeatureMap(const Variable &x) {
  const Tensor &tx = x.Value();
  CMKIT_ASSERT(tx.NumAxes() == 4);
  int64 B = tx.Dim(0), C2 = tx.Dim(1), H = tx.Dim(2), W = tx.Dim(3);
  if (C2 % 2 != 0)
    CMKIT_ERR(ShapeError) << "max-feature-map needs an even channel count, got "
                          << C2;
  int64 C = C2 / 2, plane = H * W;
  Tensor out({B, C, H, W});
  std::vector<uint8_t> take_second(static_cast<size_t>(out.NumElements()));
  const real *px = tx.data();
  real *po = out.data();
  int64 oi = 0;
  for (int64 i = 0; i < B; ++i)
    for (int64 c = 0; c < C; ++c) {
      const real *a = px + (i * C2 + c) * plane;
      const real *b2 = px + (i * C2 + C + c) * plane;
      for (int64 j = 0; j < plane; ++j, ++oi) {
        bool second = b2[j] > a[j];
        take_second[static_cast<size_t>(oi)] = second;
        po[oi] = second ? b2[j] : a[j];
      }
    }
  return MakeNode(std::move(out), {x.node()},
                  [B, C, C2, plane, take_second = std::move(take_second)](
                      Node &n) {
                    NodePtr in = n.inputs[0];
                    if (!in->requires_grad) return;
                    const real *pg = n.grad.data();
                    real *pd = in->GradRef().data();
                    int64 oi = 0;
                    for (int64 i = 0; i < B; ++i)
                      for (int64 c = 0; c < C; ++c) {
                        real *a = pd + (i * C2 + c) * plane;
                        real *b2 = pd + (i * C2 + C + c) * plane;
                        for (int64 j = 0; j < plane; ++j, ++oi) {
                          if (take_second[static_cast<size_t>(oi)])
                            b2[j] += pg[oi];
                          else
                            a[j] += pg[oi];
                        }
                      }
                  });
}

Variable DepthwiseConv1d(const Variable &x, const Variable &w,
                         const Variable &b) {
  const Tensor &tx = x.Value();
  const Tensor &tw = w.Value();  // [C, k]
  CMKIT_ASSERT(tx.NumAxes() == 3 && tw.NumAxes() == 2);
  int64 B = tx.Dim(0), C = tx.Dim(1), T = tx.Dim(2);
  CMKIT_ASSERT(tw.Dim(0) == C);
  int32 k = static_cast<int32>(tw.Dim(1));
  CMKIT_ASSERT(k % 2 == 1);
  int32 pad = (k - 1) / 2;
  Tensor out({B, C, T});
  const real *px = tx.data();
  const real *pw = tw.data();
  const bool has_bias = b.Defined();
  const real *pb = has_bias ? b.Value().data() : nullptr;
  real *po = out.data();
  for (int64 i = 0; i < B; ++i)
    for (int64 c = 0; c < C; ++c) {
      const real *xr = px + (i * C + c) * T;
      const real *wr = pw + c * k;
      real *yr = po + (i * C + c) * T;
      for (int64 t = 0; t < T; ++t) {
        real acc = has_bias ? pb[c] : 0.0;
        for (int32 j = 0; j < k; ++j) {
          int64 ti = t - pad + j;
          if (ti >= 0 && ti < T) acc += wr[j] * xr[ti];
        }
        yr[t] = acc;
      }
    }
  std::vector<NodePtr> inputs = {x.node(), w.node()};
  if (has_bias) inputs.push_back(b.node());
  return MakeNode(
      std::move(out), std::move(inputs), [B, C, T, k, pad, has_bias](Node &n) {
        NodePtr nx = n.inputs[0], nw = n.inputs[1];
        const real *pg = n.grad.data();
        for (int64 i = 0; i < B; ++i)
          for (int64 c = 0; c < C; ++c) {
            const real *gr = pg + (i * C + c) * T;
            if (nx->requires_grad) {
              const real *wr = nw->value.data() + c * k;
              real *dx = nx->GradRef().data() + (i * C + c) * T;
              for (int64 t = 0; t < T; ++t)
                for (int32 j = 0; j < k; ++j) {
                  int64 ti = t - pad + j;
                  if (ti >= 0 && ti < T) dx[ti] += gr[t] * wr[j];
                }
            }
            if (nw->requires_grad) {
              const real *xr = nx->value.data() + (i * C + c) * T;
              real *dw = nw->GradRef().data() + c * k;
              for (int64 t = 0; t < T; ++t)
                for (int32 j = 0; j < k; ++j) {
                  int64 ti = t - pad + j;
                  if (ti >= 0 && ti < T) dw[j] += gr[t] * xr[ti];
                }
            }
          }
        if (has_bias && n.inputs[2]->requires_grad) {
          real *db = n.inputs[2]->GradRef().data();
          for (int64 i = 0; i < B; ++i)
            for (int64 c = 0; c < C; ++c) {
              const real *gr = pg + (i * C + c) * T;
              real acc = 0.0;
              for (int64 t = 0; t < T; ++t) acc += gr[t];
              db[c] += acc;
            }
        }
      });
}

Variable RelShift(const Variable &p) {
  const Tensor &tp = p.Value();
  CMKIT_ASSERT(tp.NumAxes() == 4);
  int64 B = tp.Dim(0), Hh = tp.Dim(1), T = tp.Dim(2), M = tp.Dim(3);
  CMKIT_ASSERT(M == 2 * T - 1);
  Tensor out({B, Hh, T, T});
  const real *pp = tp.data();
  real *po = out.data();
  for (int64 bh = 0; bh < B * Hh; ++bh)
    for (int64 i = 0; i < T; ++i) {
      const real *src = pp + (bh * T + i) * M + (T - 1 - i);
      real *dst = po + (bh * T + i) * T;
      std::copy(src, src + T, dst);
    }
  return MakeNode(std::move(out), {p.node()}, [B, Hh, T, M](Node &n) {
    NodePtr in = n.inputs[0];
    if (!in->requires_grad) return;
    const real *pg = n.grad.data();
    real *pd = in->GradRef().data();
    for (int64 bh = 0; bh < B * Hh; ++bh)
      for (int64 i = 0; i < T; ++i) {
        const real *src = pg + (bh * T + i) * T;
        real *dst = pd + (bh * T + i) * M + (T - 1 - i);
        for (int64 j = 0; j < T; ++j) dst[j] += src[j];
      }
  });
}

}  // namespace nn
}  // namespace cmkit
