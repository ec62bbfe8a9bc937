// tests/autograd-test.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nnet/layers.h"
#include "nnet/optimizer.h"
#include "test-util.h"

using namespace cmkit;
using namespace cmkit::nn;
using cmkit::test::GradCheck;
using cmkit::test::RandomTensor;

TEST_CASE("broadcast add/mul values") {
  Variable a(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  Variable b(Tensor({3}, {10, 20, 30}));
  Variable y = Add(a, b);
  CHECK(y.Value()(0, 0) == doctest::Approx(11));
  CHECK(y.Value()(1, 2) == doctest::Approx(36));
  Variable z = Mul(a, b);
  CHECK(z.Value()(1, 1) == doctest::Approx(100));
}

TEST_CASE("elementwise op gradients") {
  Rng rng(7);
  Variable x(RandomTensor({3, 4}, &rng), true);
  Variable w(RandomTensor({3, 4}, &rng, 0.5, 1.5), true);

  auto check = [&](const std::function<Variable()> &f) {
    auto res = GradCheck(f, {x, w});
    CHECK_MESSAGE(res.ok(), "worst rel err = ", res.worst);
  };
  check([&] { return SumAll(Mul(x, w)); });
  check([&] { return SumAll(Div(x, w)); });
  check([&] { return SumAll(Sigmoid(x)); });
  check([&] { return SumAll(Tanh(x)); });
  check([&] { return SumAll(Silu(x)); });
  check([&] { return SumAll(Exp(x)); });
  check([&] { return SumAll(Square(x)); });
  check([&] { return SumAll(Log(w)); });
  check([&] { return SumAll(SqrtClamped(w, 1e-12)); });
  check([&] { return MeanAll(Mul(Scale(x, 2.5), AddScalar(w, 0.3))); });
}

TEST_CASE("broadcast gradient reduces over expanded axes") {
  Rng rng(8);
  Variable x(RandomTensor({2, 3, 4}, &rng), true);
  Variable b(RandomTensor({4}, &rng), true);
  Variable s(RandomTensor({2, 1, 4}, &rng), true);
  auto res = GradCheck([&] { return SumAll(Mul(Add(x, b), s)); }, {x, b, s});
  CHECK_MESSAGE(res.ok(), "worst rel err = ", res.worst);
}

TEST_CASE("matmul gradients with transposes") {
  Rng rng(9);
  Variable a(RandomTensor({3, 4}, &rng), true);
  Variable b(RandomTensor({4, 2}, &rng), true);
  Variable bt(RandomTensor({2, 4}, &rng), true);
  Variable at(RandomTensor({4, 3}, &rng), true);
  auto r1 = GradCheck([&] { return SumAll(MatMul(a, b)); }, {a, b});
  CHECK_MESSAGE(r1.ok(), r1.worst);
  auto r2 = GradCheck([&] { return SumAll(MatMul(a, bt, false, true)); },
                      {a, bt});
  CHECK_MESSAGE(r2.ok(), r2.worst);
  auto r3 = GradCheck([&] { return SumAll(MatMul(at, b, true, false)); },
                      {at, b});
  CHECK_MESSAGE(r3.ok(), r3.worst);
  auto r4 = GradCheck([&] { return SumAll(MatMul(at, bt, true, true)); },
                      {at, bt});
  CHECK_MESSAGE(r4.ok(), r4.worst);
}

TEST_CASE("batched matmul gradients") {
  Rng rng(10);
  Variable a(RandomTensor({2, 3, 4}, &rng), true);
  Variable b(RandomTensor({2, 4, 2}, &rng), true);
  auto r = GradCheck([&] { return SumAll(BatchMatMul(a, b)); }, {a, b});
  CHECK_MESSAGE(r.ok(), r.worst);
  Variable bt(RandomTensor({2, 2, 4}, &rng), true);
  auto r2 = GradCheck([&] { return SumAll(BatchMatMul(a, bt, false, true)); },
                      {a, bt});
  CHECK_MESSAGE(r2.ok(), r2.worst);
}

TEST_CASE("shape op gradients") {
  Rng rng(11);
  Variable x(RandomTensor({2, 3, 4}, &rng), true);
  auto r1 = GradCheck(
      [&] { return SumAll(Square(Permute(x, {2, 0, 1}))); }, {x});
  CHECK_MESSAGE(r1.ok(), r1.worst);
  auto r2 = GradCheck(
      [&] { return SumAll(Square(Slice(x, 1, 1, 2))); }, {x});
  CHECK_MESSAGE(r2.ok(), r2.worst);
  auto r3 = GradCheck(
      [&] {
        return SumAll(Square(Concat({Slice(x, 2, 0, 2), Slice(x, 2, 2, 2)},
                                    2)));
      },
      {x});
  CHECK_MESSAGE(r3.ok(), r3.worst);
  Variable img(RandomTensor({1, 2, 3, 3}, &rng), true);
  auto r4 = GradCheck(
      [&] { return SumAll(Square(Pad2d(img, 1, 2, 0, 1))); }, {img});
  CHECK_MESSAGE(r4.ok(), r4.worst);
}

TEST_CASE("reduction gradients") {
  Rng rng(12);
  Variable x(RandomTensor({2, 3, 4}, &rng), true);
  auto r1 = GradCheck([&] { return SumAll(Square(Sum(x, {1}, true))); }, {x});
  CHECK_MESSAGE(r1.ok(), r1.worst);
  auto r2 = GradCheck(
      [&] { return SumAll(Square(Mean(x, {0, 2}, false))); }, {x});
  CHECK_MESSAGE(r2.ok(), r2.worst);
}

TEST_CASE("softmax rows sum to one and gradients pass") {
  Rng rng(13);
  Variable x(RandomTensor({5, 7}, &rng, -3.0, 3.0), true);
  Variable y = Softmax(x);
  for (int64 r = 0; r < 5; ++r) {
    real s = 0.0;
    for (int64 c = 0; c < 7; ++c) s += y.Value()(r, c);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
  Variable w(RandomTensor({5, 7}, &rng), false);
  auto r1 = GradCheck([&] { return SumAll(Mul(Softmax(x), w)); }, {x});
  CHECK_MESSAGE(r1.ok(), r1.worst);
}

TEST_CASE("layernorm normalizes rows and gradients pass") {
  Rng rng(14);
  Variable x(RandomTensor({4, 6}, &rng, -2.0, 5.0), true);
  Variable gamma(Tensor({6}, 1.0), true);
  Variable beta(Tensor({6}, 0.0), true);
  Variable y = LayerNormOp(x, gamma, beta, 1e-8);
  for (int64 r = 0; r < 4; ++r) {
    real mean = 0.0, var = 0.0;
    for (int64 c = 0; c < 6; ++c) mean += y.Value()(r, c);
    mean /= 6.0;
    for (int64 c = 0; c < 6; ++c)
      var += (y.Value()(r, c) - mean) * (y.Value()(r, c) - mean);
    var /= 6.0;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-5));
  }
  Variable w(RandomTensor({4, 6}, &rng), false);
  auto r1 = GradCheck(
      [&] { return SumAll(Mul(LayerNormOp(x, gamma, beta, 1e-8), w)); },
      {x, gamma, beta});
  CHECK_MESSAGE(r1.ok(), r1.worst);
}

TEST_CASE("conv2d matches direct convolution and gradients pass") {
  Rng rng(15);
  Variable x(RandomTensor({2, 2, 5, 6}, &rng), true);
  Variable w(RandomTensor({3, 2, 3, 3}, &rng), true);
  Variable b(RandomTensor({3}, &rng), true);
  Variable y = Conv2d(x, w, b, 2, 2, 1, 1);
  CHECK(y.Value().shape() == std::vector<int64>{2, 3, 3, 3});
  // direct sum oracle for one output element
  auto direct = [&](int64 n, int64 co, int64 ho, int64 wo) {
    real acc = b.Value()[co];
    for (int64 ci = 0; ci < 2; ++ci)
      for (int64 ki = 0; ki < 3; ++ki)
        for (int64 kj = 0; kj < 3; ++kj) {
          int64 hi = ho * 2 - 1 + ki, wi = wo * 2 - 1 + kj;
          if (hi < 0 || hi >= 5 || wi < 0 || wi >= 6) continue;
          acc += x.Value()(n, ci, hi, wi) * w.Value()(co, ci, ki, kj);
        }
    return acc;
  };
  for (int64 n = 0; n < 2; ++n)
    for (int64 co = 0; co < 3; ++co)
      for (int64 ho = 0; ho < 3; ++ho)
        for (int64 wo = 0; wo < 3; ++wo)
          CHECK(y.Value()(n, co, ho, wo) ==
                doctest::Approx(direct(n, co, ho, wo)).epsilon(1e-10));
  auto r1 = GradCheck(
      [&] { return SumAll(Square(Conv2d(x, w, b, 2, 2, 1, 1))); }, {x, w, b});
  CHECK_MESSAGE(r1.ok(), r1.worst);
}

TEST_CASE("conv transpose inverts conv shapes and gradients pass") {
  Rng rng(16);
  Variable x(RandomTensor({1, 3, 4, 5}, &rng), true);
  Variable w(RandomTensor({3, 2, 3, 3}, &rng), true);
  Variable b(RandomTensor({2}, &rng), true);
  Variable y = ConvTranspose2d(x, w, b, 2, 1, 1);
  CHECK(y.Value().shape() == std::vector<int64>{1, 2, 8, 10});
  auto r1 = GradCheck(
      [&] { return SumAll(Square(ConvTranspose2d(x, w, b, 2, 1, 1))); },
      {x, w, b});
  CHECK_MESSAGE(r1.ok(), r1.worst);
}

TEST_CASE("maxpool and max-feature-map") {
  Rng rng(17);
  Variable x(RandomTensor({2, 4, 6, 6}, &rng), true);
  Variable p = MaxPool2d(x, 2, 2);
  CHECK(p.Value().shape() == std::vector<int64>{2, 4, 3, 3});
  auto r1 = GradCheck([&] { return SumAll(Square(MaxPool2d(x, 2, 2))); }, {x});
  CHECK_MESSAGE(r1.ok(), r1.worst);

  Variable m = MaxFeatureMap(x);
  CHECK(m.Value().shape() == std::vector<int64>{2, 2, 6, 6});
  for (int64 i = 0; i < 2; ++i)
    for (int64 c = 0; c < 2; ++c)
      for (int64 h = 0; h < 6; ++h)
        for (int64 wdx = 0; wdx < 6; ++wdx)
          CHECK(m.Value()(i, c, h, wdx) ==
                std::max(x.Value()(i, c, h, wdx), x.Value()(i, c + 2, h, wdx)));
  auto r2 = GradCheck([&] { return SumAll(Square(MaxFeatureMap(x))); }, {x});
  CHECK_MESSAGE(r2.ok(), r2.worst);

  Variable odd(RandomTensor({1, 3, 2, 2}, &rng), false);
  CHECK_THROWS_AS((void)MaxFeatureMap(odd), ShapeError);
}

TEST_CASE("depthwise conv1d gradients") {
  Rng rng(18);
  Variable x(RandomTensor({2, 3, 7}, &rng), true);
  Variable w(RandomTensor({3, 5}, &rng), true);
  Variable b(RandomTensor({3}, &rng), true);
  Variable y = DepthwiseConv1d(x, w, b);
  CHECK(y.Value().shape() == std::vector<int64>{2, 3, 7});
  auto r1 = GradCheck(
      [&] { return SumAll(Square(DepthwiseConv1d(x, w, b))); }, {x, w, b});
  CHECK_MESSAGE(r1.ok(), r1.worst);
}

TEST_CASE("rel-shift gather layout") {
  // T = 3, M = 5; p(i, T-1-i+j) must land at out(i, j)
  Tensor p({1, 1, 3, 5});
  for (int64 i = 0; i < 3; ++i)
    for (int64 m = 0; m < 5; ++m) p(0, 0, i, m) = 10 * static_cast<real>(i) + static_cast<real>(m);
  Variable v(p, true);
  Variable y = RelShift(v);
  for (int64 i = 0; i < 3; ++i)
    for (int64 j = 0; j < 3; ++j)
      CHECK(y.Value()(0, 0, i, j) == doctest::Approx(10.0 * i + (2 - i + j)));
  auto r1 = GradCheck([&] { return SumAll(Square(RelShift(v))); }, {v});
  CHECK_MESSAGE(r1.ok(), r1.worst);
}

TEST_CASE("lstm and attentive pooling gradients") {
  Rng rng(19);
  Lstm lstm(4, 3, false, &rng);
  Variable x(RandomTensor({2, 5, 4}, &rng), true);
  Variable y = lstm.Forward(x);
  CHECK(y.Value().shape() == std::vector<int64>{2, 5, 3});
  std::vector<Variable> params = lstm.Parameters();
  params.push_back(x);
  auto r1 = GradCheck([&] { return SumAll(Square(lstm.Forward(x))); }, params);
  CHECK_MESSAGE(r1.ok(), r1.worst);

  AttentiveStatsPooling asp(3, 4, &rng);
  auto pooled = asp.Forward(y.Detach());
  CHECK(pooled.Value().shape() == std::vector<int64>{2, 6});
  Variable h(RandomTensor({2, 5, 3}, &rng), true);
  std::vector<Variable> params2 = asp.Parameters();
  params2.push_back(h);
  auto r2 = GradCheck([&] { return SumAll(Square(asp.Forward(h))); }, params2);
  CHECK_MESSAGE(r2.ok(), r2.worst);
}

TEST_CASE("batchnorm train vs eval") {
  Rng rng(20);
  BatchNorm bn(3);
  bn.SetTraining(true);
  Variable x(RandomTensor({4, 3, 5, 5}, &rng, -1.0, 3.0), true);
  Variable y = bn.Forward(x);
  // batch statistics: per-channel mean ~0, var ~1
  for (int64 c = 0; c < 3; ++c) {
    real mean = 0.0;
    for (int64 n = 0; n < 4; ++n)
      for (int64 h = 0; h < 5; ++h)
        for (int64 w = 0; w < 5; ++w) mean += y.Value()(n, c, h, w);
    mean /= 100.0;
    CHECK(std::abs(mean) < 1e-9);
  }
  std::vector<Variable> params = bn.Parameters();
  params.push_back(x);
  auto r1 = GradCheck([&] { return SumAll(Square(bn.Forward(x))); }, params);
  CHECK_MESSAGE(r1.ok(), r1.worst);

  bn.SetTraining(false);
  Variable y1 = bn.Forward(x);
  Variable y2 = bn.Forward(x);
  CHECK(test::MaxAbsDiff(y1.Value(), y2.Value()) == 0.0);
}

TEST_CASE("mean-variance normalization is differentiable and centered") {
  Rng rng(21);
  Variable x(RandomTensor({2, 7, 4}, &rng, -4.0, 9.0), true);
  Variable y = MeanVarNormalize(x);
  for (int64 b = 0; b < 2; ++b)
    for (int64 f = 0; f < 4; ++f) {
      real mean = 0.0;
      for (int64 t = 0; t < 7; ++t) mean += y.Value()(b, t, f);
      CHECK(std::abs(mean / 7.0) < 1e-9);
    }
  auto r1 = GradCheck([&] { return SumAll(Square(MeanVarNormalize(x))); },
                      {x});
  CHECK_MESSAGE(r1.ok(), r1.worst);
}

TEST_CASE("adam reduces a quadratic") {
  Variable w(Tensor({4}, {4.0, -3.0, 2.0, -1.0}), true);
  Adam opt({w}, 0.1);
  real first = 0.0;
  for (int32 it = 0; it < 200; ++it) {
    opt.ZeroGrad();
    Variable loss = SumAll(Square(w));
    if (it == 0) first = loss.Value()[0];
    Backward(loss);
    opt.Step();
  }
  Variable final_loss = SumAll(Square(w));
  CHECK(final_loss.Value()[0] < 0.01 * first);
}

TEST_CASE("no-grad mode builds no graph") {
  Rng rng(22);
  Variable x(RandomTensor({2, 2}, &rng), true);
  {
    NoGradGuard ng;
    Variable y = SumAll(Square(x));
    CHECK_FALSE(y.RequiresGrad());
  }
  Variable y = SumAll(Square(x));
  CHECK(y.RequiresGrad());
}
