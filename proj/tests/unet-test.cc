// tests/unet-test.cc

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

#include "enhance/mask-unet.h"
#include "test-util.h"

using namespace cmkit;
using nn::Variable;

namespace {

MaskUnetConfig MiniConfig() {
  MaskUnetConfig cfg;
  cfg.encoder_channels = {2, 3, 4, 5};
  return cfg;
}

}  // namespace

TEST_CASE("mask matches the input shape and stays in (0,1)") {
  Rng rng(80);
  MaskUnetConfig cfg;  // full 16/32/64/128 ladder
  MaskUnet unet(cfg, &rng);
  unet.SetTraining(false);
  Variable feats(test::RandomTensor({2, 118, 80}, &rng, -5.0, 5.0));
  Variable mask = unet.Forward(feats);
  CHECK(mask.Value().shape() == std::vector<int64>{2, 118, 80});
  for (int64 i = 0; i < mask.Value().NumElements(); ++i) {
    CHECK(mask.Value()[i] > 0.0);
    CHECK(mask.Value()[i] < 1.0);
  }
}

TEST_CASE("mask range holds across random shapes and weights") {
  for (uint64 seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    MaskUnet unet(MiniConfig(), &rng);
    unet.SetTraining(false);
    int64 T = rng.UniformInt(17, 90);
    int64 F = rng.UniformInt(17, 90);
    Variable feats(test::RandomTensor({1, T, F}, &rng, -8.0, 8.0));
    Variable mask = unet.Forward(feats);
    CHECK(mask.Value().shape() == std::vector<int64>{1, T, F});
    for (int64 i = 0; i < mask.Value().NumElements(); ++i) {
      CHECK(mask.Value()[i] > 0.0);
      CHECK(mask.Value()[i] < 1.0);
    }
  }
}

TEST_CASE("zeroed exit layer gives a flat 0.5 mask") {
  Rng rng(81);
  MaskUnet unet(MiniConfig(), &rng);
  unet.SetTraining(false);
  for (auto &[name, var] : unet.NamedParameters())
    if (name.rfind("exit.", 0) == 0) var.MutableValue().SetZero();
  Variable feats(test::RandomTensor({1, 32, 32}, &rng));
  Variable mask = unet.Forward(feats);
  for (int64 i = 0; i < mask.Value().NumElements(); ++i)
    CHECK(mask.Value()[i] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("apply_mask identity, annihilator and elementwise oracle") {
  Rng rng(82);
  Variable f(test::RandomTensor({2, 5, 4}, &rng));
  Variable ones(Tensor({2, 5, 4}, 1.0));
  Variable zeros(Tensor({2, 5, 4}, 0.0));
  CHECK(test::MaxAbsDiff(ApplyMask(f, ones).Value(), f.Value()) == 0.0);
  for (int64 i = 0; i < 40; ++i)
    CHECK(ApplyMask(f, zeros).Value()[i] == 0.0);
  Variable m(test::RandomTensor({2, 5, 4}, &rng, 0.0, 1.0));
  Variable prod = ApplyMask(f, m);
  for (int64 i = 0; i < 40; ++i)
    CHECK(prod.Value()[i] == f.Value()[i] * m.Value()[i]);
  Variable bad(test::RandomTensor({2, 5, 5}, &rng));
  CHECK_THROWS_AS((void)ApplyMask(f, bad), ShapeError);
}

TEST_CASE("masked mse loss is zero for clean inputs and unit masks") {
  Rng rng(83);
  Tensor clean = test::RandomTensor({6, 7}, &rng);
  DualBatch batch = MakeDualBatch({clean}, {clean}, {1});
  Variable masks(Tensor({2, 6, 7}, 1.0));
  Variable loss = MaskedMseLoss(batch, masks);
  CHECK(loss.Value()[0] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("masked mse loss with zero labels keeps only the noisy term") {
  Rng rng(84);
  Tensor noisy = test::RandomTensor({3, 4}, &rng);
  Tensor clean({3, 4}, 0.0);
  DualBatch batch = MakeDualBatch({noisy}, {clean}, {0});
  Variable masks(test::RandomTensor({2, 3, 4}, &rng, 0.1, 0.9));
  Variable loss = MaskedMseLoss(batch, masks);
  real expect = 0.0;
  for (int64 t = 0; t < 3; ++t)
    for (int64 f = 0; f < 4; ++f) {
      real v = noisy(t, f) * masks.Value()(0, t, f);
      expect += v * v;
    }
  expect /= 12.0;
  CHECK(loss.Value()[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("masked mse loss equals the double-sum oracle") {
  Rng rng(85);
  Tensor noisy = test::RandomTensor({2, 3}, &rng);
  Tensor clean = test::RandomTensor({2, 3}, &rng);
  DualBatch batch = MakeDualBatch({noisy}, {clean}, {1});
  Variable masks(test::RandomTensor({2, 2, 3}, &rng, 0.0, 1.0));
  Variable loss = MaskedMseLoss(batch, masks);
  real acc = 0.0;
  for (int64 t = 0; t < 2; ++t)
    for (int64 f = 0; f < 3; ++f) {
      real mx = masks.Value()(0, t, f), ms = masks.Value()(1, t, f);
      real x = noisy(t, f), s = clean(t, f);
      acc += (x * mx - s) * (x * mx - s) + (s * ms - s) * (s * ms - s);
    }
  acc /= 6.0;  // single 1/(t*f) prefactor over both branch terms
  CHECK(loss.Value()[0] == doctest::Approx(acc).epsilon(1e-7));
}

TEST_CASE("enhance composes forward and apply_mask") {
  Rng rng(86);
  MaskUnet unet(MiniConfig(), &rng);
  unet.SetTraining(false);
  Variable feats(test::RandomTensor({1, 20, 18}, &rng, -3.0, 3.0));
  Variable out = unet.Enhance(feats);
  Variable oracle = ApplyMask(feats, unet.Forward(feats));
  CHECK(out.Value().shape() == feats.Value().shape());
  CHECK(test::MaxAbsDiff(out.Value(), oracle.Value()) < 1e-14);
}

TEST_CASE("enhance with a zeroed exit layer halves the features") {
  Rng rng(87);
  MaskUnet unet(MiniConfig(), &rng);
  unet.SetTraining(false);
  for (auto &[name, var] : unet.NamedParameters())
    if (name.rfind("exit.", 0) == 0) var.MutableValue().SetZero();
  Variable feats(test::RandomTensor({1, 24, 16}, &rng));
  Variable out = unet.Enhance(feats);
  for (int64 i = 0; i < out.Value().NumElements(); ++i)
    CHECK(out.Value()[i] ==
          doctest::Approx(0.5 * feats.Value()[i]).epsilon(1e-12));
}

TEST_CASE("dual batch layout repeats clean labels and authenticity") {
  Rng rng(88);
  Tensor n0 = test::RandomTensor({4, 3}, &rng);
  Tensor n1 = test::RandomTensor({4, 3}, &rng);
  Tensor c0 = test::RandomTensor({4, 3}, &rng);
  Tensor c1 = test::RandomTensor({4, 3}, &rng);
  DualBatch b = MakeDualBatch({n0, n1}, {c0, c1}, {1, 0});
  CHECK(b.inputs.Value().shape() == std::vector<int64>{4, 4, 3});
  CHECK(b.authenticity == std::vector<int32>{1, 0, 1, 0});
  // labels: clean twice
  for (int64 t = 0; t < 4; ++t)
    for (int64 f = 0; f < 3; ++f) {
      CHECK(b.labels.Value()(0, t, f) == c0(t, f));
      CHECK(b.labels.Value()(2, t, f) == c0(t, f));
      CHECK(b.inputs.Value()(0, t, f) == n0(t, f));
      CHECK(b.inputs.Value()(2, t, f) == c0(t, f));
    }
  // clean-branch term vanishes iff its mask is 1 on the support of S
  Variable masks(Tensor({4, 4, 3}, 1.0));
  Variable loss = MaskedMseLoss(b, masks);
  real noisy_only = 0.0;
  for (int64 t = 0; t < 4; ++t)
    for (int64 f = 0; f < 3; ++f) {
      real d0 = n0(t, f) - c0(t, f), d1 = n1(t, f) - c1(t, f);
      noisy_only += d0 * d0 + d1 * d1;
    }
  noisy_only /= 2.0 * 12.0;
  CHECK(loss.Value()[0] == doctest::Approx(noisy_only).epsilon(1e-12));
}

TEST_CASE("gradient of the masked loss through a tiny network") {
  Rng rng(89);
  MaskUnetConfig cfg;
  cfg.encoder_channels = {1, 1, 2, 2};
  MaskUnet unet(cfg, &rng);
  unet.SetTraining(true);
  Tensor noisy = test::RandomTensor({4, 8}, &rng, -2.0, 2.0);
  Tensor clean = test::RandomTensor({4, 8}, &rng, -2.0, 2.0);
  DualBatch batch = MakeDualBatch({noisy}, {clean}, {1});
  auto forward = [&] {
    return MaskedMseLoss(batch, unet.Forward(batch.inputs));
  };
  auto res = test::GradCheck(forward, unet.Parameters(), 1e-5, 1e-3, 24);
  CHECK_MESSAGE(res.ok(0.95), "worst rel err = ", res.worst);
}
