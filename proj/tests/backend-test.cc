// tests/backend-test.cc

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

#include <filesystem>

#include "backend/conformer.h"
#include "backend/lcnn.h"
#include "backend/manifest.h"
#include "backend/resnet.h"
#include "test-util.h"

using namespace cmkit;
using nn::Variable;

namespace {

ConformerConfig MiniConformer() {
  ConformerConfig cfg;
  cfg.n_blocks = 2;
  cfg.model_dim = 8;
  cfg.ffn_dim = 16;
  cfg.n_heads = 2;
  cfg.conv_kernel = 5;
  cfg.embedding_dim = 6;
  cfg.asp_bottleneck = 4;
  cfg.n_mels = 12;
  return cfg;
}

}  // namespace

TEST_CASE("conformer block preserves the [d x T] shape at paper scale") {
  Rng rng(90);
  ConformerConfig cfg;  // d = 176
  cfg.n_mels = 80;
  ConformerBlock block(cfg, &rng);
  block.SetTraining(false);
  Variable x(test::RandomTensor({1, 25, 176}, &rng));
  Variable y = block.Forward(x);
  CHECK(y.Value().shape() == std::vector<int64>{1, 25, 176});
  // stateless in eval mode
  Variable y2 = block.Forward(x);
  CHECK(test::MaxAbsDiff(y.Value(), y2.Value()) == 0.0);
}

TEST_CASE("conformer block gradient check on a miniature config") {
  Rng rng(91);
  ConformerConfig cfg = MiniConformer();
  cfg.n_blocks = 1;
  ConformerBlock block(cfg, &rng);
  block.SetTraining(true);
  Variable x(test::RandomTensor({1, 4, 8}, &rng), true);
  Variable w(test::RandomTensor({1, 4, 8}, &rng));
  std::vector<Variable> params = block.Parameters();
  params.push_back(x);
  auto res = test::GradCheck(
      [&] { return nn::SumAll(nn::Mul(block.Forward(x), w)); }, params, 1e-5,
      1e-3, 10);
  CHECK_MESSAGE(res.ok(0.95), "worst rel err = ", res.worst);
}

TEST_CASE("MFA concatenation reaches D = 2816 at the paper configuration") {
  Rng rng(92);
  nn::LayerNorm norm(176 * 16);
  std::vector<Variable> hs;
  for (int32 i = 0; i < 16; ++i)
    hs.push_back(Variable(test::RandomTensor({1, 3, 176}, &rng)));
  Variable h = MfaConcat(hs, norm);
  CHECK(h.Value().shape() == std::vector<int64>{1, 3, 2816});
}

TEST_CASE("MFA of a single block is its layer normalization") {
  Rng rng(93);
  nn::LayerNorm norm(10);
  Variable h(test::RandomTensor({2, 4, 10}, &rng));
  Variable out = MfaConcat({h}, norm);
  CHECK(test::MaxAbsDiff(out.Value(), norm.Forward(h).Value()) < 1e-15);
}

TEST_CASE("MFA time-step columns are normalized before the affine") {
  Rng rng(94);
  nn::LayerNorm norm(24);  // gamma = 1, beta = 0 at init
  std::vector<Variable> hs;
  for (int32 i = 0; i < 3; ++i)
    hs.push_back(Variable(test::RandomTensor({2, 5, 8}, &rng, -4.0, 4.0)));
  Variable h = MfaConcat(hs, norm);
  for (int64 b = 0; b < 2; ++b)
    for (int64 t = 0; t < 5; ++t) {
      real mean = 0.0, var = 0.0;
      for (int64 d = 0; d < 24; ++d) mean += h.Value()(b, t, d);
      mean /= 24.0;
      for (int64 d = 0; d < 24; ++d) {
        real c = h.Value()(b, t, d) - mean;
        var += c * c;
      }
      var /= 24.0;
      CHECK(std::abs(mean) < 1e-5);
      CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("ASP: constant input gives the constant mean and zero deviation") {
  Rng rng(95);
  nn::AttentiveStatsPooling asp(3, 4, &rng);
  Tensor h({1, 6, 3});
  for (int64 t = 0; t < 6; ++t) {
    h(0, t, 0) = 1.5;
    h(0, t, 1) = -0.25;
    h(0, t, 2) = 4.0;
  }
  Variable pooled = asp.Forward(Variable(h));
  CHECK(pooled.Value()(0, 0) == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(pooled.Value()(0, 1) == doctest::Approx(-0.25).epsilon(1e-9));
  CHECK(pooled.Value()(0, 2) == doctest::Approx(4.0).epsilon(1e-9));
  for (int64 d = 3; d < 6; ++d)
    CHECK(std::abs(pooled.Value()(0, d)) <= 1e-6);
}

TEST_CASE("ASP with uniform attention reproduces hand-computed moments") {
  Rng rng(96);
  nn::AttentiveStatsPooling asp(1, 4, &rng);
  // zero the scoring path so e_t is constant -> alpha uniform
  for (auto &[name, var] : asp.NamedParameters()) var.MutableValue().SetZero();
  Tensor h({1, 3, 1});
  h(0, 0, 0) = 1.0;
  h(0, 1, 0) = 2.0;
  h(0, 2, 0) = 3.0;
  Variable pooled = asp.Forward(Variable(h));
  CHECK(pooled.Value()(0, 0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(pooled.Value()(0, 1) ==
        doctest::Approx(std::sqrt(14.0 / 3.0 - 4.0)).epsilon(1e-6));
}

TEST_CASE("ASP attention weights sum to one") {
  Rng rng(97);
  nn::AttentiveStatsPooling asp(5, 3, &rng);
  Variable h(test::RandomTensor({3, 7, 5}, &rng, -2.0, 2.0));
  Variable alpha = asp.AttentionWeights(h);
  for (int64 b = 0; b < 3; ++b) {
    real s = 0.0;
    for (int64 t = 0; t < 7; ++t) s += alpha.Value()(b, t);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("score head: zero map, row swap antisymmetry, matvec oracle") {
  Rng rng(98);
  nn::Linear head(6, 2, &rng);
  Variable emb(test::RandomTensor({3, 6}, &rng));

  head.weight.MutableValue().SetZero();
  head.bias.MutableValue().SetZero();
  Tensor z = ScoresFromLogits(head.Forward(emb).Value());
  for (int64 i = 0; i < 3; ++i) CHECK(z[i] == 0.0);

  Rng rng2(99);
  nn::Linear head2(6, 2, &rng2);
  Tensor logits = head2.Forward(emb).Value();
  Tensor s1 = ScoresFromLogits(logits);
  // swap the two rows of the head
  for (int64 j = 0; j < 6; ++j)
    std::swap(head2.weight.MutableValue()(0, j),
              head2.weight.MutableValue()(1, j));
  std::swap(head2.bias.MutableValue()[0], head2.bias.MutableValue()[1]);
  Tensor s2 = ScoresFromLogits(head2.Forward(emb).Value());
  for (int64 i = 0; i < 3; ++i)
    CHECK(s2[i] == doctest::Approx(-s1[i]).epsilon(1e-12));

  // direct matvec oracle
  for (int64 i = 0; i < 3; ++i) {
    real l0 = head2.bias.Value()[0], l1 = head2.bias.Value()[1];
    for (int64 j = 0; j < 6; ++j) {
      l0 += head2.weight.Value()(0, j) * emb.Value()(i, j);
      l1 += head2.weight.Value()(1, j) * emb.Value()(i, j);
    }
    CHECK(s2[i] == doctest::Approx(l1 - l0).epsilon(1e-9));
  }
}

TEST_CASE("conformer classifier end to end on a mini config") {
  Rng rng(100);
  ConformerConfig cfg = MiniConformer();
  ConformerClassifier model(cfg, &rng);
  model.SetTraining(false);
  Variable feats(test::RandomTensor({2, 19, 12}, &rng, -3.0, 5.0));
  Variable logits = model.ForwardLogits(feats);
  CHECK(logits.Value().shape() == std::vector<int64>{2, 2});
  CHECK(logits.Value().AllFinite());
  // subsampled length T' = ceil(T/4) is what reaches the blocks
  std::vector<Variable> hs =
      model.encoder().ForwardBlocks(nn::MeanVarNormalize(feats));
  CHECK(hs.size() == 2);
  CHECK(hs[0].Value().shape() == std::vector<int64>{2, 5, 8});
}

TEST_CASE("LCNN channel ladder and final map match the published table") {
  Rng rng(101);
  LcnnConfig cfg;  // width 64, n_mels 80
  Lcnn model(cfg, &rng);
  model.SetTraining(false);
  Variable feats(test::RandomTensor({1, 128, 80}, &rng, -2.0, 4.0));
  Variable map = model.ForwardConvStack(feats);
  // D/16 x L/16 x 32 with D = 80, L = 128
  CHECK(map.Value().shape() == std::vector<int64>{1, 32, 5, 8});
  Variable logits = model.ForwardLogits(feats);
  CHECK(logits.Value().shape() == std::vector<int64>{1, 2});
  CHECK(logits.Value().AllFinite());
}

TEST_CASE("LCNN is deterministic in eval mode") {
  Rng rng(102);
  LcnnConfig cfg;
  cfg.width = 16;
  cfg.n_mels = 16;
  cfg.lstm_hidden = 8;
  cfg.embedding_dim = 8;
  cfg.asp_bottleneck = 4;
  Lcnn model(cfg, &rng);
  model.SetTraining(false);
  Variable feats(test::RandomTensor({1, 24, 16}, &rng));
  Tensor s1 = ScoresFromLogits(model.ForwardLogits(feats).Value());
  Tensor s2 = ScoresFromLogits(model.ForwardLogits(feats).Value());
  CHECK(s1[0] == s2[0]);
}

TEST_CASE("LCNN stem gradient check") {
  Rng rng(103);
  LcnnConfig cfg;
  cfg.width = 8;
  cfg.n_mels = 16;
  cfg.lstm_hidden = 4;
  cfg.embedding_dim = 4;
  cfg.asp_bottleneck = 3;
  Lcnn model(cfg, &rng);
  model.SetTraining(true);
  Variable feats(test::RandomTensor({1, 16, 16}, &rng), true);
  std::vector<Variable> params = model.Parameters();
  params.push_back(feats);
  auto res = test::GradCheck(
      [&] { return nn::SumAll(nn::Square(model.ForwardLogits(feats))); },
      params, 1e-5, 1e-3, 4);
  CHECK_MESSAGE(res.ok(0.95), "worst rel err = ", res.worst);
}

TEST_CASE("ResNet stage shapes follow the published table") {
  Rng rng(104);
  ResnetConfig cfg;  // channels 16/32/64/128, n_mels 80
  ResNet18 model(cfg, &rng);
  model.SetTraining(false);
  Variable feats(test::RandomTensor({1, 64, 80}, &rng, -2.0, 4.0));
  std::vector<Variable> stages = model.ForwardStages(feats);
  REQUIRE(stages.size() == 4);
  CHECK(stages[0].Value().shape() == std::vector<int64>{1, 16, 80, 64});
  CHECK(stages[1].Value().shape() == std::vector<int64>{1, 32, 40, 32});
  CHECK(stages[2].Value().shape() == std::vector<int64>{1, 64, 20, 16});
  CHECK(stages[3].Value().shape() == std::vector<int64>{1, 128, 10, 8});
  Variable logits = model.ForwardLogits(feats);
  CHECK(logits.Value().shape() == std::vector<int64>{1, 2});
  CHECK(logits.Value().AllFinite());
}

TEST_CASE("SE block is shape-preserving multiplicative gating") {
  Rng rng(105);
  SeBlock se(8, 2, &rng);
  Variable x(test::RandomTensor({2, 8, 5, 6}, &rng));
  Variable y = se.Forward(x);
  CHECK(y.Value().shape() == x.Value().shape());
  // gate in (0,1): |y| <= |x| element-wise
  for (int64 i = 0; i < x.Value().NumElements(); ++i)
    CHECK(std::abs(y.Value()[i]) <= std::abs(x.Value()[i]) + 1e-12);
}

TEST_CASE("residual unit with zeroed convolutions is the shortcut path") {
  Rng rng(106);
  ResidualUnit unit(4, 4, 1, 2, &rng);
  unit.SetTraining(false);
  for (auto &[name, var] : unit.NamedParameters())
    if (name.rfind("conv", 0) == 0) var.MutableValue().SetZero();
  Variable x(test::RandomTensor({1, 4, 6, 6}, &rng, 0.1, 1.0));  // positive
  Variable y = unit.Forward(x);
  CHECK(test::MaxAbsDiff(y.Value(), x.Value()) < 1e-9);
}

TEST_CASE("ResNet unit gradient check") {
  Rng rng(107);
  ResidualUnit unit(3, 4, 2, 2, &rng);
  unit.SetTraining(true);
  Variable x(test::RandomTensor({2, 3, 8, 8}, &rng), true);
  std::vector<Variable> params = unit.Parameters();
  params.push_back(x);
  auto res = test::GradCheck(
      [&] { return nn::SumAll(nn::Square(unit.Forward(x))); }, params, 1e-5,
      1e-3, 6);
  CHECK_MESSAGE(res.ok(0.95), "worst rel err = ", res.worst);
}

TEST_CASE("weight manifest round trip is bit-exact") {
  Rng rng(108);
  ConformerConfig cfg = MiniConformer();
  ConformerClassifier model(cfg, &rng);
  model.SetTraining(false);
  std::string dir = "/tmp/cmkit-manifest-test";
  std::filesystem::remove_all(dir);
  ExportModule(model, dir);

  Variable feats(test::RandomTensor({1, 18, 12}, &rng));
  Tensor before = model.ForwardLogits(feats).Value();

  // perturb everything, reload, outputs must return bit-identically
  for (auto &[name, var] : model.NamedParameters())
    for (int64 i = 0; i < var.Value().NumElements(); ++i)
      var.MutableValue()[i] += 0.37;
  WeightManifest manifest = WeightManifest::Open(dir);
  LoadReport report = LoadPretrained(manifest, &model, {}, "", false);
  CHECK(report.missing.empty());
  Tensor after = model.ForwardLogits(feats).Value();
  CHECK(test::MaxAbsDiff(before, after) == 0.0);

  // export again: payload must be byte-identical
  std::string dir2 = "/tmp/cmkit-manifest-test-2";
  std::filesystem::remove_all(dir2);
  ExportModule(model, dir2);
  WeightManifest m2 = WeightManifest::Open(dir2);
  for (const auto &name : manifest.Names()) {
    const Tensor &a = manifest.Get(name);
    const Tensor &b = m2.Get(name);
    REQUIRE(a.shape() == b.shape());
    CHECK(test::MaxAbsDiff(a, b) == 0.0);
  }
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("missing encoder arrays abort unless allow-partial") {
  Rng rng(109);
  ConformerConfig cfg = MiniConformer();
  ConformerClassifier model(cfg, &rng);
  std::string dir = "/tmp/cmkit-manifest-missing";
  std::filesystem::remove_all(dir);
  // export only block0 of the encoder: block1 is then missing
  std::vector<std::pair<std::string, nn::Variable>> subset;
  for (auto &entry : model.NamedArrays())
    if (entry.first.rfind("encoder.block0.", 0) == 0) subset.push_back(entry);
  WriteManifestArrays(subset, dir);
  WeightManifest manifest = WeightManifest::Open(dir);
  CHECK_THROWS_AS(
      (void)LoadPretrained(manifest, &model, {}, "encoder.", false),
      InvalidInputError);
  LoadReport report = LoadPretrained(manifest, &model, {}, "encoder.", true);
  CHECK(!report.loaded.empty());
  CHECK(!report.missing.empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("a shape-corrupted manifest is rejected naming the parameter") {
  Rng rng(110);
  ConformerConfig cfg = MiniConformer();
  ConformerClassifier model(cfg, &rng);
  std::string dir = "/tmp/cmkit-manifest-corrupt";
  std::filesystem::remove_all(dir);
  ExportModule(model, dir);
  // transpose one array's declared shape in the index
  {
    std::ifstream in(dir + "/index.txt");
    std::string all, line;
    while (std::getline(in, line)) {
      if (line.rfind("fc.weight\t", 0) == 0) {
        size_t t2 = line.rfind('\t');
        std::string shape = line.substr(t2 + 1);
        size_t comma = shape.find(',');
        std::string swapped =
            shape.substr(comma + 1) + "," + shape.substr(0, comma);
        line = line.substr(0, t2 + 1) + swapped;
      }
      all += line + "\n";
    }
    in.close();
    std::ofstream out(dir + "/index.txt", std::ios::trunc);
    out << all;
  }
  WeightManifest manifest = WeightManifest::Open(dir);
  bool threw = false;
  try {
    (void)LoadPretrained(manifest, &model, {}, "", false);
  } catch (const ShapeError &e) {
    threw = true;
    CHECK(std::string(e.what()).find("fc.weight") != std::string::npos);
  }
  CHECK(threw);
  std::filesystem::remove_all(dir);
}

TEST_CASE("name mapping renames external arrays onto internal parameters") {
  Rng rng(111);
  nn::Linear a(3, 2, &rng), b(3, 2, &rng);
  std::string dir = "/tmp/cmkit-manifest-map";
  std::filesystem::remove_all(dir);
  WriteManifestArrays({{"ext.w", a.weight}, {"ext.b", a.bias}}, dir);
  WeightManifest manifest = WeightManifest::Open(dir);
  std::map<std::string, std::string> mapping = {{"ext.w", "weight"},
                                                {"ext.b", "bias"}};
  LoadReport report = LoadPretrained(manifest, &b, mapping, "", false);
  CHECK(report.loaded.size() == 2);
  CHECK(test::MaxAbsDiff(a.weight.Value(), b.weight.Value()) == 0.0);
  std::filesystem::remove_all(dir);
}
