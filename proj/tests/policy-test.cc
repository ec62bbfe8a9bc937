// tests/policy-test.cc

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
#include <fstream>
#include <map>

#include "aug/policy.h"
#include "test-util.h"

using namespace cmkit;
namespace fs = std::filesystem;

namespace {

struct TempInventory {
  fs::path dir;
  NoiseInventory train;
  NoiseInventory eval;

  TempInventory() {
    dir = fs::temp_directory_path() / "cmkit-policy-test";
    fs::remove_all(dir);
    fs::create_directories(dir / "noise");
    Rng rng(404);
    std::ofstream manifest(dir / "noise_manifest.tsv");
    const char *cats[3] = {"speech", "music", "environmental"};
    for (int32 c = 0; c < 3; ++c) {
      for (int32 i = 0; i < 14; ++i) {
        std::string id = std::string(cats[c]) + "_" + std::to_string(i);
        std::string rel = "noise/" + id + ".wav";
        std::vector<real> s(static_cast<size_t>(4000 + 700 * i));
        for (auto &v : s) v = rng.Uniform(-0.3, 0.3);
        WriteWav((dir / rel).string(), Waveform(std::move(s), 16000));
        manifest << id << '\t' << rel << '\t' << cats[c] << '\t'
                 << (i < 10 ? "train" : "eval") << '\n';
      }
    }
    manifest.close();
    train = NoiseInventory::Load((dir / "noise_manifest.tsv").string(),
                                 "train");
    eval = NoiseInventory::Load((dir / "noise_manifest.tsv").string(),
                                "eval");
  }
  ~TempInventory() { fs::remove_all(dir); }
};

Waveform RandomWave(int64 n, Rng *rng) {
  std::vector<real> s(static_cast<size_t>(n));
  for (auto &v : s) v = rng->Uniform(-0.4, 0.4);
  return Waveform(std::move(s), 16000);
}

}  // namespace

TEST_CASE("train and eval inventories are disjoint, categories populated") {
  TempInventory inv;
  inv.train.ValidateForSampling();
  inv.eval.ValidateForSampling();
  CheckInventoriesDisjoint(inv.train, inv.eval);
  CHECK(inv.train.clips(NoiseCategory::kSpeech).size() == 10);
  CHECK(inv.eval.clips(NoiseCategory::kMusic).size() == 4);
}

TEST_CASE("p_augment = 0 leaves every input untouched") {
  TempInventory inv;
  AugmentationPolicy policy;
  policy.p_augment = 0.0;
  Augmentor aug(policy, &inv.train);
  Rng rng(70);
  for (int32 i = 0; i < 20; ++i) {
    Waveform clean = RandomWave(3000, &rng);
    auto [out, rec] = aug.Apply(clean, "utt", &rng);
    CHECK(out.samples == clean.samples);
    CHECK(rec.kind == "none");
  }
}

TEST_CASE("noise types are drawn uniformly at p_augment = 1") {
  TempInventory inv;
  AugmentationPolicy policy;
  policy.p_augment = 1.0;
  policy.mode = AugmentMode::kNoiseOnly;
  Augmentor aug(policy, &inv.train);
  Rng rng(71);
  Waveform clean = RandomWave(2000, &rng);
  std::map<std::string, int32> counts;
  const int32 kDraws = 10000;
  for (int32 i = 0; i < kDraws; ++i) {
    Rng draw = rng.Fork("draw", static_cast<uint64>(i));
    auto [out, rec] = aug.Apply(clean, "utt", &draw);
    counts[rec.kind]++;
  }
  CHECK(counts.size() == 3);
  for (const auto &[kind, n] : counts) {
    real freq = static_cast<real>(n) / kDraws;
    CHECK(freq >= 0.30);
    CHECK(freq <= 0.37);
  }
}

TEST_CASE("exactly one corruption per draw and replay is bit-exact") {
  TempInventory inv;
  AugmentationPolicy policy;
  policy.p_augment = 1.0;
  policy.mode = AugmentMode::kMixed;
  policy.rt60_min_s = 0.2;
  policy.rt60_max_s = 0.4;
  policy.max_image_order = 8;  // keep the online reverb draws quick
  Augmentor aug(policy, &inv.train);
  Rng rng(72);
  int32 reverb_seen = 0, noise_seen = 0;
  for (int32 i = 0; i < 12; ++i) {
    Waveform clean = RandomWave(2400, &rng);
    Rng draw = rng.Fork("draw", static_cast<uint64>(i));
    auto [out, rec] = aug.Apply(clean, "utt_" + std::to_string(i), &draw);
    CHECK(rec.kind != "none");
    if (rec.kind == "reverb")
      reverb_seen++;
    else
      noise_seen++;
    // record -> json -> record round trip, then bit-exact replay
    CorruptionRecord parsed = CorruptionRecord::FromJson(rec.ToJson());
    Waveform replayed = aug.Replay(clean, parsed);
    CHECK(replayed.samples == out.samples);
  }
  CHECK(reverb_seen > 0);
  CHECK(noise_seen > 0);
}

TEST_CASE("same seed reproduces the draw bit-exactly") {
  TempInventory inv;
  AugmentationPolicy policy;
  policy.p_augment = 1.0;
  Augmentor aug(policy, &inv.train);
  Rng wave_rng(73);
  Waveform clean = RandomWave(3000, &wave_rng);
  Rng a(99), b(99);
  auto [out_a, rec_a] = aug.Apply(clean, "utt", &a);
  auto [out_b, rec_b] = aug.Apply(clean, "utt", &b);
  CHECK(out_a.samples == out_b.samples);
  CHECK(rec_a.ToJson() == rec_b.ToJson());
}

TEST_CASE("empty inventory category raises a configuration error") {
  TempInventory inv;
  AugmentationPolicy policy;
  policy.p_augment = 1.0;
  Augmentor aug(policy, nullptr);
  Rng rng(74);
  Waveform clean = RandomWave(1000, &rng);
  CHECK_THROWS_AS((void)aug.Apply(clean, "utt", &rng), ConfigError);
}

TEST_CASE("policy validation rejects inconsistent settings") {
  AugmentationPolicy p;
  p.p_augment = 1.5;
  CHECK_THROWS_AS(p.Validate(), ConfigError);
  p.p_augment = 0.5;
  p.noise_type_probs = {0.5, 0.2, 0.2};
  CHECK_THROWS_AS(p.Validate(), ConfigError);
  p.noise_type_probs = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  p.babble_k_min = 1;
  CHECK_THROWS_AS(p.Validate(), ConfigError);
}
