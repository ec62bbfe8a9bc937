// aug/testsets.cc

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

#include "aug/testsets.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

namespace cmkit {

namespace fs = std::filesystem;

namespace {

std::string SnrConditionName(const std::string &prefix, real snr) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%ddb", prefix.c_str(),
                static_cast<int>(snr));
  return buf;
}

std::string Rt60ConditionName(real rt60) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "rt60_%03d",
                static_cast<int>(std::lround(rt60 * 100.0)));
  return buf;
}

void PrepareConditionDir(const fs::path &dir, bool force, bool with_rir) {
  if (fs::exists(dir)) {
    if (!force)
      CMKIT_ERR(IoError) << "output collision: " << dir.string()
                         << " already exists (use --force to overwrite)";
    fs::remove_all(dir);
  }
  fs::create_directories(dir / "wav");
  if (with_rir) fs::create_directories(dir / "rir");
}

}  // namespace

std::vector<std::string> CanonicalConditionNames() {
  std::vector<std::string> names;
  const std::vector<std::string> kinds = {"babble", "music", "noise"};
  const std::vector<int> snrs = {20, 15, 10, 5, 0};
  for (const auto &k : kinds)
    for (int s : snrs)
      names.push_back(SnrConditionName(k, static_cast<real>(s)));
  for (real r : {0.25, 0.5, 0.75, 1.0}) names.push_back(Rt60ConditionName(r));
  return names;
}

void GenerateTestSets(const std::vector<ManifestEntry> &eval_utts,
                      const NoiseInventory &eval_inventory,
                      const TestSetSpec &spec, const std::string &out_dir,
                      uint64 seed, bool force) {
  if (eval_utts.empty())
    CMKIT_ERR(InvalidInputError) << "evaluation manifest is empty";
  eval_inventory.ValidateForSampling();
  Rng root(seed);
  fs::create_directories(out_dir);

  struct NoiseCondition {
    std::string kind;  // babble | music | environmental
    std::string name;
    real snr;
  };
  std::vector<NoiseCondition> noise_conditions;
  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"babble", "babble"}, {"music", "music"}, {"environmental", "noise"}};
  for (const auto &[kind, prefix] : kinds)
    for (real snr : spec.snrs_db)
      noise_conditions.push_back({kind, SnrConditionName(prefix, snr), snr});

  AugmentationPolicy base_policy;
  base_policy.p_augment = 1.0;
  base_policy.babble_k_min = spec.babble_k_min;
  base_policy.babble_k_max = spec.babble_k_max;

  for (const auto &cond : noise_conditions) {
    fs::path dir = fs::path(out_dir) / cond.name;
    PrepareConditionDir(dir, force, false);
    AugmentationPolicy policy = base_policy;
    policy.mode = AugmentMode::kNoiseOnly;
    policy.snr_min_db = cond.snr;
    policy.snr_max_db = cond.snr;
    if (cond.kind == "babble")
      policy.noise_type_probs = {1.0, 0.0, 0.0};
    else if (cond.kind == "music")
      policy.noise_type_probs = {0.0, 1.0, 0.0};
    else
      policy.noise_type_probs = {0.0, 0.0, 1.0};
    Augmentor augmentor(policy, &eval_inventory);
    std::vector<ManifestEntry> entries;
    for (size_t i = 0; i < eval_utts.size(); ++i) {
      const ManifestEntry &utt = eval_utts[i];
      Waveform clean = ReadWav(utt.path);
      Rng rng = root.Fork(cond.name + "/" + utt.utt_id);
      auto [wave, rec] = augmentor.Apply(clean, utt.utt_id, &rng);
      // The per-condition SNR draw is degenerate (min == max) so every
      // file realizes the condition's nominal SNR exactly.
      std::string rel = "wav/" + utt.utt_id + ".wav";
      WriteWav((dir / rel).string(), wave);
      ManifestEntry out = utt;
      out.rel_path = rel;
      out.path = (dir / rel).string();
      out.corruption_json = rec.ToJson();
      entries.push_back(std::move(out));
    }
    WriteManifest((dir / "manifest.tsv").string(), entries);
  }

  for (real rt60 : spec.rt60s_s) {
    std::string name = Rt60ConditionName(rt60);
    fs::path dir = fs::path(out_dir) / name;
    PrepareConditionDir(dir, force, true);
    std::vector<ManifestEntry> entries;
    for (const ManifestEntry &utt : eval_utts) {
      Waveform clean = ReadWav(utt.path);
      Rng rng = root.Fork(name + "/" + utt.utt_id);
      RoomSpec room = DrawRoom(spec.room_dims_min, spec.room_dims_max, rt60,
                               rt60, 0, &rng);
      Waveform rir = SimulateRir(room, clean.sample_rate);
      ReverbResult res = AddReverb(clean, rir);

      CorruptionRecord rec;
      rec.utt_id = utt.utt_id;
      rec.kind = "reverb";
      rec.seed = rng.seed();
      rec.room = room;
      rec.rt60_s = rt60;
      rec.renorm = res.renorm;

      std::string rel = "wav/" + utt.utt_id + ".wav";
      WriteWav((dir / rel).string(), res.wet);
      // store the impulse response itself, peak-normalized for 16-bit range
      Waveform rir_norm = rir;
      real peak = rir_norm.PeakAbs();
      if (peak > 0.0)
        for (real &s : rir_norm.samples) s *= kClipPeak / peak;
      WriteWav((dir / "rir" / (utt.utt_id + ".wav")).string(), rir_norm);

      ManifestEntry out = utt;
      out.rel_path = rel;
      out.path = (dir / rel).string();
      out.corruption_json = rec.ToJson();
      entries.push_back(std::move(out));
    }
    WriteManifest((dir / "manifest.tsv").string(), entries);
  }
}

}  // namespace cmkit
