// aug/policy.cc

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

#include "aug/policy.h"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace cmkit {

using nlohmann::json;

std::string NoiseCategoryName(NoiseCategory c) {
  switch (c) {
    case NoiseCategory::kSpeech: return "speech";
    case NoiseCategory::kMusic: return "music";
    case NoiseCategory::kEnvironmental: return "environmental";
  }
  return "?";
}

NoiseCategory NoiseCategoryFromName(const std::string &name) {
  if (name == "speech") return NoiseCategory::kSpeech;
  if (name == "music") return NoiseCategory::kMusic;
  if (name == "environmental") return NoiseCategory::kEnvironmental;
  CMKIT_ERR(ParseError) << "unknown noise category: " << name;
}

std::string AugmentModeName(AugmentMode m) {
  switch (m) {
    case AugmentMode::kNoiseOnly: return "noise";
    case AugmentMode::kReverbOnly: return "reverb";
    case AugmentMode::kMixed: return "mixed";
  }
  return "?";
}

AugmentMode AugmentModeFromName(const std::string &name) {
  if (name == "noise") return AugmentMode::kNoiseOnly;
  if (name == "reverb") return AugmentMode::kReverbOnly;
  if (name == "mixed") return AugmentMode::kMixed;
  CMKIT_ERR(ParseError) << "unknown augmentation mode: " << name;
}

NoiseInventory NoiseInventory::Load(const std::string &manifest_path,
                                    const std::string &partition) {
  if (partition != "train" && partition != "eval")
    CMKIT_ERR(InvalidInputError) << "partition must be train or eval, got "
                                 << partition;
  std::ifstream in(manifest_path);
  if (!in) CMKIT_ERR(IoError) << "cannot open noise manifest: " << manifest_path;
  std::filesystem::path base =
      std::filesystem::path(manifest_path).parent_path();
  NoiseInventory inv;
  std::string line;
  int32 line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    size_t pos = 0;
    while (true) {
      size_t tab = line.find('\t', pos);
      cols.push_back(line.substr(pos, tab == std::string::npos
                                          ? std::string::npos
                                          : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (cols.size() != 4)
      CMKIT_ERR(ParseError) << manifest_path << ":" << line_no
                            << ": expected 4 tab-separated columns, got "
                            << cols.size();
    if (cols[3] != "train" && cols[3] != "eval")
      CMKIT_ERR(ParseError) << manifest_path << ":" << line_no
                            << ": unknown partition '" << cols[3] << "'";
    if (cols[3] != partition) continue;
    Clip clip;
    clip.id = cols[0];
    clip.path = (base / cols[1]).string();
    clip.category = NoiseCategoryFromName(cols[2]);
    if (inv.by_id_.count(clip.id))
      CMKIT_ERR(ParseError) << manifest_path << ":" << line_no
                            << ": duplicate clip id '" << clip.id << "'";
    inv.by_id_[clip.id] = clip;
    inv.clips_[static_cast<size_t>(clip.category)].push_back(clip);
  }
  return inv;
}

const std::vector<NoiseInventory::Clip> &NoiseInventory::clips(
    NoiseCategory c) const {
  return clips_[static_cast<size_t>(c)];
}

const Waveform &NoiseInventory::ClipWave(const Clip &clip) const {
  auto it = cache_.find(clip.id);
  if (it == cache_.end())
    it = cache_.emplace(clip.id, ReadWav(clip.path)).first;
  return it->second;
}

const NoiseInventory::Clip &NoiseInventory::FindClip(
    const std::string &id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end())
    CMKIT_ERR(InvalidInputError) << "unknown noise clip id: " << id;
  return it->second;
}

bool NoiseInventory::empty() const { return by_id_.empty(); }

void NoiseInventory::ValidateForSampling() const {
  for (int32 c = 0; c < 3; ++c)
    if (clips_[static_cast<size_t>(c)].empty())
      CMKIT_ERR(ConfigError)
          << "noise inventory category '"
          << NoiseCategoryName(static_cast<NoiseCategory>(c))
          << "' is empty";
}

void CheckInventoriesDisjoint(const NoiseInventory &train,
                              const NoiseInventory &eval) {
  for (int32 c = 0; c < 3; ++c) {
    for (const auto &clip :
         train.clips(static_cast<NoiseCategory>(c))) {
      for (const auto &other :
           eval.clips(static_cast<NoiseCategory>(c))) {
        if (clip.id == other.id)
          CMKIT_ERR(ConfigError)
              << "noise clip '" << clip.id
              << "' appears in both train and eval inventories";
      }
    }
  }
}

void AugmentationPolicy::Validate() const {
  if (p_augment < 0.0 || p_augment > 1.0)
    CMKIT_ERR(ConfigError) << "p_augment must lie in [0,1], got " << p_augment;
  real psum = noise_type_probs[0] + noise_type_probs[1] + noise_type_probs[2];
  if (std::abs(psum - 1.0) > 1e-9)
    CMKIT_ERR(ConfigError) << "noise_type_probs must sum to 1, got " << psum;
  if (snr_min_db > snr_max_db)
    CMKIT_ERR(ConfigError) << "snr range is degenerate";
  if (babble_k_min < 3 || babble_k_max > 8 || babble_k_min > babble_k_max)
    CMKIT_ERR(ConfigError) << "babble k range must sit inside [3,8]";
  if (rt60_min_s <= 0.0 || rt60_min_s > rt60_max_s)
    CMKIT_ERR(ConfigError) << "rt60 range is degenerate";
  for (int32 i = 0; i < 3; ++i)
    if (room_dims_min[static_cast<size_t>(i)] >
        room_dims_max[static_cast<size_t>(i)])
      CMKIT_ERR(ConfigError) << "room dimension range is degenerate";
}

namespace {

json SegmentsToJson(const std::vector<SegmentSpec> &segs) {
  json arr = json::array();
  for (const auto &s : segs)
    arr.push_back({{"offset", s.offset}, {"looped", s.looped}});
  return arr;
}

std::vector<SegmentSpec> SegmentsFromJson(const json &arr) {
  std::vector<SegmentSpec> out;
  for (const auto &e : arr) {
    SegmentSpec s;
    s.offset = e.at("offset").get<int64>();
    s.looped = e.at("looped").get<bool>();
    out.push_back(s);
  }
  return out;
}

}  // namespace

std::string CorruptionRecord::ToJson() const {
  json j;
  j["utt_id"] = utt_id;
  j["kind"] = kind;
  j["seed"] = seed;
  if (kind == "babble" || kind == "music" || kind == "environmental") {
    j["clip_ids"] = clip_ids;
    j["segments"] = SegmentsToJson(clip_segments);
    j["snr_db"] = snr_db;
    j["gain"] = gain;
  } else if (kind == "reverb") {
    j["room"] = {{"dims", room.dims},
                 {"source", room.source},
                 {"mic", room.mic},
                 {"rt60", room.rt60_target},
                 {"max_image_order", room.max_image_order}};
    j["rt60_s"] = rt60_s;
  }
  j["renorm"] = renorm;
  return j.dump();
}

CorruptionRecord CorruptionRecord::FromJson(const std::string &text) {
  json j = json::parse(text);
  CorruptionRecord rec;
  rec.utt_id = j.at("utt_id").get<std::string>();
  rec.kind = j.at("kind").get<std::string>();
  rec.seed = j.value("seed", 0ull);
  rec.renorm = j.value("renorm", 1.0);
  if (rec.kind == "babble" || rec.kind == "music" ||
      rec.kind == "environmental") {
    rec.clip_ids = j.at("clip_ids").get<std::vector<std::string>>();
    rec.clip_segments = SegmentsFromJson(j.at("segments"));
    rec.snr_db = j.at("snr_db").get<real>();
    rec.gain = j.at("gain").get<real>();
  } else if (rec.kind == "reverb") {
    const json &r = j.at("room");
    rec.room.dims = r.at("dims").get<std::array<real, 3>>();
    rec.room.source = r.at("source").get<std::array<real, 3>>();
    rec.room.mic = r.at("mic").get<std::array<real, 3>>();
    rec.room.rt60_target = r.at("rt60").get<real>();
    rec.room.max_image_order = r.at("max_image_order").get<int32>();
    rec.rt60_s = j.at("rt60_s").get<real>();
  } else if (rec.kind != "none") {
    CMKIT_ERR(ParseError) << "unknown corruption kind: " << rec.kind;
  }
  return rec;
}

Augmentor::Augmentor(AugmentationPolicy policy,
                     const NoiseInventory *inventory)
    : policy_(std::move(policy)), inventory_(inventory) {
  policy_.Validate();
}

std::pair<Waveform, CorruptionRecord> Augmentor::Apply(
    const Waveform &clean, const std::string &utt_id, Rng *rng) const {
  CorruptionRecord rec;
  rec.utt_id = utt_id;
  rec.seed = rng->seed();
  if (rng->Uniform(0.0, 1.0) >= policy_.p_augment) {
    return {clean, rec};
  }
  bool reverb;
  switch (policy_.mode) {
    case AugmentMode::kNoiseOnly: reverb = false; break;
    case AugmentMode::kReverbOnly: reverb = true; break;
    case AugmentMode::kMixed: reverb = rng->Bernoulli(0.5); break;
    default: reverb = false;
  }
  return reverb ? ApplyReverb(clean, utt_id, rng)
                : ApplyNoise(clean, utt_id, rng);
}

std::pair<Waveform, CorruptionRecord> Augmentor::ApplyNoise(
    const Waveform &clean, const std::string &utt_id, Rng *rng) const {
  if (inventory_ == nullptr || inventory_->empty())
    CMKIT_ERR(ConfigError) << "noise corruption drawn but no inventory loaded";
  inventory_->ValidateForSampling();
  CorruptionRecord rec;
  rec.utt_id = utt_id;
  rec.seed = rng->seed();
  real u = rng->Uniform(0.0, 1.0);
  NoiseCategory cat;
  if (u < policy_.noise_type_probs[0])
    cat = NoiseCategory::kSpeech;
  else if (u < policy_.noise_type_probs[0] + policy_.noise_type_probs[1])
    cat = NoiseCategory::kMusic;
  else
    cat = NoiseCategory::kEnvironmental;
  real snr = rng->Uniform(policy_.snr_min_db, policy_.snr_max_db);
  rec.snr_db = snr;

  if (cat == NoiseCategory::kSpeech) {
    rec.kind = "babble";
    const auto &clips = inventory_->clips(NoiseCategory::kSpeech);
    int32 k = static_cast<int32>(
        rng->UniformInt(policy_.babble_k_min, policy_.babble_k_max));
    std::vector<Waveform> waves;
    waves.reserve(clips.size());
    for (const auto &c : clips) waves.push_back(inventory_->ClipWave(c));
    BabbleResult babble = MakeBabble(waves, k, clean.NumSamples(),
                                     clean.sample_rate, rng);
    for (int32 idx : babble.clip_indices)
      rec.clip_ids.push_back(clips[static_cast<size_t>(idx)].id);
    rec.clip_segments = babble.segments;
    NoiseMixResult mix =
        AddNoiseWithSegment(clean, babble.babble, snr, SegmentSpec{0, false});
    rec.gain = mix.gain;
    rec.renorm = mix.renorm;
    return {std::move(mix.mixed), std::move(rec)};
  }

  rec.kind = (cat == NoiseCategory::kMusic) ? "music" : "environmental";
  const auto &clips = inventory_->clips(cat);
  int64 pick = rng->UniformInt(0, static_cast<int64>(clips.size()) - 1);
  const auto &clip = clips[static_cast<size_t>(pick)];
  const Waveform &noise = inventory_->ClipWave(clip);
  NoiseMixResult mix = AddNoise(clean, noise, snr, rng);
  rec.clip_ids.push_back(clip.id);
  rec.clip_segments.push_back(mix.segment);
  rec.gain = mix.gain;
  rec.renorm = mix.renorm;
  return {std::move(mix.mixed), std::move(rec)};
}

std::pair<Waveform, CorruptionRecord> Augmentor::ApplyReverb(
    const Waveform &clean, const std::string &utt_id, Rng *rng) const {
  CorruptionRecord rec;
  rec.utt_id = utt_id;
  rec.seed = rng->seed();
  rec.kind = "reverb";
  rec.room = DrawRoom(policy_.room_dims_min, policy_.room_dims_max,
                      policy_.rt60_min_s, policy_.rt60_max_s,
                      policy_.max_image_order, rng);
  rec.rt60_s = rec.room.rt60_target;
  Waveform rir = SimulateRir(rec.room, clean.sample_rate);
  ReverbResult res = AddReverb(clean, rir);
  rec.renorm = res.renorm;
  return {std::move(res.wet), std::move(rec)};
}

Waveform Augmentor::Replay(const Waveform &clean,
                           const CorruptionRecord &rec) const {
  if (rec.kind == "none") return clean;
  if (rec.kind == "reverb") {
    Waveform rir = SimulateRir(rec.room, clean.sample_rate);
    return AddReverb(clean, rir).wet;
  }
  if (inventory_ == nullptr)
    CMKIT_ERR(ConfigError) << "replaying a noise corruption needs an inventory";
  if (rec.kind == "babble") {
    std::vector<Waveform> waves;
    std::vector<int32> indices;
    for (size_t i = 0; i < rec.clip_ids.size(); ++i) {
      waves.push_back(inventory_->ClipWave(inventory_->FindClip(
          rec.clip_ids[i])));
      indices.push_back(static_cast<int32>(i));
    }
    Waveform babble = MakeBabbleWith(waves, indices, rec.clip_segments,
                                     clean.NumSamples(), clean.sample_rate);
    return AddNoiseWithSegment(clean, babble, rec.snr_db,
                               SegmentSpec{0, false})
        .mixed;
  }
  // single-clip noise
  CMKIT_ASSERT(rec.clip_ids.size() == 1 && rec.clip_segments.size() == 1);
  const Waveform &noise =
      inventory_->ClipWave(inventory_->FindClip(rec.clip_ids[0]));
  return AddNoiseWithSegment(clean, noise, rec.snr_db, rec.clip_segments[0])
      .mixed;
}

}  // namespace cmkit
