// config/config.cc

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

#include "config/config.h"

#include <fstream>
#include <set>

#include <json.hpp>

namespace cmkit {

using nlohmann::json;

namespace {

// Wraps a JSON object, tracks key consumption and rejects leftovers.
class Section {
 public:
  Section(const json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      CMKIT_ERR(ConfigError) << path_ << ": expected an object";
  }

  template <class T>
  void Read(const char *key, T *out) {
    if (!j_.contains(key)) return;
    consumed_.insert(key);
    try {
      *out = j_.at(key).get<T>();
    } catch (const json::exception &e) {
      CMKIT_ERR(ConfigError) << path_ << "." << key << ": " << e.what();
    }
  }

  void ReadRange(const char *key, real *lo, real *hi) {
    if (!j_.contains(key)) return;
    consumed_.insert(key);
    auto arr = j_.at(key);
    if (!arr.is_array() || arr.size() != 2)
      CMKIT_ERR(ConfigError) << path_ << "." << key
                             << ": expected a [lo, hi] pair";
    *lo = arr[0].get<real>();
    *hi = arr[1].get<real>();
  }

  void ReadIntRange(const char *key, int32 *lo, int32 *hi) {
    real a = *lo, b = *hi;
    ReadRange(key, &a, &b);
    *lo = static_cast<int32>(a);
    *hi = static_cast<int32>(b);
  }

  bool Has(const char *key) const { return j_.contains(key); }

  json Child(const char *key) {
    consumed_.insert(key);
    return j_.contains(key) ? j_.at(key) : json::object();
  }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!consumed_.count(it.key()))
        CMKIT_ERR(ConfigError) << path_ << ": unknown key '" << it.key()
                               << "'";
  }

 private:
  const json &j_;
  std::string path_;
  std::set<std::string> consumed_;
};

}  // namespace

void TrainSettings::Validate() const {
  static const std::set<std::string> kBackends = {"conformer", "lcnn",
                                                  "resnet18"};
  if (!kBackends.count(backend))
    CMKIT_ERR(ConfigError) << "train.backend must be one of conformer, lcnn, "
                           << "resnet18; got '" << backend << "'";
  if (frontend_frozen && !use_frontend)
    CMKIT_ERR(ConfigError)
        << "train.frontend_frozen requires train.use_frontend";
  if (lr <= 0.0) CMKIT_ERR(ConfigError) << "train.lr must be positive";
  if (epochs < 0) CMKIT_ERR(ConfigError) << "train.epochs must be >= 0";
  if (batch_size < 1) CMKIT_ERR(ConfigError) << "train.batch_size must be >= 1";
  if (crop_seconds <= 0.0)
    CMKIT_ERR(ConfigError) << "train.crop_seconds must be positive";
  if (w_mse < 0.0) CMKIT_ERR(ConfigError) << "train.w_mse must be >= 0";
  if (scheduler_factor <= 0.0 || scheduler_factor >= 1.0)
    CMKIT_ERR(ConfigError) << "train.scheduler_factor must lie in (0,1)";
  if (scheduler_patience < 0)
    CMKIT_ERR(ConfigError) << "train.scheduler_patience must be >= 0";
  if (frontend_pretrain_epochs < 0)
    CMKIT_ERR(ConfigError) << "train.frontend_pretrain_epochs must be >= 0";
}

RunConfig RunConfig::Default() { return RunConfig(); }

RunConfig RunConfig::FromJsonText(const std::string &text,
                                  const std::string &origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    CMKIT_ERR(ConfigError) << origin << ": " << e.what();
  }
  RunConfig cfg;
  Section root(j, origin);
  root.Read("seed", &cfg.seed);
  {
    Section s(root.Child("paths"), origin + ".paths");
    s.Read("train_manifest", &cfg.paths.train_manifest);
    s.Read("dev_manifest", &cfg.paths.dev_manifest);
    s.Read("eval_manifest", &cfg.paths.eval_manifest);
    s.Read("noise_manifest", &cfg.paths.noise_manifest);
    s.Read("out_dir", &cfg.paths.out_dir);
    s.Finish();
  }
  {
    Section s(root.Child("stft"), origin + ".stft");
    s.Read("window_ms", &cfg.stft.window_ms);
    s.Read("hop_ms", &cfg.stft.hop_ms);
    s.Read("window", &cfg.stft.window_kind);
    s.Finish();
  }
  {
    Section s(root.Child("fbank"), origin + ".fbank");
    s.Read("n_mels", &cfg.fbank.n_mels);
    s.Read("log_floor", &cfg.fbank.log_floor);
    s.Finish();
  }
  {
    Section s(root.Child("augment"), origin + ".augment");
    s.Read("p_augment", &cfg.augment.p_augment);
    std::string mode = AugmentModeName(cfg.augment.mode);
    s.Read("mode", &mode);
    cfg.augment.mode = AugmentModeFromName(mode);
    s.Read("noise_type_probs", &cfg.augment.noise_type_probs);
    s.ReadRange("snr_db", &cfg.augment.snr_min_db, &cfg.augment.snr_max_db);
    s.ReadIntRange("babble_k", &cfg.augment.babble_k_min,
                   &cfg.augment.babble_k_max);
    s.Read("room_dims_min", &cfg.augment.room_dims_min);
    s.Read("room_dims_max", &cfg.augment.room_dims_max);
    s.ReadRange("rt60_s", &cfg.augment.rt60_min_s, &cfg.augment.rt60_max_s);
    s.Read("max_image_order", &cfg.augment.max_image_order);
    s.Finish();
  }
  {
    Section s(root.Child("unet"), origin + ".unet");
    s.Read("encoder_channels", &cfg.unet.encoder_channels);
    s.Finish();
  }
  {
    Section s(root.Child("conformer"), origin + ".conformer");
    s.Read("n_blocks", &cfg.conformer.n_blocks);
    s.Read("model_dim", &cfg.conformer.model_dim);
    s.Read("ffn_dim", &cfg.conformer.ffn_dim);
    s.Read("n_heads", &cfg.conformer.n_heads);
    s.Read("conv_kernel", &cfg.conformer.conv_kernel);
    s.Read("embedding_dim", &cfg.conformer.embedding_dim);
    s.Read("asp_bottleneck", &cfg.conformer.asp_bottleneck);
    s.Finish();
  }
  {
    Section s(root.Child("lcnn"), origin + ".lcnn");
    s.Read("width", &cfg.lcnn.width);
    s.Read("lstm_hidden", &cfg.lcnn.lstm_hidden);
    s.Read("embedding_dim", &cfg.lcnn.embedding_dim);
    s.Read("asp_bottleneck", &cfg.lcnn.asp_bottleneck);
    s.Finish();
  }
  {
    Section s(root.Child("resnet"), origin + ".resnet");
    s.Read("channels", &cfg.resnet.channels);
    s.Read("embedding_dim", &cfg.resnet.embedding_dim);
    s.Read("asp_bottleneck", &cfg.resnet.asp_bottleneck);
    s.Read("se_bottleneck", &cfg.resnet.se_bottleneck);
    s.Finish();
  }
  {
    Section s(root.Child("train"), origin + ".train");
    s.Read("backend", &cfg.train.backend);
    s.Read("use_frontend", &cfg.train.use_frontend);
    s.Read("frontend_init", &cfg.train.frontend_init);
    s.Read("frontend_frozen", &cfg.train.frontend_frozen);
    s.Read("backend_pretrained", &cfg.train.backend_pretrained);
    s.Read("pretrained_name_map", &cfg.train.pretrained_name_map);
    s.Read("allow_partial_pretrained", &cfg.train.allow_partial_pretrained);
    s.Read("lr", &cfg.train.lr);
    s.Read("epochs", &cfg.train.epochs);
    s.Read("batch_size", &cfg.train.batch_size);
    s.Read("crop_seconds", &cfg.train.crop_seconds);
    s.Read("w_mse", &cfg.train.w_mse);
    if (s.Has("scheduler")) {
      Section sch(s.Child("scheduler"), origin + ".train.scheduler");
      sch.Read("factor", &cfg.train.scheduler_factor);
      sch.Read("patience", &cfg.train.scheduler_patience);
      sch.Finish();
    }
    s.Read("frontend_pretrain_epochs", &cfg.train.frontend_pretrain_epochs);
    s.Finish();
  }
  {
    Section s(root.Child("testsets"), origin + ".testsets");
    s.Read("snrs_db", &cfg.testsets.snrs_db);
    s.Read("rt60s_s", &cfg.testsets.rt60s_s);
    s.Read("room_dims_min", &cfg.testsets.room_dims_min);
    s.Read("room_dims_max", &cfg.testsets.room_dims_max);
    s.Read("babble_k_min", &cfg.testsets.babble_k_min);
    s.Read("babble_k_max", &cfg.testsets.babble_k_max);
    s.Finish();
  }
  root.Finish();
  cfg.Validate();
  return cfg;
}

RunConfig RunConfig::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) CMKIT_ERR(IoError) << "cannot open config: " << path;
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return FromJsonText(text, path);
}

std::string RunConfig::DumpJson() const {
  json j;
  j["seed"] = seed;
  j["paths"] = {{"train_manifest", paths.train_manifest},
                {"dev_manifest", paths.dev_manifest},
                {"eval_manifest", paths.eval_manifest},
                {"noise_manifest", paths.noise_manifest},
                {"out_dir", paths.out_dir}};
  j["stft"] = {{"window_ms", stft.window_ms},
               {"hop_ms", stft.hop_ms},
               {"window", stft.window_kind}};
  j["fbank"] = {{"n_mels", fbank.n_mels}, {"log_floor", fbank.log_floor}};
  j["augment"] = {{"p_augment", augment.p_augment},
                  {"mode", AugmentModeName(augment.mode)},
                  {"noise_type_probs", augment.noise_type_probs},
                  {"snr_db", {augment.snr_min_db, augment.snr_max_db}},
                  {"babble_k", {augment.babble_k_min, augment.babble_k_max}},
                  {"room_dims_min", augment.room_dims_min},
                  {"room_dims_max", augment.room_dims_max},
                  {"rt60_s", {augment.rt60_min_s, augment.rt60_max_s}},
                  {"max_image_order", augment.max_image_order}};
  j["unet"] = {{"encoder_channels", unet.encoder_channels}};
  j["conformer"] = {{"n_blocks", conformer.n_blocks},
                    {"model_dim", conformer.model_dim},
                    {"ffn_dim", conformer.ffn_dim},
                    {"n_heads", conformer.n_heads},
                    {"conv_kernel", conformer.conv_kernel},
                    {"embedding_dim", conformer.embedding_dim},
                    {"asp_bottleneck", conformer.asp_bottleneck}};
  j["lcnn"] = {{"width", lcnn.width},
               {"lstm_hidden", lcnn.lstm_hidden},
               {"embedding_dim", lcnn.embedding_dim},
               {"asp_bottleneck", lcnn.asp_bottleneck}};
  j["resnet"] = {{"channels", resnet.channels},
                 {"embedding_dim", resnet.embedding_dim},
                 {"asp_bottleneck", resnet.asp_bottleneck},
                 {"se_bottleneck", resnet.se_bottleneck}};
  j["train"] = {
      {"backend", train.backend},
      {"use_frontend", train.use_frontend},
      {"frontend_init", train.frontend_init},
      {"frontend_frozen", train.frontend_frozen},
      {"backend_pretrained", train.backend_pretrained},
      {"pretrained_name_map", train.pretrained_name_map},
      {"allow_partial_pretrained", train.allow_partial_pretrained},
      {"lr", train.lr},
      {"epochs", train.epochs},
      {"batch_size", train.batch_size},
      {"crop_seconds", train.crop_seconds},
      {"w_mse", train.w_mse},
      {"scheduler",
       {{"factor", train.scheduler_factor},
        {"patience", train.scheduler_patience}}},
      {"frontend_pretrain_epochs", train.frontend_pretrain_epochs}};
  j["testsets"] = {{"snrs_db", testsets.snrs_db},
                   {"rt60s_s", testsets.rt60s_s},
                   {"room_dims_min", testsets.room_dims_min},
                   {"room_dims_max", testsets.room_dims_max},
                   {"babble_k_min", testsets.babble_k_min},
                   {"babble_k_max", testsets.babble_k_max}};
  return j.dump(2) + "\n";
}

void RunConfig::Save(const std::string &path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) CMKIT_ERR(IoError) << "cannot write config: " << path;
  os << DumpJson();
}

void RunConfig::Validate() const {
  if (fbank.n_mels <= 0)
    CMKIT_ERR(ConfigError) << "fbank.n_mels must be positive";
  if (fbank.log_floor <= 0.0)
    CMKIT_ERR(ConfigError) << "fbank.log_floor must be positive";
  augment.Validate();
  unet.Validate();
  // propagate the mel count into the model configs before validating them
  ConformerConfig cc = conformer;
  cc.n_mels = fbank.n_mels;
  cc.Validate();
  LcnnConfig lc = lcnn;
  lc.n_mels = fbank.n_mels;
  lc.Validate();
  ResnetConfig rc = resnet;
  rc.n_mels = fbank.n_mels;
  rc.Validate();
  train.Validate();
}

}  // namespace cmkit
