// config/config.h

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

#ifndef CMKIT_CONFIG_CONFIG_H_
#define CMKIT_CONFIG_CONFIG_H_

#include <string>

#include "aug/policy.h"
#include "aug/testsets.h"
#include "backend/conformer.h"
#include "backend/lcnn.h"
#include "backend/resnet.h"
#include "enhance/mask-unet.h"
#include "feat/fbank.h"

namespace cmkit {

struct PathSettings {
  std::string train_manifest;
  std::string dev_manifest;
  std::string eval_manifest;
  std::string noise_manifest;
  std::string out_dir;
};

struct FbankSettings {
  int32 n_mels = 80;
  real log_floor = kDefaultLogFloor;
};

struct TrainSettings {
  std::string backend = "conformer";  // conformer | lcnn | resnet18
  bool use_frontend = false;
  std::string frontend_init;       // checkpoint dir; empty = random init
  bool frontend_frozen = false;
  std::string backend_pretrained;  // weight-manifest dir; empty = none
  std::string pretrained_name_map;  // optional two-column mapping file
  bool allow_partial_pretrained = false;
  real lr = 1e-3;
  int32 epochs = 20;
  int32 batch_size = 16;
  real crop_seconds = 4.0;
  real w_mse = 1.0;
  real scheduler_factor = 0.5;
  int32 scheduler_patience = 3;
  int32 frontend_pretrain_epochs = 5;

  void Validate() const;
};

// The complete configuration tree.  Loading validates against the schema
// and rejects unknown keys; Dump writes the fully resolved tree, and
// load(dump(x)) == x.
struct RunConfig {
  uint64 seed = 17;
  PathSettings paths;
  StftParams stft;
  FbankSettings fbank;
  AugmentationPolicy augment;
  MaskUnetConfig unet;
  ConformerConfig conformer;
  LcnnConfig lcnn;
  ResnetConfig resnet;
  TrainSettings train;
  TestSetSpec testsets;

  static RunConfig Default();
  static RunConfig Load(const std::string &path);
  static RunConfig FromJsonText(const std::string &text,
                                const std::string &origin);
  std::string DumpJson() const;
  void Save(const std::string &path) const;
  void Validate() const;
};

}  // namespace cmkit

#endif  // CMKIT_CONFIG_CONFIG_H_
