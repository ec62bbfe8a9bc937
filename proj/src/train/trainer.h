// train/trainer.h

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

#ifndef CMKIT_TRAIN_TRAINER_H_
#define CMKIT_TRAIN_TRAINER_H_

#include <memory>
#include <string>
#include <vector>

#include "backend/classifier.h"
#include "enhance/mask-unet.h"
#include "nnet/optimizer.h"
#include "train/data.h"

namespace cmkit {

// Front-end plus backend assembled per the configuration; the unit that
// checkpoints serialize.
struct ModelStack {
  std::unique_ptr<MaskUnet> frontend;  // null when the config has none
  std::unique_ptr<SpoofClassifier> backend;

  static ModelStack Build(const RunConfig &cfg, bool with_frontend, Rng *rng);
  void SetTraining(bool training);
};

// checkpoint directory layout:
//   config.json   resolved RunConfig
//   backend/      weight manifest
//   frontend/     weight manifest (when the stack has one)
void SaveCheckpoint(const ModelStack &stack, const RunConfig &cfg,
                    const std::string &dir);
// Rebuilds the stack from a checkpoint directory.
struct LoadedCheckpoint {
  RunConfig config;
  ModelStack stack;
};
LoadedCheckpoint LoadCheckpoint(const std::string &dir);

struct StepResult {
  real ce = 0.0;
  real mse = 0.0;
  real total = 0.0;
};

struct EpochRecord {
  int32 epoch = 0;
  std::string split;  // "train" | "dev"
  real ce = 0.0;
  real mse = 0.0;
  real total = 0.0;
  real lr = 0.0;
};

// Joint/backend-only training per the configured strategy.  Deterministic
// for a fixed config: all randomness derives from cfg.seed, keyed by epoch
// and step, so a resumed run continues bit-identically.
class Trainer {
 public:
  Trainer(const RunConfig &cfg, std::vector<ManifestEntry> train_entries,
          std::vector<ManifestEntry> dev_entries,
          const NoiseInventory *inventory);

  // Full loop; writes train.log, state.json, checkpoint-best/ and
  // checkpoint-last/ under out_dir.  With resume = true continues from an
  // existing state.json.
  std::vector<EpochRecord> Train(const std::string &out_dir,
                                 bool resume = false);

  // One optimization step of the given epoch (0-based step within the
  // epoch's shuffled order); exposed for the training-contract tests.
  StepResult RunStep(int32 epoch, int64 step_index);

  // Dev-split evaluation with per-utterance deterministic corruption.
  StepResult EvalDev(int32 epoch);

  int64 StepsPerEpoch() const;
  MaskUnet *frontend() { return stack_.frontend.get(); }
  SpoofClassifier *backend() { return stack_.backend.get(); }
  real CurrentLr() const { return optimizer_->lr(); }

 private:
  StepResult ComputeBatch(const std::vector<int64> &indices, bool train_mode,
                          Rng *rng, bool deterministic_aug);
  std::vector<int64> EpochOrder(int32 epoch) const;
  void WriteState(const std::string &out_dir, int32 epoch, real best_dev,
                  const std::vector<EpochRecord> &history) const;

  RunConfig cfg_;
  Rng root_;
  UtteranceDataset train_set_;
  UtteranceDataset dev_set_;
  std::unique_ptr<Augmentor> augmentor_;
  FeatureExtractor features_;
  ModelStack stack_;
  std::unique_ptr<nn::Adam> optimizer_;
  nn::ReduceOnPlateau scheduler_;
  int64 crop_len_ = 0;
};

// Mask-network pretraining on (noisy, clean) feature pairs alone.  Writes
// the frontend manifest under out_dir (epochs = 0 saves the initialization
// untouched).  Returns per-epoch train records.
std::vector<EpochRecord> PretrainFrontend(
    const RunConfig &cfg, std::vector<ManifestEntry> train_entries,
    const NoiseInventory *inventory, const std::string &out_dir);

}  // namespace cmkit

#endif  // CMKIT_TRAIN_TRAINER_H_
