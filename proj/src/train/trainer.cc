// train/trainer.cc

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

#include "train/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "backend/conformer.h"
#include "backend/lcnn.h"
#include "backend/manifest.h"
#include "backend/resnet.h"
#include "train/loss.h"

namespace cmkit {

namespace fs = std::filesystem;
using nlohmann::json;
using nn::Variable;

namespace {

// Accepts either a manifest directory or a run directory containing one
// under frontend/.
std::string ResolveManifestDir(const std::string &path,
                               const std::string &nested) {
  if (fs::exists(fs::path(path) / "index.txt")) return path;
  fs::path alt = fs::path(path) / nested;
  if (fs::exists(alt / "index.txt")) return alt.string();
  CMKIT_ERR(IoError) << "no weight manifest found at " << path;
}

void AtomicReplaceDir(const std::string &tmp, const std::string &final) {
  fs::remove_all(final);
  fs::rename(tmp, final);
}

}  // namespace

ModelStack ModelStack::Build(const RunConfig &cfg, bool with_frontend,
                             Rng *rng) {
  ModelStack stack;
  if (with_frontend) {
    Rng frontend_rng = rng->Fork("frontend-init");
    stack.frontend = std::make_unique<MaskUnet>(cfg.unet, &frontend_rng);
  }
  Rng backend_rng = rng->Fork("backend-init");
  if (cfg.train.backend == "conformer") {
    ConformerConfig c = cfg.conformer;
    c.n_mels = cfg.fbank.n_mels;
    stack.backend = std::make_unique<ConformerClassifier>(c, &backend_rng);
  } else if (cfg.train.backend == "lcnn") {
    LcnnConfig c = cfg.lcnn;
    c.n_mels = cfg.fbank.n_mels;
    stack.backend = std::make_unique<Lcnn>(c, &backend_rng);
  } else if (cfg.train.backend == "resnet18") {
    ResnetConfig c = cfg.resnet;
    c.n_mels = cfg.fbank.n_mels;
    stack.backend = std::make_unique<ResNet18>(c, &backend_rng);
  } else {
    CMKIT_ERR(ConfigError) << "unknown backend '" << cfg.train.backend << "'";
  }
  return stack;
}

void ModelStack::SetTraining(bool training) {
  if (frontend) frontend->SetTraining(training);
  backend->SetTraining(training);
}

void SaveCheckpoint(const ModelStack &stack, const RunConfig &cfg,
                    const std::string &dir) {
  std::string tmp = dir + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  cfg.Save((fs::path(tmp) / "config.json").string());
  ExportModule(*stack.backend, (fs::path(tmp) / "backend").string());
  if (stack.frontend)
    ExportModule(*stack.frontend, (fs::path(tmp) / "frontend").string());
  AtomicReplaceDir(tmp, dir);
}

LoadedCheckpoint LoadCheckpoint(const std::string &dir) {
  LoadedCheckpoint out;
  out.config = RunConfig::Load((fs::path(dir) / "config.json").string());
  bool with_frontend = fs::exists(fs::path(dir) / "frontend" / "index.txt");
  Rng rng(out.config.seed);
  out.stack = ModelStack::Build(out.config, with_frontend, &rng);
  {
    WeightManifest m =
        WeightManifest::Open((fs::path(dir) / "backend").string());
    LoadPretrained(m, out.stack.backend.get(), {}, "", false);
  }
  if (with_frontend) {
    WeightManifest m =
        WeightManifest::Open((fs::path(dir) / "frontend").string());
    LoadPretrained(m, out.stack.frontend.get(), {}, "", false);
  }
  out.stack.SetTraining(false);
  return out;
}

Trainer::Trainer(const RunConfig &cfg,
                 std::vector<ManifestEntry> train_entries,
                 std::vector<ManifestEntry> dev_entries,
                 const NoiseInventory *inventory)
    : cfg_(cfg),
      root_(cfg.seed),
      train_set_(std::move(train_entries)),
      dev_set_(std::move(dev_entries)),
      features_(FeatureExtractor::FromConfig(cfg)),
      stack_(),
      scheduler_(cfg.train.scheduler_factor, cfg.train.scheduler_patience) {
  cfg_.Validate();
  augmentor_ = std::make_unique<Augmentor>(cfg_.augment, inventory);
  Rng init = root_.Fork("init");
  stack_ = ModelStack::Build(cfg_, cfg_.train.use_frontend, &init);

  if (cfg_.train.use_frontend && !cfg_.train.frontend_init.empty()) {
    WeightManifest m = WeightManifest::Open(
        ResolveManifestDir(cfg_.train.frontend_init, "frontend"));
    LoadPretrained(m, stack_.frontend.get(), {}, "", false);
  }
  if (!cfg_.train.backend_pretrained.empty()) {
    WeightManifest m = WeightManifest::Open(
        ResolveManifestDir(cfg_.train.backend_pretrained, "backend"));
    std::map<std::string, std::string> mapping;
    if (!cfg_.train.pretrained_name_map.empty())
      mapping = ReadNameMap(cfg_.train.pretrained_name_map);
    std::string required =
        cfg_.train.backend == "conformer" ? "encoder." : "";
    LoadReport report =
        LoadPretrained(m, stack_.backend.get(), mapping, required,
                       cfg_.train.allow_partial_pretrained);
    if (!cfg_.train.allow_partial_pretrained && !report.skipped.empty())
      CMKIT_ERR(ConfigError)
          << "pretrained manifest has arrays with no matching parameter "
          << "(first: " << report.skipped.front()
          << "); pass allow_partial_pretrained to ignore";
    CMKIT_LOG << "pretrained backend load: " << report.Summary();
  }

  std::vector<Variable> params = stack_.backend->Parameters();
  if (cfg_.train.use_frontend && !cfg_.train.frontend_frozen)
    for (auto &p : stack_.frontend->Parameters()) params.push_back(p);
  optimizer_ = std::make_unique<nn::Adam>(std::move(params), cfg_.train.lr);

  crop_len_ = static_cast<int64>(cfg_.train.crop_seconds * 16000.0);
}

std::vector<int64> Trainer::EpochOrder(int32 epoch) const {
  std::vector<int64> order(static_cast<size_t>(train_set_.size()));
  for (int64 i = 0; i < train_set_.size(); ++i)
    order[static_cast<size_t>(i)] = i;
  Rng shuffle_rng = root_.Fork("shuffle", static_cast<uint64>(epoch));
  auto &engine = shuffle_rng.engine();
  for (int64 i = train_set_.size() - 1; i > 0; --i) {
    int64 j = static_cast<int64>(engine() % static_cast<uint64>(i + 1));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  return order;
}

int64 Trainer::StepsPerEpoch() const {
  int64 steps = train_set_.size() / cfg_.train.batch_size;
  if (steps == 0)
    CMKIT_ERR(ConfigError) << "batch size " << cfg_.train.batch_size
                           << " exceeds the training set ("
                           << train_set_.size() << " utterances)";
  return steps;
}

StepResult Trainer::ComputeBatch(const std::vector<int64> &indices,
                                 bool train_mode, Rng *rng,
                                 bool deterministic_aug) {
  const UtteranceDataset &set = train_mode ? train_set_ : dev_set_;
  std::vector<Tensor> noisy_feats, clean_feats;
  std::vector<int32> labels;
  for (int64 idx : indices) {
    const Waveform &full = set.wave(idx);
    Waveform clean = deterministic_aug
                         ? CenterCropOrTile(full, crop_len_)
                         : CropOrTile(full, crop_len_, rng);
    Waveform noisy;
    if (deterministic_aug) {
      Rng aug_rng = root_.Fork("dev-aug", static_cast<uint64>(idx));
      noisy = augmentor_->Apply(clean, set.entry(idx).utt_id, &aug_rng).first;
    } else {
      noisy = augmentor_->Apply(clean, set.entry(idx).utt_id, rng).first;
    }
    noisy_feats.push_back(features_.Features(noisy));
    if (cfg_.train.use_frontend)
      clean_feats.push_back(features_.Features(clean));
    labels.push_back(set.label(idx));
  }

  Variable ce, mse, total;
  if (cfg_.train.use_frontend) {
    DualBatch batch = MakeDualBatch(noisy_feats, clean_feats, labels);
    Variable masks;
    if (cfg_.train.frontend_frozen) {
      nn::NoGradGuard ng;
      masks = stack_.frontend->Forward(batch.inputs);
    } else {
      masks = stack_.frontend->Forward(batch.inputs);
    }
    mse = MaskedMseLoss(batch, masks);
    Variable enhanced = ApplyMask(batch.inputs, masks);
    Variable logits = stack_.backend->ForwardLogits(enhanced);
    ce = BceLoss(logits, batch.authenticity);
    total = JointLoss(ce, mse, cfg_.train.w_mse);
  } else {
    int64 B = static_cast<int64>(noisy_feats.size());
    int64 T = noisy_feats[0].Dim(0), F = noisy_feats[0].Dim(1);
    Tensor stacked({B, T, F});
    for (int64 i = 0; i < B; ++i)
      std::copy(noisy_feats[static_cast<size_t>(i)].data(),
                noisy_feats[static_cast<size_t>(i)].data() + T * F,
                stacked.data() + i * T * F);
    Variable logits = stack_.backend->ForwardLogits(Variable(stacked));
    ce = BceLoss(logits, labels);
    mse = Variable(Tensor::Scalar(0.0));
    total = JointLoss(ce, mse, cfg_.train.w_mse);
  }

  StepResult res;
  res.ce = ce.Value()[0];
  res.mse = mse.Value()[0];
  res.total = total.Value()[0];
  if (train_mode) {
    if (!std::isfinite(res.total))
      CMKIT_ERR(NumericError) << "training loss diverged (total=" << res.total
                              << ")";
    nn::Backward(total);
    optimizer_->Step();
    optimizer_->ZeroGrad();
  }
  return res;
}

StepResult Trainer::RunStep(int32 epoch, int64 step_index) {
  std::vector<int64> order = EpochOrder(epoch);
  int64 B = cfg_.train.batch_size;
  CMKIT_ASSERT(step_index >= 0 && (step_index + 1) * B <=
                                      static_cast<int64>(order.size()));
  std::vector<int64> batch(order.begin() + step_index * B,
                           order.begin() + (step_index + 1) * B);
  Rng step_rng = root_.Fork("step", static_cast<uint64>(epoch) * 1000000ull +
                                        static_cast<uint64>(step_index));
  stack_.SetTraining(true);
  if (cfg_.train.use_frontend && cfg_.train.frontend_frozen)
    stack_.frontend->SetTraining(false);
  return ComputeBatch(batch, true, &step_rng, false);
}

StepResult Trainer::EvalDev(int32 epoch) {
  (void)epoch;
  stack_.SetTraining(false);
  nn::NoGradGuard ng;
  StepResult acc;
  int64 n = 0;
  int64 B = cfg_.train.batch_size;
  for (int64 start = 0; start < dev_set_.size(); start += B) {
    std::vector<int64> batch;
    for (int64 i = start; i < std::min(dev_set_.size(), start + B); ++i)
      batch.push_back(i);
    StepResult r = ComputeBatch(batch, false, nullptr, true);
    int64 count = static_cast<int64>(batch.size());
    acc.ce += r.ce * static_cast<real>(count);
    acc.mse += r.mse * static_cast<real>(count);
    acc.total += r.total * static_cast<real>(count);
    n += count;
  }
  acc.ce /= static_cast<real>(n);
  acc.mse /= static_cast<real>(n);
  acc.total /= static_cast<real>(n);
  return acc;
}

void Trainer::WriteState(const std::string &out_dir, int32 epoch,
                         real best_dev,
                         const std::vector<EpochRecord> &history) const {
  json j;
  j["epoch"] = epoch;
  j["lr"] = optimizer_->lr();
  j["best_dev"] = best_dev;
  j["adam_steps"] = optimizer_->step_count();
  j["scheduler"] = {{"best", scheduler_.best()},
                    {"bad_epochs", scheduler_.bad_epochs()}};
  json hist = json::array();
  for (const auto &r : history)
    hist.push_back({{"epoch", r.epoch},
                    {"split", r.split},
                    {"ce", r.ce},
                    {"mse", r.mse},
                    {"total", r.total},
                    {"lr", r.lr}});
  j["history"] = hist;
  std::ofstream os(fs::path(out_dir) / "state.json", std::ios::trunc);
  os << j.dump(2) << "\n";
}

std::vector<EpochRecord> Trainer::Train(const std::string &out_dir,
                                        bool resume) {
  fs::create_directories(out_dir);
  cfg_.Save((fs::path(out_dir) / "config.json").string());
  std::vector<EpochRecord> history;
  real best_dev = std::numeric_limits<real>::infinity();
  int32 start_epoch = 0;

  if (resume && fs::exists(fs::path(out_dir) / "state.json")) {
    std::ifstream in(fs::path(out_dir) / "state.json");
    json j = json::parse(std::string((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>()));
    start_epoch = j.at("epoch").get<int32>();
    best_dev = j.at("best_dev").get<real>();
    optimizer_->set_lr(j.at("lr").get<real>());
    optimizer_->set_step_count(j.at("adam_steps").get<int64>());
    scheduler_.Restore(j.at("scheduler").at("best").get<real>(),
                       j.at("scheduler").at("bad_epochs").get<int32>());
    for (const auto &r : j.at("history")) {
      EpochRecord rec;
      rec.epoch = r.at("epoch").get<int32>();
      rec.split = r.at("split").get<std::string>();
      rec.ce = r.at("ce").get<real>();
      rec.mse = r.at("mse").get<real>();
      rec.total = r.at("total").get<real>();
      rec.lr = r.at("lr").get<real>();
      history.push_back(rec);
    }
    // model + optimizer state
    LoadedCheckpoint last =
        LoadCheckpoint((fs::path(out_dir) / "checkpoint-last").string());
    stack_ = std::move(last.stack);
    std::vector<Variable> params = stack_.backend->Parameters();
    if (cfg_.train.use_frontend && !cfg_.train.frontend_frozen)
      for (auto &p : stack_.frontend->Parameters()) params.push_back(p);
    int64 t = optimizer_->step_count();
    real lr = optimizer_->lr();
    optimizer_ = std::make_unique<nn::Adam>(std::move(params), lr);
    optimizer_->set_step_count(t);
    fs::path mdir = fs::path(out_dir) / "checkpoint-last" / "adam";
    if (fs::exists(mdir / "index.txt")) {
      WeightManifest m = WeightManifest::Open(mdir.string());
      optimizer_->RestoreMoments(m);
    }
    CMKIT_LOG << "resumed from epoch " << start_epoch;
  }

  std::ofstream log(fs::path(out_dir) / "train.log",
                    resume ? std::ios::app : std::ios::trunc);
  auto log_record = [&](const EpochRecord &r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d\t%s\t%.6f\t%.6f\t%.6f\t%.6g",
                  r.epoch, r.split.c_str(), r.ce, r.mse, r.total, r.lr);
    log << buf << '\n';
    log.flush();
    CMKIT_LOG << "epoch " << r.epoch << " " << r.split << " ce=" << r.ce
              << " mse=" << r.mse << " total=" << r.total << " lr=" << r.lr;
  };

  int64 steps = StepsPerEpoch();
  for (int32 epoch = start_epoch; epoch < cfg_.train.epochs; ++epoch) {
    StepResult train_acc;
    for (int64 s = 0; s < steps; ++s) {
      StepResult r;
      try {
        r = RunStep(epoch, s);
      } catch (const NumericError &) {
        WriteState(out_dir, epoch, best_dev, history);
        throw;
      }
      train_acc.ce += r.ce;
      train_acc.mse += r.mse;
      train_acc.total += r.total;
    }
    EpochRecord train_rec{epoch + 1, "train",
                          train_acc.ce / static_cast<real>(steps),
                          train_acc.mse / static_cast<real>(steps),
                          train_acc.total / static_cast<real>(steps),
                          optimizer_->lr()};
    history.push_back(train_rec);
    log_record(train_rec);

    StepResult dev = EvalDev(epoch);
    EpochRecord dev_rec{epoch + 1, "dev", dev.ce, dev.mse, dev.total,
                        optimizer_->lr()};
    history.push_back(dev_rec);
    log_record(dev_rec);

    optimizer_->set_lr(scheduler_.Update(dev.total, optimizer_->lr()));

    if (dev.total < best_dev) {
      best_dev = dev.total;
      SaveCheckpoint(stack_, cfg_,
                     (fs::path(out_dir) / "checkpoint-best").string());
    }
    SaveCheckpoint(stack_, cfg_,
                   (fs::path(out_dir) / "checkpoint-last").string());
    // optimizer moments ride along for exact resumption
    optimizer_->SaveMoments(
        (fs::path(out_dir) / "checkpoint-last" / "adam").string());
    WriteState(out_dir, epoch + 1, best_dev, history);
  }
  if (!fs::exists(fs::path(out_dir) / "checkpoint-best"))
    SaveCheckpoint(stack_, cfg_,
                   (fs::path(out_dir) / "checkpoint-best").string());
  return history;
}

std::vector<EpochRecord> PretrainFrontend(
    const RunConfig &cfg, std::vector<ManifestEntry> train_entries,
    const NoiseInventory *inventory, const std::string &out_dir) {
  RunConfig local = cfg;
  local.train.use_frontend = true;
  local.train.frontend_frozen = false;
  local.Validate();
  if (train_entries.empty())
    CMKIT_ERR(ConfigError) << "front-end pretraining needs a training set";
  fs::create_directories(out_dir);
  local.Save((fs::path(out_dir) / "config.json").string());

  Rng root(local.seed);
  Rng init = root.Fork("init");
  Rng frontend_rng = init.Fork("frontend-init");
  MaskUnet unet(local.unet, &frontend_rng);
  Augmentor augmentor(local.augment, inventory);
  FeatureExtractor features = FeatureExtractor::FromConfig(local);
  UtteranceDataset train_set(std::move(train_entries));
  nn::Adam adam(unet.Parameters(), local.train.lr);
  int64 crop_len = static_cast<int64>(local.train.crop_seconds * 16000.0);
  int64 B = local.train.batch_size;
  int64 steps = train_set.size() / B;
  if (steps == 0)
    CMKIT_ERR(ConfigError) << "batch size exceeds the pretraining set";

  std::ofstream log(fs::path(out_dir) / "pretrain.log", std::ios::trunc);
  std::vector<EpochRecord> history;
  auto save = [&] { ExportModule(unet, (fs::path(out_dir) / "frontend").string()); };
  save();  // epochs = 0 leaves the initialization as the checkpoint

  for (int32 epoch = 0; epoch < local.train.frontend_pretrain_epochs;
       ++epoch) {
    // fresh shuffle per epoch
    std::vector<int64> order(static_cast<size_t>(train_set.size()));
    for (int64 i = 0; i < train_set.size(); ++i)
      order[static_cast<size_t>(i)] = i;
    Rng shuffle_rng = root.Fork("shuffle", static_cast<uint64>(epoch));
    auto &engine = shuffle_rng.engine();
    for (int64 i = train_set.size() - 1; i > 0; --i) {
      int64 j = static_cast<int64>(engine() % static_cast<uint64>(i + 1));
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    real epoch_loss = 0.0;
    unet.SetTraining(true);
    for (int64 s = 0; s < steps; ++s) {
      Rng step_rng = root.Fork("step", static_cast<uint64>(epoch) * 1000000ull +
                                           static_cast<uint64>(s));
      std::vector<Tensor> noisy_feats, clean_feats;
      std::vector<int32> labels;
      for (int64 k = s * B; k < (s + 1) * B; ++k) {
        int64 idx = order[static_cast<size_t>(k)];
        Waveform clean = CropOrTile(train_set.wave(idx), crop_len, &step_rng);
        Waveform noisy =
            augmentor.Apply(clean, train_set.entry(idx).utt_id, &step_rng)
                .first;
        noisy_feats.push_back(features.Features(noisy));
        clean_feats.push_back(features.Features(clean));
        labels.push_back(train_set.label(idx));
      }
      DualBatch batch = MakeDualBatch(noisy_feats, clean_feats, labels);
      Variable masks = unet.Forward(batch.inputs);
      Variable loss = MaskedMseLoss(batch, masks);
      if (!std::isfinite(loss.Value()[0]))
        CMKIT_ERR(NumericError) << "front-end pretraining diverged";
      nn::Backward(loss);
      adam.Step();
      adam.ZeroGrad();
      epoch_loss += loss.Value()[0];
    }
    EpochRecord rec{epoch + 1, "train", 0.0,
                    epoch_loss / static_cast<real>(steps),
                    epoch_loss / static_cast<real>(steps), adam.lr()};
    history.push_back(rec);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d\ttrain\t%.6f\t%.6f\t%.6f\t%.6g",
                  rec.epoch, 0.0, rec.mse, rec.total, rec.lr);
    log << buf << '\n';
    log.flush();
    CMKIT_LOG << "pretrain epoch " << rec.epoch << " mse=" << rec.mse;
    save();
  }
  return history;
}

}  // namespace cmkit
