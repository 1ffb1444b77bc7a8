// Copyright 2026 The modsynth Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "modsynth/adam.hpp"
#include "modsynth/conditioning.hpp"
#include "modsynth/dataio.hpp"
#include "modsynth/losses.hpp"
#include "modsynth/nets.hpp"
#include "modsynth/replay_buffer.hpp"

namespace modsynth {

struct TrainConfig {
  double learning_rate = 2e-4;
  int batch_size = 5;
  int epochs = 20;
  double lambda_rec = 10.0;
  int buffer_capacity = 25;
  std::uint64_t seed = 0;
  std::vector<std::string> modalities = {"t1", "t2", "flair"};
  std::string target = "dir";
  int canonical_size = kCanonicalSize;
  int base_width = 64;
  int n_res_blocks = 6;
  int disc_base_width = 64;
  int disc_layers = 3;
  double beta1 = 0.5;
  double beta2 = 0.999;

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j);
};

/// G1: inputs -> target, G2: target -> inputs, D1 on the input domain,
/// D2 on the target domain, each with its own Adam state.
struct ModelBundle {
  TrainConfig config;
  std::unique_ptr<Generator> g1;
  std::unique_ptr<Generator> g2;
  std::unique_ptr<Discriminator> d1;
  std::unique_ptr<Discriminator> d2;
  std::unique_ptr<Adam> opt_g1;
  std::unique_ptr<Adam> opt_g2;
  std::unique_ptr<Adam> opt_d1;
  std::unique_ptr<Adam> opt_d2;
  int epoch = 0;

  static ModelBundle create(const TrainConfig& config);

  int n_modalities() const { return static_cast<int>(config.modalities.size()); }
};

// -- Checkpoints --------------------------------------------------------------

/// The sidecar lives next to the archive as "<path>.json".
std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint);

/// Writes the tensor archive and its JSON sidecar, each atomically.
void save_checkpoint(const std::filesystem::path& path, const ModelBundle& models);
ModelBundle load_checkpoint(const std::filesystem::path& path);

// -- Training -----------------------------------------------------------------

struct TrainingSample {
  Tensor inputs;  // 1×n×H×W
  Tensor target;  // 1×1×H×W
};

struct TrainingData {
  std::vector<std::string> modalities;
  std::string target;
  std::vector<TrainingSample> samples;
};

/// Loads and preprocesses every manifest entry in manifest order.
TrainingData load_training_data(const CorpusManifest& manifest,
                                const std::vector<std::string>& modalities,
                                const std::string& target, int canonical_size);

struct UpdateCounters {
  std::int64_t generator_updates = 0;
  std::int64_t discriminator_updates = 0;
};

struct StepRecord {
  int epoch = 0;
  std::int64_t step = 0;
  ConditionVector condition;
  LossReport report;
};

nlohmann::json to_json(const StepRecord& r);

struct EpochSummary {
  LossReport mean;
  std::int64_t steps = 0;
  int batches = 0;
};

enum class UpdatePhase { kDiscriminator, kGenerator };

/// Alternating least-squares GAN optimisation over every availability
/// condition. Owns the replay buffers and the batch-order RNG.
class Trainer {
 public:
  Trainer(ModelBundle& models);

  /// One pass over `data`. For every batch, visits all 2^n - 1 conditions in
  /// canonical order; each visit is one discriminator update followed by one
  /// generator update.
  EpochSummary train_epoch(const TrainingData& data, int epoch,
                           const std::function<void(const StepRecord&)>& on_step = {});

  const UpdateCounters& counters() const { return counters_; }
  const ReplayBuffer& input_buffer() const { return buffer_inputs_; }
  const ReplayBuffer& target_buffer() const { return buffer_target_; }

  /// Called right after each optimizer update; used by tests.
  void set_update_observer(std::function<void(UpdatePhase)> observer) {
    observer_ = std::move(observer);
  }

 private:
  LossReport step(const Tensor& inputs, const Tensor& target,
                  const ConditionVector& c);

  ModelBundle& models_;
  ReplayBuffer buffer_inputs_;
  ReplayBuffer buffer_target_;
  UpdateCounters counters_;
  std::function<void(UpdatePhase)> observer_;
};

struct FitResult {
  std::filesystem::path checkpoint;
  std::filesystem::path loss_log;
  std::vector<EpochSummary> epochs;
};

/// Trains from scratch for config.epochs epochs. Writes config.json,
/// loss_log.jsonl (one line per step) and epoch_NNN.ckpt per epoch into
/// out_dir; epochs == 0 writes only the initial epoch_000.ckpt.
FitResult fit(const TrainConfig& config, const CorpusManifest& data,
              const std::filesystem::path& out_dir);

}  // namespace modsynth
