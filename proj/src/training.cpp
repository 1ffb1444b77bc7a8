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

#include "modsynth/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "modsynth/error.hpp"
#include "modsynth/fsutil.hpp"

namespace modsynth {

using nlohmann::json;

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed ^ (salt * 0x9e3779b97f4a7c15ULL);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

const std::set<std::string> kConfigKeys = {
    "learning_rate", "batch_size",   "epochs",          "lambda_rec",
    "buffer_capacity", "seed",       "modalities",      "target",
    "canonical_size", "base_width",  "n_res_blocks",    "disc_base_width",
    "disc_layers",    "beta1",       "beta2"};

}  // namespace

// -- TrainConfig ----------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) fail(ErrorCode::kArgument, "learning_rate must be >= 0");
  if (batch_size <= 0) fail(ErrorCode::kArgument, "batch_size must be positive");
  if (epochs < 0) fail(ErrorCode::kArgument, "epochs must be non-negative");
  if (!(lambda_rec >= 0.0)) fail(ErrorCode::kArgument, "lambda_rec must be >= 0");
  if (buffer_capacity <= 0) fail(ErrorCode::kArgument, "buffer_capacity must be positive");
  if (modalities.empty() || static_cast<int>(modalities.size()) > kMaxModalities) {
    fail(ErrorCode::kArgument, "between 1 and 16 input modalities are required");
  }
  std::set<std::string> names(modalities.begin(), modalities.end());
  if (names.size() != modalities.size()) {
    fail(ErrorCode::kArgument, "input modality names must be unique");
  }
  if (target.empty() || names.count(target)) {
    fail(ErrorCode::kArgument, "target modality must be named and distinct from the inputs");
  }
  if (canonical_size < 8 || canonical_size % 4 != 0 ||
      canonical_size % (1 << disc_layers) != 0) {
    fail(ErrorCode::kArgument,
         "canonical_size must be >= 8 and divisible by 4 and by 2^disc_layers");
  }
  if (base_width <= 0 || n_res_blocks < 1 || disc_base_width <= 0 || disc_layers < 1) {
    fail(ErrorCode::kArgument, "network widths and depths must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    fail(ErrorCode::kArgument, "Adam betas must lie in [0, 1)");
  }
}

json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"lambda_rec", lambda_rec},
          {"buffer_capacity", buffer_capacity},
          {"seed", seed},
          {"modalities", modalities},
          {"target", target},
          {"canonical_size", canonical_size},
          {"base_width", base_width},
          {"n_res_blocks", n_res_blocks},
          {"disc_base_width", disc_base_width},
          {"disc_layers", disc_layers},
          {"beta1", beta1},
          {"beta2", beta2}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::kFormat, "training config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kConfigKeys.count(key)) {
      fail(ErrorCode::kArgument, "unknown training config key '" + key + "'");
    }
  }
  TrainConfig c;
  try {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.lambda_rec = j.value("lambda_rec", c.lambda_rec);
    c.buffer_capacity = j.value("buffer_capacity", c.buffer_capacity);
    c.seed = j.value("seed", c.seed);
    c.modalities = j.value("modalities", c.modalities);
    c.target = j.value("target", c.target);
    c.canonical_size = j.value("canonical_size", c.canonical_size);
    c.base_width = j.value("base_width", c.base_width);
    c.n_res_blocks = j.value("n_res_blocks", c.n_res_blocks);
    c.disc_base_width = j.value("disc_base_width", c.disc_base_width);
    c.disc_layers = j.value("disc_layers", c.disc_layers);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

// -- ModelBundle ----------------------------------------------------------------

ModelBundle ModelBundle::create(const TrainConfig& config) {
  config.validate();
  const int n = static_cast<int>(config.modalities.size());
  std::mt19937_64 rng(mix(config.seed, 1));

  GeneratorSpec g1{n, 1, n, config.base_width, config.n_res_blocks, config.canonical_size};
  GeneratorSpec g2{1, n, n, config.base_width, config.n_res_blocks, config.canonical_size};
  DiscriminatorSpec d1{n, config.disc_base_width, config.disc_layers};
  DiscriminatorSpec d2{1, config.disc_base_width, config.disc_layers};

  ModelBundle m;
  m.config = config;
  m.g1 = std::make_unique<Generator>(g1, rng);
  m.g2 = std::make_unique<Generator>(g2, rng);
  m.d1 = std::make_unique<Discriminator>(d1, rng);
  m.d2 = std::make_unique<Discriminator>(d2, rng);
  const AdamConfig adam{config.learning_rate, config.beta1, config.beta2, 1e-8};
  m.opt_g1 = std::make_unique<Adam>(*m.g1, adam);
  m.opt_g2 = std::make_unique<Adam>(*m.g2, adam);
  m.opt_d1 = std::make_unique<Adam>(*m.d1, adam);
  m.opt_d2 = std::make_unique<Adam>(*m.d2, adam);
  return m;
}

// -- Data -----------------------------------------------------------------------

TrainingData load_training_data(const CorpusManifest& manifest,
                                const std::vector<std::string>& modalities,
                                const std::string& target, int canonical_size) {
  if (manifest.entries.empty()) {
    fail(ErrorCode::kData, "manifest (" + manifest.split + ") has no entries");
  }
  TrainingData data{modalities, target, {}};
  data.samples.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    SliceStack x = preprocess(load_entry(manifest, e, modalities), canonical_size);
    SliceStack t = preprocess(load_entry(manifest, e, {target}), canonical_size);
    data.samples.push_back({x.to_tensor(), t.to_tensor()});
  }
  return data;
}

json to_json(const StepRecord& r) {
  return {{"epoch", r.epoch},
          {"step", r.step},
          {"condition", r.condition.bits},
          {"rec_forward", r.report.rec_forward},
          {"rec_backward", r.report.rec_backward},
          {"adv_g", r.report.adv_g},
          {"adv_d", r.report.adv_d},
          {"total_g", r.report.total_g},
          {"total_d", r.report.total_d},
          {"lambda_rec", r.report.lambda_rec}};
}

// -- Trainer --------------------------------------------------------------------

Trainer::Trainer(ModelBundle& models)
    : models_(models),
      buffer_inputs_(models.config.buffer_capacity, mix(models.config.seed, 2)),
      buffer_target_(models.config.buffer_capacity, mix(models.config.seed, 3)) {}

LossReport Trainer::step(const Tensor& inputs, const Tensor& target,
                         const ConditionVector& c) {
  const TrainConfig& cfg = models_.config;
  const Tensor masked = mask_tensor(inputs, c);
  const Tensor cond = replicate_batch(c, inputs.n(), inputs.h(), inputs.w());
  LossParts parts;

  // Discriminator update on replayed fakes; generators only run forward.
  {
    Tensor fake_target;
    Tensor fake_inputs;
    {
      ag::NoGradGuard no_grad;
      fake_target = models_.g1->infer(masked, cond);
      fake_inputs = mask_tensor(models_.g2->infer(target, cond), c);
    }
    const ag::Var replay_inputs = ag::Var::constant(buffer_inputs_.push_query_batch(fake_inputs));
    const ag::Var replay_target = ag::Var::constant(buffer_target_.push_query_batch(fake_target));
    const ag::Var real_inputs = ag::Var::constant(masked);
    const ag::Var real_target = ag::Var::constant(target);

    models_.g1->set_trainable(false);
    models_.g2->set_trainable(false);
    models_.d1->zero_grad();
    models_.d2->zero_grad();
    const ag::Var terms[] = {
        lsgan_d_loss(models_.d1->forward(real_inputs), models_.d1->forward(replay_inputs)),
        lsgan_d_loss(models_.d2->forward(real_target), models_.d2->forward(replay_target))};
    const double ones[] = {1.0, 1.0};
    const ag::Var loss_d = ag::weighted_sum(terms, ones);
    parts.adv_d = loss_d.item();
    if (!std::isfinite(parts.adv_d)) {
      fail(ErrorCode::kDivergence, "discriminator loss became non-finite (condition " +
                                       c.to_string() + ")");
    }
    ag::backward(loss_d);
    models_.opt_d1->step();
    models_.opt_d2->step();
    models_.g1->set_trainable(true);
    models_.g2->set_trainable(true);
    ++counters_.discriminator_updates;
    if (observer_) observer_(UpdatePhase::kDiscriminator);
  }

  // Generator update on the full objective with frozen discriminators.
  {
    models_.d1->set_trainable(false);
    models_.d2->set_trainable(false);
    models_.g1->zero_grad();
    models_.g2->zero_grad();
    const Generator& g1 = *models_.g1;
    const Generator& g2 = *models_.g2;
    const CycleOutputs cyc = multimodal_cycle_loss(
        ag::Var::constant(masked), ag::Var::constant(target), c,
        [&g1](const ag::Var& x, const ag::Var& k) { return g1.forward(x, k); },
        [&g2](const ag::Var& x, const ag::Var& k) { return g2.forward(x, k); });
    const ag::Var adv_terms[] = {lsgan_g_loss(models_.d2->forward(cyc.fake_target)),
                                 lsgan_g_loss(models_.d1->forward(cyc.fake_inputs))};
    const double ones[] = {1.0, 1.0};
    const ag::Var adv_g = ag::weighted_sum(adv_terms, ones);
    const ag::Var total_terms[] = {adv_g, cyc.rec_forward, cyc.rec_backward};
    const double weights[] = {1.0, cfg.lambda_rec, cfg.lambda_rec};
    const ag::Var total_g = ag::weighted_sum(total_terms, weights);
    parts.adv_g = adv_g.item();
    parts.rec_forward = cyc.rec_forward.item();
    parts.rec_backward = cyc.rec_backward.item();
    if (!std::isfinite(total_g.item())) {
      fail(ErrorCode::kDivergence, "generator loss became non-finite (condition " +
                                       c.to_string() + ")");
    }
    ag::backward(total_g);
    models_.opt_g1->step();
    models_.opt_g2->step();
    models_.d1->set_trainable(true);
    models_.d2->set_trainable(true);
    ++counters_.generator_updates;
    if (observer_) observer_(UpdatePhase::kGenerator);
  }
  return total_objectives(parts, cfg.lambda_rec);
}

EpochSummary Trainer::train_epoch(const TrainingData& data, int epoch,
                                  const std::function<void(const StepRecord&)>& on_step) {
  if (data.samples.empty()) fail(ErrorCode::kData, "training data is empty");
  if (epoch < 0) fail(ErrorCode::kArgument, "epoch index must be non-negative");
  const TrainConfig& cfg = models_.config;
  const int n = models_.n_modalities();
  const auto& first = data.samples.front();
  if (first.inputs.c() != n || first.inputs.h() != cfg.canonical_size ||
      first.inputs.w() != cfg.canonical_size || first.target.c() != 1) {
    fail(ErrorCode::kShape, "training data shape " + to_string(first.inputs.shape()) +
                                " does not match the model");
  }
  const auto subsets = enumerate_subsets(n);

  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(mix(cfg.seed, 100 + static_cast<std::uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  EpochSummary summary;
  LossParts sum;
  for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
    const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
    std::vector<Tensor> xs, ts;
    for (std::size_t i = begin; i < end; ++i) {
      xs.push_back(data.samples[order[i]].inputs);
      ts.push_back(data.samples[order[i]].target);
    }
    const Tensor inputs = Tensor::stack(xs);
    const Tensor target = Tensor::stack(ts);
    for (const ConditionVector& c : subsets) {
      const LossReport r = step(inputs, target, c);
      sum.rec_forward += r.rec_forward;
      sum.rec_backward += r.rec_backward;
      sum.adv_g += r.adv_g;
      sum.adv_d += r.adv_d;
      if (on_step) on_step({epoch, summary.steps, c, r});
      ++summary.steps;
    }
    ++summary.batches;
  }
  const double k = static_cast<double>(summary.steps);
  summary.mean = total_objectives({sum.rec_forward / k, sum.rec_backward / k,
                                   sum.adv_g / k, sum.adv_d / k},
                                  cfg.lambda_rec);
  models_.epoch = epoch + 1;
  return summary;
}

// -- fit ------------------------------------------------------------------------

FitResult fit(const TrainConfig& config, const CorpusManifest& manifest,
              const std::filesystem::path& out_dir) {
  config.validate();
  manifest.validate(false);
  const TrainingData data =
      load_training_data(manifest, config.modalities, config.target, config.canonical_size);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());
  write_file_atomic(out_dir / "config.json", config.to_json().dump(2) + "\n");

  FitResult result;
  result.loss_log = out_dir / "loss_log.jsonl";
  std::ofstream log(result.loss_log, std::ios::trunc);
  if (!log) fail(ErrorCode::kIo, "cannot open " + result.loss_log.string());

  ModelBundle models = ModelBundle::create(config);
  auto checkpoint_name = [&](int epoch) {
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", epoch);
    return out_dir / name;
  };
  if (config.epochs == 0) {
    result.checkpoint = checkpoint_name(0);
    save_checkpoint(result.checkpoint, models);
    return result;
  }

  Trainer trainer(models);
  for (int e = 0; e < config.epochs; ++e) {
    result.epochs.push_back(trainer.train_epoch(data, e, [&log](const StepRecord& r) {
      log << to_json(r).dump() << '\n';
    }));
    log.flush();
    if (!log) fail(ErrorCode::kIo, "failed writing " + result.loss_log.string());
    result.checkpoint = checkpoint_name(e + 1);
    save_checkpoint(result.checkpoint, models);
  }
  return result;
}

}  // namespace modsynth
