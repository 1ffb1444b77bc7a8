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

#include <doctest.h>

#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "modsynth/error.hpp"
#include "modsynth/fsutil.hpp"
#include "modsynth/replay_buffer.hpp"
#include "modsynth/training.hpp"
#include "support.hpp"

using namespace modsynth;
using modsynth::testing::random_tensor;
using modsynth::testing::TempDir;

namespace {

TrainConfig tiny_config(int size = 16) {
  TrainConfig c;
  c.canonical_size = size;
  c.base_width = 4;
  c.n_res_blocks = 1;
  c.disc_base_width = 4;
  c.disc_layers = 2;
  c.batch_size = 2;
  c.epochs = 1;
  c.seed = 3;
  return c;
}

CorpusManifest tiny_corpus(const TempDir& dir, int subjects, int slices, int size) {
  PhantomOptions o;
  o.n_subjects = subjects;
  o.n_slices = slices;
  o.size = size;
  o.seed = 17;
  o.val_fraction = 0.0;
  o.test_fraction = 0.0;
  return generate_phantom_corpus(o, dir.path()).train;
}

std::vector<Tensor> snapshot(const Module& m) {
  std::vector<Tensor> out;
  for (const auto& p : m.parameters()) out.push_back(p.var.value());
  return out;
}

bool same(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].shape() != b[i].shape()) return false;
    if (std::memcmp(a[i].raw(), b[i].raw(), a[i].size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("replay buffer: fill phase returns the pushed image") {
  ReplayBuffer b(25, 1);
  const Tensor x({1, 1, 2, 2}, 0.25);
  const Tensor r = b.push_query(x);
  CHECK(r.data()[0] == 0.25);
  CHECK(b.size() == 1);
  for (int i = 0; i < 24; ++i) CHECK(b.push_query(Tensor({1, 1, 2, 2}, i)).data()[0] == i);
  CHECK(b.historical_returns() == 0);
}

TEST_CASE("replay buffer: capacity holds and half the returns are historical") {
  ReplayBuffer b(25, 42);
  for (int i = 0; i < 10000; ++i) {
    const Tensor x({1, 1, 1, 1}, static_cast<double>(i));
    const Tensor r = b.push_query(x);
    REQUIRE(b.size() <= 25);
    if (i >= 25) {
      // Returned images are either this push or some earlier one.
      REQUIRE(r.data()[0] <= i);
    }
  }
  CHECK(b.size() == 25);
  const double freq = static_cast<double>(b.historical_returns()) / (10000 - 25);
  CHECK(freq == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("replay buffer: argument and shape errors") {
  CHECK_THROWS_AS(ReplayBuffer(0, 1), Error);
  ReplayBuffer b(3, 1);
  CHECK_THROWS_AS(b.push_query(Tensor({2, 1, 2, 2})), Error);
  b.push_query(Tensor({1, 1, 2, 2}));
  CHECK_THROWS_AS(b.push_query(Tensor({1, 1, 3, 3})), Error);
  const Tensor batch = b.push_query_batch(Tensor({4, 1, 2, 2}, 1.0));
  CHECK(batch.shape() == Shape4{4, 1, 2, 2});
}

TEST_CASE("adam: first step moves each weight by the learning rate") {
  std::mt19937_64 rng(1);
  Discriminator d({1, 2, 1}, rng);
  Adam opt(d, {0.01, 0.5, 0.999, 1e-8});
  const auto before = snapshot(d);
  const auto loss = lsgan_g_loss(d.forward(ag::Var::constant(random_tensor({1, 1, 8, 8}, rng))));
  ag::backward(loss);
  opt.step();
  const auto after = snapshot(d);
  for (std::size_t i = 0; i < before.size(); ++i) {
    const Tensor& g = d.parameters()[i].var.grad();
    for (std::size_t k = 0; k < before[i].size(); ++k) {
      if (std::abs(g[k]) < 1e-6) continue;  // eps dominates
      const double moved = before[i][k] - after[i][k];
      REQUIRE(moved == doctest::Approx(0.01 * (g[k] > 0 ? 1 : -1)).epsilon(1e-3));
    }
  }
  CHECK(opt.steps() == 1);
}

TEST_CASE("adam: parameters without gradients are untouched") {
  std::mt19937_64 rng(2);
  Discriminator d({1, 2, 1}, rng);
  Adam opt(d, {});
  const auto before = snapshot(d);
  opt.step();
  CHECK(same(before, snapshot(d)));
}

TEST_CASE("trainer: n=3 gives 7 generator and 7 discriminator updates per batch") {
  TempDir dir("tr");
  const CorpusManifest m = tiny_corpus(dir, 2, 3, 16);
  TrainConfig cfg = tiny_config();
  cfg.batch_size = 2;
  const TrainingData data = load_training_data(m, cfg.modalities, cfg.target, 16);
  REQUIRE(data.samples.size() == 6);
  ModelBundle models = ModelBundle::create(cfg);
  Trainer trainer(models);
  std::vector<UpdatePhase> phases;
  trainer.set_update_observer([&](UpdatePhase p) { phases.push_back(p); });
  std::vector<std::string> conditions;
  const EpochSummary s = trainer.train_epoch(
      data, 0, [&](const StepRecord& r) { conditions.push_back(r.condition.to_string()); });
  CHECK(s.batches == 3);
  CHECK(s.steps == 21);
  CHECK(trainer.counters().generator_updates == 21);
  CHECK(trainer.counters().discriminator_updates == 21);
  REQUIRE(phases.size() == 42);
  for (std::size_t i = 0; i < phases.size(); ++i) {
    CHECK(phases[i] == (i % 2 == 0 ? UpdatePhase::kDiscriminator : UpdatePhase::kGenerator));
  }
  const std::vector<std::string> order = {"001", "010", "011", "100", "101", "110", "111"};
  for (std::size_t i = 0; i < conditions.size(); ++i) CHECK(conditions[i] == order[i % 7]);
  CHECK(models.epoch == 1);
  CHECK(models.opt_g1->steps() == 21);
  CHECK(models.opt_d2->steps() == 21);
}

TEST_CASE("trainer: zero learning rate leaves parameters bit-identical") {
  TempDir dir("tr");
  const CorpusManifest m = tiny_corpus(dir, 1, 2, 16);
  TrainConfig cfg = tiny_config();
  cfg.learning_rate = 0.0;
  const TrainingData data = load_training_data(m, cfg.modalities, cfg.target, 16);
  ModelBundle models = ModelBundle::create(cfg);
  const auto g1 = snapshot(*models.g1), g2 = snapshot(*models.g2), d1 = snapshot(*models.d1),
             d2 = snapshot(*models.d2);
  Trainer trainer(models);
  trainer.train_epoch(data, 0);
  CHECK(same(g1, snapshot(*models.g1)));
  CHECK(same(g2, snapshot(*models.g2)));
  CHECK(same(d1, snapshot(*models.d1)));
  CHECK(same(d2, snapshot(*models.d2)));
}

TEST_CASE("trainer: replay buffers are fed with every fake") {
  TempDir dir("tr");
  const CorpusManifest m = tiny_corpus(dir, 1, 2, 16);
  TrainConfig cfg = tiny_config();
  cfg.buffer_capacity = 4;
  const TrainingData data = load_training_data(m, cfg.modalities, cfg.target, 16);
  ModelBundle models = ModelBundle::create(cfg);
  Trainer trainer(models);
  trainer.train_epoch(data, 0);
  CHECK(trainer.input_buffer().queries() == 14);
  CHECK(trainer.target_buffer().queries() == 14);
  CHECK(trainer.target_buffer().size() == 4);
}

TEST_CASE("trainer: seeded runs give identical epoch summaries") {
  TempDir dir("tr");
  const CorpusManifest m = tiny_corpus(dir, 2, 2, 16);
  const TrainConfig cfg = tiny_config();
  const TrainingData data = load_training_data(m, cfg.modalities, cfg.target, 16);
  auto run = [&] {
    ModelBundle models = ModelBundle::create(cfg);
    Trainer trainer(models);
    return trainer.train_epoch(data, 0).mean;
  };
  const LossReport a = run();
  const LossReport b = run();
  CHECK(a == b);
  CHECK(a.finite());
}

TEST_CASE("fit: epochs=0 writes an initialisation checkpoint and an empty log") {
  TempDir dir("fit");
  const CorpusManifest m = tiny_corpus(dir, 1, 2, 16);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 0;
  const FitResult r = fit(cfg, m, dir / "run");
  CHECK(r.checkpoint.filename() == "epoch_000.ckpt");
  CHECK(std::filesystem::exists(r.checkpoint));
  CHECK(std::filesystem::file_size(r.loss_log) == 0);
  CHECK(r.epochs.empty());
  const ModelBundle loaded = load_checkpoint(r.checkpoint);
  const ModelBundle fresh = ModelBundle::create(cfg);
  CHECK(same(snapshot(*loaded.g1), snapshot(*fresh.g1)));
  CHECK(loaded.epoch == 0);
}

TEST_CASE("fit: loss log lines carry every field") {
  TempDir dir("fit");
  const CorpusManifest m = tiny_corpus(dir, 1, 2, 16);
  const FitResult r = fit(tiny_config(), m, dir / "run");
  std::ifstream in(r.loss_log);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* k : {"epoch", "step", "condition", "rec_forward", "rec_backward", "adv_g",
                          "adv_d", "total_g", "total_d", "lambda_rec"}) {
      REQUIRE(j.contains(k));
    }
    CHECK(j.at("step") == n);
    CHECK(j.at("condition").size() == 3);
    ++n;
  }
  CHECK(n == 7);
  const auto cfg = nlohmann::json::parse(read_file_text(dir / "run/config.json"));
  CHECK(cfg.at("seed") == 3);
}

TEST_CASE("fit: seeded runs write identical loss logs") {
  TempDir dir("fit");
  const CorpusManifest m = tiny_corpus(dir, 1, 3, 16);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 2;
  fit(cfg, m, dir / "a");
  fit(cfg, m, dir / "b");
  CHECK(read_file_bytes(dir / "a/loss_log.jsonl") == read_file_bytes(dir / "b/loss_log.jsonl"));
  CHECK(read_file_bytes(dir / "a/epoch_002.ckpt") == read_file_bytes(dir / "b/epoch_002.ckpt"));
  cfg.seed = 4;
  fit(cfg, m, dir / "c");
  CHECK(read_file_bytes(dir / "a/loss_log.jsonl") != read_file_bytes(dir / "c/loss_log.jsonl"));
}

TEST_CASE("fit: toy phantom run lowers rec_forward between epochs 1 and 5") {
  TempDir dir("fit");
  const CorpusManifest m = tiny_corpus(dir, 3, 4, 16);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 5;
  cfg.batch_size = 4;
  cfg.base_width = 8;
  cfg.learning_rate = 1e-3;
  const FitResult r = fit(cfg, m, dir / "run");
  REQUIRE(r.epochs.size() == 5);
  CHECK(r.epochs[4].mean.rec_forward < r.epochs[0].mean.rec_forward);
}

TEST_CASE("checkpoint: defaults are echoed into the sidecar") {
  TempDir dir("ck");
  TrainConfig cfg;  // paper defaults, shrunk only in network size
  cfg.canonical_size = 16;
  cfg.base_width = 2;
  cfg.n_res_blocks = 1;
  cfg.disc_base_width = 2;
  cfg.disc_layers = 1;
  const ModelBundle m = ModelBundle::create(cfg);
  save_checkpoint(dir / "m.ckpt", m);
  const auto side = nlohmann::json::parse(read_file_text(sidecar_path(dir / "m.ckpt")));
  const auto& tc = side.at("train_config");
  CHECK(tc.at("learning_rate") == 0.0002);
  CHECK(tc.at("batch_size") == 5);
  CHECK(tc.at("epochs") == 20);
  CHECK(tc.at("lambda_rec") == 10.0);
  CHECK(tc.at("buffer_capacity") == 25);
  CHECK(side.at("modalities") == nlohmann::json({"t1", "t2", "flair"}));
  CHECK(side.at("target") == "dir");
  CHECK(side.at("g1").at("in_channels") == 3);
  CHECK(side.at("g2").at("out_channels") == 3);
}

TEST_CASE("checkpoint: round trip restores weights and optimiser state") {
  TempDir dir("ck");
  const CorpusManifest m = tiny_corpus(dir, 1, 2, 16);
  const TrainConfig cfg = tiny_config();
  const TrainingData data = load_training_data(m, cfg.modalities, cfg.target, 16);
  ModelBundle models = ModelBundle::create(cfg);
  Trainer(models).train_epoch(data, 0);
  save_checkpoint(dir / "a.ckpt", models);
  ModelBundle back = load_checkpoint(dir / "a.ckpt");
  CHECK(back.epoch == 1);
  CHECK(back.config.to_json() == cfg.to_json());
  CHECK(same(snapshot(*back.g1), snapshot(*models.g1)));
  CHECK(same(snapshot(*back.d2), snapshot(*models.d2)));
  CHECK(same(back.opt_g2->first_moments(), models.opt_g2->first_moments()));
  CHECK(same(back.opt_d1->second_moments(), models.opt_d1->second_moments()));
  CHECK(back.opt_g1->steps() == models.opt_g1->steps());
  save_checkpoint(dir / "b.ckpt", back);
  CHECK(read_file_bytes(dir / "a.ckpt") == read_file_bytes(dir / "b.ckpt"));
}

TEST_CASE("checkpoint: corrupt archives are rejected") {
  TempDir dir("ck");
  const ModelBundle m = ModelBundle::create(tiny_config());
  save_checkpoint(dir / "m.ckpt", m);
  auto bytes = read_file_bytes(dir / "m.ckpt");
  bytes.resize(bytes.size() / 2);
  write_file_atomic(dir / "m.ckpt", bytes);
  CHECK_THROWS_AS(load_checkpoint(dir / "m.ckpt"), Error);
  bytes[0] = 'X';
  write_file_atomic(dir / "m.ckpt", bytes);
  CHECK_THROWS_AS(load_checkpoint(dir / "m.ckpt"), Error);
}

TEST_CASE("config: json round trip and validation") {
  TrainConfig c = tiny_config();
  c.modalities = {"flair", "t1"};
  CHECK(TrainConfig::from_json(c.to_json()).to_json() == c.to_json());
  CHECK(TrainConfig::from_json(nlohmann::json::object()).to_json() == TrainConfig{}.to_json());
  CHECK_THROWS_AS(TrainConfig::from_json({{"lr", 0.1}}), Error);
  CHECK_THROWS_AS(TrainConfig::from_json({{"epochs", "many"}}), Error);
  TrainConfig bad = c;
  bad.canonical_size = 18;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.target = "t1";
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("load_training_data: empty manifest") {
  CorpusManifest m;
  CHECK_THROWS_AS(load_training_data(m, {"t1"}, "dir", 16), Error);
}
