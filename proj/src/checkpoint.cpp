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

#include <bit>
#include <cstring>
#include <map>

#include "modsynth/error.hpp"
#include "modsynth/fsutil.hpp"
#include "modsynth/training.hpp"

namespace modsynth {
namespace {

using nlohmann::json;

constexpr char kArchiveMagic[4] = {'M', 'S', 'C', 'K'};
constexpr std::uint32_t kArchiveVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail(ErrorCode::kLength, "checkpoint archive truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

json generator_json(const GeneratorSpec& s) {
  return {{"in_channels", s.in_channels},   {"out_channels", s.out_channels},
          {"cond_channels", s.cond_channels}, {"base_width", s.base_width},
          {"n_res_blocks", s.n_res_blocks},  {"canonical_size", s.canonical_size}};
}

json discriminator_json(const DiscriminatorSpec& s) {
  return {{"in_channels", s.in_channels},
          {"base_width", s.base_width},
          {"n_layers", s.n_layers}};
}

// Every tensor in the bundle under its stable hierarchical key.
std::vector<std::pair<std::string, Tensor*>> collect(ModelBundle& m) {
  std::vector<std::pair<std::string, Tensor*>> out;
  auto add_module = [&](const std::string& prefix, Module& mod, Adam& opt) {
    for (auto& p : mod.parameters()) {
      out.emplace_back(prefix + "." + p.name, &p.var.mutable_value());
    }
    auto& params = mod.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      out.emplace_back("adam." + prefix + ".m." + params[i].name, &opt.first_moments()[i]);
      out.emplace_back("adam." + prefix + ".v." + params[i].name, &opt.second_moments()[i]);
    }
  };
  add_module("g1", *m.g1, *m.opt_g1);
  add_module("g2", *m.g2, *m.opt_g2);
  add_module("d1", *m.d1, *m.opt_d1);
  add_module("d2", *m.d2, *m.opt_d2);
  return out;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint) {
  std::filesystem::path p = checkpoint;
  p += ".json";
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& models) {
  auto& m = const_cast<ModelBundle&>(models);
  const auto tensors = collect(m);

  std::vector<std::uint8_t> bytes(std::begin(kArchiveMagic), std::end(kArchiveMagic));
  put_u32(bytes, kArchiveVersion);
  put_u32(bytes, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(bytes, static_cast<std::uint32_t>(name.size()));
    bytes.insert(bytes.end(), name.begin(), name.end());
    for (int d : {t->n(), t->c(), t->h(), t->w()}) put_u32(bytes, static_cast<std::uint32_t>(d));
    for (double v : t->data()) put_u64(bytes, std::bit_cast<std::uint64_t>(v));
  }

  json sidecar = {
      {"format", "modsynth-checkpoint"},
      {"version", kArchiveVersion},
      {"modalities", models.config.modalities},
      {"target", models.config.target},
      {"epoch", models.epoch},
      {"g1", generator_json(models.g1->spec())},
      {"g2", generator_json(models.g2->spec())},
      {"d1", discriminator_json(models.d1->spec())},
      {"d2", discriminator_json(models.d2->spec())},
      {"optimizer_steps",
       {{"g1", models.opt_g1->steps()},
        {"g2", models.opt_g2->steps()},
        {"d1", models.opt_d1->steps()},
        {"d2", models.opt_d2->steps()}}},
      {"train_config", models.config.to_json()},
  };
  write_file_atomic(path, bytes);
  write_file_atomic(sidecar_path(path), sidecar.dump(2) + "\n");
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  json sidecar;
  try {
    sidecar = json::parse(read_file_text(sidecar_path(path)));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, "checkpoint sidecar " + sidecar_path(path).string() +
                                 ": " + e.what());
  }
  if (sidecar.value("format", "") != "modsynth-checkpoint") {
    fail(ErrorCode::kFormat, sidecar_path(path).string() + " is not a checkpoint sidecar");
  }
  ModelBundle m = ModelBundle::create(TrainConfig::from_json(sidecar.at("train_config")));
  m.epoch = sidecar.value("epoch", 0);
  if (sidecar.at("modalities").get<std::vector<std::string>>() != m.config.modalities) {
    fail(ErrorCode::kFormat, "checkpoint modality ordering disagrees with its config");
  }
  const auto& steps = sidecar.at("optimizer_steps");
  m.opt_g1->set_steps(steps.at("g1").get<std::int64_t>());
  m.opt_g2->set_steps(steps.at("g2").get<std::int64_t>());
  m.opt_d1->set_steps(steps.at("d1").get<std::int64_t>());
  m.opt_d2->set_steps(steps.at("d2").get<std::int64_t>());

  const auto bytes = read_file_bytes(path);
  Reader r(bytes);
  if (r.str(4) != std::string(kArchiveMagic, 4)) {
    fail(ErrorCode::kFormat, path.string() + " is not a checkpoint archive");
  }
  if (r.u32() != kArchiveVersion) fail(ErrorCode::kFormat, "unsupported checkpoint version");
  const std::uint32_t count = r.u32();

  std::map<std::string, Tensor*> slots;
  for (auto& [name, t] : collect(m)) slots.emplace(name, t);
  if (count != slots.size()) {
    fail(ErrorCode::kFormat, "checkpoint holds " + std::to_string(count) +
                                 " tensors, model expects " + std::to_string(slots.size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str(r.u32());
    Shape4 s;
    s.n = static_cast<int>(r.u32());
    s.c = static_cast<int>(r.u32());
    s.h = static_cast<int>(r.u32());
    s.w = static_cast<int>(r.u32());
    auto it = slots.find(name);
    if (it == slots.end()) fail(ErrorCode::kFormat, "unexpected checkpoint tensor " + name);
    if (!(it->second->shape() == s)) {
      fail(ErrorCode::kShape, "checkpoint tensor " + name + " has shape " + to_string(s) +
                                  ", model expects " + to_string(it->second->shape()));
    }
    for (double& v : it->second->data()) v = std::bit_cast<double>(r.u64());
  }
  if (!r.done()) fail(ErrorCode::kFormat, "trailing bytes in checkpoint archive");
  return m;
}

}  // namespace modsynth
