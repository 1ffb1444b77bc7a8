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

#include "modsynth/modsynth.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <set>
#include <span>
#include <string>

#include <json.hpp>

#include "modsynth/dataio.hpp"
#include "modsynth/error.hpp"
#include "modsynth/evalmetrics.hpp"
#include "modsynth/fsutil.hpp"
#include "modsynth/study.hpp"
#include "modsynth/synthesis.hpp"
#include "modsynth/training.hpp"

using nlohmann::json;
namespace ms = modsynth;
namespace fs = std::filesystem;

struct ms_model {
  std::unique_ptr<ms::Synthesizer> synth;
  int epoch = 0;
};

struct ms_study_server {
  std::unique_ptr<ms::StudyServer> server;
};

namespace {

thread_local std::string g_last_error;

template <class F>
ms_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return MS_OK;
  } catch (const ms::Error& e) {
    g_last_error = e.what();
    return static_cast<ms_status>(e.code());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return MS_ERR_FORMAT;
  } catch (const fs::filesystem_error& e) {
    g_last_error = e.what();
    return MS_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MS_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) ms::fail(ms::ErrorCode::kArgument, std::string(what) + " must not be null");
}

json parse_json(const char* text, const char* what) {
  if (!text || !*text) return json::object();
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    ms::fail(ms::ErrorCode::kFormat, std::string(what) + ": " + e.what());
  }
}

void emit(char** out, const json& j) {
  if (!out) return;
  const std::string s = j.dump(2);
  char* buf = static_cast<char*>(std::malloc(s.size() + 1));
  if (!buf) throw std::bad_alloc();
  std::memcpy(buf, s.c_str(), s.size() + 1);
  *out = buf;
}

json metric_json(double value) {
  return std::isinf(value) ? json(nullptr) : json(value);
}

json loss_json(const ms::LossReport& r) {
  return {{"rec_forward", r.rec_forward}, {"rec_backward", r.rec_backward},
          {"adv_g", r.adv_g},             {"adv_d", r.adv_d},
          {"total_g", r.total_g},         {"total_d", r.total_d},
          {"lambda_rec", r.lambda_rec}};
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

extern "C" {

const char* ms_version(void) { return "0.1.0"; }

const char* ms_status_name(ms_status status) {
  switch (status) {
    case MS_OK: return "ok";
    case MS_ERR_INTERNAL: return "internal";
    default: return ms::to_string(static_cast<ms::ErrorCode>(status));
  }
}

const char* ms_last_error(void) { return g_last_error.c_str(); }

void ms_string_free(char* s) { std::free(s); }

ms_status ms_phantom_generate(const char* options_json, const char* out_dir,
                              char** result_json) {
  return guarded([&] {
    require(out_dir, "out_dir");
    const json o = parse_json(options_json, "phantom options");
    static const std::set<std::string> kKeys = {"subjects", "slices",       "seed",
                                                "size",     "misalign",     "val_fraction",
                                                "test_fraction"};
    for (const auto& [k, _] : o.items()) {
      if (!kKeys.count(k)) ms::fail(ms::ErrorCode::kArgument, "unknown phantom option '" + k + "'");
    }
    ms::PhantomOptions opts;
    opts.n_subjects = get_or(o, "subjects", opts.n_subjects);
    opts.n_slices = get_or(o, "slices", opts.n_slices);
    opts.seed = get_or(o, "seed", opts.seed);
    opts.size = get_or(o, "size", opts.size);
    opts.misalign = get_or(o, "misalign", opts.misalign);
    opts.val_fraction = get_or(o, "val_fraction", opts.val_fraction);
    opts.test_fraction = get_or(o, "test_fraction", opts.test_fraction);
    const ms::PhantomCorpus corpus = ms::generate_phantom_corpus(opts, out_dir);
    emit(result_json, {{"options",
                        {{"subjects", opts.n_subjects},
                         {"slices", opts.n_slices},
                         {"seed", opts.seed},
                         {"size", opts.size},
                         {"misalign", opts.misalign},
                         {"val_fraction", opts.val_fraction},
                         {"test_fraction", opts.test_fraction}}},
                       {"train", corpus.train.entries.size()},
                       {"val", corpus.val.entries.size()},
                       {"test", corpus.test.entries.size()}});
  });
}

ms_status ms_resolve_config(const char* config_json, char** resolved_json) {
  return guarded([&] {
    require(resolved_json, "resolved_json");
    const ms::TrainConfig cfg = ms::TrainConfig::from_json(parse_json(config_json, "config"));
    cfg.validate();
    emit(resolved_json, cfg.to_json());
  });
}

ms_status ms_train(const char* config_json, const char* manifest_path, const char* out_dir,
                   char** result_json) {
  return guarded([&] {
    require(manifest_path, "manifest_path");
    require(out_dir, "out_dir");
    const ms::TrainConfig cfg = ms::TrainConfig::from_json(parse_json(config_json, "config"));
    const ms::FitResult r = ms::fit(cfg, ms::load_manifest(manifest_path), out_dir);
    json epochs = json::array();
    for (const auto& e : r.epochs) {
      epochs.push_back({{"mean", loss_json(e.mean)}, {"steps", e.steps}, {"batches", e.batches}});
    }
    emit(result_json, {{"checkpoint", r.checkpoint.string()},
                       {"loss_log", r.loss_log.string()},
                       {"epochs", epochs}});
  });
}

ms_status ms_model_load(const char* checkpoint_path, ms_model** out) {
  return guarded([&] {
    require(checkpoint_path, "checkpoint_path");
    require(out, "out");
    ms::ModelBundle bundle = ms::load_checkpoint(checkpoint_path);
    auto model = std::make_unique<ms_model>();
    model->epoch = bundle.epoch;
    model->synth = std::make_unique<ms::Synthesizer>(std::move(bundle));
    *out = model.release();
  });
}

void ms_model_free(ms_model* model) { delete model; }

ms_status ms_model_info(const ms_model* model, char** info_json) {
  return guarded([&] {
    require(model, "model");
    emit(info_json, {{"modalities", model->synth->modalities()},
                     {"target", model->synth->target()},
                     {"canonical_size", model->synth->canonical_size()},
                     {"epoch", model->epoch}});
  });
}

ms_status ms_model_synthesize(const ms_model* model, const float* stack, size_t stack_len,
                              const char* condition, float* out, size_t out_len) {
  return guarded([&] {
    require(model, "model");
    require(stack, "stack");
    require(condition, "condition");
    require(out, "out");
    const int n = static_cast<int>(model->synth->modalities().size());
    const int s = model->synth->canonical_size();
    const std::size_t plane = static_cast<std::size_t>(s) * s;
    if (stack_len != plane * n || out_len != plane) {
      ms::fail(ms::ErrorCode::kShape, "expected a " + std::to_string(n) + "x" +
                                          std::to_string(s) + "x" + std::to_string(s) +
                                          " stack and a " + std::to_string(s) + "x" +
                                          std::to_string(s) + " output");
    }
    const std::string bits(condition);
    if (static_cast<int>(bits.size()) != n ||
        bits.find_first_not_of("01") != std::string::npos) {
      ms::fail(ms::ErrorCode::kArgument, "condition must be " + std::to_string(n) + " bits");
    }
    ms::ConditionVector c;
    for (char ch : bits) c.bits.push_back(ch == '1');
    ms::SliceStack in(n, s, s, model->synth->modalities());
    std::copy(stack, stack + stack_len, in.data.begin());
    const ms::TargetSlice r = model->synth->synthesize(in, c);
    std::copy(r.data.begin(), r.data.end(), out);
  });
}

ms_status ms_model_synthesize_files(const ms_model* model, const char* inputs_json,
                                    const char* target, const char* out_msl,
                                    const char* real_msl, char** result_json) {
  return guarded([&] {
    require(model, "model");
    require(out_msl, "out_msl");
    const json inputs = parse_json(inputs_json, "inputs");
    if (!inputs.is_object() || inputs.empty()) {
      ms::fail(ms::ErrorCode::kCondition, "inputs must name at least one modality");
    }
    if (target && model->synth->target() != target) {
      ms::fail(ms::ErrorCode::kArgument, "checkpoint synthesizes '" + model->synth->target() +
                                             "', not '" + target + "'");
    }
    std::map<std::string, ms::SliceStack> slices;
    for (const auto& [name, path] : inputs.items()) {
      slices.emplace(name, ms::read_slice_file(path.get<std::string>()));
    }
    const ms::TargetSlice fake = model->synth->synthesize(slices);
    const fs::path out_path(out_msl);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    ms::write_slice_file(out_path, fake);
    json result = {{"output", out_path.string()}, {"target", model->synth->target()}};
    if (real_msl) {
      const ms::TargetSlice real =
          ms::preprocess(ms::read_slice_file(real_msl), model->synth->canonical_size());
      const fs::path stem = out_path.parent_path() / out_path.stem();
      const fs::path image = stem.string() + "_diff.ppm";
      const fs::path raw = stem.string() + "_diff.msl";
      ms::difference_map(fake, real, image, raw);
      const double p = ms::psnr(fake, real);
      result["diff_image"] = image.string();
      result["diff_raw"] = raw.string();
      result["psnr"] = metric_json(p);
      result["psnr_infinite"] = std::isinf(p);
      result["mae"] = ms::mae(fake, real);
    }
    emit(result_json, result);
  });
}

ms_status ms_model_evaluate(const ms_model* model, const char* manifest_path,
                            const char* target, char** report_json) {
  return guarded([&] {
    require(model, "model");
    require(manifest_path, "manifest_path");
    const std::string t = target ? target : model->synth->target();
    emit(report_json,
         ms::evaluate_conditions(*model->synth, ms::load_manifest(manifest_path), t).to_json());
  });
}

ms_status ms_psnr(const float* a, const float* b, size_t n, double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = ms::psnr(std::span<const float>(a, n), std::span<const float>(b, n));
  });
}

ms_status ms_mae(const float* a, const float* b, size_t n, double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = ms::mae(std::span<const float>(a, n), std::span<const float>(b, n));
  });
}

ms_status ms_wilcoxon_signed_rank(const double* x, const double* y, size_t n,
                                  char** result_json) {
  return guarded([&] {
    require(x, "x");
    require(y, "y");
    emit(result_json, ms::wilcoxon_signed_rank(std::span<const double>(x, n),
                                               std::span<const double>(y, n))
                          .to_json());
  });
}

ms_status ms_wilcoxon_rank_sum(const double* x, size_t nx, const double* y, size_t ny,
                               char** result_json) {
  return guarded([&] {
    if (nx) require(x, "x");
    if (ny) require(y, "y");
    emit(result_json, ms::wilcoxon_rank_sum(std::span<const double>(x, nx),
                                            std::span<const double>(y, ny))
                          .to_json());
  });
}

ms_status ms_study_plan(const ms_model* model, const char* manifest_path,
                        const char* options_json, const char* out_dir, char** result_json) {
  return guarded([&] {
    require(model, "model");
    require(manifest_path, "manifest_path");
    require(out_dir, "out_dir");
    const json o = parse_json(options_json, "study options");
    static const std::set<std::string> kKeys = {"conditions", "left", "raters",
                                                "per_condition", "real", "seed"};
    for (const auto& [k, _] : o.items()) {
      if (!kKeys.count(k)) ms::fail(ms::ErrorCode::kArgument, "unknown study option '" + k + "'");
    }
    if (!o.contains("conditions") || !o.contains("raters")) {
      ms::fail(ms::ErrorCode::kArgument, "study options need 'conditions' and 'raters'");
    }
    const auto conditions = o.at("conditions").get<std::vector<std::string>>();
    const auto raters = o.at("raters").get<std::vector<std::string>>();
    const std::string left = get_or<std::string>(o, "left", "flair");
    const int per_condition = get_or(o, "per_condition", ms::kDefaultPerCondition);
    const int n_real = get_or(o, "real", ms::kDefaultReal);
    const std::uint64_t seed = get_or<std::uint64_t>(o, "seed", 0);

    const fs::path out(out_dir);
    const auto pools = ms::build_condition_pools(*model->synth, ms::load_manifest(manifest_path),
                                                 conditions, left, out);
    const ms::StudyPlan plan = ms::plan_study(pools, per_condition, n_real, seed, raters);
    ms::render_study_images(plan, out / "images");
    ms::write_file_atomic(out / "plan.json", plan.to_json().dump(2) + "\n");
    json trials = json::object();
    for (const auto& [rater, list] : plan.trials) trials[rater] = list.size();
    emit(result_json, {{"plan", (out / "plan.json").string()},
                       {"images", plan.images.size()},
                       {"trials_per_rater", trials},
                       {"counts_per_condition", plan.counts_per_condition}});
  });
}

ms_status ms_study_report(const char* study_dir, char** summary_json) {
  return guarded([&] {
    require(study_dir, "study_dir");
    const fs::path dir(study_dir);
    const ms::StudyPlan plan =
        ms::StudyPlan::from_json(parse_json(ms::read_file_text(dir / "plan.json").c_str(), "plan"));
    emit(summary_json, ms::aggregate_ratings(ms::load_ratings(dir / "ratings.jsonl"), plan)
                           .to_json());
  });
}

ms_status ms_study_server_create(const char* study_dir, const char* admin_token,
                                 const char* static_root, ms_study_server** out) {
  return guarded([&] {
    require(study_dir, "study_dir");
    require(admin_token, "admin_token");
    require(out, "out");
    const fs::path dir(study_dir);
    ms::StudyPlan plan =
        ms::StudyPlan::from_json(parse_json(ms::read_file_text(dir / "plan.json").c_str(), "plan"));
    auto handle = std::make_unique<ms_study_server>();
    handle->server = std::make_unique<ms::StudyServer>(
        std::move(plan), dir / "images", dir / "ratings.jsonl", admin_token,
        static_root ? fs::path(static_root) : fs::path());
    *out = handle.release();
  });
}

void ms_study_server_free(ms_study_server* server) { delete server; }

ms_status ms_study_server_bind(ms_study_server* server, const char* host, int port,
                               int* bound_port) {
  return guarded([&] {
    require(server, "server");
    require(host, "host");
    server->server->bind(host, port);
    if (bound_port) *bound_port = server->server->port();
  });
}

ms_status ms_study_server_run(ms_study_server* server) {
  return guarded([&] {
    require(server, "server");
    server->server->run();
  });
}

ms_status ms_study_server_start(ms_study_server* server) {
  return guarded([&] {
    require(server, "server");
    server->server->start();
  });
}

ms_status ms_study_server_stop(ms_study_server* server) {
  return guarded([&] {
    require(server, "server");
    server->server->stop();
  });
}

}  // extern "C"
