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

// modsynth command-line front end. Talks to the library only through the C
// interface in modsynth/modsynth.h.

#include <pthread.h>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "modsynth/modsynth.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Failure {
  ms_status status;
  std::string message;
};

void check(ms_status s) {
  if (s != MS_OK) throw Failure{s, ms_last_error()};
}

// Takes ownership of a library string.
json take_json(char* s) {
  json j = json::parse(s);
  ms_string_free(s);
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure{MS_ERR_IO, "cannot read " + path};
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Failure{MS_ERR_FORMAT, path + ": " + e.what()};
  }
}

void write_json_file(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (!out) throw Failure{MS_ERR_IO, "cannot write " + path.string()};
}

// Config echo for commands whose --out is a file: <stem>.config.json beside it.
fs::path echo_path(const fs::path& out) {
  return out.parent_path() / (out.stem().string() + ".config.json");
}

class Model {
 public:
  explicit Model(const std::string& ckpt) { check(ms_model_load(ckpt.c_str(), &m_)); }
  ~Model() { ms_model_free(m_); }
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  ms_model* get() const { return m_; }

 private:
  ms_model* m_ = nullptr;
};

// -- phantom

struct PhantomArgs {
  std::string out;
  int subjects = 10;
  int slices = 8;
  std::uint64_t seed = 0;
  int size = 240;
  bool misalign = false;
  double val_fraction = 0.1;
  double test_fraction = 0.2;
};

void run_phantom(const PhantomArgs& a) {
  const json opts = {{"subjects", a.subjects},         {"slices", a.slices},
                     {"seed", a.seed},                 {"size", a.size},
                     {"misalign", a.misalign},         {"val_fraction", a.val_fraction},
                     {"test_fraction", a.test_fraction}};
  char* result = nullptr;
  check(ms_phantom_generate(opts.dump().c_str(), a.out.c_str(), &result));
  const json r = take_json(result);
  write_json_file(fs::path(a.out) / "phantom_config.json", r.at("options"));
  std::cout << "phantom corpus in " << a.out << ": " << r.at("train") << " train, "
            << r.at("val") << " val, " << r.at("test") << " test slices\n";
}

// -- train

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::int64_t seed = -1;
  int epochs = -1;
};

void run_train(const TrainArgs& a) {
  json cfg = read_json_file(a.config);
  if (a.seed >= 0) cfg["seed"] = a.seed;
  if (a.epochs >= 0) cfg["epochs"] = a.epochs;
  char* result = nullptr;
  check(ms_train(cfg.dump().c_str(), a.data.c_str(), a.out.c_str(), &result));
  const json r = take_json(result);
  int epoch = 0;
  for (const auto& e : r.at("epochs")) {
    const auto& m = e.at("mean");
    std::printf("epoch %3d  total_g %.5f  total_d %.5f  rec_f %.5f  rec_b %.5f\n", ++epoch,
                m.at("total_g").get<double>(), m.at("total_d").get<double>(),
                m.at("rec_forward").get<double>(), m.at("rec_backward").get<double>());
  }
  std::cout << "checkpoint " << r.at("checkpoint").get<std::string>() << "\n";
}

// -- synth

struct SynthArgs {
  std::string ckpt;
  std::vector<std::string> inputs;
  std::string target;
  std::string out;
  std::string diff;
};

void run_synth(const SynthArgs& a) {
  json inputs = json::object();
  for (const auto& item : a.inputs) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      throw Failure{MS_ERR_ARGUMENT, "--inputs expects name=path, got '" + item + "'"};
    }
    inputs[item.substr(0, eq)] = item.substr(eq + 1);
  }
  Model model(a.ckpt);
  char* result = nullptr;
  check(ms_model_synthesize_files(model.get(), inputs.dump().c_str(), a.target.c_str(),
                                  a.out.c_str(), a.diff.empty() ? nullptr : a.diff.c_str(),
                                  &result));
  const json r = take_json(result);
  write_json_file(echo_path(a.out), {{"ckpt", a.ckpt},
                                     {"inputs", inputs},
                                     {"target", a.target},
                                     {"out", a.out},
                                     {"diff", a.diff.empty() ? json(nullptr) : json(a.diff)}});
  std::cout << "wrote " << r.at("output").get<std::string>() << "\n";
  if (r.contains("diff_image")) {
    std::cout << "difference map " << r.at("diff_image").get<std::string>() << "\n";
    if (r.at("psnr_infinite").get<bool>()) {
      std::printf("psnr inf dB  mae %.4f\n", r.at("mae").get<double>());
    } else {
      std::printf("psnr %.2f dB  mae %.4f\n", r.at("psnr").get<double>(),
                  r.at("mae").get<double>());
    }
  }
}

// -- eval

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string target;
  std::string out;
};

void run_eval(const EvalArgs& a) {
  Model model(a.ckpt);
  char* report = nullptr;
  check(ms_model_evaluate(model.get(), a.data.c_str(), a.target.c_str(), &report));
  const json r = take_json(report);
  write_json_file(a.out, r);
  write_json_file(echo_path(a.out),
                  {{"ckpt", a.ckpt}, {"data", a.data}, {"target", a.target}, {"out", a.out}});
  std::printf("%-20s %10s %8s\n", "condition", "PSNR (dB)", "MAE");
  for (const auto& row : r.at("rows")) {
    const std::string psnr =
        row.at("psnr").is_null() ? "inf" : std::to_string(row.at("psnr").get<double>());
    std::printf("%-20s %10.10s %8.4f\n", row.at("condition").get<std::string>().c_str(),
                psnr.c_str(), row.at("mae").get<double>());
  }
}

// -- study

struct StudyPlanArgs {
  std::string ckpt;
  std::string data;
  std::string out;
  std::vector<std::string> raters;
  std::vector<std::string> conditions = {"t1", "t2", "flair", "t1+flair", "t2+flair",
                                         "t1+t2+flair"};
  std::string left = "flair";
  int per_condition = 35;
  int real = 70;
  std::uint64_t seed = 0;
};

void run_study_plan(const StudyPlanArgs& a) {
  const json opts = {{"conditions", a.conditions}, {"left", a.left},
                     {"raters", a.raters},         {"per_condition", a.per_condition},
                     {"real", a.real},             {"seed", a.seed}};
  Model model(a.ckpt);
  char* result = nullptr;
  check(ms_study_plan(model.get(), a.data.c_str(), opts.dump().c_str(), a.out.c_str(),
                      &result));
  const json r = take_json(result);
  json echo = opts;
  echo["ckpt"] = a.ckpt;
  echo["data"] = a.data;
  write_json_file(fs::path(a.out) / "study_config.json", echo);
  for (const auto& [rater, n] : r.at("trials_per_rater").items()) {
    std::cout << rater << ": " << n << " trials\n";
  }
  std::cout << "plan " << r.at("plan").get<std::string>() << "\n";
}

struct StudyServeArgs {
  std::string study;
  std::string bind = "127.0.0.1:8080";
  std::string admin_token;
  std::string static_root;
};

void run_study_serve(const StudyServeArgs& a) {
  std::string token = a.admin_token;
  if (token.empty()) {
    if (const char* env = std::getenv("MODSYNTH_ADMIN_TOKEN")) token = env;
  }
  if (token.empty()) {
    throw Failure{MS_ERR_ARGUMENT, "an admin token is required (--admin-token or MODSYNTH_ADMIN_TOKEN)"};
  }
  const auto colon = a.bind.rfind(':');
  if (colon == std::string::npos) throw Failure{MS_ERR_ARGUMENT, "--bind expects host:port"};
  std::string host = a.bind.substr(0, colon);
  if (host.empty()) host = "127.0.0.1";
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(a.bind.substr(colon + 1), &used);
    if (used != a.bind.size() - colon - 1) port = -1;
  } catch (const std::exception&) {
  }
  if (port < 0 || port > 65535) throw Failure{MS_ERR_ARGUMENT, "invalid port in --bind"};

  ms_study_server* server = nullptr;
  check(ms_study_server_create(a.study.c_str(), token.c_str(),
                               a.static_root.empty() ? nullptr : a.static_root.c_str(), &server));
  std::unique_ptr<ms_study_server, void (*)(ms_study_server*)> guard(server,
                                                                     ms_study_server_free);
  int bound = 0;
  check(ms_study_server_bind(server, host.c_str(), port, &bound));

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  check(ms_study_server_start(server));
  std::cout << "serving study " << a.study << " on http://" << host << ":" << bound << "/"
            << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  check(ms_study_server_stop(server));
  std::cout << "stopped\n";
}

struct StudyReportArgs {
  std::string study;
  std::string out;
};

void run_study_report(const StudyReportArgs& a) {
  char* summary = nullptr;
  check(ms_study_report(a.study.c_str(), &summary));
  const json s = take_json(summary);
  const fs::path out = a.out.empty() ? fs::path(a.study) / "summary.json" : fs::path(a.out);
  write_json_file(out, s);
  write_json_file(echo_path(out), {{"study", a.study}, {"out", out.string()}});
  std::printf("%-20s %5s %7s %10s\n", "condition", "n", "mean", "p vs real");
  for (const auto& c : s.at("conditions")) {
    const auto& test = c.at("rank_sum_vs_real");
    const std::string p = test.is_null() ? "-" : std::to_string(test.at("p_value").get<double>());
    std::printf("%-20s %5d %7.3f %10.10s\n", c.at("condition").get<std::string>().c_str(),
                c.at("n_ratings").get<int>(), c.at("mean").get<double>(), p.c_str());
  }
  for (const auto& w : s.at("warnings")) std::cout << "warning: " << w.get<std::string>() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-modal MRI sequence synthesis: phantom data, training, inference, "
               "evaluation and rater studies."};
  app.require_subcommand(1);
  app.set_version_flag("--version", ms_version());

  PhantomArgs phantom;
  auto* ph = app.add_subcommand("phantom", "Generate a synthetic multi-modal phantom corpus");
  ph->add_option("--out", phantom.out, "Output directory")->required();
  ph->add_option("--subjects", phantom.subjects, "Number of subjects")
      ->check(CLI::PositiveNumber)->capture_default_str();
  ph->add_option("--slices", phantom.slices, "Slices per subject")
      ->check(CLI::PositiveNumber)->capture_default_str();
  ph->add_option("--seed", phantom.seed, "Random seed")->capture_default_str();
  ph->add_option("--size", phantom.size, "Canonical slice size")->capture_default_str();
  ph->add_flag("--misalign", phantom.misalign, "Shift each modality by a few pixels");
  ph->add_option("--val-fraction", phantom.val_fraction, "Fraction of subjects for validation")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  ph->add_option("--test-fraction", phantom.test_fraction, "Fraction of subjects for testing")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();

  TrainArgs train;
  auto* tr = app.add_subcommand("train", "Train generators and discriminators from scratch");
  tr->add_option("--config", train.config, "Training config JSON")->required()->check(CLI::ExistingFile);
  tr->add_option("--data", train.data, "Training manifest")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", train.out, "Output directory")->required();
  tr->add_option("--seed", train.seed, "Override the config seed")->check(CLI::NonNegativeNumber);
  tr->add_option("--epochs", train.epochs, "Override the config epoch count")
      ->check(CLI::NonNegativeNumber);

  SynthArgs synth;
  auto* sy = app.add_subcommand("synth", "Synthesize the target modality from any input subset");
  sy->add_option("--ckpt", synth.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  sy->add_option("--inputs", synth.inputs, "Inputs as name=path,...")
      ->required()->delimiter(',');
  sy->add_option("--target", synth.target, "Target modality")->required();
  sy->add_option("--out", synth.out, "Output MSL file")->required();
  sy->add_option("--diff", synth.diff, "Real target MSL; writes a difference heat map")
      ->check(CLI::ExistingFile);

  EvalArgs eval;
  auto* ev = app.add_subcommand("eval", "PSNR/MAE per input condition on a test split");
  ev->add_option("--ckpt", eval.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", eval.data, "Test manifest")->required()->check(CLI::ExistingFile);
  ev->add_option("--target", eval.target, "Target modality")->required();
  ev->add_option("--out", eval.out, "Report JSON path")->required();

  auto* st = app.add_subcommand("study", "Visual rating study");
  st->require_subcommand(1);

  StudyPlanArgs plan;
  auto* sp = st->add_subcommand("plan", "Synthesize trial images and plan randomized trials");
  sp->add_option("--ckpt", plan.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  sp->add_option("--data", plan.data, "Test manifest")->required()->check(CLI::ExistingFile);
  sp->add_option("--out", plan.out, "Study directory")->required();
  sp->add_option("--raters", plan.raters, "Rater ids, comma separated")
      ->required()->delimiter(',');
  sp->add_option("--conditions", plan.conditions, "Synthetic conditions such as t1+flair")
      ->delimiter(',')->capture_default_str();
  sp->add_option("--left", plan.left, "Real source modality shown on the left")
      ->capture_default_str();
  sp->add_option("--per-condition", plan.per_condition, "Synthetic trials per condition")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  sp->add_option("--real", plan.real, "Real-image trials")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  sp->add_option("--seed", plan.seed, "Random seed")->capture_default_str();

  StudyServeArgs serve;
  auto* ss = st->add_subcommand("serve", "Serve the rating API for a planned study");
  ss->add_option("--study", serve.study, "Study directory")->required()->check(CLI::ExistingDirectory);
  ss->add_option("--bind", serve.bind, "host:port")->capture_default_str();
  ss->add_option("--admin-token", serve.admin_token,
                 "Token for /api/export (default: $MODSYNTH_ADMIN_TOKEN)");
  ss->add_option("--static", serve.static_root, "Directory served at /")
      ->check(CLI::ExistingDirectory);

  StudyReportArgs report;
  auto* sr = st->add_subcommand("report", "Aggregate ratings per condition");
  sr->add_option("--study", report.study, "Study directory")->required()->check(CLI::ExistingDirectory);
  sr->add_option("--out", report.out, "Summary JSON path (default: <study>/summary.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*ph) run_phantom(phantom);
    else if (*tr) run_train(train);
    else if (*sy) run_synth(synth);
    else if (*ev) run_eval(eval);
    else if (*sp) run_study_plan(plan);
    else if (*ss) run_study_serve(serve);
    else if (*sr) run_study_report(report);
  } catch (const Failure& f) {
    std::cerr << json{{"error", ms_status_name(f.status)},
                      {"code", static_cast<int>(f.status)},
                      {"message", f.message}}
                     .dump()
              << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"code", static_cast<int>(MS_ERR_INTERNAL)},
                      {"message", e.what()}}
                     .dump()
              << "\n";
    return kExitFailure;
  }
  return 0;
}
