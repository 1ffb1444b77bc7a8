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

#include <cmath>
#include <cstdio>
#include <limits>

#include "modsynth/error.hpp"
#include "modsynth/evalmetrics.hpp"
#include "modsynth/synthesis.hpp"

namespace modsynth {

using nlohmann::json;

EvalReport evaluate_conditions(const Synthesizer& synth, const CorpusManifest& test,
                               const std::string& target) {
  if (test.entries.empty()) fail(ErrorCode::kData, "test split is empty");
  if (target != synth.target()) {
    fail(ErrorCode::kArgument, "checkpoint synthesizes '" + synth.target() + "', not '" +
                                   target + "'");
  }
  const auto& modalities = synth.modalities();
  const int size = synth.canonical_size();

  // Load each slice once; reused under every condition.
  std::vector<SliceStack> inputs;
  std::vector<SliceStack> truths;
  for (const auto& e : test.entries) {
    inputs.push_back(preprocess(load_entry(test, e, modalities), size));
    truths.push_back(preprocess(load_entry(test, e, {target}), size));
  }

  EvalReport report{target, modalities, {}};
  for (const ConditionVector& c : enumerate_subsets(static_cast<int>(modalities.size()))) {
    MetricRow row;
    row.condition = condition_label(c, modalities);
    row.bits = c;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const TargetSlice fake = synth.synthesize(inputs[i], c);
      row.slice_psnr.push_back(psnr(fake, truths[i]));
      row.slice_mae.push_back(mae(fake, truths[i]));
    }
    row.n_slices = static_cast<int>(inputs.size());
    double ps = 0.0, ms = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      ps += row.slice_psnr[i];
      ms += row.slice_mae[i];
    }
    row.psnr = ps / row.n_slices;
    row.mae = ms / row.n_slices;
    report.rows.push_back(std::move(row));
  }
  return report;
}

EvalReport evaluate_conditions(const std::filesystem::path& checkpoint,
                               const CorpusManifest& test, const std::string& target) {
  const Synthesizer synth(checkpoint);
  return evaluate_conditions(synth, test, target);
}

json EvalReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    const bool inf = std::isinf(r.psnr);
    rows_json.push_back({{"condition", r.condition},
                         {"bits", r.bits.bits},
                         {"psnr", inf ? json(nullptr) : json(r.psnr)},
                         {"psnr_infinite", inf},
                         {"mae", r.mae},
                         {"n_slices", r.n_slices}});
  }
  return {{"target", target}, {"modalities", modalities}, {"rows", rows_json}};
}

std::string EvalReport::to_table() const {
  std::size_t width = 9;
  for (const auto& r : rows) width = std::max(width, r.condition.size());
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s  %10s  %8s  %8s\n", static_cast<int>(width),
                "condition", "PSNR (dB)", "MAE", "slices");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-*s  %10.2f  %8.4f  %8d\n", static_cast<int>(width),
                  r.condition.c_str(), r.psnr, r.mae, r.n_slices);
    out += line;
  }
  return out;
}

}  // namespace modsynth
