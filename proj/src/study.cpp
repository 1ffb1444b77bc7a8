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

#include "modsynth/study.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <random>
#include <set>

#include "modsynth/dataio.hpp"
#include "modsynth/error.hpp"
#include "modsynth/raster_image.hpp"
#include "modsynth/synthesis.hpp"

namespace modsynth {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string image_id(std::uint64_t seed, const std::string& source) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(mix(fnv1a(source, mix(seed)))));
  return buf;
}

json trial_json(const TrialRecord& t) {
  return {{"trial_id", t.trial_id},       {"rater_id", t.rater_id},
          {"left_image", t.left_image},   {"right_image", t.right_image},
          {"right_is_real", t.right_is_real}, {"condition", t.condition},
          {"order_index", t.order_index}};
}

json rating_json(const RatingRecord& r) {
  return {{"trial_id", r.trial_id},
          {"rater_id", r.rater_id},
          {"stars", r.stars},
          {"timestamp_ms", r.timestamp_ms}};
}

RatingRecord rating_from_json(const json& j) {
  RatingRecord r;
  r.trial_id = j.at("trial_id").get<std::string>();
  r.rater_id = j.at("rater_id").get<std::string>();
  r.stars = j.at("stars").get<int>();
  r.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
  return r;
}

// Linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

// -- StudyPlan ------------------------------------------------------------------

const TrialRecord* StudyPlan::find(const std::string& rater,
                                   const std::string& trial_id) const {
  auto it = trials.find(rater);
  if (it == trials.end()) return nullptr;
  for (const auto& t : it->second) {
    if (t.trial_id == trial_id) return &t;
  }
  return nullptr;
}

json StudyPlan::to_json() const {
  json t = json::object();
  for (const auto& [rater, list] : trials) {
    json arr = json::array();
    for (const auto& tr : list) arr.push_back(trial_json(tr));
    t[rater] = arr;
  }
  return {{"seed", seed},
          {"raters", raters},
          {"images", images},
          {"counts_per_condition", counts_per_condition},
          {"trials", t}};
}

StudyPlan StudyPlan::from_json(const json& j) {
  StudyPlan p;
  try {
    p.seed = j.at("seed").get<std::uint64_t>();
    p.raters = j.at("raters").get<std::vector<std::string>>();
    p.images = j.at("images").get<std::map<std::string, std::string>>();
    p.counts_per_condition = j.at("counts_per_condition").get<std::map<std::string, int>>();
    for (const auto& [rater, arr] : j.at("trials").items()) {
      auto& list = p.trials[rater];
      for (const auto& t : arr) {
        list.push_back({t.at("trial_id").get<std::string>(),
                        t.at("rater_id").get<std::string>(),
                        t.at("left_image").get<std::string>(),
                        t.at("right_image").get<std::string>(),
                        t.at("right_is_real").get<bool>(),
                        t.at("condition").get<std::string>(),
                        t.at("order_index").get<int>()});
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("study plan: ") + e.what());
  }
  return p;
}

StudyPlan plan_study(const std::vector<ConditionPool>& pools, int n_per_condition,
                     int n_real, std::uint64_t seed, const std::vector<std::string>& raters) {
  if (n_per_condition < 0 || n_real < 0) {
    fail(ErrorCode::kArgument, "trial counts must be non-negative");
  }
  if (raters.empty()) fail(ErrorCode::kArgument, "a study needs at least one rater");
  std::set<std::string> unique_raters(raters.begin(), raters.end());
  if (unique_raters.size() != raters.size() || unique_raters.count("")) {
    fail(ErrorCode::kArgument, "rater ids must be unique and non-empty");
  }
  std::set<std::string> labels;
  for (const auto& pool : pools) {
    if (!labels.insert(pool.label).second) {
      fail(ErrorCode::kArgument, "duplicate pool label '" + pool.label + "'");
    }
    const int want = pool.real ? n_real : n_per_condition;
    if (static_cast<int>(pool.items.size()) < want) {
      fail(ErrorCode::kCapacity, "pool '" + pool.label + "' has " +
                                     std::to_string(pool.items.size()) + " items, " +
                                     std::to_string(want) + " requested");
    }
  }

  StudyPlan plan;
  plan.seed = seed;
  plan.raters = raters;
  auto register_image = [&](const std::string& source) {
    const std::string id = image_id(seed, source);
    auto [it, inserted] = plan.images.emplace(id, source);
    if (!inserted && it->second != source) {
      fail(ErrorCode::kConflict, "image id collision for " + source);
    }
    return id;
  };
  for (const auto& pool : pools) {
    plan.counts_per_condition[pool.label] = pool.real ? n_real : n_per_condition;
  }

  for (const auto& rater : raters) {
    std::mt19937_64 rng(mix(seed ^ fnv1a(rater)));
    std::vector<TrialRecord> trials;
    for (const auto& pool : pools) {
      const int want = pool.real ? n_real : n_per_condition;
      std::vector<std::size_t> idx(pool.items.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::shuffle(idx.begin(), idx.end(), rng);
      for (int k = 0; k < want; ++k) {
        const PoolItem& item = pool.items[idx[k]];
        TrialRecord t;
        t.rater_id = rater;
        t.left_image = register_image(item.left);
        t.right_image = register_image(item.right);
        t.right_is_real = pool.real;
        t.condition = pool.label;
        trials.push_back(std::move(t));
      }
    }
    std::shuffle(trials.begin(), trials.end(), rng);
    for (std::size_t i = 0; i < trials.size(); ++i) {
      char id[24];
      std::snprintf(id, sizeof(id), "t%04zu", i);
      trials[i].trial_id = id;
      trials[i].order_index = static_cast<int>(i);
    }
    plan.trials[rater] = std::move(trials);
  }
  return plan;
}

std::vector<ConditionPool> build_condition_pools(const Synthesizer& synth,
                                                 const CorpusManifest& test,
                                                 const std::vector<std::string>& conditions,
                                                 const std::string& left_modality,
                                                 const std::filesystem::path& out_dir) {
  if (test.entries.empty()) fail(ErrorCode::kData, "test split is empty");
  if (conditions.empty()) fail(ErrorCode::kArgument, "no study conditions given");
  const auto& mods = synth.modalities();
  if (std::find(mods.begin(), mods.end(), left_modality) == mods.end()) {
    fail(ErrorCode::kArgument, "left modality '" + left_modality + "' is not a model input");
  }
  std::vector<ConditionVector> bits;
  for (const auto& label : conditions) {
    std::vector<std::string> names;
    std::size_t start = 0;
    while (true) {
      const auto plus = label.find('+', start);
      names.push_back(label.substr(start, plus - start));
      if (plus == std::string::npos) break;
      start = plus + 1;
    }
    bits.push_back(condition_from_names(mods, names));
  }

  const int size = synth.canonical_size();
  const auto slices = out_dir / "slices";
  std::filesystem::create_directories(slices);
  std::vector<ConditionPool> pools(conditions.size());
  for (std::size_t k = 0; k < conditions.size(); ++k) {
    pools[k].label = condition_label(bits[k], mods);
  }
  ConditionPool real{"real", true, {}};
  for (const auto& e : test.entries) {
    const std::string key = e.subject + "_" + std::to_string(e.slice);
    const SliceStack stack = preprocess(load_entry(test, e, mods), size);
    const SliceStack truth = preprocess(load_entry(test, e, {synth.target()}), size);
    const SliceStack left = preprocess(load_entry(test, e, {left_modality}), size);
    const auto left_path = slices / (key + "_" + left_modality + ".msl");
    const auto real_path = slices / (key + "_" + synth.target() + ".msl");
    write_slice_file(left_path, left);
    write_slice_file(real_path, truth);
    real.items.push_back({left_path.string(), real_path.string()});
    for (std::size_t k = 0; k < conditions.size(); ++k) {
      const auto path = slices / (key + "_" + synth.target() + "_from_" + bits[k].to_string() + ".msl");
      write_slice_file(path, synth.synthesize(stack, bits[k]));
      pools[k].items.push_back({left_path.string(), path.string()});
    }
  }
  pools.push_back(std::move(real));
  return pools;
}

void render_study_images(const StudyPlan& plan, const std::filesystem::path& image_root) {
  for (const auto& [id, source] : plan.images) {
    write_png(image_root / (id + ".png"), read_slice_file(source), 0);
  }
}

// -- RatingStore ----------------------------------------------------------------

std::vector<RatingRecord> load_ratings(const std::filesystem::path& log_path) {
  std::vector<RatingRecord> out;
  std::ifstream in(log_path);
  if (!in) return out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(rating_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      fail(ErrorCode::kFormat, log_path.string() + ":" + std::to_string(lineno) + ": " +
                                   e.what());
    }
  }
  return out;
}

RatingStore::RatingStore(const StudyPlan& plan, std::filesystem::path log_path)
    : plan_(plan), log_path_(std::move(log_path)) {
  for (auto& r : load_ratings(log_path_)) {
    if (!plan_.find(r.rater_id, r.trial_id)) {
      fail(ErrorCode::kData, "ratings log references unknown trial " + r.rater_id + "/" +
                                 r.trial_id);
    }
    const auto key = std::make_pair(r.rater_id, r.trial_id);
    if (index_.count(key)) continue;  // first write wins
    index_[key] = ratings_.size();
    ratings_.push_back(std::move(r));
  }
  if (log_path_.has_parent_path()) std::filesystem::create_directories(log_path_.parent_path());
  fd_ = ::open(log_path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd_ < 0) fail(ErrorCode::kIo, "cannot open ratings log " + log_path_.string());
}

RatingStore::~RatingStore() {
  if (fd_ >= 0) ::close(fd_);
}

RatingOutcome RatingStore::add(const std::string& rater, const std::string& trial_id,
                               int stars) {
  if (stars < kMinStars || stars > kMaxStars) return RatingOutcome::kInvalidStars;
  if (!plan_.trials.count(rater)) return RatingOutcome::kUnknownRater;
  if (!plan_.find(rater, trial_id)) return RatingOutcome::kUnknownTrial;

  std::unique_lock lock(mutex_);
  const auto key = std::make_pair(rater, trial_id);
  if (index_.count(key)) return RatingOutcome::kDuplicate;
  RatingRecord r{trial_id, rater, stars,
                 std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::system_clock::now().time_since_epoch())
                     .count()};
  const std::string line = rating_json(r).dump() + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd_, line.data() + written, line.size() - written);
    if (n < 0) fail(ErrorCode::kIo, "cannot append to " + log_path_.string());
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) fail(ErrorCode::kIo, "cannot sync " + log_path_.string());
  index_[key] = ratings_.size();
  ratings_.push_back(std::move(r));
  return RatingOutcome::kStored;
}

std::optional<int> RatingStore::stars(const std::string& rater,
                                      const std::string& trial_id) const {
  std::shared_lock lock(mutex_);
  auto it = index_.find({rater, trial_id});
  if (it == index_.end()) return std::nullopt;
  return ratings_[it->second].stars;
}

std::optional<TrialRecord> RatingStore::next_trial(const std::string& rater) const {
  auto it = plan_.trials.find(rater);
  if (it == plan_.trials.end()) return std::nullopt;
  std::shared_lock lock(mutex_);
  for (const auto& t : it->second) {
    if (!index_.count({rater, t.trial_id})) return t;
  }
  return std::nullopt;
}

std::vector<RatingRecord> RatingStore::snapshot() const {
  std::shared_lock lock(mutex_);
  return ratings_;
}

// -- Aggregation ----------------------------------------------------------------

StudySummary aggregate_ratings(const std::vector<RatingRecord>& ratings,
                               const StudyPlan& plan) {
  struct Acc {
    bool real = false;
    std::vector<double> stars;
    std::map<std::string, std::pair<double, int>> per_rater;
  };
  std::map<std::string, Acc> acc;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : ratings) {
    const TrialRecord* t = plan.find(r.rater_id, r.trial_id);
    if (!t) {
      fail(ErrorCode::kData, "rating for unknown trial " + r.rater_id + "/" + r.trial_id);
    }
    if (!seen.emplace(r.rater_id, r.trial_id).second) continue;
    Acc& a = acc[t->condition];
    a.real = t->right_is_real;
    a.stars.push_back(r.stars);
    auto& pr = a.per_rater[r.rater_id];
    pr.first += r.stars;
    pr.second += 1;
  }

  StudySummary summary;
  const ConditionSummary* real = nullptr;
  for (const auto& [label, _] : plan.counts_per_condition) {
    auto it = acc.find(label);
    if (it == acc.end() || it->second.stars.empty()) {
      summary.warnings.push_back("condition '" + label + "' has no ratings; excluded");
      continue;
    }
    const Acc& a = it->second;
    ConditionSummary c;
    c.condition = label;
    c.real = a.real;
    c.n_ratings = static_cast<int>(a.stars.size());
    double total = 0.0;
    for (double s : a.stars) total += s;
    c.mean = total / c.n_ratings;
    for (const auto& [rater, pr] : a.per_rater) c.rater_means[rater] = pr.first / pr.second;
    std::vector<double> sorted = a.stars;
    std::sort(sorted.begin(), sorted.end());
    c.quartiles = {sorted.front(), quantile(sorted, 0.25), quantile(sorted, 0.5),
                   quantile(sorted, 0.75), sorted.back()};
    summary.conditions.push_back(std::move(c));
  }
  for (const auto& c : summary.conditions) {
    if (c.real) {
      real = &c;
      break;
    }
  }
  if (!real) {
    summary.warnings.push_back("no rated real-image condition; rank-sum tests skipped");
    return summary;
  }
  std::vector<double> real_means;
  for (const auto& [_, m] : real->rater_means) real_means.push_back(m);
  for (auto& c : summary.conditions) {
    if (c.real) continue;
    std::vector<double> means;
    for (const auto& [_, m] : c.rater_means) means.push_back(m);
    if (means.size() < 3 || real_means.size() < 3) {
      summary.warnings.push_back("condition '" + c.condition +
                                 "': fewer than 3 raters on one side; rank-sum test skipped");
      continue;
    }
    c.versus_real = wilcoxon_rank_sum(means, real_means);
  }
  return summary;
}

json StudySummary::to_json() const {
  json conds = json::array();
  for (const auto& c : conditions) {
    conds.push_back({{"condition", c.condition},
                     {"real", c.real},
                     {"n_ratings", c.n_ratings},
                     {"mean", c.mean},
                     {"rater_means", c.rater_means},
                     {"quartiles",
                      {{"min", c.quartiles.min},
                       {"q1", c.quartiles.q1},
                       {"median", c.quartiles.median},
                       {"q3", c.quartiles.q3},
                       {"max", c.quartiles.max}}},
                     {"rank_sum_vs_real",
                      c.versus_real ? c.versus_real->to_json() : json(nullptr)}});
  }
  return {{"conditions", conds}, {"warnings", warnings}};
}

}  // namespace modsynth
