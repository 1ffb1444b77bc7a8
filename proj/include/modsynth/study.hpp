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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "modsynth/dataio.hpp"
#include "modsynth/evalmetrics.hpp"

namespace httplib {
class Server;
}

namespace modsynth {

// -- Plan -----------------------------------------------------------------------

/// One candidate presentation: a real source slice shown on the left and the
/// slice to be rated on the right. Both are MSL file paths.
struct PoolItem {
  std::string left;
  std::string right;
};

struct ConditionPool {
  std::string label;  // input subset such as "t1+t2+flair", or "real"
  bool real = false;
  std::vector<PoolItem> items;
};

struct TrialRecord {
  std::string trial_id;
  std::string rater_id;
  std::string left_image;   // opaque image id
  std::string right_image;  // opaque image id
  bool right_is_real = false;
  std::string condition;
  int order_index = 0;

  bool operator==(const TrialRecord&) const = default;
};

struct RatingRecord {
  std::string trial_id;
  std::string rater_id;
  int stars = 0;
  std::int64_t timestamp_ms = 0;
};

inline constexpr int kMinStars = 1;
inline constexpr int kMaxStars = 6;
inline constexpr int kDefaultSyntheticConditions = 6;
inline constexpr int kDefaultPerCondition = 35;
inline constexpr int kDefaultReal = 70;

struct StudyPlan {
  std::uint64_t seed = 0;
  std::vector<std::string> raters;
  std::map<std::string, std::vector<TrialRecord>> trials;  // by rater, in order
  std::map<std::string, std::string> images;                // id -> MSL source
  std::map<std::string, int> counts_per_condition;          // per rater

  const TrialRecord* find(const std::string& rater, const std::string& trial_id) const;
  nlohmann::json to_json() const;
  static StudyPlan from_json(const nlohmann::json& j);
};

/// Samples `n_per_condition` items without replacement from every synthetic
/// pool and `n_real` from the real pool(s), then shuffles the presentation
/// order per rater. Deterministic in (seed, rater id).
StudyPlan plan_study(const std::vector<ConditionPool>& pools, int n_per_condition,
                     int n_real, std::uint64_t seed, const std::vector<std::string>& raters);

class Synthesizer;

/// Builds one pool per condition label (e.g. "t1+flair") plus a "real" pool
/// from a test split. Left images are the `left_modality` source slices;
/// synthetic and real targets are written as MSL under `out_dir/slices`.
std::vector<ConditionPool> build_condition_pools(const Synthesizer& synth,
                                                 const CorpusManifest& test,
                                                 const std::vector<std::string>& conditions,
                                                 const std::string& left_modality,
                                                 const std::filesystem::path& out_dir);

/// Renders every plan image to `image_root/<id>.png`.
void render_study_images(const StudyPlan& plan, const std::filesystem::path& image_root);

// -- Ratings ------------------------------------------------------------------

enum class RatingOutcome { kStored, kInvalidStars, kUnknownRater, kUnknownTrial, kDuplicate };

/// Ratings keyed by (rater, trial), backed by an append-only JSON-lines log
/// that is fsync'd before add() returns kStored. Thread-safe.
class RatingStore {
 public:
  RatingStore(const StudyPlan& plan, std::filesystem::path log_path);
  ~RatingStore();
  RatingStore(const RatingStore&) = delete;
  RatingStore& operator=(const RatingStore&) = delete;

  RatingOutcome add(const std::string& rater, const std::string& trial_id, int stars);
  std::optional<int> stars(const std::string& rater, const std::string& trial_id) const;
  /// First trial in the rater's order that has no rating yet.
  std::optional<TrialRecord> next_trial(const std::string& rater) const;
  std::vector<RatingRecord> snapshot() const;

 private:
  const StudyPlan& plan_;
  std::filesystem::path log_path_;
  int fd_ = -1;
  mutable std::shared_mutex mutex_;
  std::vector<RatingRecord> ratings_;
  std::map<std::pair<std::string, std::string>, std::size_t> index_;
};

std::vector<RatingRecord> load_ratings(const std::filesystem::path& log_path);

// -- Aggregation --------------------------------------------------------------

struct Quartiles {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

struct ConditionSummary {
  std::string condition;
  bool real = false;
  int n_ratings = 0;
  double mean = 0.0;
  std::map<std::string, double> rater_means;
  Quartiles quartiles;
  std::optional<TestResult> versus_real;  // rank-sum on per-rater means
};

struct StudySummary {
  std::vector<ConditionSummary> conditions;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

StudySummary aggregate_ratings(const std::vector<RatingRecord>& ratings,
                               const StudyPlan& plan);

// -- HTTP service ---------------------------------------------------------------

/// Serves one trial at a time per rater:
///   GET  /api/raters/{id}/next     -> {trial_id, left_image_url, right_image_url, index, total}
///   POST /api/raters/{id}/ratings  <- {trial_id, stars}
///   GET  /api/export               (X-Admin-Token header) -> plan + ratings
///   GET  /img/{image id}.png
/// Responses never carry the real/synthetic flag or the condition label,
/// except through the admin export.
class StudyServer {
 public:
  StudyServer(StudyPlan plan, std::filesystem::path image_root,
              std::filesystem::path ratings_log, std::string admin_token,
              std::filesystem::path static_root = {});
  ~StudyServer();

  /// Binds host:port (port 0 picks a free one). Throws a bind error.
  void bind(const std::string& host, int port);
  int port() const { return port_; }
  /// Blocks serving requests until stop().
  void run();
  /// Runs in a background thread.
  void start();
  void stop();

  const RatingStore& store() const { return *store_; }

 private:
  void install_routes();

  StudyPlan plan_;
  std::filesystem::path image_root_;
  std::string admin_token_;
  std::filesystem::path static_root_;
  std::unique_ptr<RatingStore> store_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = -1;
};

/// Parses "host:port" (or ":port") for StudyServer::bind.
std::pair<std::string, int> parse_bind_address(const std::string& address);

}  // namespace modsynth
