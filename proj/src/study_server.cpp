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

#include <httplib.h>

#include <regex>

#include "modsynth/error.hpp"
#include "modsynth/fsutil.hpp"
#include "modsynth/study.hpp"

namespace modsynth {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

}  // namespace

StudyServer::StudyServer(StudyPlan plan, std::filesystem::path image_root,
                         std::filesystem::path ratings_log, std::string admin_token,
                         std::filesystem::path static_root)
    : plan_(std::move(plan)),
      image_root_(std::move(image_root)),
      admin_token_(std::move(admin_token)),
      static_root_(std::move(static_root)),
      server_(std::make_unique<httplib::Server>()) {
  if (admin_token_.empty()) fail(ErrorCode::kArgument, "admin token must not be empty");
  store_ = std::make_unique<RatingStore>(plan_, std::move(ratings_log));
  // SO_REUSEADDR only, no SO_REUSEPORT.
  server_->set_socket_options([](int sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  install_routes();
}

StudyServer::~StudyServer() { stop(); }

void StudyServer::install_routes() {
  auto& srv = *server_;

  srv.Get("/api/raters/:id/next", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string rater = req.path_params.at("id");
    auto it = plan_.trials.find(rater);
    if (it == plan_.trials.end()) return send_error(res, 404, "unknown rater");
    const int total = static_cast<int>(it->second.size());
    auto next = store_->next_trial(rater);
    if (!next) return send_json(res, 200, {{"done", true}, {"index", total}, {"total", total}});
    send_json(res, 200,
              {{"done", false},
               {"trial_id", next->trial_id},
               {"left_image_url", "/img/" + next->left_image + ".png"},
               {"right_image_url", "/img/" + next->right_image + ".png"},
               {"index", next->order_index},
               {"total", total}});
  });

  srv.Post("/api/raters/:id/ratings",
           [this](const httplib::Request& req, httplib::Response& res) {
             const std::string rater = req.path_params.at("id");
             std::string trial_id;
             int stars = 0;
             try {
               const json body = json::parse(req.body);
               trial_id = body.at("trial_id").get<std::string>();
               stars = body.at("stars").get<int>();
             } catch (const json::exception&) {
               return send_error(res, 400, "body must be {\"trial_id\": string, \"stars\": int}");
             }
             switch (store_->add(rater, trial_id, stars)) {
               case RatingOutcome::kStored:
                 return send_json(res, 201, {{"trial_id", trial_id}, {"stars", stars}});
               case RatingOutcome::kInvalidStars:
                 return send_error(res, 400, "stars must be an integer from 1 to 6");
               case RatingOutcome::kUnknownRater:
                 return send_error(res, 404, "unknown rater");
               case RatingOutcome::kUnknownTrial:
                 return send_error(res, 404, "unknown trial");
               case RatingOutcome::kDuplicate:
                 return send_error(res, 409, "trial already rated");
             }
           });

  srv.Get("/api/export", [this](const httplib::Request& req, httplib::Response& res) {
    std::string token = req.get_header_value("X-Admin-Token");
    if (token.empty()) token = req.get_param_value("token");
    if (token != admin_token_) return send_error(res, 403, "admin token required");
    json ratings = json::array();
    for (const auto& r : store_->snapshot()) {
      ratings.push_back({{"trial_id", r.trial_id},
                         {"rater_id", r.rater_id},
                         {"stars", r.stars},
                         {"timestamp_ms", r.timestamp_ms}});
    }
    send_json(res, 200, {{"plan", plan_.to_json()}, {"ratings", ratings}});
  });

  srv.Get("/img/:file", [this](const httplib::Request& req, httplib::Response& res) {
    static const std::regex kName("([0-9a-f]{16})\\.png");
    const std::string file = req.path_params.at("file");
    std::smatch m;
    if (!std::regex_match(file, m, kName) || !plan_.images.count(m[1].str())) {
      return send_error(res, 404, "unknown image");
    }
    try {
      const auto bytes = read_file_bytes(image_root_ / file);
      res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(), "image/png");
    } catch (const Error&) {
      send_error(res, 404, "image not rendered");
    }
  });

  if (!static_root_.empty() && !srv.set_mount_point("/", static_root_.string())) {
    fail(ErrorCode::kNotFound, "static root " + static_root_.string() + " not found");
  }
}

void StudyServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
    if (port_ < 0) fail(ErrorCode::kBind, "cannot bind " + host + ":0");
  } else {
    if (!server_->bind_to_port(host, port)) {
      fail(ErrorCode::kBind, "cannot bind " + host + ":" + std::to_string(port));
    }
    port_ = port;
  }
}

void StudyServer::run() {
  if (port_ < 0) fail(ErrorCode::kArgument, "bind() before run()");
  server_->listen_after_bind();
}

void StudyServer::start() {
  if (port_ < 0) fail(ErrorCode::kArgument, "bind() before start()");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void StudyServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::pair<std::string, int> parse_bind_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) fail(ErrorCode::kArgument, "bind address must be host:port");
  std::string host = address.substr(0, colon);
  if (host.empty()) host = "127.0.0.1";
  const std::string port_text = address.substr(colon + 1);
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(port_text, &used);
    if (used != port_text.size()) port = -1;
  } catch (const std::exception&) {
    port = -1;
  }
  if (port < 0 || port > 65535) fail(ErrorCode::kArgument, "invalid port '" + port_text + "'");
  return {host, port};
}

}  // namespace modsynth
