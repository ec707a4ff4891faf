// Copyright 2026 The Selftalk Authors.
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

#include "selftalk/eval_server.h"

#include "httplib.h"
#include "json.hpp"

namespace selftalk {
namespace {

constexpr const char* kJson = "application/json";

void SendError(httplib::Response& res, int status, const std::string& field,
               const std::string& reason) {
  nlohmann::ordered_json body;
  body["field"] = field;
  body["reason"] = reason;
  res.status = status;
  res.set_content(body.dump(), kJson);
}

// Scores must be JSON integers; anything else is reported against the field.
bool ReadScore(const nlohmann::json& body, const char* field, int& out,
               httplib::Response& res) {
  auto it = body.find(field);
  if (it == body.end()) {
    SendError(res, 400, field, "missing");
    return false;
  }
  if (!it->is_number_integer()) {
    SendError(res, 400, field, "must be an integer from 1 to 5");
    return false;
  }
  const auto value = it->get<long long>();
  out = (value < 1 || value > 5) ? 0 : static_cast<int>(value);
  return true;
}

bool ReadString(const nlohmann::json& body, const char* field, bool required,
                std::string& out, httplib::Response& res) {
  auto it = body.find(field);
  if (it == body.end()) {
    if (!required) return true;
    SendError(res, 400, field, "missing");
    return false;
  }
  if (!it->is_string()) {
    SendError(res, 400, field, "must be a string");
    return false;
  }
  out = it->get<std::string>();
  return true;
}

}  // namespace

EvalServer::EvalServer(RatingStore& store, Options options)
    : store_(store),
      options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()) {
  const int threads = options_.threads;
  server_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  Register();
}

EvalServer::~EvalServer() { Stop(); }

void EvalServer::Register() {
  server_->Get("/api/tasks/next", [this](const httplib::Request& req,
                                         httplib::Response& res) {
    const std::string rater = req.get_param_value("rater");
    if (rater.empty()) {
      SendError(res, 400, "rater", "missing rater id");
      return;
    }
    auto task = store_.NextTask(rater);
    if (!task) {
      res.status = 204;
      return;
    }
    res.status = 200;
    res.set_content(TaskToJson(*task).dump(), kJson);
  });

  server_->Post("/api/ratings", [this](const httplib::Request& req,
                                       httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error&) {
      SendError(res, 400, "body", "malformed JSON");
      return;
    }
    if (!body.is_object()) {
      SendError(res, 400, "body", "expected a JSON object");
      return;
    }
    RatingRecord record;
    if (!ReadString(body, "transcript_id", true, record.transcript_id, res) ||
        !ReadString(body, "rater_id", true, record.rater_id, res) ||
        !ReadScore(body, "readability", record.readability, res) ||
        !ReadScore(body, "correctness", record.correctness, res) ||
        !ReadScore(body, "human_likeness", record.human_likeness, res) ||
        !ReadString(body, "feeling", true, record.feeling, res) ||
        !ReadString(body, "comment", false, record.comment, res)) {
      return;
    }
    SubmitOutcome outcome;
    try {
      outcome = store_.Submit(std::move(record));
    } catch (const std::exception& e) {
      SendError(res, 500, "log", e.what());
      return;
    }
    if (outcome.error) {
      SendError(res, 400, outcome.error->field, outcome.error->reason);
      return;
    }
    nlohmann::ordered_json ack;
    ack["status"] =
        *outcome.status == SubmitStatus::kCreated ? "created" : "replaced";
    res.status = 201;
    res.set_content(ack.dump(), kJson);
  });

  server_->Get("/api/report", [this](const httplib::Request& req,
                                     httplib::Response& res) {
    const auto report = store_.Report(req.get_param_value("dataset"));
    res.status = 200;
    res.set_content(AggregateToJson(report).dump(), kJson);
  });

  server_->Get("/api/feelings", [this](const httplib::Request&,
                                       httplib::Response& res) {
    res.status = 200;
    res.set_content(nlohmann::json(store_.feelings()).dump(), kJson);
  });

  if (!options_.ui_dir.empty() &&
      server_->set_mount_point("/", options_.ui_dir.string())) {
    return;
  }
  server_->Get("/", [](const httplib::Request&, httplib::Response& res) {
    SendError(res, 503, "ui", "rating UI bundle is not installed");
  });
}

int EvalServer::BindToAnyPort(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool EvalServer::Bind(const std::string& host, int port) {
  return server_->bind_to_port(host, port);
}

bool EvalServer::ListenAfterBind() { return server_->listen_after_bind(); }

void EvalServer::Stop() {
  if (server_ && server_->is_running()) server_->stop();
}

void EvalServer::WaitUntilReady() const { server_->wait_until_ready(); }

}  // namespace selftalk
