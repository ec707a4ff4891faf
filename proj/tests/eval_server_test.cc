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

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <thread>
#include <vector>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "selftalk/eval_server.h"

using namespace selftalk;

namespace {

std::vector<RatingTask> Tasks(int n) {
  std::vector<RatingTask> out;
  for (int i = 0; i < n; ++i) {
    RatingTask t;
    t.transcript_id = "t" + std::to_string(i);
    t.dataset = i % 2 ? "vqa" : "daquar";
    t.image_ref = "img" + std::to_string(i);
    t.transcript.image_id = t.image_ref;
    t.transcript.pairs.push_back({"what color is the cube", "red", 0.2,
                                  AnswerFlag::kQuestionable, -1.0, false});
    out.push_back(t);
  }
  return out;
}

std::filesystem::path FreshLog() {
  auto p = std::filesystem::temp_directory_path() /
           ("server_" + std::to_string(::getpid()) + ".jsonl");
  std::filesystem::remove(p);
  return p;
}

struct Fixture {
  explicit Fixture(int tasks, std::filesystem::path ui = {})
      : log(FreshLog()),
        store(Tasks(tasks), {.log_path = log}),
        server(store, {.ui_dir = std::move(ui), .threads = 4}) {
    port = server.BindToAnyPort("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.ListenAfterBind(); });
    server.WaitUntilReady();
  }
  ~Fixture() {
    server.Stop();
    thread.join();
    std::filesystem::remove(log);
  }
  httplib::Client Client() const { return httplib::Client("127.0.0.1", port); }

  std::filesystem::path log;
  RatingStore store;
  EvalServer server;
  int port = 0;
  std::thread thread;
};

std::string Body(const std::string& transcript, const std::string& rater,
                 nlohmann::json readability = 4) {
  nlohmann::json b = {{"transcript_id", transcript}, {"rater_id", rater},
                      {"readability", readability}, {"correctness", 3},
                      {"human_likeness", 2}, {"feeling", "amusing"},
                      {"comment", "fine"}};
  return b.dump();
}

}  // namespace

TEST_CASE("rating round trip over http") {
  Fixture f(2);
  auto cli = f.Client();

  auto next = cli.Get("/api/tasks/next?rater=ann");
  REQUIRE(next);
  CHECK(next->status == 200);
  const auto task = nlohmann::json::parse(next->body);
  const std::string id = task.at("transcript_id");
  CHECK(task.at("text").get<std::string>().find("red?") != std::string::npos);

  auto post = cli.Post("/api/ratings", Body(id, "ann"), "application/json");
  REQUIRE(post);
  CHECK(post->status == 201);
  CHECK(nlohmann::json::parse(post->body)["status"] == "created");
  post = cli.Post("/api/ratings", Body(id, "ann"), "application/json");
  CHECK(nlohmann::json::parse(post->body)["status"] == "replaced");

  const std::string other = id == "t0" ? "t1" : "t0";
  CHECK(cli.Post("/api/ratings", Body(other, "ann"), "application/json")->status ==
        201);
  CHECK(cli.Get("/api/tasks/next?rater=ann")->status == 204);

  auto report = cli.Get("/api/report?dataset=vqa");
  REQUIRE(report);
  const auto rep = nlohmann::json::parse(report->body);
  CHECK(rep["count"] == 1);
  CHECK(rep["readability"]["mean"] == 4.0);
  auto all = nlohmann::json::parse(cli.Get("/api/report")->body);
  CHECK(all["count"] == 2);
}

TEST_CASE("invalid submissions return the failing field") {
  Fixture f(1);
  auto cli = f.Client();
  auto r = cli.Post("/api/ratings", Body("t0", "x", 6), "application/json");
  CHECK(r->status == 400);
  CHECK(nlohmann::json::parse(r->body)["field"] == "readability");
  r = cli.Post("/api/ratings", Body("t0", "x", 2.5), "application/json");
  CHECK(r->status == 400);
  CHECK(nlohmann::json::parse(r->body)["field"] == "readability");
  r = cli.Post("/api/ratings", Body("t9", "x"), "application/json");
  CHECK(nlohmann::json::parse(r->body)["field"] == "transcript_id");
  r = cli.Post("/api/ratings", "{oops", "application/json");
  CHECK(r->status == 400);
  CHECK(cli.Get("/api/tasks/next")->status == 400);
  CHECK(f.store.Snapshot().empty());
}

TEST_CASE("feelings and the missing ui bundle") {
  Fixture f(1);
  auto cli = f.Client();
  const auto feelings = nlohmann::json::parse(cli.Get("/api/feelings")->body);
  CHECK(feelings.size() == DefaultFeelings().size());
  CHECK(cli.Get("/")->status == 503);
}

TEST_CASE("static bundle is served when present") {
  const auto dir = std::filesystem::temp_directory_path() / "selftalk_ui_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "index.html") << "<html>ok</html>";
  }
  {
    Fixture f(1, dir);
    auto r = f.Client().Get("/index.html");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->body == "<html>ok</html>");
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("concurrent clients") {
  Fixture f(10);
  std::vector<std::thread> threads;
  for (int w = 0; w < 6; ++w) {
    threads.emplace_back([&f, w] {
      auto cli = f.Client();
      for (int i = 0; i < 10; ++i) {
        auto r = cli.Post("/api/ratings",
                          Body("t" + std::to_string(i), "r" + std::to_string(w)),
                          "application/json");
        CHECK((r && r->status == 201));
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(f.store.Snapshot().size() == 60);
  CHECK(ReplayRatingLogFile(f.log) == f.store.Snapshot());
}
