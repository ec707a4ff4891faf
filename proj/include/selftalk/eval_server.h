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

#ifndef SELFTALK_EVAL_SERVER_H_
#define SELFTALK_EVAL_SERVER_H_

#include <filesystem>
#include <memory>
#include <string>

#include "selftalk/rating_store.h"

namespace httplib {
class Server;
}

namespace selftalk {

// HTTP front end of a RatingStore:
//   GET  /api/tasks/next?rater=<id>  200 task | 204 none remaining
//   POST /api/ratings                201 {"status"} | 400 {"field","reason"}
//   GET  /api/report?dataset=<name>  200 aggregate report
//   GET  /api/feelings               200 category list
//   GET  /                           rating UI bundle from ui_dir
class EvalServer {
 public:
  struct Options {
    // Static bundle directory; without one, GET / answers 503.
    std::filesystem::path ui_dir;
    int threads = 8;
  };

  EvalServer(RatingStore& store, Options options);
  ~EvalServer();
  EvalServer(const EvalServer&) = delete;
  EvalServer& operator=(const EvalServer&) = delete;

  // Binds to an ephemeral port and returns it, or -1 on failure.
  int BindToAnyPort(const std::string& host);
  bool Bind(const std::string& host, int port);
  // Blocks until Stop().
  bool ListenAfterBind();
  void Stop();
  void WaitUntilReady() const;

 private:
  void Register();

  RatingStore& store_;
  Options options_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace selftalk

#endif  // SELFTALK_EVAL_SERVER_H_
