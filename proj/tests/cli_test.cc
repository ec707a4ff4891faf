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

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "selftalk/checkpoint.h"
#include "selftalk/question_generator.h"
#include "selftalk/random.h"
#include "selftalk/self_talk.h"

namespace fs = std::filesystem;
using namespace selftalk;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

class Workdir {
 public:
  Workdir() {
    dir_ = fs::temp_directory_path() /
           ("selftalk_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter_++));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workdir() { fs::remove_all(dir_); }
  fs::path operator/(const std::string& name) const { return dir_ / name; }

  Result Cli(const std::string& args) const {
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = std::string(SELFTALK_CLI) + " " + args + " 2>" +
                            err.string();
    Result r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = ReadFile(err);
    return r;
  }

  // Small micro-world plus two quickly trained models.
  void Pipeline() const {
    const std::string d = (dir_ / "data").string();
    REQUIRE(Cli("gen-data --scenes 30 --seed 5 --out-dir " + d).code == 0);
    REQUIRE(Cli("train-qg --train " + d + "/train.jsonl --features " + d +
                "/features.jsonl --out " + (dir_ / "qg.json").string() +
                " --hidden 8 --embed 4 --epochs 2 --quiet")
                .code == 0);
    REQUIRE(Cli("train-qa --train " + d + "/train.jsonl --features " + d +
                "/features.jsonl --out " + (dir_ / "qa.json").string() +
                " --hidden 8 --embed 4 --epochs 2 --quiet --heldout " + d +
                "/test.jsonl")
                .code == 0);
  }

 private:
  static inline int counter_ = 0;
  fs::path dir_;
};

nlohmann::json LastErrorLine(const std::string& err) {
  std::string line = err;
  while (!line.empty() && line.back() == '\n') line.pop_back();
  const auto pos = line.rfind('\n');
  if (pos != std::string::npos) line = line.substr(pos + 1);
  return nlohmann::json::parse(line);
}

}  // namespace

TEST_CASE("gen-data writes files and a manifest with hashes") {
  Workdir w;
  const auto d = (w / "data").string();
  const auto r = w.Cli("gen-data --scenes 20 --seed 3 --out-dir " + d);
  REQUIRE(r.code == 0);
  for (const char* f : {"records.jsonl", "train.jsonl", "test.jsonl",
                        "features.jsonl", "refs_test.jsonl", "manifest.json"}) {
    CHECK(fs::exists(w / ("data/" + std::string(f))));
  }
  const auto manifest = nlohmann::json::parse(ReadFile(w / "data/manifest.json"));
  CHECK(manifest["subcommand"] == "gen-data");
  CHECK(manifest["seed"] == 3);
  CHECK(manifest["config"]["scenes"] == "20");
  CHECK(manifest["outputs"].size() == 5);
  for (const auto& [path, hash] : manifest["outputs"].items()) {
    CHECK(hash.get<std::string>().size() == 64);
  }

  // No silent overwrite; --force regenerates identical bytes.
  const std::string before = ReadFile(w / "data/features.jsonl");
  const auto again = w.Cli("gen-data --scenes 20 --seed 3 --out-dir " + d);
  CHECK(again.code == 1);
  CHECK(LastErrorLine(again.err)["error"] == "usage");
  CHECK(w.Cli("gen-data --scenes 20 --seed 3 --force --out-dir " + d).code == 0);
  CHECK(ReadFile(w / "data/features.jsonl") == before);
}

TEST_CASE("train-qg with zero epochs equals a fresh initialization") {
  Workdir w;
  const auto d = (w / "data").string();
  REQUIRE(w.Cli("gen-data --scenes 10 --seed 1 --out-dir " + d).code == 0);
  const auto ckpt = w / "qg0.json";
  REQUIRE(w.Cli("train-qg --train " + d + "/train.jsonl --features " + d +
                "/features.jsonl --out " + ckpt.string() +
                " --hidden 6 --embed 4 --epochs 0 --seed 9")
              .code == 0);
  const auto loaded = QuestionGenerator::Load(ckpt);
  const QuestionGenerator fresh(loaded.config(), loaded.vocab(), MixSeed(9, 0));
  CHECK(DumpCheckpoint(fresh.ToJson()) == ReadFile(ckpt));
  CHECK(fs::exists(w / "qg0.json.manifest.json"));
  CHECK(fs::exists(w / "qg0.json.losses.json"));
}

TEST_CASE("talk defaults to five pairs and is reproducible") {
  Workdir w;
  w.Pipeline();
  const std::string common = "talk --qg " + (w / "qg.json").string() + " --qa " +
                             (w / "qa.json").string() + " --features " +
                             (w / "data/features.jsonl").string() + " --images " +
                             (w / "data/test.jsonl").string() + " --seed 11";
  REQUIRE(w.Cli(common + " --out " + (w / "t1.jsonl").string()).code == 0);
  REQUIRE(w.Cli(common + " --out " + (w / "t2.jsonl").string()).code == 0);
  const std::string t1 = ReadFile(w / "t1.jsonl");
  CHECK(t1 == ReadFile(w / "t2.jsonl"));
  const auto transcripts = ParseTranscripts(t1);
  REQUIRE_FALSE(transcripts.empty());
  for (const auto& t : transcripts) {
    CHECK(t.pairs.size() == 5);
    for (const auto& p : t.pairs) {
      CHECK(p.flag == FlagFor(p.confidence, 0.3));
    }
  }
  CHECK(fs::exists(w / "t1.jsonl.txt"));

  const auto score = w.Cli("score --transcripts " + (w / "t1.jsonl").string() +
                           " --references " +
                           (w / "data/refs_test.jsonl").string() + " --out " +
                           (w / "score.json").string());
  REQUIRE(score.code == 0);
  for (const char* col : {"CIDEr", "METEOR", "ROUGE_L", "Bleu-1", "Bleu-2",
                          "Bleu-3", "Bleu-4"}) {
    CHECK(score.out.find(col) != std::string::npos);
  }
}

TEST_CASE("ask and answer") {
  Workdir w;
  w.Pipeline();
  const auto f = (w / "data/features.jsonl").string();
  REQUIRE(w.Cli("ask --model " + (w / "qg.json").string() + " --features " + f +
                " --mode max --out " + (w / "ask.jsonl").string())
              .code == 0);
  const std::string asked = ReadFile(w / "ask.jsonl");
  CHECK(std::count(asked.begin(), asked.end(), '\n') == 30);
  CHECK(nlohmann::json::parse(asked.substr(0, asked.find('\n')))["mode"] == "max");

  REQUIRE(w.Cli("answer --model " + (w / "qa.json").string() + " --features " +
                f + " --questions " + (w / "data/test.jsonl").string() +
                " --out " + (w / "ans.jsonl").string())
              .code == 0);
  const std::string answers = ReadFile(w / "ans.jsonl");
  const auto first = nlohmann::json::parse(answers.substr(0, answers.find('\n')));
  CHECK(first.contains("answer"));
  CHECK(first["confidence"].get<double>() > 0.0);
}

TEST_CASE("exit codes and error lines") {
  Workdir w;
  const auto usage = w.Cli("train-qg --bogus");
  CHECK(usage.code == 1);
  CHECK(LastErrorLine(usage.err)["error"] == "usage");

  const auto missing = w.Cli("train-qg --train " + (w / "nope.jsonl").string() +
                             " --features " + (w / "nope2.jsonl").string() +
                             " --out " + (w / "qg.json").string());
  CHECK(missing.code == 2);
  CHECK(LastErrorLine(missing.err)["error"] == "data");
  CHECK_FALSE(fs::exists(w / "qg.json"));
  CHECK_FALSE(fs::exists(w / "qg.json.manifest.json"));

  CHECK(w.Cli("gradcheck --out " + (w / "gc.json").string()).code == 0);
  const auto failed =
      w.Cli("gradcheck --tolerance 0 --out " + (w / "gc0.json").string());
  CHECK(failed.code == 3);
  CHECK(LastErrorLine(failed.err)["error"] == "numeric");
}
