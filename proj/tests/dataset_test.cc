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

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "doctest.h"
#include "selftalk/checkpoint.h"
#include "selftalk/errors.h"
#include "selftalk/microworld.h"
#include "selftalk/vocab.h"

using namespace selftalk;

namespace {
const std::filesystem::path kFixtures = SELFTALK_FIXTURES;
}

TEST_CASE("daquar fixture summary") {
  const auto d = LoadDataset(kFixtures / "daquar_fixture.jsonl", DatasetFormat::kDaquar);
  CHECK(d.summary.images == 6);
  CHECK(d.summary.pairs == 20);
  CHECK(d.summary.multi_word_answers == 3);
  CHECK(d.records[4].multi_word_answer);
}

TEST_CASE("vqa fixture summary") {
  const auto d = LoadDataset(kFixtures / "vqa_fixture.jsonl", DatasetFormat::kVqa);
  CHECK(d.summary.images == 8);
  CHECK(d.summary.pairs == 20);
  CHECK(d.summary.multi_word_answers == 2);
}

TEST_CASE("loader errors name the line") {
  const std::string bad =
      "{\"image_id\": \"a\", \"question\": \"q\", \"answer\": \"x\"}\n"
      "{\"image_id\": \"a\", \"answer\": \"x\"}\n";
  try {
    ParseDataset(bad, DatasetFormat::kVqa);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(std::string(e.what()).find("question") != std::string::npos);
  }
  CHECK_THROWS_AS(ParseDataset("", DatasetFormat::kVqa), DataError);
  CHECK_THROWS_AS(ParseDataset("[1]\n", DatasetFormat::kVqa), DataError);
  CHECK_THROWS_AS(LoadDataset(kFixtures / "missing.jsonl", DatasetFormat::kVqa),
                  DataError);
}

TEST_CASE("jsonl round trip") {
  const auto d = LoadDataset(kFixtures / "vqa_fixture.jsonl", DatasetFormat::kVqa);
  const auto again = ParseDataset(DatasetToJsonl(d.records), DatasetFormat::kVqa);
  CHECK(again.records == d.records);
}

TEST_CASE("daquar text conversion") {
  const auto records = ConvertDaquarText(
      ReadFile(kFixtures / "daquar_fixture.txt"));
  REQUIRE(records.size() == 3);
  CHECK(records[0].image_id == "image3");
  CHECK(records[2].image_id == "image7");
  CHECK(records[2].answer == "chair, table");
  CHECK_THROWS_AS(ConvertDaquarText("what is this in the image1 ?\n"), DataError);
  CHECK_THROWS_AS(ConvertDaquarText("what is this ?\nchair\n"), DataError);
}

TEST_CASE("feature store validates dimensions") {
  FeatureStore s;
  s.Add("a", {1.0, 2.0});
  try {
    s.Add("b", {1.0});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }
  CHECK_THROWS_AS(s.Add("a", {1.0, 2.0}), DataError);
  CHECK_THROWS_AS(s.at("zz"), DataError);
  const auto back = ParseFeatures(s.ToJsonl());
  CHECK(back == s);
  CHECK_THROWS_AS(ParseFeatures("{\"image_id\": \"a\", \"features\": [1]}\n"
                                "{\"image_id\": \"b\", \"features\": [1, 2]}\n"),
                  DataError);
}

TEST_CASE("split by image keeps images disjoint and is seeded") {
  const auto w = microworld::Generate(40, 3);
  const auto s = SplitByImage(w.records, 0.8, 9);
  std::set<std::string> train_ids, test_ids;
  for (const auto& r : s.train) train_ids.insert(r.image_id);
  for (const auto& r : s.test) test_ids.insert(r.image_id);
  CHECK(train_ids.size() == 32);
  CHECK(test_ids.size() == 8);
  for (const auto& id : test_ids) CHECK_FALSE(train_ids.contains(id));
  CHECK(s.train.size() + s.test.size() == w.records.size());
  const auto again = SplitByImage(w.records, 0.8, 9);
  CHECK(again.test == s.test);
  CHECK_THROWS(SplitByImage(w.records, 1.0, 9));
  CHECK_THROWS(SplitByImage(std::span(w.records.data(), 1), 0.5, 9));
}

TEST_CASE("micro-world is deterministic and every question is answerable") {
  const auto a = microworld::Generate(100, 42);
  const auto b = microworld::Generate(100, 42);
  CHECK(a.records == b.records);
  CHECK(a.features == b.features);
  CHECK(a.features.size() == 100);
  CHECK(a.features.dim() == microworld::kFeatureDim);
  for (const auto& r : a.records) {
    CHECK(microworld::IsTemplateQuestion(r.question));
    CHECK(microworld::AnswerableFromFeatures(r, a.features.at(r.image_id)));
    CHECK(Tokenize(r.answer).size() == 1);
  }
  CHECK_FALSE(microworld::IsTemplateQuestion("what is the cube"));
  CHECK_FALSE(microworld::IsTemplateQuestion("what color is the table"));
}

TEST_CASE("micro-world scene encoding") {
  microworld::Scene s{"x", {{0, 2, 1}, {3, 2, 4}}};
  const Vec f = microworld::EncodeScene(s);
  CHECK(f.size() == 85);
  CHECK(f[microworld::TripleIndex(0, 2, 1)] > 0.5);
  CHECK(f[microworld::TripleIndex(3, 2, 4)] > 0.5);
  CHECK(f[microworld::kCountOffset + 1] > 0.5);
  CHECK(f[microworld::kBiasIndex] > 0.5);
  const auto qs = microworld::SceneQuestions(s);
  std::map<std::string, std::string> qa;
  for (const auto& r : qs) qa[r.question] = r.answer;
  CHECK(qa.at("what color is the cube") == "blue");
  CHECK(qa.at("how many blue objects are there") == "two");
  CHECK(qa.at("how many red objects are there") == "zero");
  CHECK(qa.at("what is on the center") == "cylinder");
}
