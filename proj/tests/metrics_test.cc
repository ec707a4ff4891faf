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

#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "metrics_oracle.h"
#include "selftalk/errors.h"
#include "selftalk/metrics.h"
#include "selftalk/random.h"
#include "selftalk/vocab.h"

using namespace selftalk::metrics;

namespace {

Tokens T(const std::string& s) { return selftalk::Tokenize(s); }

struct Corpus {
  CandidateSet candidates;
  ReferenceSet references;
  std::vector<oracle::Item> items;
};

Corpus RandomCorpus(uint64_t seed) {
  static const std::vector<std::string> words = {"a", "red", "cube", "on",
                                                 "the", "left", "is"};
  selftalk::Rng rng(seed);
  auto sentence = [&](size_t lo) {
    Tokens s(lo + rng.Below(8 - lo));
    for (auto& w : s) w = words[rng.Below(words.size())];
    return s;
  };
  Corpus c;
  const size_t n = 2 + rng.Below(5);
  for (size_t i = 0; i < n; ++i) {
    const std::string id = "id" + std::to_string(i);
    oracle::Item item{id, sentence(1), {}};
    const size_t refs = 1 + rng.Below(3);
    for (size_t r = 0; r < refs; ++r) item.refs.push_back(sentence(1));
    c.candidates[id] = item.candidate;
    c.references[id] = item.refs;
    c.items.push_back(item);
  }
  return c;
}

}  // namespace

TEST_CASE("clipped unigram precision") {
  const auto m = ModifiedPrecision(T("the the the the the the the"),
                                   {T("the cat is on the mat"),
                                    T("there is a cat on the mat")},
                                   1);
  CHECK(m.clipped / m.total == doctest::Approx(2.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("identical captions score one on bleu rouge and meteor") {
  const CandidateSet c = {{"1", T("a red cube on the left")}};
  const ReferenceSet r = {{"1", {T("a red cube on the left")}}};
  for (double b : Bleu(c, r)) CHECK(b == doctest::Approx(1.0));
  CHECK(RougeL(c, r) == doctest::Approx(1.0));
  // One chunk over six matches.
  CHECK(MeteorExact(c, r) ==
        doctest::Approx(1.0 - 0.5 * std::pow(1.0 / 6.0, 3)).epsilon(1e-12));
}

TEST_CASE("rouge-l on a fixed pair") {
  CHECK(RougeLSentence(T("the cat sat"), {T("the cat on the mat")}) ==
        doctest::Approx(0.47843137254901963).epsilon(1e-12));
  CHECK(RougeLSentence({}, {T("x")}) == 0.0);
  CHECK(LcsLength(T("a b c d"), T("b d a")) == 2);
}

TEST_CASE("meteor on a fixed pair") {
  CHECK(MeteorExactSentence(T("the red cube"), {T("a red cube")}) ==
        doctest::Approx(0.625).epsilon(1e-12));
  const auto a = AlignExact(T("a b a b"), T("b a b"));
  CHECK(a.matches == 3);
  CHECK(a.chunks == 1);
}

TEST_CASE("cider is zero with a warning for a single item") {
  std::vector<std::string> warnings;
  const CandidateSet c = {{"1", T("a red cube")}};
  const ReferenceSet r = {{"1", {T("a red cube")}}};
  CHECK(Cider(c, r, &warnings) == 0.0);
  CHECK(warnings.size() == 1);
}

TEST_CASE("bleu brevity penalty uses the closest reference length") {
  const CandidateSet c = {{"1", T("a red cube")}};
  const ReferenceSet r = {{"1", {T("a red cube on the left"), T("a red cube is")}}};
  // Closest length is 4, so BP = exp(1 - 4/3).
  CHECK(Bleu(c, r, 1)[0] == doctest::Approx(std::exp(1.0 - 4.0 / 3.0)));
}

TEST_CASE("metrics agree with brute-force oracles on random corpora") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const Corpus c = RandomCorpus(seed);
    INFO("seed ", seed);
    const auto bleu = Bleu(c.candidates, c.references);
    const auto want = oracle::Bleu(c.items, 4);
    for (int n = 0; n < 4; ++n) CHECK(std::abs(bleu[n] - want[n]) <= 1e-9);
    CHECK(std::abs(RougeL(c.candidates, c.references) - oracle::Rouge(c.items)) <=
          1e-9);
    CHECK(std::abs(Cider(c.candidates, c.references) - oracle::Cider(c.items)) <=
          1e-9);
    CHECK(std::abs(MeteorExact(c.candidates, c.references) -
                   oracle::Meteor(c.items)) <= 1e-9);
  }
}

TEST_CASE("corpus evaluation and report formatting") {
  const Corpus c = RandomCorpus(77);
  const auto report = EvaluateCorpus(c.candidates, c.references);
  CHECK(report.items == c.items.size());
  const auto json = ReportToJson(report);
  CHECK(json.at("bleu_4") == report.bleu[3]);
  const std::string table = FormatReportTable(report, "model");
  for (auto col : kReportColumns) CHECK(table.find(col) != std::string::npos);
  CHECK(table.find("model") != std::string::npos);
}

TEST_CASE("candidate and reference loaders") {
  const auto c = ParseCandidates(
      "{\"id\": \"1\", \"text\": \"A red cube.\"}\n"
      "{\"id\": \"2\", \"text\": \"\"}\n");
  CHECK(c.at("1") == T("a red cube"));
  CHECK(c.at("2").empty());
  const auto r = ParseReferences("{\"id\": \"1\", \"refs\": [\"a\", \"b c\"]}\n");
  CHECK(r.at("1").size() == 2);
  CHECK_THROWS_AS(ParseCandidates("{\"id\": 1}\n"), selftalk::DataError);
  CHECK_THROWS_AS(ParseReferences("oops\n"), selftalk::DataError);
  // Candidates without references are an error for scoring.
  CHECK_THROWS(EvaluateCorpus(c, r));
}
