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

#include <set>
#include <vector>

#include "doctest.h"
#include "selftalk/random.h"
#include "selftalk/self_talk.h"

using namespace selftalk;

namespace {

Vocabulary SmallVocab() {
  return Vocabulary::FromWords(
      {"<start>", "<end>", "<unk>", "what", "color", "is", "the", "cube"});
}

struct Models {
  QuestionGenerator gen;
  VisualAnswerer ans;
};

Models Make(uint64_t seed) {
  GeneratorConfig g;
  g.vocab_size = 8;
  g.embed_dim = 3;
  g.hidden_dim = 6;
  g.feature_dim = 5;
  g.max_len = 6;
  AnswererConfig a;
  a.vocab_size = 8;
  a.answer_size = 3;
  a.embed_dim = 3;
  a.hidden_dim = 6;
  a.feature_dim = 5;
  return {QuestionGenerator(g, SmallVocab(), seed, 0.8),
          VisualAnswerer(a, SmallVocab(),
                         AnswerVocab::FromWords({"red", "blue", "green"}),
                         seed + 1, 0.8)};
}

const Vec kFeatures = {0.3, -0.2, 0.9, 0.0, 1.0};

}  // namespace

TEST_CASE("each pair follows generate then answer then flag") {
  auto m = Make(5);
  const SelfTalk talk(m.gen, m.ans, "g.json", "a.json");
  for (double tau : {0.0, 0.3, 1.0}) {
    SelfTalkOptions o;
    o.n = 7;
    o.threshold = tau;
    o.seed = 99;
    const auto t = talk.Generate(kFeatures, "img1", o);
    REQUIRE(t.pairs.size() == 7);
    for (size_t i = 0; i < t.pairs.size(); ++i) {
      const auto& p = t.pairs[i];
      const auto q = m.gen.Generate(kFeatures, DecodeMode::kSample, MixSeed(99, i));
      CHECK(p.question == *q.question.surface);
      CHECK(p.question_log_prob == q.log_prob);
      const auto a = m.ans.Answer(kFeatures, q.question);
      CHECK(p.answer == a.answer);
      CHECK(p.confidence == a.confidence);
      CHECK(p.flag == (a.confidence >= tau ? AnswerFlag::kAffirmative
                                           : AnswerFlag::kQuestionable));
    }
    if (tau == 0.0) {
      for (const auto& p : t.pairs) CHECK(p.flag == AnswerFlag::kAffirmative);
    }
    CHECK(t.generator_checkpoint == "g.json");
    CHECK(t.threshold == tau);
  }
}

TEST_CASE("transcripts are bit reproducible") {
  auto m = Make(6);
  const SelfTalk talk(m.gen, m.ans);
  SelfTalkOptions o;
  o.seed = 4;
  const auto a = TranscriptToJson(talk.Generate(kFeatures, "x", o)).dump();
  const auto b = TranscriptToJson(talk.Generate(kFeatures, "x", o)).dump();
  CHECK(a == b);
  o.seed = 5;
  const auto c = TranscriptToJson(talk.Generate(kFeatures, "x", o)).dump();
  CHECK(a != c);
}

TEST_CASE("max decoding repeats the same question") {
  auto m = Make(7);
  const SelfTalk talk(m.gen, m.ans);
  SelfTalkOptions o;
  o.mode = DecodeMode::kMax;
  o.n = 3;
  const auto t = talk.Generate(kFeatures, "x", o);
  CHECK(t.pairs[0].question == t.pairs[1].question);
  CHECK(t.pairs[1].question == t.pairs[2].question);
  o.dedup = true;
  CHECK_THROWS_AS(talk.Generate(kFeatures, "x", o), std::invalid_argument);
}

TEST_CASE("dedup resamples then marks exhausted repeats") {
  auto m = Make(8);
  // A generator that always emits exactly "what".
  for (auto& [name, p] : m.gen.params()) p.value.Fill(0.0);
  auto& bo = m.gen.params().value("bo").data();
  bo[3] = 40.0;
  m.gen.params().value("Who").Fill(0.0);
  // After the first token, prefer END strongly via the recurrent input.
  m.gen.params().value("Whx")(0, 0) = 5.0;
  m.gen.params().value("Emb")(3, 0) = 1.0;
  m.gen.params().value("Who")(kEndId, 0) = 100.0;
  const SelfTalk talk(m.gen, m.ans);
  SelfTalkOptions o;
  o.n = 3;
  o.dedup = true;
  const auto t = talk.Generate(kFeatures, "x", o);
  CHECK(t.pairs[0].question == "what");
  CHECK_FALSE(t.pairs[0].duplicate);
  CHECK(t.pairs[1].duplicate);
  CHECK(t.pairs[2].duplicate);
  CHECK(TranscriptToText(t).find("[duplicate]") != std::string::npos);
}

TEST_CASE("dedup yields distinct questions when the generator is diverse") {
  auto m = Make(9);
  const SelfTalk talk(m.gen, m.ans);
  SelfTalkOptions o;
  o.n = 5;
  o.dedup = true;
  o.seed = 1;
  const auto t = talk.Generate(kFeatures, "x", o);
  std::set<std::string> seen;
  for (const auto& p : t.pairs) {
    if (!p.duplicate) {
      CHECK_FALSE(p.question.empty());
      CHECK(seen.insert(p.question).second);
    }
  }
}

TEST_CASE("argument validation") {
  auto m = Make(10);
  const SelfTalk talk(m.gen, m.ans);
  SelfTalkOptions o;
  o.n = 0;
  CHECK_THROWS(talk.Generate(kFeatures, "x", o));
  o.n = 1;
  o.threshold = 1.5;
  CHECK_THROWS(talk.Generate(kFeatures, "x", o));
  o.threshold = 0.3;
  CHECK_THROWS(talk.Generate(kFeatures, "", o));
  CHECK_THROWS(talk.Generate(Vec(4, 0.0), "x", o));
}

TEST_CASE("text and json renderings") {
  SelfTalkTranscript t;
  t.image_id = "image7";
  t.seed = 3;
  t.pairs.push_back({"what color is the cube", "red", 0.9,
                     AnswerFlag::kAffirmative, -2.5, false});
  t.pairs.push_back({"", "blue", 0.1, AnswerFlag::kQuestionable, -0.1, false});
  CHECK(TranscriptToText(t) ==
        "Q: what color is the cube? A: red\nQ: <empty>? A: blue?\n");
  const std::vector<SelfTalkTranscript> ts = {t, t};
  const auto parsed = ParseTranscripts(TranscriptsToJsonl(ts));
  REQUIRE(parsed.size() == 2);
  CHECK(TranscriptToJson(parsed[1]).dump() == TranscriptToJson(t).dump());
  CHECK_THROWS(ParseTranscripts("{\"image_id\": 1}\n"));
  CHECK_THROWS(ParseTranscripts("not json\n"));
}
