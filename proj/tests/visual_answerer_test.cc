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
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "selftalk/errors.h"
#include "selftalk/random.h"
#include "selftalk/visual_answerer.h"

using namespace selftalk;

namespace {

Vocabulary SmallVocab() {
  return Vocabulary::FromWords(
      {"<start>", "<end>", "<unk>", "what", "color", "is", "the", "cube"});
}

AnswerVocab Colors() { return AnswerVocab::FromWords({"red", "blue", "green"}); }

AnswererConfig TinyConfig() {
  AnswererConfig c;
  c.vocab_size = 8;
  c.answer_size = 3;
  c.embed_dim = 3;
  c.hidden_dim = 4;
  c.feature_dim = 5;
  return c;
}

Vec Features(uint64_t seed) {
  Rng rng(seed);
  Vec f(5);
  for (double& v : f) v = rng.Uniform(-1, 1);
  return f;
}

}  // namespace

TEST_CASE("lstm step with unit weights") {
  AnswererConfig c;
  c.vocab_size = 3;
  c.answer_size = 1;
  c.embed_dim = 1;
  c.hidden_dim = 1;
  c.feature_dim = 1;
  VisualAnswerer m(c, Vocabulary(), AnswerVocab::FromWords({"yes"}), 0);
  for (const char* w : {"Wi", "Wf", "Wo", "Wg"}) m.params().value(w).Fill(1.0);
  for (const char* b : {"bi", "bf", "bo", "bg"}) m.params().value(b).Fill(0.0);
  const Vec x = {0.5};
  const LstmState next = m.LstmStep(x, {{0.2}, {0.3}});
  CHECK(next.c[0] == doctest::Approx(0.6042874902125942).epsilon(1e-12));
  CHECK(next.h[0] == doctest::Approx(0.3608838205920371).epsilon(1e-12));
  CHECK_THROWS_AS(m.LstmStep(Vec{1, 2}, {{0.2}, {0.3}}), ShapeError);
}

TEST_CASE("answer confidence is the top probability") {
  VisualAnswerer m(TinyConfig(), SmallVocab(), Colors(), 3, 0.5);
  const auto q = m.vocab().Encode("what color is the cube");
  const auto r = m.Answer(Features(1), q);
  double total = 0.0, top = 0.0;
  for (double p : r.distribution) {
    total += p;
    top = std::max(top, p);
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(r.confidence == top);
  CHECK(r.answer == m.answers().Word(r.answer_id));
  // An empty question still reads the image.
  CHECK(m.Answer(Features(1), TokenSequence{}).distribution.size() == 3);
  CHECK_THROWS_AS(m.Answer(Vec(4, 0.0), q), ShapeError);
}

TEST_CASE("answerer gradients match finite differences") {
  VisualAnswerer m(TinyConfig(), SmallVocab(), Colors(), 8, 0.5);
  const Vec f = Features(2);
  const TokenSequence q{{3, 4, 5, 6, 7}, std::nullopt};
  REQUIRE(m.params().TotalSize() <= 2000);
  const auto report = GradCheck(m.params(), [&](ParamStore&, bool acc) {
    return acc ? m.AnswerLoss(f, q, 1, true)
               : std::as_const(m).AnswerLoss(f, q, 1);
  });
  for (const auto& e : report.entries) {
    INFO(e.name, " a=", e.worst_analytic, " n=", e.worst_numeric);
    CHECK(e.max_relative_error < 1e-4);
  }
  CHECK(report.passed);
  CHECK_THROWS_AS(m.AnswerLoss(f, q, 3), std::out_of_range);
}

TEST_CASE("answer vocabulary keeps single words by frequency") {
  const std::vector<std::string> answers = {"red", "blue", "red", "chair, table",
                                            "Blue", "green", "two words"};
  size_t dropped = 0;
  const auto v = AnswerVocab::Build(answers, &dropped);
  CHECK(dropped == 2);
  CHECK(v.words() == std::vector<std::string>{"blue", "red", "green"});
  CHECK(v.Id("purple") == -1);
  CHECK(SingleWordAnswer("Red.") == "red");
  CHECK(SingleWordAnswer("two words").empty());
  CHECK_THROWS_AS(AnswerVocab::FromWords({"a", "a"}), DataError);
}

TEST_CASE("answerer checkpoint round trip") {
  VisualAnswerer m(TinyConfig(), SmallVocab(), Colors(), 13, 0.2);
  const auto path = std::filesystem::temp_directory_path() / "vqa_rt.json";
  m.Save(path);
  const auto loaded = VisualAnswerer::Load(path);
  CHECK(loaded.params().SameValues(m.params()));
  CHECK(loaded.answers() == m.answers());
  CHECK(DumpCheckpoint(loaded.ToJson()) == ReadFile(path));
  std::filesystem::remove(path);
}

TEST_CASE("training fits a separable toy task") {
  const Vocabulary v = SmallVocab();
  std::vector<AnswerExample> data;
  const char* names[] = {"red", "blue", "green"};
  for (int i = 0; i < 30; ++i) {
    Vec f(5, 0.0);
    f[i % 3] = 1.0;
    data.push_back({f, v.Encode("what color is the cube"), names[i % 3]});
  }
  auto c = TinyConfig();
  c.hidden_dim = 8;
  TrainOptions o;
  o.epochs = 40;
  o.learning_rate = 0.3;
  o.decay_every = 20;
  o.init_scale = 0.5;
  const auto r = TrainAnswerer(data, data, c, v, Colors(), o);
  CHECK(r.epoch_losses.back() < r.epoch_losses.front());
  CHECK(r.heldout_accuracy.back() == 1.0);
  CHECK(Accuracy(r.model, data) == 1.0);

  data[0].answer = "purple";
  CHECK_THROWS_AS(TrainAnswerer(data, {}, c, v, Colors(), o),
                  std::invalid_argument);
}
