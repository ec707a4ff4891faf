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

#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "selftalk/random.h"
#include "selftalk/vocab.h"

using selftalk::Tokenize;
using selftalk::Vocabulary;

TEST_CASE("tokenize normalizes case and punctuation") {
  CHECK(Tokenize("What color is the Cube?") ==
        std::vector<std::string>{"what", "color", "is", "the", "cube"});
  CHECK(Tokenize("").empty());
  CHECK(Tokenize("how  many   chairs") ==
        std::vector<std::string>{"how", "many", "chairs"});
  CHECK(Tokenize("wait, what. really!") ==
        std::vector<std::string>{"wait", "what", "really"});
}

TEST_CASE("build_vocab on an empty corpus holds only the specials") {
  const Vocabulary v = Vocabulary::Build({}, 1);
  CHECK(v.size() == 3);
  CHECK(v.Word(selftalk::kStartId) == "<start>");
  CHECK(v.Word(selftalk::kEndId) == "<end>");
  CHECK(v.Word(selftalk::kUnkId) == "<unk>");
}

TEST_CASE("build_vocab orders by frequency then lexicographically") {
  const std::vector<std::string> corpus = {"what color is the cube",
                                           "what is there"};
  const Vocabulary v = Vocabulary::Build(corpus, 1);
  // Six distinct words: is(2) what(2) color cube the there.
  CHECK(v.size() == 3 + 6);
  CHECK(v.Id("is") == 3);
  CHECK(v.Id("what") == 4);
  CHECK(v.words() == std::vector<std::string>{"<start>", "<end>", "<unk>",
                                              "is", "what", "color", "cube",
                                              "the", "there"});
}

TEST_CASE("min_count cuts rare words") {
  const std::vector<std::string> corpus = {"a a b"};
  const Vocabulary v = Vocabulary::Build(corpus, 2);
  CHECK(v.Contains("a"));
  CHECK_FALSE(v.Contains("b"));
  CHECK_THROWS(Vocabulary::Build(corpus, 0));
}

TEST_CASE("encode maps unknown words to UNK and decode renders them") {
  const std::vector<std::string> corpus = {"what color is the cube"};
  const Vocabulary v = Vocabulary::Build(corpus, 1);
  CHECK(v.Encode("zzz").ids == std::vector<selftalk::WordId>{selftalk::kUnkId});
  const auto seq = v.Encode("What color is the Cube?");
  CHECK(v.Decode(seq.ids) == "what color is the cube");
  CHECK(v.Decode(v.Encode("what zzz").ids) == "what <unk>");
  const std::vector<selftalk::WordId> bad = {static_cast<int>(v.size())};
  CHECK_THROWS_AS(v.Decode(bad), std::out_of_range);
}

TEST_CASE("decode looks up fixture ids") {
  const Vocabulary v = Vocabulary::FromWords(
      {"<start>", "<end>", "<unk>", "what", "is", "on", "the", "left", "cube",
       "color"});
  const std::vector<selftalk::WordId> ids = {7, 4, 9};
  CHECK(v.Decode(ids) == "left is color");
  CHECK_THROWS(Vocabulary::FromWords({"a", "b", "c"}));
}

TEST_CASE("vocabulary construction is deterministic and round-trips ids") {
  selftalk::Rng rng(5);
  const std::vector<std::string> words = {"red", "blue", "cube", "what", "is",
                                          "the", "on", "left", "many"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> corpus;
    const auto lines = 1 + rng.Below(10);
    for (uint64_t l = 0; l < lines; ++l) {
      std::string line;
      const auto n = 1 + rng.Below(8);
      for (uint64_t k = 0; k < n; ++k) line += words[rng.Below(words.size())] + " ";
      corpus.push_back(line);
    }
    const Vocabulary a = Vocabulary::Build(corpus, 1);
    const Vocabulary b = Vocabulary::Build(corpus, 1);
    CHECK(a.words() == b.words());
    // decode then encode is the identity on special-free id lists.
    std::vector<selftalk::WordId> ids;
    for (int k = 0; k < 6; ++k) {
      ids.push_back(static_cast<int>(3 + rng.Below(a.size() - 3)));
    }
    CHECK(a.Encode(a.Decode(ids)).ids == ids);
  }
}
