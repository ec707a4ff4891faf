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

#include "selftalk/vocab.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

#include "selftalk/errors.h"

namespace selftalk {

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (c == '?' || c == '.' || c == ',' || c == '!') continue;
    if (std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    current.push_back(static_cast<char>(std::tolower(c)));
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary::Vocabulary()
    : words_{std::string(kStartToken), std::string(kEndToken),
             std::string(kUnkToken)} {
  for (size_t i = 0; i < words_.size(); ++i) {
    index_.emplace(words_[i], static_cast<WordId>(i));
  }
}

Vocabulary Vocabulary::FromWords(std::vector<std::string> words) {
  if (words.size() < 3 || words[kStartId] != kStartToken ||
      words[kEndId] != kEndToken || words[kUnkId] != kUnkToken) {
    throw DataError("vocabulary must begin with <start>, <end>, <unk>");
  }
  Vocabulary v;
  v.words_ = std::move(words);
  v.index_.clear();
  for (size_t i = 0; i < v.words_.size(); ++i) {
    if (!v.index_.emplace(v.words_[i], static_cast<WordId>(i)).second) {
      throw DataError("duplicate vocabulary word: " + v.words_[i]);
    }
  }
  return v;
}

Vocabulary Vocabulary::Build(std::span<const std::string> corpus,
                             int min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  std::map<std::string, int> counts;
  for (const auto& line : corpus) {
    for (auto& token : Tokenize(line)) ++counts[std::move(token)];
  }
  std::vector<std::pair<std::string, int>> ranked;
  for (auto& [word, count] : counts) {
    if (count < min_count) continue;
    // Tokenization never yields the angle-bracketed specials, but a corpus
    // containing them literally must not duplicate them.
    if (word == kStartToken || word == kEndToken || word == kUnkToken) continue;
    ranked.emplace_back(word, count);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  Vocabulary v;
  for (auto& [word, count] : ranked) {
    v.index_.emplace(word, static_cast<WordId>(v.words_.size()));
    v.words_.push_back(std::move(word));
  }
  return v;
}

WordId Vocabulary::Id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocabulary::Contains(std::string_view word) const {
  return index_.contains(std::string(word));
}

const std::string& Vocabulary::Word(WordId id) const {
  if (id < 0 || static_cast<size_t>(id) >= words_.size()) {
    throw std::out_of_range("word id " + std::to_string(id) +
                            " outside vocabulary of size " +
                            std::to_string(words_.size()));
  }
  return words_[id];
}

TokenSequence Vocabulary::Encode(std::string_view text) const {
  TokenSequence seq;
  for (const auto& token : Tokenize(text)) seq.ids.push_back(Id(token));
  seq.surface = std::string(text);
  return seq;
}

std::string Vocabulary::Decode(std::span<const WordId> ids) const {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += Word(ids[i]);
  }
  return out;
}

}  // namespace selftalk
