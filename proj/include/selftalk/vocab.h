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

#ifndef SELFTALK_VOCAB_H_
#define SELFTALK_VOCAB_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace selftalk {

using WordId = int32_t;

inline constexpr WordId kStartId = 0;
inline constexpr WordId kEndId = 1;
inline constexpr WordId kUnkId = 2;

inline constexpr std::string_view kStartToken = "<start>";
inline constexpr std::string_view kEndToken = "<end>";
inline constexpr std::string_view kUnkToken = "<unk>";

// Lowercases, strips the characters ? . , ! and splits on whitespace.
std::vector<std::string> Tokenize(std::string_view text);

struct TokenSequence {
  std::vector<WordId> ids;
  std::optional<std::string> surface;

  bool empty() const { return ids.empty(); }
  size_t size() const { return ids.size(); }
};

// Word <-> id mapping. Ids 0, 1, 2 are START, END and UNK; the remaining
// words follow in descending corpus frequency with lexicographic tie-break.
// Immutable after construction.
class Vocabulary {
 public:
  // Specials only.
  Vocabulary();

  // Restores a vocabulary from its serialized word list. The first three
  // entries must be the special tokens.
  static Vocabulary FromWords(std::vector<std::string> words);

  static Vocabulary Build(std::span<const std::string> corpus,
                          int min_count = 1);

  size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  // Returns kUnkId for unknown words.
  WordId Id(std::string_view word) const;
  bool Contains(std::string_view word) const;
  const std::string& Word(WordId id) const;

  TokenSequence Encode(std::string_view text) const;

  // Joins words with single spaces; UNK renders as "<unk>". Throws
  // std::out_of_range on ids >= size().
  std::string Decode(std::span<const WordId> ids) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.words_ == b.words_;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
};

}  // namespace selftalk

#endif  // SELFTALK_VOCAB_H_
