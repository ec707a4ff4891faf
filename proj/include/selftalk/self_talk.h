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

#ifndef SELFTALK_SELF_TALK_H_
#define SELFTALK_SELF_TALK_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "selftalk/question_generator.h"
#include "selftalk/visual_answerer.h"

namespace selftalk {

enum class AnswerFlag { kAffirmative, kQuestionable };

std::string_view AnswerFlagName(AnswerFlag flag);
AnswerFlag ParseAnswerFlag(std::string_view name);

// AFFIRMATIVE iff confidence >= threshold.
inline AnswerFlag FlagFor(double confidence, double threshold) {
  return confidence >= threshold ? AnswerFlag::kAffirmative
                                 : AnswerFlag::kQuestionable;
}

inline constexpr double kDefaultThreshold = 0.3;
inline constexpr int kDefaultQuestions = 5;
inline constexpr int kResampleBudget = 10;

struct QAPair {
  std::string question;  // tokenized surface, no trailing "?"
  std::string answer;
  double confidence = 0.0;
  AnswerFlag flag = AnswerFlag::kAffirmative;
  double question_log_prob = 0.0;
  // Kept after the resample budget ran out on a repeated question.
  bool duplicate = false;
};

struct SelfTalkTranscript {
  std::string image_id;
  std::vector<QAPair> pairs;
  std::string generator_checkpoint;
  std::string answerer_checkpoint;
  uint64_t seed = 0;
  DecodeMode mode = DecodeMode::kSample;
  double threshold = kDefaultThreshold;
  bool dedup = false;
};

struct SelfTalkOptions {
  int n = kDefaultQuestions;
  DecodeMode mode = DecodeMode::kSample;
  double threshold = kDefaultThreshold;
  // Resample repeated and empty questions, up to kResampleBudget times.
  bool dedup = false;
  uint64_t seed = 0;
};

// Alternates question sampling and visual answering N times for one image.
class SelfTalk {
 public:
  // Throws std::invalid_argument when the two models do not share the same
  // question vocabulary or feature dimension.
  SelfTalk(const QuestionGenerator& generator, const VisualAnswerer& answerer,
           std::string generator_id = "", std::string answerer_id = "");

  // Throws std::invalid_argument on N < 1, threshold outside [0, 1], an
  // empty image id, or dedup requested with MAX decoding.
  SelfTalkTranscript Generate(std::span<const double> features,
                              const std::string& image_id,
                              const SelfTalkOptions& options) const;

 private:
  const QuestionGenerator& generator_;
  const VisualAnswerer& answerer_;
  std::string generator_id_;
  std::string answerer_id_;
};

// One "Q: ...? A: ..." line per pair. Questionable answers carry a trailing
// "?"; empty questions render as "<empty>".
std::string TranscriptToText(const SelfTalkTranscript& transcript);

nlohmann::ordered_json TranscriptToJson(const SelfTalkTranscript& transcript);
// Throws DataError on missing fields.
SelfTalkTranscript TranscriptFromJson(const nlohmann::json& doc);

std::string TranscriptsToJsonl(std::span<const SelfTalkTranscript> transcripts);
std::vector<SelfTalkTranscript> ParseTranscripts(std::string_view content);

}  // namespace selftalk

#endif  // SELFTALK_SELF_TALK_H_
