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

#include "selftalk/self_talk.h"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "selftalk/errors.h"
#include "selftalk/random.h"

namespace selftalk {

std::string_view AnswerFlagName(AnswerFlag flag) {
  return flag == AnswerFlag::kAffirmative ? "AFFIRMATIVE" : "QUESTIONABLE";
}

AnswerFlag ParseAnswerFlag(std::string_view name) {
  if (name == "AFFIRMATIVE") return AnswerFlag::kAffirmative;
  if (name == "QUESTIONABLE") return AnswerFlag::kQuestionable;
  throw DataError("unknown answer flag: " + std::string(name));
}

SelfTalk::SelfTalk(const QuestionGenerator& generator,
                   const VisualAnswerer& answerer, std::string generator_id,
                   std::string answerer_id)
    : generator_(generator),
      answerer_(answerer),
      generator_id_(std::move(generator_id)),
      answerer_id_(std::move(answerer_id)) {
  if (!(generator.vocab() == answerer.vocab())) {
    throw std::invalid_argument(
        "generator and answerer use different question vocabularies");
  }
  if (generator.config().feature_dim != answerer.config().feature_dim) {
    throw std::invalid_argument(
        "generator and answerer expect different feature dimensions");
  }
}

SelfTalkTranscript SelfTalk::Generate(std::span<const double> features,
                                      const std::string& image_id,
                                      const SelfTalkOptions& options) const {
  if (options.n < 1) throw std::invalid_argument("N must be >= 1");
  if (!(options.threshold >= 0.0 && options.threshold <= 1.0)) {
    throw std::invalid_argument("threshold must be in [0, 1]");
  }
  if (image_id.empty()) throw std::invalid_argument("empty image id");
  if (options.dedup && options.mode == DecodeMode::kMax) {
    throw std::invalid_argument("dedup requires SAMPLE decoding");
  }

  SelfTalkTranscript t;
  t.image_id = image_id;
  t.generator_checkpoint = generator_id_;
  t.answerer_checkpoint = answerer_id_;
  t.seed = options.seed;
  t.mode = options.mode;
  t.threshold = options.threshold;
  t.dedup = options.dedup;

  std::vector<std::vector<WordId>> asked;
  uint64_t draw = 0;
  for (int i = 0; i < options.n; ++i) {
    GenerationResult q =
        generator_.Generate(features, options.mode, MixSeed(options.seed, draw++));
    bool duplicate = false;
    if (options.dedup) {
      auto repeated = [&](const GenerationResult& r) {
        return std::find(asked.begin(), asked.end(), r.question.ids) != asked.end();
      };
      int retries = 0;
      while ((q.question.empty() || repeated(q)) && retries < kResampleBudget) {
        q = generator_.Generate(features, options.mode,
                                MixSeed(options.seed, draw++));
        ++retries;
      }
      duplicate = !q.question.empty() && repeated(q);
    }
    asked.push_back(q.question.ids);

    AnswerResult a = answerer_.Answer(features, q.question);
    QAPair pair;
    pair.question = *q.question.surface;
    pair.answer = a.answer;
    pair.confidence = a.confidence;
    pair.flag = FlagFor(a.confidence, options.threshold);
    pair.question_log_prob = q.log_prob;
    pair.duplicate = duplicate;
    t.pairs.push_back(std::move(pair));
  }
  return t;
}

std::string TranscriptToText(const SelfTalkTranscript& transcript) {
  std::string out;
  for (const auto& p : transcript.pairs) {
    out += "Q: ";
    out += p.question.empty() ? "<empty>" : p.question;
    out += "? A: ";
    out += p.answer;
    if (p.flag == AnswerFlag::kQuestionable) out += "?";
    if (p.duplicate) out += " [duplicate]";
    out += "\n";
  }
  return out;
}

nlohmann::ordered_json TranscriptToJson(const SelfTalkTranscript& t) {
  nlohmann::ordered_json doc;
  doc["image_id"] = t.image_id;
  doc["seed"] = t.seed;
  doc["mode"] = DecodeModeName(t.mode);
  doc["threshold"] = t.threshold;
  doc["dedup"] = t.dedup;
  doc["generator"] = t.generator_checkpoint;
  doc["answerer"] = t.answerer_checkpoint;
  auto pairs = nlohmann::ordered_json::array();
  for (const auto& p : t.pairs) {
    nlohmann::ordered_json pair;
    pair["q"] = p.question;
    pair["a"] = p.answer;
    pair["confidence"] = p.confidence;
    pair["flag"] = AnswerFlagName(p.flag);
    pair["q_log_prob"] = p.question_log_prob;
    if (p.duplicate) pair["duplicate"] = true;
    pairs.push_back(std::move(pair));
  }
  doc["pairs"] = std::move(pairs);
  return doc;
}

SelfTalkTranscript TranscriptFromJson(const nlohmann::json& doc) {
  try {
    SelfTalkTranscript t;
    t.image_id = doc.at("image_id").get<std::string>();
    t.seed = doc.at("seed").get<uint64_t>();
    t.mode = ParseDecodeMode(doc.at("mode").get<std::string>());
    t.threshold = doc.at("threshold").get<double>();
    t.dedup = doc.value("dedup", false);
    t.generator_checkpoint = doc.value("generator", std::string());
    t.answerer_checkpoint = doc.value("answerer", std::string());
    for (const auto& p : doc.at("pairs")) {
      QAPair pair;
      pair.question = p.at("q").get<std::string>();
      pair.answer = p.at("a").get<std::string>();
      pair.confidence = p.at("confidence").get<double>();
      pair.flag = ParseAnswerFlag(p.at("flag").get<std::string>());
      pair.question_log_prob = p.at("q_log_prob").get<double>();
      pair.duplicate = p.value("duplicate", false);
      t.pairs.push_back(std::move(pair));
    }
    if (t.image_id.empty()) throw DataError("transcript with empty image_id");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed transcript: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed transcript: ") + e.what());
  }
}

std::string TranscriptsToJsonl(std::span<const SelfTalkTranscript> transcripts) {
  std::string out;
  for (const auto& t : transcripts) {
    out += TranscriptToJson(t).dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<SelfTalkTranscript> ParseTranscripts(std::string_view content) {
  std::vector<SelfTalkTranscript> out;
  std::istringstream in{std::string(content)};
  size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(TranscriptFromJson(doc));
  }
  return out;
}

}  // namespace selftalk
