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

#ifndef SELFTALK_VISUAL_ANSWERER_H_
#define SELFTALK_VISUAL_ANSWERER_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "selftalk/checkpoint.h"
#include "selftalk/kernel.h"
#include "selftalk/vocab.h"

namespace selftalk {

// Closed set of one-word answers, ordered by descending training frequency
// with lexicographic tie-break. No special tokens.
class AnswerVocab {
 public:
  AnswerVocab() = default;
  static AnswerVocab FromWords(std::vector<std::string> words);

  // Multi-word answers (more than one token after normalization) are
  // skipped and counted in *dropped when it is non-null.
  static AnswerVocab Build(std::span<const std::string> answers,
                           size_t* dropped = nullptr);

  size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  // -1 when absent.
  int Id(const std::string& word) const;
  const std::string& Word(int id) const { return words_.at(id); }

  friend bool operator==(const AnswerVocab& a, const AnswerVocab& b) {
    return a.words_ == b.words_;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// Normalized single-word form of an answer, or empty when the answer has
// zero or several tokens.
std::string SingleWordAnswer(const std::string& answer);

struct AnswererConfig {
  size_t vocab_size = 0;
  size_t answer_size = 0;
  size_t embed_dim = 64;
  size_t hidden_dim = 512;
  size_t feature_dim = 0;

  void Validate() const;
};

struct LstmState {
  Vec h;
  Vec c;
};

struct AnswerResult {
  int answer_id = 0;
  std::string answer;
  double confidence = 0.0;
  Vec distribution;
};

// VIS+LSTM: the projected image Wimg * features is the first input token,
// followed by the question word embeddings. A softmax classifier on the
// final hidden state picks a one-word answer.
class VisualAnswerer {
 public:
  VisualAnswerer(AnswererConfig config, Vocabulary vocab,
                 AnswerVocab answers, uint64_t seed, double init_scale = 0.1);

  const AnswererConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const AnswerVocab& answers() const { return answers_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // i, f, o = sigmoid, g = tanh over [input; h_prev];
  // c = f * c_prev + i * g, h = o * tanh(c).
  LstmState LstmStep(std::span<const double> input, const LstmState& prev) const;

  // An empty question runs the image token alone.
  AnswerResult Answer(std::span<const double> features,
                      const TokenSequence& question) const;

  // Cross-entropy of the answer distribution against target_answer. When
  // accumulate is true the exact gradient is added into params().
  double AnswerLoss(std::span<const double> features,
                    const TokenSequence& question, int target_answer,
                    bool accumulate);
  double AnswerLoss(std::span<const double> features,
                    const TokenSequence& question, int target_answer) const;

  OrderedJson ToJson() const;
  static VisualAnswerer FromJson(const nlohmann::json& doc);
  void Save(const std::filesystem::path& path) const;
  static VisualAnswerer Load(const std::filesystem::path& path);

 private:
  struct Trace;
  void Forward(std::span<const double> features, const TokenSequence& question,
               Trace& trace) const;
  double Loss(std::span<const double> features, const TokenSequence& question,
              int target_answer, ParamStore* grads_into) const;

  AnswererConfig config_;
  Vocabulary vocab_;
  AnswerVocab answers_;
  ParamStore params_;
};

struct AnswerExample {
  Vec features;
  TokenSequence question;
  std::string answer;
};

struct AnswererTrainResult {
  VisualAnswerer model;
  std::vector<double> epoch_losses;
  // Top-1 accuracy on the held-out set after each epoch; empty when no
  // held-out set was given.
  std::vector<double> heldout_accuracy;
};

// Fraction of examples whose argmax answer equals the expected answer.
// Answers outside the model's answer vocabulary count as misses.
double Accuracy(const VisualAnswerer& model,
                std::span<const AnswerExample> examples);

// Pure SGD over a seeded shuffle. Throws std::invalid_argument on an empty
// dataset or a training answer missing from answer_vocab, NumericError on a
// non-finite loss.
AnswererTrainResult TrainAnswerer(std::span<const AnswerExample> train,
                                  std::span<const AnswerExample> heldout,
                                  const AnswererConfig& config,
                                  const Vocabulary& vocab,
                                  const AnswerVocab& answer_vocab,
                                  const TrainOptions& options);

}  // namespace selftalk

#endif  // SELFTALK_VISUAL_ANSWERER_H_
