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

#ifndef SELFTALK_QUESTION_GENERATOR_H_
#define SELFTALK_QUESTION_GENERATOR_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "selftalk/checkpoint.h"
#include "selftalk/kernel.h"
#include "selftalk/vocab.h"

namespace selftalk {

enum class DecodeMode { kMax, kSample };

std::string_view DecodeModeName(DecodeMode mode);
// Accepts "max" / "sample" in any case.
DecodeMode ParseDecodeMode(std::string_view name);

struct GeneratorConfig {
  size_t vocab_size = 0;
  size_t embed_dim = 64;
  size_t hidden_dim = 512;
  size_t feature_dim = 0;
  size_t max_len = 20;
  // Sampling temperature; not part of the trained model.
  double temperature = 1.0;

  // Throws ShapeError unless every size is positive and max_len >= 2.
  void Validate() const;
};

struct RnnStepOutput {
  Vec hidden;
  Vec probs;
};

struct GenerationResult {
  TokenSequence question;
  double log_prob = 0.0;
  DecodeMode mode = DecodeMode::kMax;
  // Probability of each emitted token, END included when it was emitted.
  std::vector<double> step_probs;
};

// Multimodal RNN question generator:
//   b_v = Whi * features
//   h_t = tanh(Whx x_t + Whh h_{t-1} + bh + [t == 1] b_v)
//   y_t = softmax(Who h_t + bo)
// where x_t are rows of the learned embedding Emb and Emb row 0 is START.
class QuestionGenerator {
 public:
  // Parameters uniform in [-init_scale, init_scale] from `seed`, biases 0.
  QuestionGenerator(GeneratorConfig config, Vocabulary vocab, uint64_t seed,
                    double init_scale = 0.1);

  const GeneratorConfig& config() const { return config_; }
  GeneratorConfig& mutable_config() { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Whi * features, no nonlinearity.
  Vec ImageBias(std::span<const double> features) const;

  // One recurrence step; the image bias only enters when t == 1.
  RnnStepOutput Step(std::span<const double> x, std::span<const double> h_prev,
                     std::span<const double> image_bias, int t) const;

  // Teacher-forced negative log likelihood of `question` followed by END,
  // with START as the first input. When accumulate is true the exact BPTT
  // gradient is added into params().
  double SequenceLoss(std::span<const double> features,
                      const TokenSequence& question, bool accumulate);
  double SequenceLoss(std::span<const double> features,
                      const TokenSequence& question) const;

  // Greedy (ties to the lowest id) or inverse-CDF sampled decoding. START is
  // never emitted; decoding stops at END or after max_len words.
  GenerationResult Generate(std::span<const double> features, DecodeMode mode,
                            uint64_t seed, size_t max_len) const;
  GenerationResult Generate(std::span<const double> features, DecodeMode mode,
                            uint64_t seed) const {
    return Generate(features, mode, seed, config_.max_len);
  }

  OrderedJson ToJson() const;
  static QuestionGenerator FromJson(const nlohmann::json& doc);
  void Save(const std::filesystem::path& path) const;
  static QuestionGenerator Load(const std::filesystem::path& path);

 private:
  double Loss(std::span<const double> features, const TokenSequence& question,
              ParamStore* grads_into) const;

  GeneratorConfig config_;
  Vocabulary vocab_;
  ParamStore params_;
};

struct GeneratorExample {
  Vec features;
  TokenSequence question;
};


struct GeneratorTrainResult {
  QuestionGenerator model;
  std::vector<double> epoch_losses;
};

// Pure SGD (batch size 1) over a seeded shuffle of the dataset. Throws
// std::invalid_argument on an empty dataset or inconsistent feature sizes
// and NumericError on a non-finite loss.
GeneratorTrainResult TrainGenerator(std::span<const GeneratorExample> dataset,
                                    const GeneratorConfig& config,
                                    const Vocabulary& vocab,
                                    const TrainOptions& options);

}  // namespace selftalk

#endif  // SELFTALK_QUESTION_GENERATOR_H_
