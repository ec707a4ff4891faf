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

#include "selftalk/question_generator.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "selftalk/errors.h"
#include "selftalk/random.h"

namespace selftalk {
namespace {

const std::vector<std::string> kBiases = {"bh", "bo"};

void CheckIds(const TokenSequence& seq, size_t vocab_size) {
  for (size_t i = 0; i < seq.ids.size(); ++i) {
    const WordId id = seq.ids[i];
    if (id < 0 || static_cast<size_t>(id) >= vocab_size) {
      throw DataError("token id " + std::to_string(id) +
                      " outside vocabulary of size " +
                      std::to_string(vocab_size));
    }
    if (id == kStartId) throw DataError("START token inside a question");
  }
}

}  // namespace

std::string_view DecodeModeName(DecodeMode mode) {
  return mode == DecodeMode::kMax ? "max" : "sample";
}

DecodeMode ParseDecodeMode(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(c)));
  if (lower == "max") return DecodeMode::kMax;
  if (lower == "sample") return DecodeMode::kSample;
  throw std::invalid_argument("unknown decode mode: " + std::string(name));
}

void GeneratorConfig::Validate() const {
  if (vocab_size == 0 || embed_dim == 0 || hidden_dim == 0 ||
      feature_dim == 0) {
    throw ShapeError("generator dimensions must be positive");
  }
  if (max_len < 2) throw ShapeError("generator max_len must be >= 2");
  if (!(temperature > 0.0)) throw ShapeError("temperature must be positive");
}

QuestionGenerator::QuestionGenerator(GeneratorConfig config, Vocabulary vocab,
                                     uint64_t seed, double init_scale)
    : config_(config), vocab_(std::move(vocab)) {
  config_.Validate();
  if (vocab_.size() != config_.vocab_size) {
    throw ShapeError("generator vocab_size does not match vocabulary");
  }
  const size_t v = config_.vocab_size, d = config_.embed_dim,
               h = config_.hidden_dim, f = config_.feature_dim;
  params_.Add("Emb", v, d);
  params_.Add("Whh", h, h);
  params_.Add("Whi", h, f);
  params_.Add("Who", v, h);
  params_.Add("Whx", h, d);
  params_.Add("bh", h, 1);
  params_.Add("bo", v, 1);
  params_.InitUniform(seed, init_scale, kBiases);
}

Vec QuestionGenerator::ImageBias(std::span<const double> features) const {
  if (features.size() != config_.feature_dim) {
    throw ShapeError("image features have length " +
                     std::to_string(features.size()) + ", expected " +
                     std::to_string(config_.feature_dim));
  }
  return MatVec(params_.value("Whi"), features);
}

RnnStepOutput QuestionGenerator::Step(std::span<const double> x,
                                      std::span<const double> h_prev,
                                      std::span<const double> image_bias,
                                      int t) const {
  if (t < 1) throw ShapeError("step index must be >= 1");
  if (h_prev.size() != config_.hidden_dim) {
    throw ShapeError("hidden state has wrong length");
  }
  Vec pre = Affine(params_.value("Whx"), x, params_.value("bh").data());
  const Vec rec = MatVec(params_.value("Whh"), h_prev);
  for (size_t i = 0; i < pre.size(); ++i) pre[i] += rec[i];
  if (t == 1) {
    if (image_bias.size() != config_.hidden_dim) {
      throw ShapeError("image bias has wrong length");
    }
    for (size_t i = 0; i < pre.size(); ++i) pre[i] += image_bias[i];
  }
  RnnStepOutput out;
  out.hidden = TanhVec(pre);
  out.probs =
      Softmax(Affine(params_.value("Who"), out.hidden, params_.value("bo").data()));
  return out;
}

double QuestionGenerator::SequenceLoss(std::span<const double> features,
                                       const TokenSequence& question,
                                       bool accumulate) {
  return Loss(features, question, accumulate ? &params_ : nullptr);
}

double QuestionGenerator::SequenceLoss(std::span<const double> features,
                                       const TokenSequence& question) const {
  return Loss(features, question, nullptr);
}

double QuestionGenerator::Loss(std::span<const double> features,
                               const TokenSequence& question,
                               ParamStore* grads_into) const {
  if (question.empty()) throw std::invalid_argument("empty question");
  CheckIds(question, config_.vocab_size);
  const size_t hidden = config_.hidden_dim;
  const Vec image_bias = ImageBias(features);
  const Matrix& emb = params_.value("Emb");

  // Inputs are START, w_1..w_T; targets are w_1..w_T, END.
  const size_t steps = question.size() + 1;
  std::vector<WordId> inputs(steps), targets(steps);
  inputs[0] = kStartId;
  for (size_t t = 0; t < question.size(); ++t) {
    inputs[t + 1] = question.ids[t];
    targets[t] = question.ids[t];
  }
  targets[steps - 1] = kEndId;

  // hiddens[0] is h_0 = 0.
  std::vector<Vec> hiddens(steps + 1, Vec(hidden, 0.0));
  std::vector<Vec> probs(steps);
  double loss = 0.0;
  for (size_t t = 0; t < steps; ++t) {
    RnnStepOutput out = Step(emb.row(inputs[t]), hiddens[t], image_bias,
                             static_cast<int>(t + 1));
    loss += CrossEntropy(out.probs, targets[t]);
    hiddens[t + 1] = std::move(out.hidden);
    probs[t] = std::move(out.probs);
  }
  if (grads_into == nullptr) return loss;

  ParamStore& g = *grads_into;
  const Matrix& whh = params_.value("Whh");
  const Matrix& whx = params_.value("Whx");
  const Matrix& who = params_.value("Who");
  Matrix& d_emb = g.grad("Emb");
  Matrix& d_whh = g.grad("Whh");
  Matrix& d_whi = g.grad("Whi");
  Matrix& d_who = g.grad("Who");
  Matrix& d_whx = g.grad("Whx");
  Matrix& d_bh = g.grad("bh");
  Matrix& d_bo = g.grad("bo");

  Vec dh_next(hidden, 0.0);
  Vec d_input(config_.embed_dim);
  for (size_t t = steps; t-- > 0;) {
    const Vec& h = hiddens[t + 1];
    Vec dz = probs[t];
    dz[targets[t]] -= 1.0;
    AddOuter(d_who, dz, h);
    for (size_t i = 0; i < dz.size(); ++i) d_bo.data()[i] += dz[i];

    Vec da = dh_next;
    AddMatTVec(who, dz, da);
    for (size_t i = 0; i < hidden; ++i) da[i] *= 1.0 - h[i] * h[i];

    AddOuter(d_whh, da, hiddens[t]);
    const auto x = emb.row(inputs[t]);
    AddOuter(d_whx, da, x);
    for (size_t i = 0; i < hidden; ++i) d_bh.data()[i] += da[i];
    std::fill(d_input.begin(), d_input.end(), 0.0);
    AddMatTVec(whx, da, d_input);
    auto d_row = d_emb.row(inputs[t]);
    for (size_t i = 0; i < d_input.size(); ++i) d_row[i] += d_input[i];
    if (t == 0) AddOuter(d_whi, da, features);

    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    AddMatTVec(whh, da, dh_next);
  }
  return loss;
}

GenerationResult QuestionGenerator::Generate(std::span<const double> features,
                                             DecodeMode mode, uint64_t seed,
                                             size_t max_len) const {
  const Vec image_bias = ImageBias(features);
  const Matrix& emb = params_.value("Emb");
  const Matrix& who = params_.value("Who");
  const Matrix& bo = params_.value("bo");
  Rng rng(seed);

  GenerationResult result;
  result.mode = mode;
  Vec h(config_.hidden_dim, 0.0);
  WordId input = kStartId;
  for (int t = 1;; ++t) {
    RnnStepOutput out = Step(emb.row(input), h, image_bias, t);
    const Vec& p = out.probs;
    WordId chosen = kEndId;
    if (mode == DecodeMode::kMax) {
      double best = -1.0;
      for (size_t i = 0; i < p.size(); ++i) {
        if (static_cast<WordId>(i) == kStartId) continue;
        if (p[i] > best) {
          best = p[i];
          chosen = static_cast<WordId>(i);
        }
      }
    } else {
      Vec q = p;
      if (config_.temperature != 1.0) {
        Vec logits = Affine(who, out.hidden, bo.data());
        for (double& z : logits) z /= config_.temperature;
        q = Softmax(logits);
      }
      q[kStartId] = 0.0;
      double total = 0.0;
      for (double v : q) total += v;
      const double u = rng.Uniform() * total;
      double cumulative = 0.0;
      chosen = kEndId;
      WordId last_positive = kEndId;
      bool picked = false;
      for (size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0) continue;
        last_positive = static_cast<WordId>(i);
        cumulative += q[i];
        if (u < cumulative) {
          chosen = static_cast<WordId>(i);
          picked = true;
          break;
        }
      }
      // Rounding can leave u just above the final cumulative sum.
      if (!picked) chosen = last_positive;
    }
    result.log_prob += std::log(p[chosen]);
    result.step_probs.push_back(p[chosen]);
    if (chosen == kEndId) break;
    result.question.ids.push_back(chosen);
    if (result.question.size() >= max_len) break;
    input = chosen;
    h = std::move(out.hidden);
  }
  result.question.surface = vocab_.Decode(result.question.ids);
  return result;
}

OrderedJson QuestionGenerator::ToJson() const {
  OrderedJson doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["model"] = "qgen";
  OrderedJson config;
  config["V"] = config_.vocab_size;
  config["D"] = config_.embed_dim;
  config["H"] = config_.hidden_dim;
  config["F"] = config_.feature_dim;
  config["max_len"] = config_.max_len;
  doc["config"] = std::move(config);
  doc["vocab"] = vocab_.words();
  doc["params"] = ParamsToJson(params_);
  return doc;
}

QuestionGenerator QuestionGenerator::FromJson(const nlohmann::json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw DataError("unsupported checkpoint format_version");
    }
    if (doc.at("model").get<std::string>() != "qgen") {
      throw DataError("checkpoint is not a question generator");
    }
    const auto& c = doc.at("config");
    GeneratorConfig config;
    config.vocab_size = c.at("V").get<size_t>();
    config.embed_dim = c.at("D").get<size_t>();
    config.hidden_dim = c.at("H").get<size_t>();
    config.feature_dim = c.at("F").get<size_t>();
    config.max_len = c.at("max_len").get<size_t>();
    auto vocab = Vocabulary::FromWords(
        doc.at("vocab").get<std::vector<std::string>>());
    QuestionGenerator model(config, std::move(vocab), 0);
    ParamsFromJson(doc.at("params"), model.params_);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed generator checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw DataError(std::string("invalid generator checkpoint: ") + e.what());
  }
}

void QuestionGenerator::Save(const std::filesystem::path& path) const {
  WriteFile(path, DumpCheckpoint(ToJson()));
}

QuestionGenerator QuestionGenerator::Load(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return FromJson(doc);
}

GeneratorTrainResult TrainGenerator(std::span<const GeneratorExample> dataset,
                                    const GeneratorConfig& config,
                                    const Vocabulary& vocab,
                                    const TrainOptions& options) {
  if (dataset.empty()) throw std::invalid_argument("empty training dataset");
  for (const auto& example : dataset) {
    if (example.features.size() != config.feature_dim) {
      throw std::invalid_argument("inconsistent feature dimensions in dataset");
    }
  }
  GeneratorTrainResult result{
      QuestionGenerator(config, vocab, MixSeed(options.seed, 0),
                        options.init_scale),
      {}};
  QuestionGenerator& model = result.model;
  Rng order_rng(MixSeed(options.seed, 1));
  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  SgdOptions sgd{options.learning_rate, options.clip};
  for (size_t epoch = 0; epoch < options.epochs; ++epoch) {
    if (epoch > 0 && options.decay_every > 0 &&
        epoch % options.decay_every == 0) {
      sgd.learning_rate *= options.decay_factor;
    }
    order_rng.Shuffle(order);
    double total = 0.0;
    size_t count = 0;
    for (size_t idx : order) {
      const auto& example = dataset[idx];
      if (example.question.empty()) continue;
      const double loss =
          model.SequenceLoss(example.features, example.question, true);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite generator loss in epoch " +
                           std::to_string(epoch + 1));
      }
      SgdStep(model.params(), sgd);
      total += loss;
      ++count;
    }
    result.epoch_losses.push_back(count ? total / count : 0.0);
  }
  return result;
}

}  // namespace selftalk
