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

#include "selftalk/visual_answerer.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "selftalk/errors.h"
#include "selftalk/random.h"

namespace selftalk {
namespace {

const std::vector<std::string> kBiases = {"bans", "bf", "bg", "bi", "bo"};
constexpr const char* kGates[] = {"i", "f", "o", "g"};

}  // namespace

AnswerVocab AnswerVocab::FromWords(std::vector<std::string> words) {
  AnswerVocab v;
  v.words_ = std::move(words);
  for (size_t i = 0; i < v.words_.size(); ++i) {
    if (!v.index_.emplace(v.words_[i], static_cast<int>(i)).second) {
      throw DataError("duplicate answer word: " + v.words_[i]);
    }
  }
  return v;
}

std::string SingleWordAnswer(const std::string& answer) {
  auto tokens = Tokenize(answer);
  return tokens.size() == 1 ? tokens[0] : std::string();
}

AnswerVocab AnswerVocab::Build(std::span<const std::string> answers,
                               size_t* dropped) {
  std::map<std::string, int> counts;
  size_t skipped = 0;
  for (const auto& answer : answers) {
    std::string word = SingleWordAnswer(answer);
    if (word.empty()) {
      ++skipped;
      continue;
    }
    ++counts[word];
  }
  std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  for (auto& [word, count] : ranked) words.push_back(word);
  if (dropped != nullptr) *dropped = skipped;
  return FromWords(std::move(words));
}

int AnswerVocab::Id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? -1 : it->second;
}

void AnswererConfig::Validate() const {
  if (vocab_size == 0 || answer_size == 0 || embed_dim == 0 ||
      hidden_dim == 0 || feature_dim == 0) {
    throw ShapeError("answerer dimensions must be positive");
  }
}

VisualAnswerer::VisualAnswerer(AnswererConfig config, Vocabulary vocab,
                               AnswerVocab answers, uint64_t seed,
                               double init_scale)
    : config_(config), vocab_(std::move(vocab)), answers_(std::move(answers)) {
  config_.Validate();
  if (vocab_.size() != config_.vocab_size) {
    throw ShapeError("answerer vocab_size does not match vocabulary");
  }
  if (answers_.size() != config_.answer_size) {
    throw ShapeError("answerer answer_size does not match answer vocabulary");
  }
  const size_t v = config_.vocab_size, a = config_.answer_size,
               d = config_.embed_dim, h = config_.hidden_dim,
               f = config_.feature_dim;
  params_.Add("Emb", v, d);
  params_.Add("Wans", a, h);
  params_.Add("Wimg", d, f);
  for (const char* gate : kGates) {
    params_.Add(std::string("W") + gate, h, d + h);
    params_.Add(std::string("b") + gate, h, 1);
  }
  params_.Add("bans", a, 1);
  params_.InitUniform(seed, init_scale, kBiases);
}

LstmState VisualAnswerer::LstmStep(std::span<const double> input,
                                   const LstmState& prev) const {
  const size_t d = config_.embed_dim, h = config_.hidden_dim;
  if (input.size() != d || prev.h.size() != h || prev.c.size() != h) {
    throw ShapeError("lstm step shape mismatch");
  }
  Vec z(d + h);
  std::copy(input.begin(), input.end(), z.begin());
  std::copy(prev.h.begin(), prev.h.end(), z.begin() + d);
  const Vec i = SigmoidVec(Affine(params_.value("Wi"), z, params_.value("bi").data()));
  const Vec f = SigmoidVec(Affine(params_.value("Wf"), z, params_.value("bf").data()));
  const Vec o = SigmoidVec(Affine(params_.value("Wo"), z, params_.value("bo").data()));
  const Vec g = TanhVec(Affine(params_.value("Wg"), z, params_.value("bg").data()));
  LstmState next{Vec(h), Vec(h)};
  for (size_t k = 0; k < h; ++k) {
    next.c[k] = f[k] * prev.c[k] + i[k] * g[k];
    next.h[k] = o[k] * std::tanh(next.c[k]);
  }
  return next;
}

// Per-step activations kept for backpropagation.
struct VisualAnswerer::Trace {
  std::vector<Vec> inputs;  // x_t, t = 0 is the projected image
  std::vector<WordId> words;  // word id of x_t for t >= 1
  std::vector<Vec> concat, i, f, o, g, c, tanh_c, h;
  Vec probs;
};

void VisualAnswerer::Forward(std::span<const double> features,
                             const TokenSequence& question, Trace& tr) const {
  if (features.size() != config_.feature_dim) {
    throw ShapeError("image features have length " +
                     std::to_string(features.size()) + ", expected " +
                     std::to_string(config_.feature_dim));
  }
  for (WordId id : question.ids) {
    if (id < 0 || static_cast<size_t>(id) >= config_.vocab_size) {
      throw DataError("token id " + std::to_string(id) +
                      " outside vocabulary of size " +
                      std::to_string(config_.vocab_size));
    }
  }
  const size_t d = config_.embed_dim, h = config_.hidden_dim;
  const Matrix& emb = params_.value("Emb");
  tr.inputs.push_back(MatVec(params_.value("Wimg"), features));
  tr.words.push_back(-1);
  for (WordId id : question.ids) {
    auto row = emb.row(id);
    tr.inputs.emplace_back(row.begin(), row.end());
    tr.words.push_back(id);
  }

  const Matrix& wi = params_.value("Wi");
  const Matrix& wf = params_.value("Wf");
  const Matrix& wo = params_.value("Wo");
  const Matrix& wg = params_.value("Wg");
  Vec h_prev(h, 0.0), c_prev(h, 0.0);
  for (const Vec& x : tr.inputs) {
    Vec z(d + h);
    std::copy(x.begin(), x.end(), z.begin());
    std::copy(h_prev.begin(), h_prev.end(), z.begin() + d);
    Vec i = SigmoidVec(Affine(wi, z, params_.value("bi").data()));
    Vec f = SigmoidVec(Affine(wf, z, params_.value("bf").data()));
    Vec o = SigmoidVec(Affine(wo, z, params_.value("bo").data()));
    Vec g = TanhVec(Affine(wg, z, params_.value("bg").data()));
    Vec c(h), tc(h), hn(h);
    for (size_t k = 0; k < h; ++k) {
      c[k] = f[k] * c_prev[k] + i[k] * g[k];
      tc[k] = std::tanh(c[k]);
      hn[k] = o[k] * tc[k];
    }
    h_prev = hn;
    c_prev = c;
    tr.concat.push_back(std::move(z));
    tr.i.push_back(std::move(i));
    tr.f.push_back(std::move(f));
    tr.o.push_back(std::move(o));
    tr.g.push_back(std::move(g));
    tr.c.push_back(std::move(c));
    tr.tanh_c.push_back(std::move(tc));
    tr.h.push_back(std::move(hn));
  }
  tr.probs = Softmax(
      Affine(params_.value("Wans"), tr.h.back(), params_.value("bans").data()));
}

AnswerResult VisualAnswerer::Answer(std::span<const double> features,
                                    const TokenSequence& question) const {
  Trace tr;
  Forward(features, question, tr);
  AnswerResult result;
  result.answer_id = 0;
  for (size_t k = 1; k < tr.probs.size(); ++k) {
    if (tr.probs[k] > tr.probs[result.answer_id]) {
      result.answer_id = static_cast<int>(k);
    }
  }
  result.answer = answers_.Word(result.answer_id);
  result.confidence = tr.probs[result.answer_id];
  result.distribution = std::move(tr.probs);
  return result;
}

double VisualAnswerer::AnswerLoss(std::span<const double> features,
                                  const TokenSequence& question,
                                  int target_answer, bool accumulate) {
  return Loss(features, question, target_answer,
              accumulate ? &params_ : nullptr);
}

double VisualAnswerer::AnswerLoss(std::span<const double> features,
                                  const TokenSequence& question,
                                  int target_answer) const {
  return Loss(features, question, target_answer, nullptr);
}

double VisualAnswerer::Loss(std::span<const double> features,
                            const TokenSequence& question, int target_answer,
                            ParamStore* grads_into) const {
  if (target_answer < 0 ||
      static_cast<size_t>(target_answer) >= config_.answer_size) {
    throw std::out_of_range("answer id " + std::to_string(target_answer) +
                            " outside answer vocabulary");
  }
  Trace tr;
  Forward(features, question, tr);
  const double loss = CrossEntropy(tr.probs, target_answer);
  if (grads_into == nullptr) return loss;

  ParamStore& gs = *grads_into;
  const size_t d = config_.embed_dim, h = config_.hidden_dim;
  Vec dz = tr.probs;
  dz[target_answer] -= 1.0;
  AddOuter(gs.grad("Wans"), dz, tr.h.back());
  for (size_t k = 0; k < dz.size(); ++k) gs.grad("bans").data()[k] += dz[k];

  Vec dh(h, 0.0), dc(h, 0.0);
  AddMatTVec(params_.value("Wans"), dz, dh);

  const Matrix& wi = params_.value("Wi");
  const Matrix& wf = params_.value("Wf");
  const Matrix& wo = params_.value("Wo");
  const Matrix& wg = params_.value("Wg");
  Matrix& d_wi = gs.grad("Wi");
  Matrix& d_wf = gs.grad("Wf");
  Matrix& d_wo = gs.grad("Wo");
  Matrix& d_wg = gs.grad("Wg");
  auto& d_bi = gs.grad("bi").data();
  auto& d_bf = gs.grad("bf").data();
  auto& d_bo = gs.grad("bo").data();
  auto& d_bg = gs.grad("bg").data();
  Matrix& d_emb = gs.grad("Emb");

  Vec dpi(h), dpf(h), dpo(h), dpg(h), dconcat(d + h);
  for (size_t t = tr.inputs.size(); t-- > 0;) {
    const Vec& i = tr.i[t];
    const Vec& f = tr.f[t];
    const Vec& o = tr.o[t];
    const Vec& g = tr.g[t];
    const Vec& tc = tr.tanh_c[t];
    for (size_t k = 0; k < h; ++k) {
      const double c_prev = t > 0 ? tr.c[t - 1][k] : 0.0;
      const double d_o = dh[k] * tc[k];
      const double d_c = dc[k] + dh[k] * o[k] * (1.0 - tc[k] * tc[k]);
      dpi[k] = d_c * g[k] * i[k] * (1.0 - i[k]);
      dpf[k] = d_c * c_prev * f[k] * (1.0 - f[k]);
      dpo[k] = d_o * o[k] * (1.0 - o[k]);
      dpg[k] = d_c * i[k] * (1.0 - g[k] * g[k]);
      dc[k] = d_c * f[k];
    }
    const Vec& z = tr.concat[t];
    AddOuter(d_wi, dpi, z);
    AddOuter(d_wf, dpf, z);
    AddOuter(d_wo, dpo, z);
    AddOuter(d_wg, dpg, z);
    for (size_t k = 0; k < h; ++k) {
      d_bi[k] += dpi[k];
      d_bf[k] += dpf[k];
      d_bo[k] += dpo[k];
      d_bg[k] += dpg[k];
    }
    std::fill(dconcat.begin(), dconcat.end(), 0.0);
    AddMatTVec(wi, dpi, dconcat);
    AddMatTVec(wf, dpf, dconcat);
    AddMatTVec(wo, dpo, dconcat);
    AddMatTVec(wg, dpg, dconcat);
    std::span<const double> dx(dconcat.data(), d);
    if (t == 0) {
      AddOuter(gs.grad("Wimg"), dx, features);
    } else {
      auto row = d_emb.row(tr.words[t]);
      for (size_t k = 0; k < d; ++k) row[k] += dx[k];
    }
    std::copy(dconcat.begin() + d, dconcat.end(), dh.begin());
  }
  return loss;
}

OrderedJson VisualAnswerer::ToJson() const {
  OrderedJson doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["model"] = "vqa";
  OrderedJson config;
  config["V"] = config_.vocab_size;
  config["A"] = config_.answer_size;
  config["D"] = config_.embed_dim;
  config["H"] = config_.hidden_dim;
  config["F"] = config_.feature_dim;
  doc["config"] = std::move(config);
  doc["vocab"] = vocab_.words();
  doc["answer_vocab"] = answers_.words();
  doc["params"] = ParamsToJson(params_);
  return doc;
}

VisualAnswerer VisualAnswerer::FromJson(const nlohmann::json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw DataError("unsupported checkpoint format_version");
    }
    if (doc.at("model").get<std::string>() != "vqa") {
      throw DataError("checkpoint is not a visual answerer");
    }
    const auto& c = doc.at("config");
    AnswererConfig config;
    config.vocab_size = c.at("V").get<size_t>();
    config.answer_size = c.at("A").get<size_t>();
    config.embed_dim = c.at("D").get<size_t>();
    config.hidden_dim = c.at("H").get<size_t>();
    config.feature_dim = c.at("F").get<size_t>();
    auto vocab = Vocabulary::FromWords(
        doc.at("vocab").get<std::vector<std::string>>());
    auto answers = AnswerVocab::FromWords(
        doc.at("answer_vocab").get<std::vector<std::string>>());
    VisualAnswerer model(config, std::move(vocab), std::move(answers), 0);
    ParamsFromJson(doc.at("params"), model.params_);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed answerer checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw DataError(std::string("invalid answerer checkpoint: ") + e.what());
  }
}

void VisualAnswerer::Save(const std::filesystem::path& path) const {
  WriteFile(path, DumpCheckpoint(ToJson()));
}

VisualAnswerer VisualAnswerer::Load(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return FromJson(doc);
}

double Accuracy(const VisualAnswerer& model,
                std::span<const AnswerExample> examples) {
  if (examples.empty()) return 0.0;
  size_t correct = 0;
  for (const auto& example : examples) {
    const int expected = model.answers().Id(SingleWordAnswer(example.answer));
    if (expected < 0) continue;
    if (model.Answer(example.features, example.question).answer_id == expected) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

AnswererTrainResult TrainAnswerer(std::span<const AnswerExample> train,
                                  std::span<const AnswerExample> heldout,
                                  const AnswererConfig& config,
                                  const Vocabulary& vocab,
                                  const AnswerVocab& answer_vocab,
                                  const TrainOptions& options) {
  if (train.empty()) throw std::invalid_argument("empty training dataset");
  std::vector<int> targets;
  targets.reserve(train.size());
  for (const auto& example : train) {
    const int id = answer_vocab.Id(SingleWordAnswer(example.answer));
    if (id < 0) {
      throw std::invalid_argument("answer '" + example.answer +
                                  "' not in answer vocabulary");
    }
    if (example.features.size() != config.feature_dim) {
      throw std::invalid_argument("inconsistent feature dimensions in dataset");
    }
    targets.push_back(id);
  }
  AnswererTrainResult result{
      VisualAnswerer(config, vocab, answer_vocab, MixSeed(options.seed, 0),
                     options.init_scale),
      {},
      {}};
  VisualAnswerer& model = result.model;
  Rng order_rng(MixSeed(options.seed, 1));
  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  SgdOptions sgd{options.learning_rate, options.clip};
  for (size_t epoch = 0; epoch < options.epochs; ++epoch) {
    if (epoch > 0 && options.decay_every > 0 &&
        epoch % options.decay_every == 0) {
      sgd.learning_rate *= options.decay_factor;
    }
    order_rng.Shuffle(order);
    double total = 0.0;
    for (size_t idx : order) {
      const double loss = model.AnswerLoss(train[idx].features,
                                           train[idx].question, targets[idx],
                                           true);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite answerer loss in epoch " +
                           std::to_string(epoch + 1));
      }
      SgdStep(model.params(), sgd);
      total += loss;
    }
    result.epoch_losses.push_back(total / static_cast<double>(train.size()));
    if (!heldout.empty()) result.heldout_accuracy.push_back(Accuracy(model, heldout));
  }
  return result;
}

}  // namespace selftalk
