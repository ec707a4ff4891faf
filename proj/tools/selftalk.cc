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

// Command-line driver for the selftalk pipeline.

#include <openssl/evp.h>
#include <signal.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "selftalk/checkpoint.h"
#include "selftalk/dataset.h"
#include "selftalk/errors.h"
#include "selftalk/eval_server.h"
#include "selftalk/metrics.h"
#include "selftalk/microworld.h"
#include "selftalk/question_generator.h"
#include "selftalk/random.h"
#include "selftalk/rating_store.h"
#include "selftalk/self_talk.h"
#include "selftalk/visual_answerer.h"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace selftalk {
namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string Sha256Hex(const std::string& content) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(content.data(), content.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* kHex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

// Collects outputs in memory and writes them at the end through temporary
// files, so a failed run leaves nothing behind.
class Outputs {
 public:
  explicit Outputs(bool force) : force_(force) {}

  void Add(const fs::path& path, std::string content) {
    if (!force_ && fs::exists(path)) {
      throw UsageError("refusing to overwrite " + path.string() +
                       " (pass --force)");
    }
    files_.emplace_back(path, std::move(content));
  }

  const std::vector<std::pair<fs::path, std::string>>& files() const {
    return files_;
  }

  void Commit() {
    std::vector<fs::path> temps;
    try {
      for (const auto& [path, content] : files_) {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        fs::path tmp = path;
        tmp += ".tmp" + std::to_string(::getpid());
        temps.push_back(tmp);
        WriteFile(tmp, content);
      }
      for (size_t i = 0; i < files_.size(); ++i) {
        fs::rename(temps[i], files_[i].first);
      }
    } catch (...) {
      std::error_code ec;
      for (const auto& t : temps) fs::remove(t, ec);
      throw;
    }
  }

 private:
  bool force_;
  std::vector<std::pair<fs::path, std::string>> files_;
};

struct Run {
  std::string subcommand;
  std::vector<std::string> argv;
  ordered_json config;
  uint64_t seed = 0;
  std::map<std::string, std::string> inputs;  // path -> sha256

  std::string Read(const fs::path& path) {
    std::string content = ReadFile(path);
    inputs[path.string()] = Sha256Hex(content);
    return content;
  }
  void Hash(const fs::path& path) { Read(path); }
};

// Records every option of a subcommand, given or defaulted.
ordered_json OptionConfig(const CLI::App& app) {
  ordered_json config = ordered_json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "force") continue;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      if (opt->get_expected_max() > 1) {
        config[name] = results;
      } else if (results.empty() || opt->get_type_size() == 0) {
        config[name] = true;
      } else {
        config[name] = results.back();
      }
    } else if (!opt->get_default_str().empty()) {
      config[name] = opt->get_default_str();
    } else {
      config[name] = nullptr;
    }
  }
  return config;
}

std::string Manifest(const Run& run, const Outputs& outputs) {
  ordered_json m;
  m["tool"] = "selftalk";
  m["subcommand"] = run.subcommand;
  m["argv"] = run.argv;
  m["config"] = run.config;
  m["seed"] = run.seed;
  ordered_json inputs = ordered_json::object();
  for (const auto& [path, hash] : run.inputs) inputs[path] = hash;
  m["inputs"] = std::move(inputs);
  ordered_json outs = ordered_json::object();
  for (const auto& [path, content] : outputs.files()) {
    outs[path.string()] = Sha256Hex(content);
  }
  m["outputs"] = std::move(outs);
  return m.dump(2) + "\n";
}

fs::path ManifestPath(const fs::path& output) {
  fs::path p = output;
  p += ".manifest.json";
  return p;
}

void Finish(const Run& run, Outputs& outputs, const fs::path& primary) {
  const fs::path manifest = ManifestPath(primary);
  outputs.Add(manifest, Manifest(run, outputs));
  outputs.Commit();
}

// Image ids in first-appearance order from a dataset file, or every image
// in the feature store.
std::vector<std::string> SelectImages(Run& run, const std::string& images_path,
                                      const FeatureStore& features) {
  std::vector<std::string> ids;
  if (images_path.empty()) {
    for (const auto& [id, vec] : features.items()) ids.push_back(id);
    return ids;
  }
  const auto data = ParseDataset(run.Read(images_path), DatasetFormat::kVqa);
  std::set<std::string> seen;
  for (const auto& r : data.records) {
    if (seen.insert(r.image_id).second) ids.push_back(r.image_id);
  }
  return ids;
}

std::vector<std::string> Questions(std::span<const DatasetRecord> records) {
  std::vector<std::string> out;
  for (const auto& r : records) out.push_back(r.question);
  return out;
}

// ---- gen-data ----

struct GenDataArgs {
  size_t scenes = 500;
  uint64_t seed = 42;
  double split = 0.8;
  std::string out_dir;
};

void GenData(Run& run, const GenDataArgs& a, bool force) {
  const auto world = microworld::Generate(a.scenes, a.seed);
  const auto split = SplitByImage(world.records, a.split, MixSeed(a.seed, 2));
  const fs::path dir = a.out_dir;
  Outputs out(force);
  out.Add(dir / "records.jsonl", DatasetToJsonl(world.records));
  out.Add(dir / "train.jsonl", DatasetToJsonl(split.train));
  out.Add(dir / "test.jsonl", DatasetToJsonl(split.test));
  out.Add(dir / "features.jsonl", world.features.ToJsonl());
  std::map<std::string, std::vector<std::string>> refs;
  std::vector<std::string> order;
  for (const auto& r : split.test) {
    auto& list = refs[r.image_id];
    if (list.empty()) order.push_back(r.image_id);
    list.push_back(r.question);
  }
  std::string refs_text;
  for (const auto& id : order) {
    ordered_json line;
    line["id"] = id;
    line["refs"] = refs[id];
    refs_text += line.dump() + "\n";
  }
  out.Add(dir / "refs_test.jsonl", std::move(refs_text));
  const fs::path manifest = dir / "manifest.json";
  out.Add(manifest, Manifest(run, out));
  out.Commit();
  std::cerr << "gen-data: " << world.scenes.size() << " scenes, "
            << world.records.size() << " pairs (" << split.train.size()
            << " train, " << split.test.size() << " test)\n";
}

// ---- train-qg ----

struct TrainArgs {
  std::string train, features, heldout, out, vocab_from;
  size_t hidden = 512, embed = 64, epochs = 15, max_len = 20;
  int min_count = 1;
  uint64_t seed = 42;
  double lr = 0.1, decay = 0.5, clip = 5.0, init_scale = 0.1;
  size_t decay_every = 5;
  bool quiet = false;
};

TrainOptions ToOptions(const TrainArgs& a) {
  TrainOptions o;
  o.epochs = a.epochs;
  o.seed = a.seed;
  o.learning_rate = a.lr;
  o.decay_factor = a.decay;
  o.decay_every = a.decay_every;
  o.clip = a.clip;
  o.init_scale = a.init_scale;
  return o;
}

Vocabulary QuestionVocab(Run& run, const TrainArgs& a,
                         std::span<const DatasetRecord> train) {
  if (!a.vocab_from.empty()) {
    const auto doc = nlohmann::json::parse(run.Read(a.vocab_from), nullptr, false);
    if (doc.is_discarded() || !doc.contains("vocab")) {
      throw DataError(a.vocab_from + ": not a checkpoint with a vocabulary");
    }
    return Vocabulary::FromWords(doc.at("vocab").get<std::vector<std::string>>());
  }
  const auto qs = Questions(train);
  return Vocabulary::Build(qs, a.min_count);
}

void TrainQg(Run& run, const TrainArgs& a, bool force) {
  Outputs out(force);
  const fs::path ckpt = a.out;
  fs::path trace_path = ckpt;
  trace_path += ".losses.json";
  // Fail on existing outputs before spending time on training.
  out.Add(ckpt, "");
  out.Add(trace_path, "");
  out.Add(ManifestPath(ckpt), "");
  out = Outputs(force);

  const auto data = ParseDataset(run.Read(a.train), DatasetFormat::kVqa);
  const auto features = ParseFeatures(run.Read(a.features));
  const Vocabulary vocab = QuestionVocab(run, a, data.records);
  std::vector<GeneratorExample> examples;
  for (const auto& r : data.records) {
    examples.push_back({features.at(r.image_id), vocab.Encode(r.question)});
  }
  GeneratorConfig config;
  config.vocab_size = vocab.size();
  config.embed_dim = a.embed;
  config.hidden_dim = a.hidden;
  config.feature_dim = features.dim();
  config.max_len = a.max_len;
  const auto result = TrainGenerator(examples, config, vocab, ToOptions(a));
  if (!a.quiet) {
    for (size_t e = 0; e < result.epoch_losses.size(); ++e) {
      std::fprintf(stderr, "train-qg epoch %zu loss %.6f\n", e + 1,
                   result.epoch_losses[e]);
    }
  }
  out.Add(ckpt, DumpCheckpoint(result.model.ToJson()));
  ordered_json trace;
  trace["epoch_loss"] = result.epoch_losses;
  trace["examples"] = examples.size();
  trace["vocab_size"] = vocab.size();
  out.Add(trace_path, trace.dump(2) + "\n");
  Finish(run, out, ckpt);
}

// ---- train-qa ----

std::vector<AnswerExample> AnswerExamples(std::span<const DatasetRecord> records,
                                          const FeatureStore& features,
                                          const Vocabulary& vocab) {
  std::vector<AnswerExample> out;
  for (const auto& r : records) {
    out.push_back({features.at(r.image_id), vocab.Encode(r.question), r.answer});
  }
  return out;
}

void TrainQa(Run& run, const TrainArgs& a, bool force) {
  Outputs out(force);
  const fs::path ckpt = a.out;
  fs::path trace_path = ckpt;
  trace_path += ".losses.json";
  out.Add(ckpt, "");
  out.Add(trace_path, "");
  out.Add(ManifestPath(ckpt), "");
  out = Outputs(force);

  const auto data = ParseDataset(run.Read(a.train), DatasetFormat::kVqa);
  const auto features = ParseFeatures(run.Read(a.features));
  const Vocabulary vocab = QuestionVocab(run, a, data.records);

  std::vector<std::string> answers;
  for (const auto& r : data.records) answers.push_back(r.answer);
  size_t dropped = 0;
  const AnswerVocab answer_vocab = AnswerVocab::Build(answers, &dropped);
  std::vector<DatasetRecord> kept;
  for (const auto& r : data.records) {
    if (!SingleWordAnswer(r.answer).empty()) kept.push_back(r);
  }
  if (kept.empty()) throw DataError("no single-word answers to train on");
  const auto train = AnswerExamples(kept, features, vocab);
  std::vector<AnswerExample> heldout;
  if (!a.heldout.empty()) {
    const auto held = ParseDataset(run.Read(a.heldout), DatasetFormat::kVqa);
    heldout = AnswerExamples(held.records, features, vocab);
  }

  AnswererConfig config;
  config.vocab_size = vocab.size();
  config.answer_size = answer_vocab.size();
  config.embed_dim = a.embed;
  config.hidden_dim = a.hidden;
  config.feature_dim = features.dim();
  const auto result =
      TrainAnswerer(train, heldout, config, vocab, answer_vocab, ToOptions(a));
  if (!a.quiet) {
    for (size_t e = 0; e < result.epoch_losses.size(); ++e) {
      std::fprintf(stderr, "train-qa epoch %zu loss %.6f", e + 1,
                   result.epoch_losses[e]);
      if (e < result.heldout_accuracy.size()) {
        std::fprintf(stderr, " heldout %.4f", result.heldout_accuracy[e]);
      }
      std::fprintf(stderr, "\n");
    }
  }
  out.Add(ckpt, DumpCheckpoint(result.model.ToJson()));
  ordered_json trace;
  trace["epoch_loss"] = result.epoch_losses;
  trace["heldout_accuracy"] = result.heldout_accuracy;
  trace["examples"] = train.size();
  trace["dropped_multi_word"] = dropped;
  trace["answer_vocab_size"] = answer_vocab.size();
  out.Add(trace_path, trace.dump(2) + "\n");
  Finish(run, out, ckpt);
}

// ---- ask ----

struct AskArgs {
  std::string model, features, images, out;
  std::string mode = "sample";
  int n = 1;
  size_t max_len = 0;
  uint64_t seed = 0;
};

void Ask(Run& run, const AskArgs& a, bool force) {
  if (a.n < 1) throw UsageError("--n must be >= 1");
  Outputs out(force);
  run.Hash(a.model);
  const auto model = QuestionGenerator::Load(a.model);
  const auto features = ParseFeatures(run.Read(a.features));
  const DecodeMode mode = ParseDecodeMode(a.mode);
  const size_t max_len = a.max_len ? a.max_len : model.config().max_len;
  std::string text;
  const auto ids = SelectImages(run, a.images, features);
  for (size_t i = 0; i < ids.size(); ++i) {
    const uint64_t image_seed = MixSeed(a.seed, i);
    for (int k = 0; k < a.n; ++k) {
      const auto r = model.Generate(features.at(ids[i]), mode,
                                    MixSeed(image_seed, k), max_len);
      ordered_json line;
      line["id"] = a.n == 1 ? ids[i] : ids[i] + "#" + std::to_string(k);
      line["image_id"] = ids[i];
      line["text"] = *r.question.surface;
      line["log_prob"] = r.log_prob;
      line["mode"] = DecodeModeName(mode);
      text += line.dump() + "\n";
    }
  }
  out.Add(a.out, std::move(text));
  Finish(run, out, a.out);
}

// ---- answer ----

struct AnswerArgs {
  std::string model, features, questions, out;
};

void AnswerCmd(Run& run, const AnswerArgs& a, bool force) {
  Outputs out(force);
  run.Hash(a.model);
  const auto model = VisualAnswerer::Load(a.model);
  const auto features = ParseFeatures(run.Read(a.features));
  const auto data = ParseDataset(run.Read(a.questions), DatasetFormat::kVqa);
  std::string text;
  for (const auto& r : data.records) {
    const auto result =
        model.Answer(features.at(r.image_id), model.vocab().Encode(r.question));
    ordered_json line;
    line["image_id"] = r.image_id;
    line["question"] = r.question;
    line["answer_id"] = result.answer_id;
    line["answer"] = result.answer;
    line["confidence"] = result.confidence;
    line["distribution"] = result.distribution;
    text += line.dump() + "\n";
  }
  out.Add(a.out, std::move(text));
  Finish(run, out, a.out);
}

// ---- talk ----

struct TalkArgs {
  std::string qg, qa, features, images, out;
  std::string mode = "sample";
  int n = kDefaultQuestions;
  double threshold = kDefaultThreshold;
  bool dedup = false;
  uint64_t seed = 0;
};

void Talk(Run& run, const TalkArgs& a, bool force) {
  Outputs out(force);
  run.Hash(a.qg);
  run.Hash(a.qa);
  const auto gen = QuestionGenerator::Load(a.qg);
  const auto ans = VisualAnswerer::Load(a.qa);
  const auto features = ParseFeatures(run.Read(a.features));
  const SelfTalk talk(gen, ans, fs::path(a.qg).filename().string(),
                      fs::path(a.qa).filename().string());
  SelfTalkOptions options;
  options.n = a.n;
  options.mode = ParseDecodeMode(a.mode);
  options.threshold = a.threshold;
  options.dedup = a.dedup;
  std::vector<SelfTalkTranscript> transcripts;
  const auto ids = SelectImages(run, a.images, features);
  for (size_t i = 0; i < ids.size(); ++i) {
    options.seed = MixSeed(a.seed, i);
    transcripts.push_back(talk.Generate(features.at(ids[i]), ids[i], options));
  }
  out.Add(a.out, TranscriptsToJsonl(transcripts));
  std::string text;
  for (const auto& t : transcripts) {
    text += "# " + t.image_id + "\n" + TranscriptToText(t);
  }
  fs::path text_path = a.out;
  text_path += ".txt";
  out.Add(text_path, std::move(text));
  Finish(run, out, a.out);
}

// ---- score ----

struct ScoreArgs {
  std::string candidates, transcripts, references, out, label = "candidates";
};

void Score(Run& run, const ScoreArgs& a, bool force) {
  if (a.candidates.empty() == a.transcripts.empty()) {
    throw UsageError("exactly one of --candidates or --transcripts is required");
  }
  Outputs out(force);
  metrics::CandidateSet candidates;
  if (!a.candidates.empty()) {
    candidates = metrics::ParseCandidates(run.Read(a.candidates));
  } else {
    // The first question of each transcript is the candidate for its image.
    for (const auto& t : ParseTranscripts(run.Read(a.transcripts))) {
      if (t.pairs.empty()) continue;
      candidates[t.image_id] = Tokenize(t.pairs.front().question);
    }
  }
  const auto references = metrics::ParseReferences(run.Read(a.references));
  const auto report = metrics::EvaluateCorpus(candidates, references);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << metrics::FormatReportTable(report, a.label);
  auto json = metrics::ReportToJson(report);
  json["label"] = a.label;
  out.Add(a.out, json.dump(2) + "\n");
  Finish(run, out, a.out);
}

// ---- gradcheck ----

struct GradcheckArgs {
  std::string model = "both", out;
  size_t hidden = 4, embed = 3, features = 5, length = 4;
  uint64_t seed = 7;
  double epsilon = 1e-5, tolerance = 1e-4;
};

ordered_json ReportJson(const std::string& model, const GradCheckReport& r,
                        size_t params) {
  ordered_json j;
  j["model"] = model;
  j["parameters"] = params;
  j["passed"] = r.passed;
  j["max_relative_error"] = r.max_relative_error;
  ordered_json entries = ordered_json::array();
  for (const auto& e : r.entries) {
    ordered_json x;
    x["name"] = e.name;
    x["checked"] = e.checked;
    x["max_relative_error"] = e.max_relative_error;
    x["worst_index"] = e.worst_index;
    x["analytic"] = e.worst_analytic;
    x["numeric"] = e.worst_numeric;
    x["passed"] = e.passed;
    entries.push_back(std::move(x));
  }
  j["entries"] = std::move(entries);
  return j;
}

bool Gradcheck(Run& run, const GradcheckArgs& a, bool force) {
  if (a.model != "qgen" && a.model != "vqa" && a.model != "both") {
    throw UsageError("--model must be qgen, vqa or both");
  }
  Outputs out(force);
  const Vocabulary vocab = Vocabulary::FromWords(
      {"<start>", "<end>", "<unk>", "what", "color", "is", "the", "cube"});
  Rng rng(a.seed);
  Vec features(a.features);
  for (double& v : features) v = rng.Uniform(-1, 1);
  TokenSequence q;
  for (size_t i = 0; i < a.length; ++i) {
    q.ids.push_back(static_cast<WordId>(3 + rng.Below(vocab.size() - 3)));
  }
  GradCheckOptions options;
  options.epsilon = a.epsilon;
  options.tolerance = a.tolerance;
  options.seed = MixSeed(a.seed, 3);

  ordered_json report;
  bool passed = true;
  if (a.model != "vqa") {
    GeneratorConfig c;
    c.vocab_size = vocab.size();
    c.embed_dim = a.embed;
    c.hidden_dim = a.hidden;
    c.feature_dim = a.features;
    QuestionGenerator m(c, vocab, MixSeed(a.seed, 0), 0.5);
    const auto r = GradCheck(
        m.params(),
        [&](ParamStore&, bool acc) {
          return acc ? m.SequenceLoss(features, q, true)
                     : std::as_const(m).SequenceLoss(features, q);
        },
        options);
    passed = passed && r.passed;
    report["qgen"] = ReportJson("qgen", r, m.params().TotalSize());
  }
  if (a.model != "qgen") {
    AnswererConfig c;
    c.vocab_size = vocab.size();
    c.answer_size = 3;
    c.embed_dim = a.embed;
    c.hidden_dim = a.hidden;
    c.feature_dim = a.features;
    VisualAnswerer m(c, vocab, AnswerVocab::FromWords({"red", "blue", "green"}),
                     MixSeed(a.seed, 1), 0.5);
    const int target = static_cast<int>(rng.Below(3));
    const auto r = GradCheck(
        m.params(),
        [&](ParamStore&, bool acc) {
          return acc ? m.AnswerLoss(features, q, target, true)
                     : std::as_const(m).AnswerLoss(features, q, target);
        },
        options);
    passed = passed && r.passed;
    report["vqa"] = ReportJson("vqa", r, m.params().TotalSize());
  }
  report["passed"] = passed;
  for (const char* name : {"qgen", "vqa"}) {
    if (report.contains(name)) {
      std::fprintf(stderr, "gradcheck %s: %s (max relative error %.3g)\n", name,
                   report[name]["passed"].get<bool>() ? "pass" : "FAIL",
                   report[name]["max_relative_error"].get<double>());
    }
  }
  out.Add(a.out, report.dump(2) + "\n");
  Finish(run, out, a.out);
  return passed;
}

// ---- serve ----

struct ServeArgs {
  std::string transcripts, log, ui_dir, host = "127.0.0.1", dataset = "default";
  std::vector<std::string> feelings;
  int port = 8080;
  int threads = 8;
  uint64_t seed = 0;
};

void Serve(Run& run, const ServeArgs& a) {
  auto tasks = ParseRatingTasks(run.Read(a.transcripts), a.dataset);
  if (tasks.empty()) throw DataError("no transcripts to rate");
  RatingStore::Options options;
  options.log_path = a.log;
  options.seed = a.seed;
  if (!a.feelings.empty()) options.feelings = a.feelings;
  RatingStore store(std::move(tasks), options);
  EvalServer server(store, {.ui_dir = a.ui_dir, .threads = a.threads});

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  int port = a.port;
  if (port == 0) {
    port = server.BindToAnyPort(a.host);
    if (port < 0) throw DataError("cannot bind " + a.host);
  } else if (!server.Bind(a.host, port)) {
    throw DataError("cannot bind " + a.host + ":" + std::to_string(port));
  }
  std::cout << ordered_json{{"listening", a.host}, {"port", port}}.dump()
            << std::endl;
  std::thread waiter([&server, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.Stop();
  });
  server.ListenAfterBind();
  // Wake the waiter if the server stopped on its own.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
}

void PrintError(const char* kind, const std::string& message) {
  std::cerr << ordered_json{{"error", kind}, {"message", message}}.dump()
            << std::endl;
}

int Main(int argc, char** argv) {
  CLI::App app{"Visual self-talk: question generation, answering and scoring"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  bool force = false;

  Run run;
  for (int i = 0; i < argc; ++i) run.argv.push_back(argv[i]);

  auto add_force = [&](CLI::App* sub) {
    sub->add_flag("--force", force, "Overwrite existing outputs");
  };

  GenDataArgs gd;
  auto* gen = app.add_subcommand("gen-data", "Generate the micro-world dataset");
  gen->add_option("--scenes", gd.scenes, "Number of scenes")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gd.seed, "Random seed");
  gen->add_option("--split", gd.split, "Train fraction of images")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--out-dir", gd.out_dir, "Output directory")->required();
  add_force(gen);

  TrainArgs qg, qa;
  qa.epochs = 15;
  auto add_train = [&](CLI::App* sub, TrainArgs& t) {
    sub->add_option("--train", t.train, "Training dataset (JSONL)")->required();
    sub->add_option("--features", t.features, "Feature file (JSONL)")->required();
    sub->add_option("--out", t.out, "Checkpoint path")->required();
    sub->add_option("--vocab-from", t.vocab_from,
                    "Reuse the question vocabulary of this checkpoint");
    sub->add_option("--hidden", t.hidden, "Hidden size")->check(CLI::PositiveNumber);
    sub->add_option("--embed", t.embed, "Embedding size")->check(CLI::PositiveNumber);
    sub->add_option("--epochs", t.epochs, "Training epochs");
    sub->add_option("--lr", t.lr, "Learning rate");
    sub->add_option("--decay", t.decay, "Learning-rate decay factor");
    sub->add_option("--decay-every", t.decay_every, "Epochs between decays");
    sub->add_option("--clip", t.clip, "Global gradient-norm clip");
    sub->add_option("--init-scale", t.init_scale, "Uniform init half-width");
    sub->add_option("--min-count", t.min_count, "Vocabulary frequency cutoff")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", t.seed, "Random seed");
    sub->add_flag("--quiet", t.quiet, "Do not print per-epoch losses");
    add_force(sub);
  };
  auto* tqg = app.add_subcommand("train-qg", "Train the question generator");
  add_train(tqg, qg);
  tqg->add_option("--max-len", qg.max_len, "Maximum generated length");
  auto* tqa = app.add_subcommand("train-qa", "Train the visual answerer");
  add_train(tqa, qa);
  tqa->add_option("--heldout", qa.heldout, "Held-out dataset for accuracy");

  AskArgs ask;
  auto* ask_cmd = app.add_subcommand("ask", "Generate questions for images");
  ask_cmd->add_option("--model", ask.model, "Generator checkpoint")->required();
  ask_cmd->add_option("--features", ask.features, "Feature file")->required();
  ask_cmd->add_option("--images", ask.images, "Dataset file selecting images");
  ask_cmd->add_option("--out", ask.out, "Output JSONL")->required();
  ask_cmd->add_option("--mode", ask.mode, "max or sample")
      ->check(CLI::IsMember({"max", "sample"}));
  ask_cmd->add_option("--n", ask.n, "Questions per image");
  ask_cmd->add_option("--max-len", ask.max_len, "Override checkpoint max_len");
  ask_cmd->add_option("--seed", ask.seed, "Random seed");
  add_force(ask_cmd);

  AnswerArgs ans;
  auto* ans_cmd = app.add_subcommand("answer", "Answer questions about images");
  ans_cmd->add_option("--model", ans.model, "Answerer checkpoint")->required();
  ans_cmd->add_option("--features", ans.features, "Feature file")->required();
  ans_cmd->add_option("--questions", ans.questions, "Dataset JSONL")->required();
  ans_cmd->add_option("--out", ans.out, "Output JSONL")->required();
  add_force(ans_cmd);

  TalkArgs talk;
  auto* talk_cmd = app.add_subcommand("talk", "Run the self-talk loop");
  talk_cmd->add_option("--qg", talk.qg, "Generator checkpoint")->required();
  talk_cmd->add_option("--qa", talk.qa, "Answerer checkpoint")->required();
  talk_cmd->add_option("--features", talk.features, "Feature file")->required();
  talk_cmd->add_option("--images", talk.images, "Dataset file selecting images");
  talk_cmd->add_option("--out", talk.out, "Transcript JSONL")->required();
  talk_cmd->add_option("--n", talk.n, "Question/answer pairs per image");
  talk_cmd->add_option("--mode", talk.mode, "max or sample")
      ->check(CLI::IsMember({"max", "sample"}));
  talk_cmd->add_option("--threshold", talk.threshold, "Confidence threshold")
      ->check(CLI::Range(0.0, 1.0));
  talk_cmd->add_flag("--dedup", talk.dedup, "Resample empty or repeated questions");
  talk_cmd->add_option("--seed", talk.seed, "Random seed");
  add_force(talk_cmd);

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score candidates against references");
  score_cmd->add_option("--candidates", score.candidates, "Candidate JSONL {id, text}");
  score_cmd->add_option("--transcripts", score.transcripts,
                        "Transcript JSONL; the first question per image is scored");
  score_cmd->add_option("--references", score.references, "Reference JSONL")
      ->required();
  score_cmd->add_option("--out", score.out, "Report JSON")->required();
  score_cmd->add_option("--label", score.label, "Row label in the table");
  add_force(score_cmd);

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gc_cmd->add_option("--model", gc.model, "qgen, vqa or both");
  gc_cmd->add_option("--hidden", gc.hidden, "Hidden size")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--embed", gc.embed, "Embedding size")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--feature-dim", gc.features, "Feature size")
      ->check(CLI::PositiveNumber);
  gc_cmd->add_option("--length", gc.length, "Question length")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--epsilon", gc.epsilon, "Finite-difference step");
  gc_cmd->add_option("--tolerance", gc.tolerance, "Max relative error");
  gc_cmd->add_option("--seed", gc.seed, "Random seed");
  gc_cmd->add_option("--out", gc.out, "Report JSON")->required();
  add_force(gc_cmd);

  ServeArgs srv;
  auto* srv_cmd = app.add_subcommand("serve", "Run the rating service");
  srv_cmd->add_option("--transcripts", srv.transcripts, "Transcript JSONL")->required();
  srv_cmd->add_option("--log", srv.log, "Append-only rating log")->required();
  srv_cmd->add_option("--ui-dir", srv.ui_dir, "Static rating UI bundle");
  srv_cmd->add_option("--host", srv.host, "Bind address");
  srv_cmd->add_option("--port", srv.port, "Port (0 picks a free one)");
  srv_cmd->add_option("--threads", srv.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  srv_cmd->add_option("--dataset", srv.dataset, "Dataset name for transcripts");
  srv_cmd->add_option("--feelings", srv.feelings, "Feeling categories");
  srv_cmd->add_option("--seed", srv.seed, "Task-order seed");

  std::string daquar_in, daquar_out;
  auto* conv = app.add_subcommand("convert-daquar",
                                  "Normalize DAQUAR question/answer text to JSONL");
  conv->add_option("--in", daquar_in, "DAQUAR text file")->required();
  conv->add_option("--out", daquar_out, "Output JSONL")->required();
  add_force(conv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    PrintError("usage", e.what());
    return kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  run.subcommand = sub->get_name();
  run.config = OptionConfig(*sub);

  try {
    if (sub == gen) {
      run.seed = gd.seed;
      GenData(run, gd, force);
    } else if (sub == tqg) {
      run.seed = qg.seed;
      TrainQg(run, qg, force);
    } else if (sub == tqa) {
      run.seed = qa.seed;
      TrainQa(run, qa, force);
    } else if (sub == ask_cmd) {
      run.seed = ask.seed;
      Ask(run, ask, force);
    } else if (sub == ans_cmd) {
      AnswerCmd(run, ans, force);
    } else if (sub == talk_cmd) {
      run.seed = talk.seed;
      Talk(run, talk, force);
    } else if (sub == score_cmd) {
      Score(run, score, force);
    } else if (sub == gc_cmd) {
      run.seed = gc.seed;
      if (!Gradcheck(run, gc, force)) {
        PrintError("numeric", "gradient check failed");
        return kNumeric;
      }
    } else if (sub == srv_cmd) {
      run.seed = srv.seed;
      Serve(run, srv);
    } else if (sub == conv) {
      Outputs out(force);
      const auto records = ConvertDaquarText(run.Read(daquar_in));
      out.Add(daquar_out, DatasetToJsonl(records));
      Finish(run, out, daquar_out);
    }
  } catch (const UsageError& e) {
    PrintError("usage", e.what());
    return kUsage;
  } catch (const NumericError& e) {
    PrintError("numeric", e.what());
    return kNumeric;
  } catch (const DataError& e) {
    PrintError("data", e.what());
    return kData;
  } catch (const ShapeError& e) {
    PrintError("data", e.what());
    return kData;
  } catch (const std::invalid_argument& e) {
    PrintError("usage", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    PrintError("data", e.what());
    return kData;
  }
  return kOk;
}

}  // namespace
}  // namespace selftalk

int main(int argc, char** argv) { return selftalk::Main(argc, argv); }
