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

#include "selftalk/microworld.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "selftalk/random.h"
#include "selftalk/vocab.h"

namespace selftalk::microworld {
namespace {

constexpr double kMonochromeProbability = 0.3;

template <size_t N>
int IndexOf(const std::array<std::string_view, N>& names, std::string_view word) {
  for (size_t i = 0; i < N; ++i) {
    if (names[i] == word) return static_cast<int>(i);
  }
  return -1;
}

bool BitSet(const Vec& features, int shape, int color, int position) {
  return features[TripleIndex(shape, color, position)] > 0.5;
}

}  // namespace

Vec EncodeScene(const Scene& scene) {
  Vec features(kFeatureDim, 0.0);
  for (const auto& obj : scene.objects) {
    features[TripleIndex(obj.shape, obj.color, obj.position)] = 1.0;
  }
  features[kCountOffset + scene.objects.size() - 1] = 1.0;
  features[kBiasIndex] = 1.0;
  return features;
}

std::vector<DatasetRecord> SceneQuestions(const Scene& scene) {
  std::vector<DatasetRecord> out;
  auto add = [&](std::string question, std::string_view answer) {
    out.push_back({scene.id, std::move(question), std::string(answer), false});
  };
  for (int s = 0; s < 4; ++s) {
    int seen = 0, color = 0;
    for (const auto& obj : scene.objects) {
      if (obj.shape == s) {
        ++seen;
        color = obj.color;
      }
    }
    if (seen == 1) {
      add("what color is the " + std::string(kShapes[s]), kColors[color]);
    }
  }
  for (int c = 0; c < 4; ++c) {
    auto n = std::count_if(scene.objects.begin(), scene.objects.end(),
                           [c](const SceneObject& o) { return o.color == c; });
    add("how many " + std::string(kColors[c]) + " objects are there",
        kCountWords[n]);
  }
  for (int p = 0; p < 5; ++p) {
    for (const auto& obj : scene.objects) {
      if (obj.position == p) {
        add("what is on the " + std::string(kPositions[p]), kShapes[obj.shape]);
      }
    }
  }
  return out;
}

World Generate(size_t n_scenes, uint64_t seed) {
  if (n_scenes == 0) throw std::invalid_argument("n_scenes must be >= 1");
  Rng rng(seed);
  World world;
  for (size_t i = 0; i < n_scenes; ++i) {
    Scene scene;
    char id[48];
    std::snprintf(id, sizeof(id), "mw%llu-%05zu",
                  static_cast<unsigned long long>(seed), i);
    scene.id = id;
    const size_t n_objects = 1 + static_cast<size_t>(rng.Below(kMaxObjects));
    std::vector<int> positions(kPositions.size());
    std::iota(positions.begin(), positions.end(), 0);
    rng.Shuffle(positions);
    const bool monochrome = rng.Uniform() < kMonochromeProbability;
    const int shared_color = static_cast<int>(rng.Below(kColors.size()));
    for (size_t k = 0; k < n_objects; ++k) {
      SceneObject obj;
      obj.shape = static_cast<int>(rng.Below(kShapes.size()));
      obj.color = monochrome ? shared_color
                             : static_cast<int>(rng.Below(kColors.size()));
      obj.position = positions[k];
      scene.objects.push_back(obj);
    }
    std::sort(scene.objects.begin(), scene.objects.end(),
              [](const SceneObject& a, const SceneObject& b) {
                return a.position < b.position;
              });
    Vec features = EncodeScene(scene);
    for (double& v : features) v += kNoiseSigma * rng.Gaussian();
    world.features.Add(scene.id, std::move(features));
    for (auto& record : SceneQuestions(scene)) {
      world.records.push_back(std::move(record));
    }
    world.scenes.push_back(std::move(scene));
  }
  return world;
}

bool IsTemplateQuestion(std::string_view question) {
  const auto t = Tokenize(question);
  if (t.size() == 5 && t[0] == "what" && t[1] == "color" && t[2] == "is" &&
      t[3] == "the") {
    return IndexOf(kShapes, t[4]) >= 0;
  }
  if (t.size() == 6 && t[0] == "how" && t[1] == "many" && t[3] == "objects" &&
      t[4] == "are" && t[5] == "there") {
    return IndexOf(kColors, t[2]) >= 0;
  }
  if (t.size() == 5 && t[0] == "what" && t[1] == "is" && t[2] == "on" &&
      t[3] == "the") {
    return IndexOf(kPositions, t[4]) >= 0;
  }
  return false;
}

bool AnswerableFromFeatures(const DatasetRecord& record, const Vec& features) {
  if (features.size() != kFeatureDim || !IsTemplateQuestion(record.question)) {
    return false;
  }
  const auto t = Tokenize(record.question);
  if (t[0] == "how") {
    const int color = IndexOf(kColors, t[2]);
    int count = 0;
    for (int s = 0; s < 4; ++s) {
      for (int p = 0; p < 5; ++p) count += BitSet(features, s, color, p);
    }
    return IndexOf(kCountWords, record.answer) == count;
  }
  if (t[1] == "color") {
    const int shape = IndexOf(kShapes, t[4]);
    const int color = IndexOf(kColors, record.answer);
    if (color < 0) return false;
    for (int p = 0; p < 5; ++p) {
      if (BitSet(features, shape, color, p)) return true;
    }
    return false;
  }
  const int position = IndexOf(kPositions, t[4]);
  const int shape = IndexOf(kShapes, record.answer);
  if (shape < 0) return false;
  for (int c = 0; c < 4; ++c) {
    if (BitSet(features, shape, c, position)) return true;
  }
  return false;
}

}  // namespace selftalk::microworld
