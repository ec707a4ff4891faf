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

#ifndef SELFTALK_MICROWORLD_H_
#define SELFTALK_MICROWORLD_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "selftalk/dataset.h"

namespace selftalk::microworld {

inline constexpr std::array<std::string_view, 4> kShapes = {
    "cube", "sphere", "pyramid", "cylinder"};
inline constexpr std::array<std::string_view, 4> kColors = {
    "red", "green", "blue", "yellow"};
inline constexpr std::array<std::string_view, 5> kPositions = {
    "left", "right", "front", "back", "center"};
inline constexpr std::array<std::string_view, 5> kCountWords = {
    "zero", "one", "two", "three", "four"};

inline constexpr size_t kTripleFeatures = 4 * 4 * 5;
inline constexpr size_t kCountOffset = kTripleFeatures;
inline constexpr size_t kBiasIndex = kCountOffset + 4;
inline constexpr size_t kFeatureDim = kBiasIndex + 1;  // 85
inline constexpr double kNoiseSigma = 0.05;
inline constexpr size_t kMaxObjects = 4;

struct SceneObject {
  int shape = 0;
  int color = 0;
  int position = 0;
};

struct Scene {
  std::string id;
  std::vector<SceneObject> objects;
};

// Index of the (shape, color, position) bit in the feature vector.
constexpr size_t TripleIndex(int shape, int color, int position) {
  return static_cast<size_t>((shape * 4 + color) * 5 + position);
}

// Noise-free encoding: triple multi-hot, one-hot object count, bias 1.
Vec EncodeScene(const Scene& scene);

// All template questions answerable for the scene, in template order:
// color questions for unique shapes, count questions for every color,
// position questions for occupied positions.
std::vector<DatasetRecord> SceneQuestions(const Scene& scene);

struct World {
  std::vector<Scene> scenes;
  std::vector<DatasetRecord> records;
  FeatureStore features;
};

// Deterministic in (n_scenes, seed). Each scene holds 1-4 objects at
// distinct positions; roughly a third of the scenes are monochrome so the
// higher counts occur often enough to learn. Features get N(0, 0.05^2)
// noise.
World Generate(size_t n_scenes, uint64_t seed);

// True when the text (after tokenization) is exactly one instance of the
// three question templates.
bool IsTemplateQuestion(std::string_view question);

// True when the answer to `record` can be read off the (noisy) features:
// the queried triple bits are above 0.5 and agree with the answer.
bool AnswerableFromFeatures(const DatasetRecord& record, const Vec& features);

}  // namespace selftalk::microworld

#endif  // SELFTALK_MICROWORLD_H_
