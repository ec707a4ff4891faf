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

#ifndef SELFTALK_DATASET_H_
#define SELFTALK_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selftalk/kernel.h"

namespace selftalk {

enum class DatasetFormat { kDaquar, kVqa };

DatasetFormat ParseDatasetFormat(std::string_view name);
std::string_view DatasetFormatName(DatasetFormat format);

struct DatasetRecord {
  std::string image_id;
  std::string question;
  std::string answer;
  // Set at load time when the answer normalizes to more than one token.
  bool multi_word_answer = false;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

struct DatasetSummary {
  DatasetFormat format = DatasetFormat::kDaquar;
  size_t images = 0;
  size_t pairs = 0;
  size_t multi_word_answers = 0;
};

struct LoadedDataset {
  std::vector<DatasetRecord> records;
  DatasetSummary summary;
};

// Reads JSON Lines {"image_id", "question", "answer"}. Blank lines are
// skipped. Throws DataError naming the 1-based line on malformed JSON,
// missing or empty fields, or a question without tokens, and on a file with
// no records.
LoadedDataset LoadDataset(const std::filesystem::path& path,
                          DatasetFormat format);
LoadedDataset ParseDataset(std::string_view content, DatasetFormat format);

std::string DatasetToJsonl(std::span<const DatasetRecord> records);

// Converts the native DAQUAR question/answer text (question line followed by
// answer line, image named as "... in the imageN ?") to dataset records.
std::vector<DatasetRecord> ConvertDaquarText(std::string_view content);

// Image id -> feature vector, all vectors sharing one dimension.
class FeatureStore {
 public:
  FeatureStore() = default;

  size_t dim() const { return dim_; }
  size_t size() const { return features_.size(); }
  bool contains(const std::string& id) const { return features_.contains(id); }

  // Throws DataError on a duplicate id or a dimension mismatch.
  void Add(const std::string& image_id, Vec features);
  // Throws DataError on unknown ids.
  const Vec& at(const std::string& image_id) const;

  const std::map<std::string, Vec>& items() const { return features_; }

  std::string ToJsonl() const;
  void Save(const std::filesystem::path& path) const;

  friend bool operator==(const FeatureStore&, const FeatureStore&) = default;

 private:
  size_t dim_ = 0;
  std::map<std::string, Vec> features_;
};

// JSON Lines {"image_id", "features": [...]}; the dimension comes from the
// first record and later mismatches name the offending image id.
FeatureStore LoadFeatures(const std::filesystem::path& path);
FeatureStore ParseFeatures(std::string_view content);

struct Split {
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> test;
};

// Partitions by image id: round(ratio * ids) ids (clamped to [1, ids - 1])
// go to train after a seeded shuffle of the sorted ids. Record order within
// each side follows the input.
Split SplitByImage(std::span<const DatasetRecord> records, double ratio,
                   uint64_t seed);

}  // namespace selftalk

#endif  // SELFTALK_DATASET_H_
