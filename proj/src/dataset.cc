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

#include "selftalk/dataset.h"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "selftalk/checkpoint.h"
#include "selftalk/errors.h"
#include "selftalk/random.h"
#include "selftalk/vocab.h"

namespace selftalk {
namespace {

using nlohmann::json;

bool IsBlank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

// Calls fn(line_number, parsed_object) for every non-blank line.
template <typename Fn>
void ForEachJsonLine(std::string_view content, Fn&& fn) {
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= content.size()) {
    size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (IsBlank(line)) {
      if (end == content.size()) break;
      continue;
    }
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) +
                      ": malformed JSON: " + e.what());
    }
    if (!obj.is_object()) {
      throw DataError("line " + std::to_string(line_no) +
                      ": expected a JSON object");
    }
    fn(line_no, obj);
    if (end == content.size()) break;
  }
}

std::string RequireString(const json& obj, const char* field, size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) {
    throw DataError("line " + std::to_string(line_no) +
                    ": missing string field '" + field + "'");
  }
  std::string value = it->get<std::string>();
  if (value.empty()) {
    throw DataError("line " + std::to_string(line_no) + ": empty field '" +
                    field + "'");
  }
  return value;
}

}  // namespace

DatasetFormat ParseDatasetFormat(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(c)));
  if (lower == "daquar") return DatasetFormat::kDaquar;
  if (lower == "vqa") return DatasetFormat::kVqa;
  throw std::invalid_argument("unknown dataset format: " + std::string(name));
}

std::string_view DatasetFormatName(DatasetFormat format) {
  return format == DatasetFormat::kDaquar ? "daquar" : "vqa";
}

LoadedDataset ParseDataset(std::string_view content, DatasetFormat format) {
  LoadedDataset out;
  out.summary.format = format;
  std::set<std::string> images;
  ForEachJsonLine(content, [&](size_t line_no, const json& obj) {
    DatasetRecord r;
    r.image_id = RequireString(obj, "image_id", line_no);
    r.question = RequireString(obj, "question", line_no);
    r.answer = RequireString(obj, "answer", line_no);
    if (Tokenize(r.question).empty()) {
      throw DataError("line " + std::to_string(line_no) +
                      ": question has no tokens");
    }
    r.multi_word_answer = Tokenize(r.answer).size() != 1;
    if (r.multi_word_answer) ++out.summary.multi_word_answers;
    images.insert(r.image_id);
    out.records.push_back(std::move(r));
  });
  if (out.records.empty()) throw DataError("dataset contains no records");
  out.summary.images = images.size();
  out.summary.pairs = out.records.size();
  return out;
}

LoadedDataset LoadDataset(const std::filesystem::path& path,
                          DatasetFormat format) {
  try {
    return ParseDataset(ReadFile(path), format);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string DatasetToJsonl(std::span<const DatasetRecord> records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json obj;
    obj["image_id"] = r.image_id;
    obj["question"] = r.question;
    obj["answer"] = r.answer;
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<DatasetRecord> ConvertDaquarText(std::string_view content) {
  static const std::regex kImageRef(R"(\s*in the (image\d+)\s*\?\s*$)");
  std::vector<std::string> lines;
  std::istringstream in{std::string(content)};
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!IsBlank(line)) lines.push_back(line);
  }
  if (lines.size() % 2 != 0) {
    throw DataError("DAQUAR text has an unpaired question line");
  }
  std::vector<DatasetRecord> records;
  for (size_t i = 0; i < lines.size(); i += 2) {
    std::smatch m;
    if (!std::regex_search(lines[i], m, kImageRef)) {
      throw DataError("line " + std::to_string(i + 1) +
                      ": question does not name an image");
    }
    DatasetRecord r;
    r.image_id = m[1].str();
    r.question = lines[i].substr(0, static_cast<size_t>(m.position(0)));
    r.answer = lines[i + 1];
    r.multi_word_answer = Tokenize(r.answer).size() != 1;
    records.push_back(std::move(r));
  }
  return records;
}

void FeatureStore::Add(const std::string& image_id, Vec features) {
  if (features.empty()) throw DataError("empty feature vector for " + image_id);
  if (features_.empty()) {
    dim_ = features.size();
  } else if (features.size() != dim_) {
    throw DataError("feature dimension mismatch for image_id " + image_id +
                    ": got " + std::to_string(features.size()) +
                    ", expected " + std::to_string(dim_));
  }
  if (!features_.emplace(image_id, std::move(features)).second) {
    throw DataError("duplicate image_id " + image_id);
  }
}

const Vec& FeatureStore::at(const std::string& image_id) const {
  auto it = features_.find(image_id);
  if (it == features_.end()) throw DataError("no features for image_id " + image_id);
  return it->second;
}

std::string FeatureStore::ToJsonl() const {
  std::string out;
  for (const auto& [id, vec] : features_) {
    nlohmann::ordered_json obj;
    obj["image_id"] = id;
    obj["features"] = vec;
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

void FeatureStore::Save(const std::filesystem::path& path) const {
  WriteFile(path, ToJsonl());
}

FeatureStore ParseFeatures(std::string_view content) {
  FeatureStore store;
  ForEachJsonLine(content, [&](size_t line_no, const json& obj) {
    const std::string id = RequireString(obj, "image_id", line_no);
    auto it = obj.find("features");
    if (it == obj.end() || !it->is_array()) {
      throw DataError("line " + std::to_string(line_no) +
                      ": missing array field 'features'");
    }
    Vec values;
    for (const auto& v : *it) {
      if (!v.is_number()) {
        throw DataError("line " + std::to_string(line_no) +
                        ": non-numeric feature value");
      }
      values.push_back(v.get<double>());
      if (!std::isfinite(values.back())) {
        throw DataError("line " + std::to_string(line_no) + ": non-finite feature");
      }
    }
    store.Add(id, std::move(values));
  });
  return store;
}

FeatureStore LoadFeatures(const std::filesystem::path& path) {
  try {
    return ParseFeatures(ReadFile(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Split SplitByImage(std::span<const DatasetRecord> records, double ratio,
                   uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("split ratio must be in (0, 1)");
  }
  std::set<std::string> unique;
  for (const auto& r : records) unique.insert(r.image_id);
  if (unique.size() < 2) {
    throw std::invalid_argument("split needs at least two distinct image ids");
  }
  std::vector<std::string> ids(unique.begin(), unique.end());
  Rng rng(seed);
  rng.Shuffle(ids);
  auto n_train = static_cast<size_t>(std::llround(ratio * ids.size()));
  n_train = std::clamp<size_t>(n_train, 1, ids.size() - 1);
  std::set<std::string> train_ids(ids.begin(), ids.begin() + n_train);
  Split split;
  for (const auto& r : records) {
    (train_ids.contains(r.image_id) ? split.train : split.test).push_back(r);
  }
  return split;
}

}  // namespace selftalk
