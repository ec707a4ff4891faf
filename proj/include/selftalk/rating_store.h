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

#ifndef SELFTALK_RATING_STORE_H_
#define SELFTALK_RATING_STORE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "selftalk/random.h"
#include "selftalk/self_talk.h"

namespace selftalk {

// Two of the five categories (indifferent, annoyed) are local defaults.
const std::vector<std::string>& DefaultFeelings();

struct RatingRecord {
  std::string transcript_id;
  std::string rater_id;
  int readability = 0;
  int correctness = 0;
  int human_likeness = 0;
  std::string feeling;
  std::string comment;
  std::string timestamp;
  // Dataset of the rated transcript, stamped by the store on submission so
  // the log alone determines every report.
  std::string dataset;

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

struct ValidationError {
  std::string field;
  std::string reason;
};

// Field-level checks: scores in 1..5, feeling in `feelings`, non-empty ids.
std::optional<ValidationError> ValidateRating(
    const RatingRecord& record, std::span<const std::string> feelings);

nlohmann::ordered_json RatingToJson(const RatingRecord& record);
RatingRecord RatingFromJson(const nlohmann::json& doc);

using RatingKey = std::pair<std::string, std::string>;  // transcript, rater
using RatingMap = std::map<RatingKey, RatingRecord>;

// Replays a JSON Lines rating log with last-write-wins per (transcript,
// rater). Throws DataError naming the line of a malformed record.
RatingMap ReplayRatingLog(std::string_view content);
RatingMap ReplayRatingLogFile(const std::filesystem::path& path);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n - 1) estimator; 0 for one rating
};

struct AggregateReport {
  std::string dataset;  // empty = all datasets
  size_t count = 0;
  MetricSummary readability;
  MetricSummary correctness;
  MetricSummary human_likeness;
  // In configured category order.
  std::vector<std::pair<std::string, size_t>> feelings;
  std::vector<std::string> comments;
};

// Aggregates ratings whose dataset matches `dataset_filter` (empty matches
// everything), iterating in (transcript, rater) order.
AggregateReport Aggregate(const RatingMap& ratings,
                          std::string_view dataset_filter,
                          std::span<const std::string> feelings);

// "m±s" with two decimals.
std::string FormatMeanStd(const MetricSummary& summary);
// Header "Readability | Correctness | Human likeness" plus one row.
std::string FormatAggregateTable(const AggregateReport& report);
nlohmann::ordered_json AggregateToJson(const AggregateReport& report);

struct RatingTask {
  std::string transcript_id;
  std::string dataset;
  std::string image_ref;
  SelfTalkTranscript transcript;
};

// Reads transcript JSON Lines. Optional per-line fields "transcript_id"
// (default: image_id), "dataset" (default: default_dataset) and
// "image_ref" (default: image_id) are passed through. Duplicate ids are
// errors.
std::vector<RatingTask> ParseRatingTasks(std::string_view content,
                                         const std::string& default_dataset);

nlohmann::ordered_json TaskToJson(const RatingTask& task);

enum class SubmitStatus { kCreated, kReplaced };

struct SubmitOutcome {
  std::optional<SubmitStatus> status;  // set on success
  std::optional<ValidationError> error;
};

// Thread-safe task assignment and durable rating log. Submissions are
// serialized through one writer and fsync'ed before they are acknowledged.
class RatingStore {
 public:
  struct Options {
    std::filesystem::path log_path;
    std::vector<std::string> feelings = DefaultFeelings();
    uint64_t seed = 0;
  };

  // Replays an existing log. Throws std::invalid_argument on an empty task
  // list and DataError on an unreadable log.
  RatingStore(std::vector<RatingTask> tasks, Options options);
  ~RatingStore();
  RatingStore(const RatingStore&) = delete;
  RatingStore& operator=(const RatingStore&) = delete;

  // A task this rater has not rated yet, drawn uniformly with the store's
  // seeded generator; nullopt when the rater has rated everything.
  std::optional<RatingTask> NextTask(const std::string& rater_id);

  // Validates, stamps timestamp and dataset, appends to the log and then
  // updates the in-memory view.
  SubmitOutcome Submit(RatingRecord record);

  AggregateReport Report(std::string_view dataset_filter) const;
  RatingMap Snapshot() const;

  const std::vector<std::string>& feelings() const { return options_.feelings; }
  size_t task_count() const { return tasks_.size(); }

 private:
  void Append(const RatingRecord& record);

  std::vector<RatingTask> tasks_;
  std::map<std::string, size_t> task_index_;
  Options options_;
  mutable std::mutex mu_;
  Rng rng_;
  RatingMap ratings_;
  int log_fd_ = -1;
};

}  // namespace selftalk

#endif  // SELFTALK_RATING_STORE_H_
