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

#include "selftalk/rating_store.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <sstream>
#include <stdexcept>

#include "selftalk/checkpoint.h"
#include "selftalk/errors.h"

namespace selftalk {
namespace {

std::string UtcTimestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t secs = std::chrono::system_clock::to_time_t(now);
  const auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(
                          now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec, static_cast<int>(millis));
  return buf;
}

MetricSummary Summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

nlohmann::ordered_json SummaryToJson(const MetricSummary& s, size_t count) {
  nlohmann::ordered_json j;
  if (count == 0) {
    j["mean"] = nullptr;
    j["std"] = nullptr;
  } else {
    j["mean"] = s.mean;
    j["std"] = s.stddev;
  }
  return j;
}

}  // namespace

const std::vector<std::string>& DefaultFeelings() {
  static const std::vector<std::string> kFeelings = {
      "like", "amusing", "indifferent", "annoyed", "scared"};
  return kFeelings;
}

std::optional<ValidationError> ValidateRating(
    const RatingRecord& record, std::span<const std::string> feelings) {
  if (record.transcript_id.empty()) {
    return ValidationError{"transcript_id", "must be non-empty"};
  }
  if (record.rater_id.empty()) {
    return ValidationError{"rater_id", "must be non-empty"};
  }
  const std::pair<const char*, int> scores[] = {
      {"readability", record.readability},
      {"correctness", record.correctness},
      {"human_likeness", record.human_likeness}};
  for (const auto& [field, value] : scores) {
    if (value < 1 || value > 5) {
      return ValidationError{field, "must be an integer from 1 to 5"};
    }
  }
  if (std::find(feelings.begin(), feelings.end(), record.feeling) ==
      feelings.end()) {
    return ValidationError{"feeling", "not a configured feeling category"};
  }
  return std::nullopt;
}

nlohmann::ordered_json RatingToJson(const RatingRecord& r) {
  nlohmann::ordered_json j;
  j["transcript_id"] = r.transcript_id;
  j["rater_id"] = r.rater_id;
  j["readability"] = r.readability;
  j["correctness"] = r.correctness;
  j["human_likeness"] = r.human_likeness;
  j["feeling"] = r.feeling;
  j["comment"] = r.comment;
  j["timestamp"] = r.timestamp;
  j["dataset"] = r.dataset;
  return j;
}

RatingRecord RatingFromJson(const nlohmann::json& j) {
  RatingRecord r;
  r.transcript_id = j.at("transcript_id").get<std::string>();
  r.rater_id = j.at("rater_id").get<std::string>();
  r.readability = j.at("readability").get<int>();
  r.correctness = j.at("correctness").get<int>();
  r.human_likeness = j.at("human_likeness").get<int>();
  r.feeling = j.at("feeling").get<std::string>();
  r.comment = j.value("comment", std::string());
  r.timestamp = j.value("timestamp", std::string());
  r.dataset = j.value("dataset", std::string());
  return r;
}

RatingMap ReplayRatingLog(std::string_view content) {
  RatingMap ratings;
  std::istringstream in{std::string(content)};
  size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    RatingRecord r;
    try {
      r = RatingFromJson(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("rating log line " + std::to_string(line_no) + ": " +
                      e.what());
    }
    RatingKey key{r.transcript_id, r.rater_id};
    ratings.insert_or_assign(std::move(key), std::move(r));
  }
  return ratings;
}

RatingMap ReplayRatingLogFile(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  return ReplayRatingLog(ReadFile(path));
}

AggregateReport Aggregate(const RatingMap& ratings,
                          std::string_view dataset_filter,
                          std::span<const std::string> feelings) {
  AggregateReport report;
  report.dataset = std::string(dataset_filter);
  std::vector<double> readability, correctness, human_likeness;
  std::map<std::string, size_t> histogram;
  for (const auto& [key, r] : ratings) {
    if (!dataset_filter.empty() && r.dataset != dataset_filter) continue;
    readability.push_back(r.readability);
    correctness.push_back(r.correctness);
    human_likeness.push_back(r.human_likeness);
    ++histogram[r.feeling];
    if (!r.comment.empty()) report.comments.push_back(r.comment);
  }
  report.count = readability.size();
  report.readability = Summarize(readability);
  report.correctness = Summarize(correctness);
  report.human_likeness = Summarize(human_likeness);
  for (const auto& feeling : feelings) {
    auto it = histogram.find(feeling);
    report.feelings.emplace_back(feeling, it == histogram.end() ? 0 : it->second);
  }
  return report;
}

std::string FormatMeanStd(const MetricSummary& summary) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f±%.2f", summary.mean,
                summary.stddev);
  return buf;
}

std::string FormatAggregateTable(const AggregateReport& report) {
  const std::string label = report.dataset.empty() ? "all" : report.dataset;
  auto cell = [&](const MetricSummary& s) {
    return report.count == 0 ? std::string("-") : FormatMeanStd(s);
  };
  const std::string cols[3] = {"Readability", "Correctness", "Human likeness"};
  const std::string vals[3] = {cell(report.readability),
                               cell(report.correctness),
                               cell(report.human_likeness)};
  std::string header(label.size(), ' ');
  std::string row = label;
  for (int k = 0; k < 3; ++k) {
    // The plus-minus sign is two bytes but one column wide.
    const size_t val_width = vals[k].size() - (report.count ? 1 : 0);
    const size_t width = std::max(cols[k].size(), val_width);
    header += " | " + cols[k] + std::string(width - cols[k].size(), ' ');
    row += " | " + vals[k] + std::string(width - val_width, ' ');
  }
  return header + "\n" + row + "\n";
}

nlohmann::ordered_json AggregateToJson(const AggregateReport& report) {
  nlohmann::ordered_json j;
  j["dataset"] = report.dataset;
  j["count"] = report.count;
  j["readability"] = SummaryToJson(report.readability, report.count);
  j["correctness"] = SummaryToJson(report.correctness, report.count);
  j["human_likeness"] = SummaryToJson(report.human_likeness, report.count);
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [feeling, n] : report.feelings) hist[feeling] = n;
  j["feelings"] = std::move(hist);
  j["comments"] = report.comments;
  j["text"] = FormatAggregateTable(report);
  return j;
}

std::vector<RatingTask> ParseRatingTasks(std::string_view content,
                                         const std::string& default_dataset) {
  std::vector<RatingTask> tasks;
  std::map<std::string, size_t> seen;
  std::istringstream in{std::string(content)};
  size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("transcript line " + std::to_string(line_no) + ": " +
                      e.what());
    }
    RatingTask task;
    task.transcript = TranscriptFromJson(doc);
    task.transcript_id =
        doc.value("transcript_id", task.transcript.image_id);
    task.dataset = doc.value("dataset", default_dataset);
    task.image_ref = doc.value("image_ref", task.transcript.image_id);
    if (!seen.emplace(task.transcript_id, line_no).second) {
      throw DataError("duplicate transcript id " + task.transcript_id);
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

nlohmann::ordered_json TaskToJson(const RatingTask& task) {
  nlohmann::ordered_json j;
  j["transcript_id"] = task.transcript_id;
  j["dataset"] = task.dataset;
  j["image_ref"] = task.image_ref;
  j["transcript"] = TranscriptToJson(task.transcript);
  j["text"] = TranscriptToText(task.transcript);
  return j;
}

RatingStore::RatingStore(std::vector<RatingTask> tasks, Options options)
    : tasks_(std::move(tasks)), options_(std::move(options)), rng_(options_.seed) {
  if (tasks_.empty()) throw std::invalid_argument("empty transcript store");
  if (options_.feelings.empty()) {
    throw std::invalid_argument("at least one feeling category is required");
  }
  for (size_t i = 0; i < tasks_.size(); ++i) {
    if (!task_index_.emplace(tasks_[i].transcript_id, i).second) {
      throw std::invalid_argument("duplicate transcript id " +
                                  tasks_[i].transcript_id);
    }
  }
  ratings_ = ReplayRatingLogFile(options_.log_path);
  log_fd_ = ::open(options_.log_path.c_str(), O_WRONLY | O_CREAT | O_APPEND,
                   0644);
  if (log_fd_ < 0) {
    throw DataError("cannot open rating log " + options_.log_path.string() +
                    ": " + std::strerror(errno));
  }
}

RatingStore::~RatingStore() {
  if (log_fd_ >= 0) ::close(log_fd_);
}

std::optional<RatingTask> RatingStore::NextTask(const std::string& rater_id) {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<size_t> open;
  for (size_t i = 0; i < tasks_.size(); ++i) {
    if (!ratings_.contains({tasks_[i].transcript_id, rater_id})) open.push_back(i);
  }
  if (open.empty()) return std::nullopt;
  return tasks_[open[rng_.Below(open.size())]];
}

void RatingStore::Append(const RatingRecord& record) {
  const std::string line = RatingToJson(record).dump() + "\n";
  size_t written = 0;
  while (written < line.size()) {
    const ssize_t n =
        ::write(log_fd_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw DataError(std::string("rating log write failed: ") +
                      std::strerror(errno));
    }
    written += static_cast<size_t>(n);
  }
  if (::fsync(log_fd_) != 0) {
    throw DataError(std::string("rating log fsync failed: ") +
                    std::strerror(errno));
  }
}

SubmitOutcome RatingStore::Submit(RatingRecord record) {
  SubmitOutcome outcome;
  if (auto error = ValidateRating(record, options_.feelings)) {
    outcome.error = std::move(error);
    return outcome;
  }
  auto it = task_index_.find(record.transcript_id);
  if (it == task_index_.end()) {
    outcome.error = ValidationError{"transcript_id", "unknown transcript"};
    return outcome;
  }
  record.dataset = tasks_[it->second].dataset;
  record.timestamp = UtcTimestamp();

  std::lock_guard<std::mutex> lock(mu_);
  Append(record);
  RatingKey key{record.transcript_id, record.rater_id};
  const bool existed = ratings_.contains(key);
  ratings_.insert_or_assign(std::move(key), std::move(record));
  outcome.status = existed ? SubmitStatus::kReplaced : SubmitStatus::kCreated;
  return outcome;
}

RatingMap RatingStore::Snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return ratings_;
}

AggregateReport RatingStore::Report(std::string_view dataset_filter) const {
  return Aggregate(Snapshot(), dataset_filter, options_.feelings);
}

}  // namespace selftalk
