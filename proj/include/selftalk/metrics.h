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

#ifndef SELFTALK_METRICS_H_
#define SELFTALK_METRICS_H_

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace selftalk::metrics {

using Tokens = std::vector<std::string>;
// Item id -> candidate tokens.
using CandidateSet = std::map<std::string, Tokens>;
// Item id -> reference token lists (at least one each).
using ReferenceSet = std::map<std::string, std::vector<Tokens>>;

inline constexpr int kMaxOrder = 4;
inline constexpr double kRougeBeta = 1.2;
inline constexpr double kCiderSigma = 6.0;
inline constexpr double kMeteorAlpha = 0.9;
inline constexpr double kMeteorBeta = 3.0;
inline constexpr double kMeteorGamma = 0.5;

// Clipped count and candidate n-gram total for one order.
struct NgramMatch {
  double clipped = 0.0;
  double total = 0.0;
};

// Clipped modified n-gram precision counts of one candidate against its
// references.
NgramMatch ModifiedPrecision(const Tokens& candidate,
                             const std::vector<Tokens>& references, int n);

// Corpus BLEU-1..n_max: clipped precisions summed over items, geometric
// mean, brevity penalty against the closest reference length (ties to the
// shorter). No smoothing: a zero precision at any order up to n zeroes
// BLEU-n. Throws std::invalid_argument when a candidate id has no
// references.
std::vector<double> Bleu(const CandidateSet& candidates,
                         const ReferenceSet& references, int n_max = kMaxOrder);

size_t LcsLength(const Tokens& a, const Tokens& b);

// LCS F-measure (beta 1.2) with precision and recall each maximized over
// the references.
double RougeLSentence(const Tokens& candidate,
                      const std::vector<Tokens>& references);
double RougeL(const CandidateSet& candidates, const ReferenceSet& references);

// TF-IDF n-gram cosine similarity averaged over n = 1..4 with a Gaussian
// length penalty (sigma 6); IDF from the evaluated items' references. When
// warnings is non-null, a degenerate single-item corpus is reported there.
double Cider(const CandidateSet& candidates, const ReferenceSet& references,
             std::vector<std::string>* warnings = nullptr);

struct MeteorAlignment {
  size_t matches = 0;
  size_t chunks = 0;
};

// Exact unigram alignment with the maximum number of matches and, among
// those, the fewest chunks.
MeteorAlignment AlignExact(const Tokens& candidate, const Tokens& reference);

double MeteorExactSentence(const Tokens& candidate,
                           const std::vector<Tokens>& references);
double MeteorExact(const CandidateSet& candidates,
                   const ReferenceSet& references);

struct MetricReport {
  double cider = 0.0;
  double meteor = 0.0;
  double rouge_l = 0.0;
  std::array<double, kMaxOrder> bleu{};
  size_t items = 0;
  std::vector<std::string> warnings;
};

// Throws std::invalid_argument on an empty candidate set.
MetricReport EvaluateCorpus(const CandidateSet& candidates,
                            const ReferenceSet& references);

// Column names, in report order.
inline constexpr std::array<std::string_view, 7> kReportColumns = {
    "CIDEr", "METEOR", "ROUGE_L", "Bleu-1", "Bleu-2", "Bleu-3", "Bleu-4"};

nlohmann::ordered_json ReportToJson(const MetricReport& report);
// Aligned header plus one row labelled `label`.
std::string FormatReportTable(const MetricReport& report,
                              std::string_view label);

// JSON Lines {"id", "text"} and {"id", "refs": [...]}, tokenized with the
// shared question tokenizer. Throw DataError on malformed lines.
CandidateSet ParseCandidates(std::string_view content);
ReferenceSet ParseReferences(std::string_view content);
CandidateSet LoadCandidates(const std::filesystem::path& path);
ReferenceSet LoadReferences(const std::filesystem::path& path);

}  // namespace selftalk::metrics

#endif  // SELFTALK_METRICS_H_
