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

#include "selftalk/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "selftalk/checkpoint.h"
#include "selftalk/errors.h"
#include "selftalk/vocab.h"

namespace selftalk::metrics {
namespace {

using NgramCounts = std::unordered_map<std::string, int>;

// N-grams keyed by their words joined with the unit separator.
NgramCounts CountNgrams(const Tokens& tokens, int n) {
  NgramCounts counts;
  if (tokens.size() < static_cast<size_t>(n)) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) {
      key.push_back('\x1f');
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

const std::vector<Tokens>& RefsFor(const ReferenceSet& references,
                                   const std::string& id) {
  auto it = references.find(id);
  if (it == references.end() || it->second.empty()) {
    throw std::invalid_argument("item '" + id + "' has no references");
  }
  return it->second;
}

void RequireNonEmpty(const CandidateSet& candidates) {
  if (candidates.empty()) throw std::invalid_argument("no candidates to score");
}

}  // namespace

NgramMatch ModifiedPrecision(const Tokens& candidate,
                             const std::vector<Tokens>& references, int n) {
  NgramMatch m;
  const NgramCounts cand = CountNgrams(candidate, n);
  NgramCounts max_ref;
  for (const auto& ref : references) {
    for (const auto& [gram, count] : CountNgrams(ref, n)) {
      int& slot = max_ref[gram];
      slot = std::max(slot, count);
    }
  }
  for (const auto& [gram, count] : cand) {
    auto it = max_ref.find(gram);
    if (it != max_ref.end()) m.clipped += std::min(count, it->second);
  }
  m.total = candidate.size() >= static_cast<size_t>(n)
                ? static_cast<double>(candidate.size() - n + 1)
                : 0.0;
  return m;
}

std::vector<double> Bleu(const CandidateSet& candidates,
                         const ReferenceSet& references, int n_max) {
  if (n_max < 1) throw std::invalid_argument("BLEU order must be >= 1");
  std::vector<double> clipped(n_max, 0.0), total(n_max, 0.0);
  double cand_len = 0.0, ref_len = 0.0;
  for (const auto& [id, cand] : candidates) {
    const auto& refs = RefsFor(references, id);
    const auto c = static_cast<long>(cand.size());
    long best = static_cast<long>(refs.front().size());
    for (const auto& ref : refs) {
      const auto r = static_cast<long>(ref.size());
      const long diff = std::labs(r - c), best_diff = std::labs(best - c);
      if (diff < best_diff || (diff == best_diff && r < best)) best = r;
    }
    cand_len += static_cast<double>(c);
    ref_len += static_cast<double>(best);
    for (int n = 1; n <= n_max; ++n) {
      const NgramMatch m = ModifiedPrecision(cand, refs, n);
      clipped[n - 1] += m.clipped;
      total[n - 1] += m.total;
    }
  }
  double brevity = 1.0;
  if (cand_len == 0.0) {
    brevity = 0.0;
  } else if (cand_len < ref_len) {
    brevity = std::exp(1.0 - ref_len / cand_len);
  }
  std::vector<double> scores(n_max, 0.0);
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 0; n < n_max; ++n) {
    if (total[n] == 0.0 || clipped[n] == 0.0) zero = true;
    if (!zero) log_sum += std::log(clipped[n] / total[n]);
    scores[n] = zero ? 0.0 : brevity * std::exp(log_sum / (n + 1));
  }
  return scores;
}

size_t LcsLength(const Tokens& a, const Tokens& b) {
  std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double RougeLSentence(const Tokens& candidate,
                      const std::vector<Tokens>& references) {
  if (candidate.empty()) return 0.0;
  double best_p = 0.0, best_r = 0.0;
  for (const auto& ref : references) {
    if (ref.empty()) continue;
    const double lcs = static_cast<double>(LcsLength(ref, candidate));
    best_p = std::max(best_p, lcs / candidate.size());
    best_r = std::max(best_r, lcs / ref.size());
  }
  if (best_p == 0.0 || best_r == 0.0) return 0.0;
  const double b2 = kRougeBeta * kRougeBeta;
  return (1.0 + b2) * best_p * best_r / (best_r + b2 * best_p);
}

double RougeL(const CandidateSet& candidates, const ReferenceSet& references) {
  RequireNonEmpty(candidates);
  double sum = 0.0;
  for (const auto& [id, cand] : candidates) {
    sum += RougeLSentence(cand, RefsFor(references, id));
  }
  return sum / static_cast<double>(candidates.size());
}

namespace {

struct TfIdfVector {
  std::array<std::unordered_map<std::string, double>, kMaxOrder> weights;
  std::array<double, kMaxOrder> norm{};
  double length = 0.0;
};

TfIdfVector Vectorize(const Tokens& tokens,
                      const std::unordered_map<std::string, double>& df,
                      double log_items) {
  TfIdfVector v;
  for (int n = 1; n <= kMaxOrder; ++n) {
    for (const auto& [gram, tf] : CountNgrams(tokens, n)) {
      auto it = df.find(gram);
      const double doc_freq = it == df.end() ? 0.0 : it->second;
      const double w = tf * (log_items - std::log(std::max(1.0, doc_freq)));
      v.weights[n - 1][gram] = w;
      v.norm[n - 1] += w * w;
    }
    v.norm[n - 1] = std::sqrt(v.norm[n - 1]);
  }
  v.length = static_cast<double>(tokens.size());
  return v;
}

double CiderSim(const TfIdfVector& hyp, const TfIdfVector& ref) {
  const double delta = hyp.length - ref.length;
  const double penalty =
      std::exp(-(delta * delta) / (2.0 * kCiderSigma * kCiderSigma));
  double total = 0.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    double dot = 0.0;
    for (const auto& [gram, w] : hyp.weights[n]) {
      auto it = ref.weights[n].find(gram);
      if (it != ref.weights[n].end()) dot += w * it->second;
    }
    if (hyp.norm[n] != 0.0 && ref.norm[n] != 0.0) {
      dot /= hyp.norm[n] * ref.norm[n];
    }
    total += dot * penalty;
  }
  return total;
}

}  // namespace

double Cider(const CandidateSet& candidates, const ReferenceSet& references,
             std::vector<std::string>* warnings) {
  RequireNonEmpty(candidates);
  std::unordered_map<std::string, double> df;
  for (const auto& [id, cand] : candidates) {
    std::set<std::string> seen;
    for (const auto& ref : RefsFor(references, id)) {
      for (int n = 1; n <= kMaxOrder; ++n) {
        for (const auto& [gram, count] : CountNgrams(ref, n)) seen.insert(gram);
      }
    }
    for (const auto& gram : seen) df[gram] += 1.0;
  }
  if (candidates.size() < 2 && warnings != nullptr) {
    warnings->push_back(
        "CIDEr over a single item: document frequencies are degenerate");
  }
  const double log_items = std::log(static_cast<double>(candidates.size()));
  double sum = 0.0;
  for (const auto& [id, cand] : candidates) {
    const auto& refs = references.at(id);
    const TfIdfVector hyp = Vectorize(cand, df, log_items);
    double item = 0.0;
    for (const auto& ref : refs) item += CiderSim(hyp, Vectorize(ref, df, log_items));
    sum += item / kMaxOrder / static_cast<double>(refs.size());
  }
  return sum / static_cast<double>(candidates.size());
}

namespace {

// Depth-first search over candidate positions for a maximum-cardinality
// exact alignment with the fewest chunks.
class ChunkSearch {
 public:
  ChunkSearch(const Tokens& candidate, const Tokens& reference)
      : cand_(candidate), ref_(reference), used_(reference.size(), false) {
    std::unordered_map<std::string, int> cand_count, ref_count;
    for (const auto& w : cand_) ++cand_count[w];
    for (const auto& w : ref_) ++ref_count[w];
    for (const auto& [w, c] : cand_count) {
      auto it = ref_count.find(w);
      const int rc = it == ref_count.end() ? 0 : it->second;
      skips_left_[w] = c - std::min(c, rc);
      target_ += static_cast<size_t>(std::min(c, rc));
    }
  }

  MeteorAlignment Run() {
    if (target_ == 0) return {};
    Visit(0, 0, kNone, kNone, 0);
    return {target_, best_};
  }

 private:
  static constexpr size_t kNone = std::numeric_limits<size_t>::max();

  void Visit(size_t i, size_t matched, size_t last_c, size_t last_r,
             size_t chunks) {
    if (chunks >= best_) return;
    if (i == cand_.size()) {
      if (matched == target_) best_ = chunks;
      return;
    }
    const std::string& w = cand_[i];
    // Try continuing the current chunk first so good bounds come early.
    if (last_c != kNone && last_c + 1 == i && last_r + 1 < ref_.size() &&
        !used_[last_r + 1] && ref_[last_r + 1] == w) {
      Take(i, last_r + 1, matched, chunks);
    }
    for (size_t j = 0; j < ref_.size(); ++j) {
      if (used_[j] || ref_[j] != w) continue;
      if (last_c != kNone && last_c + 1 == i && j == last_r + 1) continue;
      Take(i, j, matched, chunks + 1);
    }
    int& skips = skips_left_[w];
    if (skips > 0) {
      --skips;
      Visit(i + 1, matched, last_c, last_r, chunks);
      ++skips;
    }
  }

  void Take(size_t i, size_t j, size_t matched, size_t chunks) {
    used_[j] = true;
    Visit(i + 1, matched + 1, i, j, chunks);
    used_[j] = false;
  }

  const Tokens& cand_;
  const Tokens& ref_;
  std::vector<bool> used_;
  std::unordered_map<std::string, int> skips_left_;
  size_t target_ = 0;
  size_t best_ = kNone;
};

}  // namespace

MeteorAlignment AlignExact(const Tokens& candidate, const Tokens& reference) {
  return ChunkSearch(candidate, reference).Run();
}

double MeteorExactSentence(const Tokens& candidate,
                           const std::vector<Tokens>& references) {
  double best = 0.0;
  for (const auto& ref : references) {
    const MeteorAlignment a = AlignExact(candidate, ref);
    if (a.matches == 0) continue;
    const double m = static_cast<double>(a.matches);
    const double p = m / candidate.size();
    const double r = m / ref.size();
    const double fmean = p * r / (kMeteorAlpha * p + (1.0 - kMeteorAlpha) * r);
    const double frag = static_cast<double>(a.chunks) / m;
    const double penalty = kMeteorGamma * std::pow(frag, kMeteorBeta);
    best = std::max(best, fmean * (1.0 - penalty));
  }
  return best;
}

double MeteorExact(const CandidateSet& candidates,
                   const ReferenceSet& references) {
  RequireNonEmpty(candidates);
  double sum = 0.0;
  for (const auto& [id, cand] : candidates) {
    sum += MeteorExactSentence(cand, RefsFor(references, id));
  }
  return sum / static_cast<double>(candidates.size());
}

MetricReport EvaluateCorpus(const CandidateSet& candidates,
                            const ReferenceSet& references) {
  RequireNonEmpty(candidates);
  MetricReport report;
  report.items = candidates.size();
  const auto bleu = Bleu(candidates, references, kMaxOrder);
  std::copy(bleu.begin(), bleu.end(), report.bleu.begin());
  report.rouge_l = RougeL(candidates, references);
  report.cider = Cider(candidates, references, &report.warnings);
  report.meteor = MeteorExact(candidates, references);
  return report;
}

nlohmann::ordered_json ReportToJson(const MetricReport& report) {
  nlohmann::ordered_json doc;
  doc["items"] = report.items;
  doc["cider"] = report.cider;
  doc["meteor"] = report.meteor;
  doc["rouge_l"] = report.rouge_l;
  for (int n = 0; n < kMaxOrder; ++n) {
    doc["bleu_" + std::to_string(n + 1)] = report.bleu[n];
  }
  doc["warnings"] = report.warnings;
  return doc;
}

std::string FormatReportTable(const MetricReport& report,
                              std::string_view label) {
  const std::array<double, 7> values = {
      report.cider,   report.meteor,  report.rouge_l, report.bleu[0],
      report.bleu[1], report.bleu[2], report.bleu[3]};
  const size_t label_width = std::max<size_t>(label.size(), 1);
  std::string header(label_width, ' ');
  std::string row(label);
  char cell[32];
  for (size_t k = 0; k < kReportColumns.size(); ++k) {
    const size_t width = std::max<size_t>(kReportColumns[k].size(), 6);
    std::snprintf(cell, sizeof(cell), " | %-*s", static_cast<int>(width),
                  std::string(kReportColumns[k]).c_str());
    header += cell;
    std::snprintf(cell, sizeof(cell), " | %-*.3f", static_cast<int>(width),
                  values[k]);
    row += cell;
  }
  return header + "\n" + row + "\n";
}

namespace {

template <typename Fn>
void ForEachLine(std::string_view content, Fn&& fn) {
  std::istringstream in{std::string(content)};
  size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

CandidateSet ParseCandidates(std::string_view content) {
  CandidateSet out;
  ForEachLine(content, [&](const nlohmann::json& obj) {
    const auto id = obj.at("id").get<std::string>();
    if (!out.emplace(id, Tokenize(obj.at("text").get<std::string>())).second) {
      throw DataError("duplicate candidate id " + id);
    }
  });
  return out;
}

ReferenceSet ParseReferences(std::string_view content) {
  ReferenceSet out;
  ForEachLine(content, [&](const nlohmann::json& obj) {
    const auto id = obj.at("id").get<std::string>();
    std::vector<Tokens> refs;
    for (const auto& r : obj.at("refs")) refs.push_back(Tokenize(r.get<std::string>()));
    if (refs.empty()) throw DataError("item " + id + " has no references");
    auto& slot = out[id];
    slot.insert(slot.end(), refs.begin(), refs.end());
  });
  return out;
}

CandidateSet LoadCandidates(const std::filesystem::path& path) {
  try {
    return ParseCandidates(ReadFile(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

ReferenceSet LoadReferences(const std::filesystem::path& path) {
  try {
    return ParseReferences(ReadFile(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace selftalk::metrics
