// Copyright 2026 The lenctl Authors.
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

#include "lenctl/evaluation.h"

#include <algorithm>
#include <stdexcept>

#include "lenctl/tokenization.h"
#include "lenctl/utf8.h"

namespace lenctl {

std::string_view UnitName(EvalUnit unit) {
  return unit == EvalUnit::kCharacter ? "char" : "word";
}

EvalUnit ParseUnit(std::string_view name) {
  if (name == "char") return EvalUnit::kCharacter;
  if (name == "word") return EvalUnit::kWord;
  throw std::invalid_argument("unknown evaluation unit '" + std::string(name) + "'");
}

void EvalConfig::Validate() const {
  if (byte_truncate && *byte_truncate < 1) {
    throw std::invalid_argument("byte truncation limit must be >= 1");
  }
}

std::vector<std::string> ScoringUnits(std::string_view text, EvalUnit unit) {
  if (unit == EvalUnit::kWord) return utf8::SplitWords(text);
  std::vector<std::string> out;
  for (char32_t cp : utf8::Decode(text)) {
    if (!utf8::IsSpace(cp)) out.push_back(utf8::Encode(cp));
  }
  return out;
}

namespace {

std::map<std::vector<std::string>, int> NGramCounts(const std::vector<std::string>& units, int n) {
  std::map<std::vector<std::string>, int> counts;
  for (std::size_t i = 0; i + n <= units.size(); ++i) {
    ++counts[std::vector<std::string>(units.begin() + i, units.begin() + i + n)];
  }
  return counts;
}

}  // namespace

RougeScore RougeNRecall(std::string_view candidate, std::string_view reference, int n,
                        EvalUnit unit) {
  if (n < 1) throw std::invalid_argument("rouge-n: n must be >= 1");
  const auto ref_units = ScoringUnits(reference, unit);
  if (static_cast<int>(ref_units.size()) < n) return {0.0, true};
  const auto ref_counts = NGramCounts(ref_units, n);
  const auto cand_counts = NGramCounts(ScoringUnits(candidate, unit), n);
  long matched = 0;
  for (const auto& [gram, count] : ref_counts) {
    auto it = cand_counts.find(gram);
    if (it != cand_counts.end()) matched += std::min(count, it->second);
  }
  const long total = static_cast<long>(ref_units.size()) - n + 1;
  return {static_cast<double>(matched) / static_cast<double>(total), false};
}

double RougeLRecall(std::string_view candidate, std::string_view reference, EvalUnit unit) {
  const auto ref = ScoringUnits(reference, unit);
  if (ref.empty()) throw std::invalid_argument("rouge-l: empty reference");
  const auto cand = ScoringUnits(candidate, unit);
  std::vector<int> prev(ref.size() + 1, 0);
  std::vector<int> cur(ref.size() + 1, 0);
  for (const auto& c : cand) {
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      cur[j] = c == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[ref.size()]) / static_cast<double>(ref.size());
}

double LengthVariance(std::span<const int> generated_lengths, int len) {
  if (generated_lengths.empty()) throw std::invalid_argument("length variance: empty input");
  double total = 0.0;
  for (int l : generated_lengths) {
    const double diff = l - len;
    total += diff * diff;
  }
  return total / static_cast<double>(generated_lengths.size());
}

double LengthVariance(std::span<const std::pair<int, int>> generated_desired) {
  if (generated_desired.empty()) throw std::invalid_argument("length variance: empty input");
  double total = 0.0;
  for (const auto& [generated, desired] : generated_desired) {
    const double diff = generated - desired;
    total += diff * diff;
  }
  return total / static_cast<double>(generated_desired.size());
}

std::map<int, int> LengthHistogram(std::span<const std::pair<int, int>> generated_desired) {
  std::map<int, int> bins;
  for (const auto& [generated, desired] : generated_desired) ++bins[generated - desired];
  return bins;
}

std::string TruncateBytes(std::string_view text, int limit) {
  if (limit < 1) throw std::invalid_argument("byte truncation limit must be >= 1");
  std::size_t end = 0;
  while (end < text.size()) {
    const std::size_t next = end + utf8::SequenceLength(static_cast<unsigned char>(text[end]));
    if (next > static_cast<std::size_t>(limit) || next > text.size()) break;
    end = next;
  }
  return std::string(text.substr(0, end));
}

nlohmann::json EvalReport::ToJson() const {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [diff, count] : histogram) hist[std::to_string(diff)] = count;
  nlohmann::json cfg = {{"unit", std::string(UnitName(config.unit))}};
  cfg["truncate_bytes"] = config.byte_truncate ? nlohmann::json(*config.byte_truncate)
                                               : nlohmann::json(nullptr);
  return {{"r1", r1}, {"r2", r2}, {"rL", rl}, {"variance", variance},
          {"histogram", hist}, {"n", n}, {"config", cfg}};
}

void EvalReport::WriteHistogramCsv(std::ostream& out) const {
  out << "difference,count\n";
  for (const auto& [diff, count] : histogram) out << diff << ',' << count << '\n';
}

EvalReport Evaluate(std::span<const std::string> outputs, std::span<const std::string> references,
                    std::span<const int> desired_lengths, const EvalConfig& config) {
  config.Validate();
  if (outputs.size() != references.size() || outputs.size() != desired_lengths.size()) {
    throw std::invalid_argument("evaluate: " + std::to_string(outputs.size()) + " outputs vs " +
                                std::to_string(references.size()) + " references");
  }
  if (outputs.empty()) throw std::invalid_argument("evaluate: no examples");
  EvalReport report;
  report.config = config;
  report.n = static_cast<int>(outputs.size());
  std::vector<std::pair<int, int>> lengths;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    lengths.emplace_back(TargetLength(outputs[i]), desired_lengths[i]);
    const std::string cand =
        config.byte_truncate ? TruncateBytes(outputs[i], *config.byte_truncate) : outputs[i];
    report.r1 += RougeNRecall(cand, references[i], 1, config.unit).score;
    report.r2 += RougeNRecall(cand, references[i], 2, config.unit).score;
    report.rl += RougeLRecall(cand, references[i], config.unit);
  }
  report.r1 /= report.n;
  report.r2 /= report.n;
  report.rl /= report.n;
  report.variance = LengthVariance(lengths);
  report.histogram = LengthHistogram(lengths);
  return report;
}

}  // namespace lenctl
