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

#ifndef LENCTL_EVALUATION_H_
#define LENCTL_EVALUATION_H_

#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace lenctl {

// kCharacter scores non-whitespace Unicode scalars; kWord scores
// whitespace-separated words.
enum class EvalUnit { kCharacter, kWord };

std::string_view UnitName(EvalUnit unit);
// "char" or "word".
EvalUnit ParseUnit(std::string_view name);

struct EvalConfig {
  EvalUnit unit = EvalUnit::kCharacter;
  // Outputs are cut to this many UTF-8 bytes before scoring.
  std::optional<int> byte_truncate;

  void Validate() const;
};

std::vector<std::string> ScoringUnits(std::string_view text, EvalUnit unit);

struct RougeScore {
  double score = 0.0;
  // Set when the reference has fewer than n units; score is then 0.
  bool reference_too_short = false;
};

// Clipped n-gram matches divided by the number of reference n-grams.
RougeScore RougeNRecall(std::string_view candidate, std::string_view reference, int n,
                        EvalUnit unit);

// LCS(candidate, reference) / |reference|. Throws std::invalid_argument
// for an empty reference.
double RougeLRecall(std::string_view candidate, std::string_view reference, EvalUnit unit);

// Mean squared deviation (1/n) sum (l_i - len)^2, unscaled. Throws on an
// empty input.
double LengthVariance(std::span<const int> generated_lengths, int len);
// Same with a desired length per example: pairs are (generated, desired).
double LengthVariance(std::span<const std::pair<int, int>> generated_desired);

// Counts of generated - desired.
std::map<int, int> LengthHistogram(std::span<const std::pair<int, int>> generated_desired);

// Longest prefix whose UTF-8 encoding fits in limit bytes; never splits a
// character.
std::string TruncateBytes(std::string_view text, int limit);

struct EvalReport {
  double r1 = 0.0;
  double r2 = 0.0;
  double rl = 0.0;
  double variance = 0.0;
  std::map<int, int> histogram;
  int n = 0;
  EvalConfig config;

  nlohmann::json ToJson() const;
  // difference,count rows in ascending difference order.
  void WriteHistogramCsv(std::ostream& out) const;
};

// Macro-averaged recall scores plus length statistics. Lengths are the
// character counts of the untruncated outputs; truncation only affects
// ROUGE.
EvalReport Evaluate(std::span<const std::string> outputs, std::span<const std::string> references,
                    std::span<const int> desired_lengths, const EvalConfig& config);

}  // namespace lenctl

#endif  // LENCTL_EVALUATION_H_
