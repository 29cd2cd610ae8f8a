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

#ifndef LENCTL_DATA_H_
#define LENCTL_DATA_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace lenctl {

// One source/target pair. The length constraint is always derived from the
// target so it can never disagree with it.
struct ExamplePair {
  std::string source;
  std::string target;

  int len() const;
  bool operator==(const ExamplePair&) const = default;
};

enum class SyntheticTask { kConstrainedCopy, kKeywordExtract };
enum class CopyTransform { kIdentity, kReversal };

struct SyntheticTaskSpec {
  SyntheticTask task = SyntheticTask::kConstrainedCopy;
  // UTF-8; each scalar is one symbol.
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
  int min_source_len = 20;
  int max_source_len = 24;
  int min_target_len = 5;
  int max_target_len = 20;
  int size = 1000;
  std::uint64_t seed = 1;
  CopyTransform transform = CopyTransform::kIdentity;
  // Constrained copy only: draw source symbols without replacement, so every
  // symbol occurs at most once per source.
  bool distinct_symbols = false;

  // Throws std::invalid_argument for empty alphabets, inverted ranges, or
  // target lengths no source can satisfy.
  void Validate() const;
};

nlohmann::json SyntheticSpecToJson(const SyntheticTaskSpec& spec);
SyntheticTaskSpec SyntheticSpecFromJson(const nlohmann::json& j);

// First len symbols of transform(source). Throws std::invalid_argument when
// len is negative or exceeds the source.
std::string CopyTarget(std::string_view source, int len, CopyTransform transform);

// constrained-copy: target = first L symbols of transform(source).
// keyword-extract: source words are filler plus '#'-marked keywords; target
// joins leading keywords with spaces, as many as fit in L characters.
// Deterministic in spec.seed.
std::vector<ExamplePair> GenerateSynthetic(const SyntheticTaskSpec& spec);

// One {"source": ..., "target": ...} object per line; blank lines skipped;
// CRLF accepted. Throws std::runtime_error naming the line on bad input.
std::vector<ExamplePair> ParseJsonl(std::istream& in);
std::vector<ExamplePair> LoadJsonl(const std::string& path);
void WriteJsonl(std::ostream& out, std::span<const ExamplePair> pairs);

// Drops pairs whose len is in excluded; keeps the order of the rest.
std::vector<ExamplePair> ExcludeLengths(std::span<const ExamplePair> pairs,
                                        const std::set<int>& excluded);

enum class Split { kTrain, kValid, kTest };

// 90/5/5 split keyed on the FNV-1a hash of the source text.
Split AssignSplit(std::string_view source);

}  // namespace lenctl

#endif  // LENCTL_DATA_H_
