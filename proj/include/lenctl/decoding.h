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

#ifndef LENCTL_DECODING_H_
#define LENCTL_DECODING_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lenctl/model.h"
#include "lenctl/tensor.h"
#include "lenctl/tokenization.h"

namespace lenctl {

struct Hypothesis {
  // Target ids; ends with EOS when terminated.
  std::vector<int> ids;
  // Sum of token log-probabilities (no length normalization).
  double logprob = 0.0;
  bool terminated = false;
};

// safety_cap bounds the number of generated tokens, EOS included.
// A value <= 0 selects DefaultSafetyCap(len).
struct DecodeRequest {
  std::vector<int> source;
  int len = 0;
  int beam = 4;
  int n = 1;
  int safety_cap = 0;

  int ResolvedCap() const;
  // Throws std::invalid_argument for beam < 1, n outside [1, beam],
  // negative len, or a cap below len.
  void Validate() const;
};

inline int DefaultSafetyCap(int len) { return 2 * len + 10; }

// Next-token scores for a set of prefixes; lets the search run against a
// model or a hand-built distribution.
class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual int vocab_size() const = 0;
  virtual int eos_id() const { return TargetVocab::kEos; }
  // Tokens the search may append: EOS and real characters by default.
  virtual bool Emittable(int id) const {
    return id == TargetVocab::kEos || id >= TargetVocab::kNumSpecials;
  }
  // Log-probabilities [prefixes.size(), vocab_size()].
  virtual Tensor NextLogProbs(std::span<const std::vector<int>> prefixes) = 0;
};

// Scores prefixes with a frozen model for one source and length constraint.
class ModelScorer : public StepScorer {
 public:
  ModelScorer(const Model& model, std::span<const int> source, int len);

  int vocab_size() const override { return model_.config().target_vocab; }
  Tensor NextLogProbs(std::span<const std::vector<int>> prefixes) override;

 private:
  const Model& model_;
  Model::Memory memory_;
  int len_;
};

// Beam search. Each step expands every live prefix by every emittable
// token and keeps the best `beam` continuations; EOS continuations ranked
// within the top `beam` are finished. Generation is never cut at the length
// constraint, only at safety_cap tokens, where surviving prefixes are
// returned with terminated = false. Returns at most n hypotheses sorted by
// logprob, best first; ties keep discovery order.
std::vector<Hypothesis> BeamSearch(StepScorer& scorer, int beam, int n, int safety_cap);

std::vector<Hypothesis> BeamSearch(const Model& model, const DecodeRequest& request);

// Lowercased, deduplicated whitespace words of the source text.
std::vector<std::string> SourceWords(std::string_view source_text);

// Number of distinct words that occur as substrings of the lowercased text.
int SourceOverlap(std::string_view text, std::span<const std::string> words);

// Index of the hypothesis whose decoded text contains the most distinct
// source words; ties go to the higher logprob, then the lower index.
// hypotheses must be non-empty.
std::size_t RerankIndex(std::span<const Hypothesis> hypotheses,
                        std::span<const std::string> texts, std::string_view source_text);

Hypothesis Rerank(std::span<const Hypothesis> hypotheses, std::string_view source_text,
                  const TargetVocab& vocab);

}  // namespace lenctl

#endif  // LENCTL_DECODING_H_
