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

#include "lenctl/decoding.h"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "lenctl/utf8.h"

namespace lenctl {

int DecodeRequest::ResolvedCap() const { return safety_cap > 0 ? safety_cap : DefaultSafetyCap(len); }

void DecodeRequest::Validate() const {
  if (beam < 1) throw std::invalid_argument("beam width must be >= 1");
  if (n < 1 || n > beam) throw std::invalid_argument("n must be in [1, beam]");
  if (len < 0) throw std::invalid_argument("requested length must be >= 0");
  if (ResolvedCap() < len) throw std::invalid_argument("safety cap must be >= len");
}

ModelScorer::ModelScorer(const Model& model, std::span<const int> source, int len)
    : model_(model), memory_(model.Encode(source)), len_(len) {}

// Prefixes are scored one at a time: batched products take different
// summation paths depending on the row count, and a prefix's score must not
// depend on which other prefixes are alive.
Tensor ModelScorer::NextLogProbs(std::span<const std::vector<int>> prefixes) {
  const int vocab = vocab_size();
  Tensor out({static_cast<int>(prefixes.size()), vocab});
  for (std::size_t p = 0; p < prefixes.size(); ++p) {
    const Tensor row = model_.NextLogProbs(memory_, prefixes.subspan(p, 1), len_);
    std::copy(row.data().begin(), row.data().end(), out.data().begin() + p * vocab);
  }
  return out;
}

namespace {

struct Candidate {
  double logprob;
  int parent;
  int token;
};

}  // namespace

std::vector<Hypothesis> BeamSearch(StepScorer& scorer, int beam, int n, int safety_cap) {
  if (beam < 1) throw std::invalid_argument("beam width must be >= 1");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (safety_cap < 1) throw std::invalid_argument("safety cap must be >= 1");
  const int vocab = scorer.vocab_size();
  const int eos = scorer.eos_id();

  std::vector<Hypothesis> live(1);
  std::vector<Hypothesis> finished;
  std::vector<Candidate> candidates;
  for (int step = 0; step < safety_cap && !live.empty(); ++step) {
    std::vector<std::vector<int>> prefixes;
    prefixes.reserve(live.size());
    for (const auto& h : live) prefixes.push_back(h.ids);
    const Tensor scores = scorer.NextLogProbs(prefixes);
    if (scores.rows() != static_cast<int>(live.size()) || scores.cols() != vocab) {
      throw DimensionError("scorer returned " + ShapeString(scores.shape()) + " for " +
                           std::to_string(live.size()) + " prefixes");
    }
    candidates.clear();
    for (int p = 0; p < static_cast<int>(live.size()); ++p) {
      for (int v = 0; v < vocab; ++v) {
        if (!scorer.Emittable(v)) continue;
        candidates.push_back({live[p].logprob + scores.at(p, v), p, v});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.logprob > b.logprob; });
    std::vector<Hypothesis> next;
    for (std::size_t rank = 0; rank < candidates.size(); ++rank) {
      const Candidate& c = candidates[rank];
      if (c.token == eos) {
        if (rank >= static_cast<std::size_t>(beam)) continue;
        Hypothesis h{live[c.parent].ids, c.logprob, true};
        h.ids.push_back(eos);
        finished.push_back(std::move(h));
      } else if (static_cast<int>(next.size()) < beam) {
        Hypothesis h{live[c.parent].ids, c.logprob, false};
        h.ids.push_back(c.token);
        next.push_back(std::move(h));
      }
      if (static_cast<int>(next.size()) >= beam && rank + 1 >= static_cast<std::size_t>(beam)) break;
    }
    live = std::move(next);
    // Scores only decrease as tokens are appended, so once n finished
    // hypotheses beat the best live prefix nothing can displace them.
    if (static_cast<int>(finished.size()) >= n && !live.empty()) {
      std::vector<double> lps;
      for (const auto& h : finished) lps.push_back(h.logprob);
      std::nth_element(lps.begin(), lps.begin() + (n - 1), lps.end(), std::greater<>());
      double best_live = live.front().logprob;
      for (const auto& h : live) best_live = std::max(best_live, h.logprob);
      if (lps[n - 1] >= best_live) live.clear();
    }
  }
  for (auto& h : live) finished.push_back(std::move(h));
  std::stable_sort(finished.begin(), finished.end(),
                   [](const Hypothesis& a, const Hypothesis& b) { return a.logprob > b.logprob; });
  if (static_cast<int>(finished.size()) > n) finished.resize(n);
  return finished;
}

std::vector<Hypothesis> BeamSearch(const Model& model, const DecodeRequest& request) {
  request.Validate();
  ModelScorer scorer(model, request.source, request.len);
  return BeamSearch(scorer, request.beam, request.n, request.ResolvedCap());
}

std::vector<std::string> SourceWords(std::string_view source_text) {
  std::vector<std::string> words;
  std::set<std::string> seen;
  for (auto& w : utf8::SplitWords(utf8::AsciiLower(source_text))) {
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

int SourceOverlap(std::string_view text, std::span<const std::string> words) {
  const std::string lowered = utf8::AsciiLower(text);
  int count = 0;
  for (const auto& w : words) {
    if (lowered.find(w) != std::string::npos) ++count;
  }
  return count;
}

std::size_t RerankIndex(std::span<const Hypothesis> hypotheses,
                        std::span<const std::string> texts, std::string_view source_text) {
  if (hypotheses.empty()) throw std::invalid_argument("rerank: no hypotheses");
  if (texts.size() != hypotheses.size()) {
    throw std::invalid_argument("rerank: one text per hypothesis required");
  }
  const auto words = SourceWords(source_text);
  std::size_t best = 0;
  int best_overlap = SourceOverlap(texts[0], words);
  for (std::size_t i = 1; i < hypotheses.size(); ++i) {
    const int overlap = SourceOverlap(texts[i], words);
    if (overlap > best_overlap ||
        (overlap == best_overlap && hypotheses[i].logprob > hypotheses[best].logprob)) {
      best = i;
      best_overlap = overlap;
    }
  }
  return best;
}

Hypothesis Rerank(std::span<const Hypothesis> hypotheses, std::string_view source_text,
                  const TargetVocab& vocab) {
  std::vector<std::string> texts;
  texts.reserve(hypotheses.size());
  for (const auto& h : hypotheses) texts.push_back(vocab.Decode(h.ids));
  return hypotheses[RerankIndex(hypotheses, texts, source_text)];
}

}  // namespace lenctl
