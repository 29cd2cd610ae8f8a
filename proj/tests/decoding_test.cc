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

#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "lenctl/decoding.h"
#include "lenctl/model.h"
#include "lenctl/random.h"
#include "lenctl/tokenization.h"

namespace lenctl {
namespace {

constexpr int kA = TargetVocab::kNumSpecials;

// Log-probabilities drawn from a hash of the prefix, so every prefix has a
// fixed random distribution over 3 characters plus EOS.
class TableScorer : public StepScorer {
 public:
  explicit TableScorer(std::uint64_t seed) : seed_(seed) {}
  int vocab_size() const override { return kA + 3; }
  Tensor NextLogProbs(std::span<const std::vector<int>> prefixes) override {
    Tensor out({static_cast<int>(prefixes.size()), vocab_size()}, -1e9f);
    for (int p = 0; p < static_cast<int>(prefixes.size()); ++p) {
      std::uint64_t h = seed_;
      for (int id : prefixes[p]) h = h * 1000003u + static_cast<std::uint64_t>(id) + 1;
      Rng rng(h);
      std::vector<double> raw;
      double z = 0;
      for (int v = 0; v < 4; ++v) {
        raw.push_back(std::exp(3.0 * rng.Uniform()));
        z += raw.back();
      }
      out.at(p, TargetVocab::kEos) = static_cast<float>(std::log(raw[0] / z));
      for (int v = 0; v < 3; ++v) out.at(p, kA + v) = static_cast<float>(std::log(raw[v + 1] / z));
    }
    return out;
  }

 private:
  std::uint64_t seed_;
};

// Prefers character A until the prefix holds eos_after tokens, then EOS.
class RiggedScorer : public StepScorer {
 public:
  explicit RiggedScorer(int eos_after) : eos_after_(eos_after) {}
  int vocab_size() const override { return kA + 2; }
  Tensor NextLogProbs(std::span<const std::vector<int>> prefixes) override {
    Tensor out({static_cast<int>(prefixes.size()), vocab_size()}, -20.0f);
    for (int p = 0; p < static_cast<int>(prefixes.size()); ++p) {
      const bool stop = static_cast<int>(prefixes[p].size()) >= eos_after_;
      out.at(p, stop ? TargetVocab::kEos : kA) = -0.01f;
      out.at(p, kA + 1) = -5.0f;
      if (!stop) out.at(p, TargetVocab::kEos) = -8.0f;
    }
    return out;
  }

 private:
  int eos_after_;
};

// Never prefers EOS.
class EndlessScorer : public StepScorer {
 public:
  int vocab_size() const override { return kA + 1; }
  Tensor NextLogProbs(std::span<const std::vector<int>> prefixes) override {
    Tensor out({static_cast<int>(prefixes.size()), vocab_size()}, -50.0f);
    for (int p = 0; p < static_cast<int>(prefixes.size()); ++p) out.at(p, kA) = 0.0f;
    return out;
  }
};

struct Best {
  std::vector<int> ids;
  double logprob = -INFINITY;
};

// Exhaustive search over sequences of at most cap tokens, EOS only last.
Best Exhaustive(StepScorer& scorer, int cap) {
  Best best;
  std::function<void(std::vector<int>&, double)> walk = [&](std::vector<int>& prefix, double lp) {
    const std::vector<std::vector<int>> one = {prefix};
    const Tensor scores = scorer.NextLogProbs(one);
    for (int v = 0; v < scorer.vocab_size(); ++v) {
      if (!scorer.Emittable(v)) continue;
      prefix.push_back(v);
      const double next = lp + scores.at(0, v);
      if (v == scorer.eos_id() || static_cast<int>(prefix.size()) == cap) {
        if (next > best.logprob) best = {prefix, next};
      } else {
        walk(prefix, next);
      }
      prefix.pop_back();
    }
  };
  std::vector<int> root;
  walk(root, 0.0);
  return best;
}

TEST_CASE("rigged scorer stops at step four") {
  RiggedScorer scorer(4);
  const auto hyps = BeamSearch(scorer, 1, 1, 20);
  REQUIRE(hyps.size() == 1);
  CHECK(hyps[0].terminated);
  CHECK(hyps[0].ids == std::vector<int>{kA, kA, kA, kA, TargetVocab::kEos});
  CHECK(hyps[0].logprob <= 0.0);
}

TEST_CASE("n-best lists are distinct and ordered") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    TableScorer scorer(seed);
    const auto hyps = BeamSearch(scorer, 4, 4, 6);
    REQUIRE(hyps.size() == 4);
    std::set<std::vector<int>> seen;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      CHECK(seen.insert(hyps[i].ids).second);
      if (i > 0) CHECK(hyps[i - 1].logprob >= hyps[i].logprob);
      CHECK(hyps[i].logprob <= 0.0);
      if (hyps[i].terminated) CHECK(hyps[i].ids.back() == TargetVocab::kEos);
    }
  }
}

TEST_CASE("wide beam equals exhaustive search") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    TableScorer scorer(seed);
    for (int cap : {3, 4}) {
      const Best best = Exhaustive(scorer, cap);
      const auto hyps = BeamSearch(scorer, cap == 3 ? 27 : 81, 1, cap);
      REQUIRE_FALSE(hyps.empty());
      CHECK(hyps[0].ids == best.ids);
      CHECK(hyps[0].logprob == doctest::Approx(best.logprob).epsilon(1e-12));
    }
  }
}

// Top-1 is not monotone in the width for every pair of widths (a wider beam
// can prune the prefix greedy search would have finished), but a beam wide
// enough to keep every prefix dominates all narrower ones.
TEST_CASE("an exhaustive-width beam dominates narrower beams on random models") {
  ModelConfig c;
  c.d = 16;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.heads = 2;
  c.ffn = 32;
  c.dropout = 0.0;
  c.source_vocab = 8;
  c.target_vocab = kA + 4;
  c.max_positions = 32;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    c.seed = seed;
    const Model model(c);
    DecodeRequest request;
    request.source = {2, 3, 4, 5, 6};
    request.len = 2;
    request.safety_cap = 4;
    request.beam = 256;
    const double best = BeamSearch(model, request)[0].logprob;
    for (int beam : {1, 2, 4, 8, 16}) {
      request.beam = beam;
      CHECK(BeamSearch(model, request)[0].logprob <= best);
    }
  }
}

TEST_CASE("decoding is deterministic") {
  ModelConfig c;
  c.d = 16;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.heads = 2;
  c.ffn = 32;
  c.source_vocab = 8;
  c.target_vocab = kA + 5;
  const Model model(c);
  DecodeRequest request;
  request.source = {3, 4, 5};
  request.len = 4;
  request.beam = 4;
  request.n = 4;
  const auto a = BeamSearch(model, request);
  const auto b = BeamSearch(model, request);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].ids == b[i].ids);
    CHECK(a[i].logprob == b[i].logprob);
    CHECK(a[i].terminated == b[i].terminated);
  }
}

TEST_CASE("hypotheses that reach the cap are unterminated") {
  EndlessScorer scorer;
  const auto hyps = BeamSearch(scorer, 2, 2, 5);
  REQUIRE_FALSE(hyps.empty());
  CHECK_FALSE(hyps[0].terminated);
  CHECK(hyps[0].ids.size() == 5);
}

TEST_CASE("request validation") {
  DecodeRequest r;
  r.len = 5;
  CHECK(r.ResolvedCap() == 20);
  CHECK(DefaultSafetyCap(0) == 10);
  r.beam = 0;
  CHECK_THROWS_AS(r.Validate(), std::invalid_argument);
  r.beam = 2;
  r.n = 3;
  CHECK_THROWS_AS(r.Validate(), std::invalid_argument);
  r.n = 2;
  r.safety_cap = 4;
  CHECK_THROWS_AS(r.Validate(), std::invalid_argument);
  r.safety_cap = 5;
  CHECK_NOTHROW(r.Validate());
  TableScorer scorer(1);
  CHECK_THROWS_AS(BeamSearch(scorer, 0, 1, 3), std::invalid_argument);
}

std::vector<Hypothesis> Hyps(std::vector<double> logprobs) {
  std::vector<Hypothesis> out;
  for (double lp : logprobs) out.push_back({{}, lp, true});
  return out;
}

TEST_CASE("rerank examples") {
  {
    const auto hyps = Hyps({-1, -2});
    const std::vector<std::string> texts = {"a b", "a c d"};
    CHECK(RerankIndex(hyps, texts, "a c d") == 1);
  }
  {
    const auto hyps = Hyps({-2, -1});
    const std::vector<std::string> texts = {"x a", "a y"};
    CHECK(RerankIndex(hyps, texts, "a") == 1);
  }
  {
    const auto hyps = Hyps({-1, -1});
    const std::vector<std::string> texts = {"a", "a"};
    CHECK(RerankIndex(hyps, texts, "a") == 0);
  }
  {
    const auto hyps = Hyps({-3});
    const std::vector<std::string> texts = {"zzz"};
    CHECK(RerankIndex(hyps, texts, "a b") == 0);
  }
  const std::vector<Hypothesis> none;
  const std::vector<std::string> no_texts;
  CHECK_THROWS(RerankIndex(none, no_texts, "a"));
}

TEST_CASE("rerank counts distinct lowercased source words as substrings") {
  const auto words = SourceWords("The cat THE hat");
  CHECK(words == std::vector<std::string>{"the", "cat", "hat"});
  CHECK(SourceOverlap("thecat", words) == 2);
  CHECK(SourceOverlap("CAT cat cat", words) == 1);
  CHECK(SourceOverlap("", words) == 0);
}

TEST_CASE("rerank decodes hypotheses through the vocabulary") {
  const TargetVocab vocab(U"abc ");
  std::vector<Hypothesis> hyps = {
      {{vocab.id(U'c'), TargetVocab::kEos}, -0.5, true},
      {{vocab.id(U'a'), vocab.id(U' '), vocab.id(U'b'), TargetVocab::kEos}, -4.0, true}};
  const Hypothesis chosen = Rerank(hyps, "a b", vocab);
  CHECK(chosen.logprob == -4.0);
  const std::vector<Hypothesis> single = {hyps[0]};
  CHECK(Rerank(single, "a b", vocab).ids == hyps[0].ids);
}

}  // namespace
}  // namespace lenctl
