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

#include "lenctl/data.h"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "lenctl/random.h"
#include "lenctl/tokenization.h"
#include "lenctl/utf8.h"

namespace lenctl {

int ExamplePair::len() const { return TargetLength(target); }

void SyntheticTaskSpec::Validate() const {
  const auto symbols = utf8::Decode(alphabet);
  if (symbols.empty()) throw std::invalid_argument("synthetic: empty alphabet");
  if (size < 0) throw std::invalid_argument("synthetic: size must be >= 0");
  if (min_source_len < 1 || min_source_len > max_source_len) {
    throw std::invalid_argument("synthetic: invalid source length range");
  }
  if (min_target_len < 0 || min_target_len > max_target_len) {
    throw std::invalid_argument("synthetic: invalid target length range");
  }
  if (task == SyntheticTask::kConstrainedCopy) {
    if (max_source_len < min_target_len) {
      throw std::invalid_argument("synthetic: no source is long enough for the target range");
    }
    if (distinct_symbols && max_source_len > static_cast<int>(symbols.size())) {
      throw std::invalid_argument("synthetic: distinct sources longer than the alphabet");
    }
  }
}

nlohmann::json SyntheticSpecToJson(const SyntheticTaskSpec& s) {
  return {{"task", s.task == SyntheticTask::kConstrainedCopy ? "constrained-copy" : "keyword-extract"},
          {"alphabet", s.alphabet},
          {"min_source_len", s.min_source_len},
          {"max_source_len", s.max_source_len},
          {"min_target_len", s.min_target_len},
          {"max_target_len", s.max_target_len},
          {"size", s.size},
          {"seed", s.seed},
          {"transform", s.transform == CopyTransform::kIdentity ? "identity" : "reversal"},
          {"distinct_symbols", s.distinct_symbols}};
}

SyntheticTaskSpec SyntheticSpecFromJson(const nlohmann::json& j) {
  SyntheticTaskSpec s;
  if (j.contains("task")) {
    const auto task = j.at("task").get<std::string>();
    if (task == "constrained-copy") {
      s.task = SyntheticTask::kConstrainedCopy;
    } else if (task == "keyword-extract") {
      s.task = SyntheticTask::kKeywordExtract;
    } else {
      throw std::invalid_argument("synthetic: unknown task '" + task + "'");
    }
  }
  if (j.contains("transform")) {
    const auto t = j.at("transform").get<std::string>();
    if (t == "identity") {
      s.transform = CopyTransform::kIdentity;
    } else if (t == "reversal") {
      s.transform = CopyTransform::kReversal;
    } else {
      throw std::invalid_argument("synthetic: unknown transform '" + t + "'");
    }
  }
  s.alphabet = j.value("alphabet", s.alphabet);
  s.min_source_len = j.value("min_source_len", s.min_source_len);
  s.max_source_len = j.value("max_source_len", s.max_source_len);
  s.min_target_len = j.value("min_target_len", s.min_target_len);
  s.max_target_len = j.value("max_target_len", s.max_target_len);
  s.size = j.value("size", s.size);
  s.seed = j.value("seed", s.seed);
  s.distinct_symbols = j.value("distinct_symbols", s.distinct_symbols);
  return s;
}

std::string CopyTarget(std::string_view source, int len, CopyTransform transform) {
  std::u32string symbols = utf8::Decode(source);
  if (len < 0 || len > static_cast<int>(symbols.size())) {
    throw std::invalid_argument("copy target length " + std::to_string(len) +
                                " outside the source");
  }
  if (transform == CopyTransform::kReversal) std::reverse(symbols.begin(), symbols.end());
  return utf8::Encode(symbols.substr(0, len));
}

namespace {

constexpr int kMaxRetries = 1000;

ExamplePair ConstrainedCopy(const SyntheticTaskSpec& spec, const std::u32string& symbols,
                            Rng& rng) {
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    const int source_len = rng.Range(spec.min_source_len, spec.max_source_len);
    const int target_len = rng.Range(spec.min_target_len, spec.max_target_len);
    if (target_len > source_len) continue;
    std::u32string source;
    if (spec.distinct_symbols) {
      std::u32string pool = symbols;
      for (int i = 0; i < source_len; ++i) {
        const auto pick = i + rng.Below(pool.size() - i);
        std::swap(pool[i], pool[pick]);
        source.push_back(pool[i]);
      }
    } else {
      for (int i = 0; i < source_len; ++i) source.push_back(symbols[rng.Below(symbols.size())]);
    }
    const std::string text = utf8::Encode(source);
    return {text, CopyTarget(text, target_len, spec.transform)};
  }
  throw std::runtime_error("synthetic: no feasible target length after " +
                           std::to_string(kMaxRetries) + " draws");
}

std::u32string RandomWord(const std::u32string& symbols, int min_len, int max_len, Rng& rng) {
  std::u32string word;
  const int n = rng.Range(min_len, max_len);
  for (int i = 0; i < n; ++i) word.push_back(symbols[rng.Below(symbols.size())]);
  return word;
}

ExamplePair KeywordExtract(const SyntheticTaskSpec& spec, const std::u32string& symbols,
                           Rng& rng) {
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    const int budget = rng.Range(spec.min_target_len, spec.max_target_len);
    const int source_words = rng.Range(spec.min_source_len, spec.max_source_len);
    std::vector<std::u32string> words;
    std::u32string target;
    bool full = false;
    for (int i = 0; i < source_words; ++i) {
      std::u32string word = RandomWord(symbols, 2, 6, rng);
      if (rng.Below(3) == 0) {
        const std::size_t extra = target.empty() ? word.size() : word.size() + 1;
        // Keywords past the first one that does not fit stay marked in the
        // source but never reach the target.
        if (!full && target.size() + extra <= static_cast<std::size_t>(budget)) {
          if (!target.empty()) target.push_back(U' ');
          target += word;
        } else {
          full = true;
        }
        word = U"#" + word;
      }
      words.push_back(std::move(word));
    }
    const int target_len = static_cast<int>(target.size());
    if (target_len < spec.min_target_len) continue;
    std::u32string source;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) source.push_back(U' ');
      source += words[i];
    }
    return {utf8::Encode(source), utf8::Encode(target)};
  }
  throw std::runtime_error("synthetic: could not fill the keyword budget after " +
                           std::to_string(kMaxRetries) + " draws");
}

}  // namespace

std::vector<ExamplePair> GenerateSynthetic(const SyntheticTaskSpec& spec) {
  spec.Validate();
  const auto symbols = utf8::Decode(spec.alphabet);
  Rng rng(spec.seed);
  std::vector<ExamplePair> pairs;
  pairs.reserve(spec.size);
  for (int i = 0; i < spec.size; ++i) {
    pairs.push_back(spec.task == SyntheticTask::kConstrainedCopy
                        ? ConstrainedCopy(spec, symbols, rng)
                        : KeywordExtract(spec, symbols, rng));
  }
  return pairs;
}

std::vector<ExamplePair> ParseJsonl(std::istream& in) {
  std::vector<ExamplePair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      pairs.push_back({j.at("source").get<std::string>(), j.at("target").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("jsonl: malformed line " + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return pairs;
}

std::vector<ExamplePair> LoadJsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("jsonl: cannot open " + path);
  return ParseJsonl(in);
}

void WriteJsonl(std::ostream& out, std::span<const ExamplePair> pairs) {
  for (const auto& p : pairs) {
    out << nlohmann::json{{"source", p.source}, {"target", p.target}}.dump() << '\n';
  }
}

std::vector<ExamplePair> ExcludeLengths(std::span<const ExamplePair> pairs,
                                        const std::set<int>& excluded) {
  std::vector<ExamplePair> kept;
  for (const auto& p : pairs) {
    if (!excluded.count(p.len())) kept.push_back(p);
  }
  return kept;
}

Split AssignSplit(std::string_view source) {
  const auto bucket = Fnv1a64(source) % 100;
  if (bucket < 90) return Split::kTrain;
  if (bucket < 95) return Split::kValid;
  return Split::kTest;
}

}  // namespace lenctl
