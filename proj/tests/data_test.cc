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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "lenctl/data.h"
#include "lenctl/random.h"
#include "lenctl/tokenization.h"

namespace lenctl {
namespace {

TEST_CASE("copy target examples") {
  CHECK(CopyTarget("abcdefgh", 5, CopyTransform::kIdentity) == "abcde");
  CHECK(CopyTarget("abcdefgh", 3, CopyTransform::kReversal) == "hgf");
  CHECK(CopyTarget("añb", 2, CopyTransform::kIdentity) == "añ");
  CHECK(CopyTarget("abc", 0, CopyTransform::kIdentity).empty());
  CHECK_THROWS_AS(CopyTarget("abc", 4, CopyTransform::kIdentity), std::invalid_argument);
}

TEST_CASE("synthetic generation is seeded") {
  for (auto task : {SyntheticTask::kConstrainedCopy, SyntheticTask::kKeywordExtract}) {
    SyntheticTaskSpec spec;
    spec.task = task;
    spec.size = 200;
    if (task == SyntheticTask::kKeywordExtract) {
      spec.min_source_len = 8;
      spec.max_source_len = 14;
    }
    CHECK(GenerateSynthetic(spec) == GenerateSynthetic(spec));
    SyntheticTaskSpec other = spec;
    other.seed = spec.seed + 1;
    CHECK_FALSE(GenerateSynthetic(spec) == GenerateSynthetic(other));
  }
}

TEST_CASE("constrained copy pairs follow the definition") {
  for (auto transform : {CopyTransform::kIdentity, CopyTransform::kReversal}) {
    SyntheticTaskSpec spec;
    spec.size = 500;
    spec.transform = transform;
    std::set<int> lengths;
    for (const auto& p : GenerateSynthetic(spec)) {
      CHECK(p.len() == TargetLength(p.target));
      CHECK(p.len() >= spec.min_target_len);
      CHECK(p.len() <= spec.max_target_len);
      CHECK(TargetLength(p.source) >= spec.min_source_len);
      CHECK(TargetLength(p.source) <= spec.max_source_len);
      CHECK(p.target == CopyTarget(p.source, p.len(), transform));
      lengths.insert(p.len());
    }
    CHECK(lengths.size() == 16);
  }
}

TEST_CASE("distinct-symbol sources never repeat a symbol") {
  SyntheticTaskSpec spec;
  spec.size = 100;
  spec.distinct_symbols = true;
  for (const auto& p : GenerateSynthetic(spec)) {
    std::string sorted = p.source;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  }
  spec.max_source_len = 30;
  CHECK_THROWS_AS(spec.Validate(), std::invalid_argument);
}

TEST_CASE("keyword extraction joins leading keywords within the budget") {
  SyntheticTaskSpec spec;
  spec.task = SyntheticTask::kKeywordExtract;
  spec.min_source_len = 8;
  spec.max_source_len = 14;
  spec.size = 300;
  for (const auto& p : GenerateSynthetic(spec)) {
    CHECK(p.len() >= spec.min_target_len);
    CHECK(p.len() <= spec.max_target_len);
    std::vector<std::string> keywords;
    std::istringstream words(p.source);
    for (std::string w; words >> w;) {
      if (w[0] == '#') keywords.push_back(w.substr(1));
    }
    // The target is a prefix of the keyword sequence.
    std::istringstream picked(p.target);
    std::size_t k = 0;
    for (std::string w; picked >> w; ++k) {
      REQUIRE(k < keywords.size());
      CHECK(w == keywords[k]);
    }
    CHECK(k >= 1);
  }
}

TEST_CASE("spec validation and json") {
  SyntheticTaskSpec spec;
  spec.alphabet = "";
  CHECK_THROWS_AS(spec.Validate(), std::invalid_argument);
  spec = SyntheticTaskSpec{};
  spec.min_target_len = 30;
  spec.max_target_len = 40;
  CHECK_THROWS_AS(spec.Validate(), std::invalid_argument);
  spec = SyntheticTaskSpec{};
  spec.transform = CopyTransform::kReversal;
  spec.seed = 99;
  spec.distinct_symbols = true;
  const SyntheticTaskSpec back = SyntheticSpecFromJson(SyntheticSpecToJson(spec));
  CHECK(GenerateSynthetic(back) == GenerateSynthetic(spec));
  CHECK_THROWS(SyntheticSpecFromJson(nlohmann::json{{"task", "summarize"}}));
}

TEST_CASE("jsonl parsing") {
  std::istringstream one(R"({"source":"s","target":"ab"})");
  const auto pairs = ParseJsonl(one);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].len() == 2);
  std::istringstream empty("");
  CHECK(ParseJsonl(empty).empty());

  const std::string lf = "{\"source\":\"x y\",\"target\":\"é\"}\n\n{\"source\":\"z\",\"target\":\"\"}\n";
  std::string crlf;
  for (char c : lf) {
    if (c == '\n') crlf += '\r';
    crlf += c;
  }
  std::istringstream a(lf);
  std::istringstream b(crlf);
  const auto from_lf = ParseJsonl(a);
  CHECK(from_lf.size() == 2);
  CHECK(from_lf == ParseJsonl(b));
  CHECK(from_lf[0].len() == 1);
}

TEST_CASE("jsonl errors name the line") {
  std::istringstream bad("{\"source\":\"a\",\"target\":\"b\"}\n{not json}\n");
  CHECK_THROWS_WITH_AS(ParseJsonl(bad), doctest::Contains("line 2"), std::runtime_error);
  std::istringstream missing("\n{\"source\":\"a\"}\n");
  CHECK_THROWS_WITH_AS(ParseJsonl(missing), doctest::Contains("line 2"), std::runtime_error);
  CHECK_THROWS_AS(LoadJsonl("/nonexistent/lenctl.jsonl"), std::runtime_error);
}

TEST_CASE("jsonl round trip through a file") {
  SyntheticTaskSpec spec;
  spec.size = 30;
  spec.alphabet = "abcdé語";
  const auto pairs = GenerateSynthetic(spec);
  const auto path = std::filesystem::temp_directory_path() / "lenctl_data_test.jsonl";
  {
    std::ofstream out(path, std::ios::binary);
    WriteJsonl(out, pairs);
  }
  CHECK(LoadJsonl(path.string()) == pairs);
  std::filesystem::remove(path);
}

std::vector<ExamplePair> PairsWithLengths(const std::vector<int>& lens) {
  std::vector<ExamplePair> out;
  for (std::size_t i = 0; i < lens.size(); ++i) {
    out.push_back({"src" + std::to_string(i), std::string(lens[i], 'x')});
  }
  return out;
}

TEST_CASE("exclude lengths") {
  const auto pairs = PairsWithLengths({10, 12, 13});
  CHECK(ExcludeLengths(pairs, {}) == pairs);
  const auto kept = ExcludeLengths(pairs, {12});
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].len() == 10);
  CHECK(kept[1].len() == 13);
}

TEST_CASE("exclude lengths partitions the input") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> lens(rng.Below(40));
    for (int& l : lens) l = static_cast<int>(rng.Below(8));
    std::set<int> excluded;
    for (int i = 0; i < 3; ++i) excluded.insert(static_cast<int>(rng.Below(8)));
    const auto pairs = PairsWithLengths(lens);
    const auto kept = ExcludeLengths(pairs, excluded);
    std::vector<ExamplePair> removed;
    for (const auto& p : pairs) {
      if (excluded.count(p.len())) removed.push_back(p);
    }
    for (const auto& p : kept) CHECK(excluded.count(p.len()) == 0);
    CHECK(kept.size() + removed.size() == pairs.size());
    std::multiset<std::string> all;
    for (const auto& p : pairs) all.insert(p.source);
    std::multiset<std::string> back;
    for (const auto& p : kept) back.insert(p.source);
    for (const auto& p : removed) back.insert(p.source);
    CHECK(all == back);
  }
}

TEST_CASE("hash split is stable and roughly 90/5/5") {
  std::map<Split, int> counts;
  SyntheticTaskSpec spec;
  spec.size = 4000;
  for (const auto& p : GenerateSynthetic(spec)) {
    CHECK(AssignSplit(p.source) == AssignSplit(std::string(p.source)));
    ++counts[AssignSplit(p.source)];
  }
  CHECK(counts[Split::kTrain] > 3400);
  CHECK(counts[Split::kValid] > 120);
  CHECK(counts[Split::kTest] > 120);
  // FNV-1a of "a" is 0xaf63dc4c8601ec8c; mod 100 = 96.
  CHECK(Fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(AssignSplit("a") == Split::kTest);
}

}  // namespace
}  // namespace lenctl
