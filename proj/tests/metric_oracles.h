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

// Brute-force ROUGE oracles for tests. Texts are split into Unicode
// scalars by UTF-8 lead bytes; only ' ' counts as whitespace.

#ifndef LENCTL_TESTS_METRIC_ORACLES_H_
#define LENCTL_TESTS_METRIC_ORACLES_H_

#include <algorithm>
#include <set>
#include <string>
#include <vector>

namespace lenctl::testing {

inline std::vector<std::string> OracleUnits(const std::string& text, bool words) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size();) {
    std::size_t n = 1;
    while (i + n < text.size() && (static_cast<unsigned char>(text[i + n]) & 0xC0) == 0x80) ++n;
    const std::string ch = text.substr(i, n);
    i += n;
    if (ch == " ") {
      if (words && !cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (words) {
      cur += ch;
    } else {
      out.push_back(ch);
    }
  }
  if (words && !cur.empty()) out.push_back(cur);
  return out;
}

inline double OracleRougeN(const std::string& cand, const std::string& ref, int n, bool words) {
  const auto c = OracleUnits(cand, words);
  const auto r = OracleUnits(ref, words);
  if (static_cast<int>(r.size()) < n) return 0.0;
  auto gram = [n](const std::vector<std::string>& u, std::size_t i) {
    return std::vector<std::string>(u.begin() + i, u.begin() + i + n);
  };
  auto count = [&](const std::vector<std::string>& u, const std::vector<std::string>& g) {
    int k = 0;
    for (std::size_t i = 0; i + n <= u.size(); ++i) k += gram(u, i) == g;
    return k;
  };
  std::set<std::vector<std::string>> distinct;
  for (std::size_t i = 0; i + n <= r.size(); ++i) distinct.insert(gram(r, i));
  int matches = 0;
  for (const auto& g : distinct) matches += std::min(count(r, g), count(c, g));
  return static_cast<double>(matches) / static_cast<double>(r.size() - n + 1);
}

inline double OracleRougeL(const std::string& cand, const std::string& ref, bool words) {
  const auto c = OracleUnits(cand, words);
  const auto r = OracleUnits(ref, words);
  std::vector<std::vector<int>> t(c.size() + 1, std::vector<int>(r.size() + 1, 0));
  for (std::size_t i = 1; i <= c.size(); ++i) {
    for (std::size_t j = 1; j <= r.size(); ++j) {
      t[i][j] = c[i - 1] == r[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return static_cast<double>(t[c.size()][r.size()]) / static_cast<double>(r.size());
}

}  // namespace lenctl::testing

#endif  // LENCTL_TESTS_METRIC_ORACLES_H_
