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

#include "lenctl/tokenization.h"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

#include "lenctl/utf8.h"

namespace lenctl {

namespace {

using Symbols = std::vector<std::string>;
using Pair = std::pair<std::string, std::string>;

// Word split into its initial symbols; the last carries the boundary mark.
Symbols InitialSymbols(std::string_view word) {
  Symbols out;
  for (char32_t cp : utf8::Decode(word)) out.push_back(utf8::Encode(cp));
  if (!out.empty()) out.back() += kWordEnd;
  return out;
}

void ApplyMerge(Symbols& word, const Pair& merge) {
  Symbols out;
  out.reserve(word.size());
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (i + 1 < word.size() && word[i] == merge.first && word[i + 1] == merge.second) {
      out.push_back(word[i] + word[i + 1]);
      ++i;
    } else {
      out.push_back(word[i]);
    }
  }
  word = std::move(out);
}

bool StripLineEnd(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

SourceVocab::SourceVocab(std::vector<std::string> base_symbols,
                         std::vector<std::pair<std::string, std::string>> merges)
    : base_symbols_(std::move(base_symbols)), merges_(std::move(merges)) {
  tokens_ = {"<pad>", "<unk>"};
  auto add = [this](const std::string& tok) {
    if (ids_.count(tok)) return;
    ids_.emplace(tok, static_cast<int>(tokens_.size()));
    tokens_.push_back(tok);
  };
  for (const auto& s : base_symbols_) add(s);
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    add(merges_[r].first + merges_[r].second);
    ranks_.emplace(merges_[r], static_cast<int>(r));
  }
}

std::vector<std::string> SourceVocab::BaseSymbols(std::span<const std::string> corpus) {
  std::set<std::string> base;
  for (const auto& line : corpus) {
    for (const auto& w : utf8::SplitWords(line)) {
      for (auto& s : InitialSymbols(w)) base.insert(std::move(s));
    }
  }
  return {base.begin(), base.end()};
}

SourceVocab SourceVocab::Train(std::span<const std::string> corpus, int target_size) {
  if (corpus.empty()) throw std::invalid_argument("train_bpe: empty corpus");
  std::map<std::string, long> word_counts;
  for (const auto& line : corpus) {
    for (auto& w : utf8::SplitWords(line)) ++word_counts[w];
  }
  std::vector<std::pair<Symbols, long>> words;
  std::set<std::string> base;
  for (const auto& [w, count] : word_counts) {
    Symbols syms = InitialSymbols(w);
    base.insert(syms.begin(), syms.end());
    words.emplace_back(std::move(syms), count);
  }
  const int minimum = 2 + static_cast<int>(base.size());
  if (target_size < minimum) {
    throw std::invalid_argument("train_bpe: target size " + std::to_string(target_size) +
                                " is smaller than the base inventory of " +
                                std::to_string(minimum) + " symbols");
  }
  std::vector<std::string> base_symbols(base.begin(), base.end());
  std::set<std::string> known(base.begin(), base.end());
  std::vector<Pair> merges;
  int size = minimum;
  while (size < target_size) {
    std::map<Pair, long> pair_counts;
    for (const auto& [syms, count] : words) {
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) pair_counts[{syms[i], syms[i + 1]}] += count;
    }
    // std::map iterates pairs in byte order, so the first maximum wins ties.
    const Pair* best = nullptr;
    long best_count = 0;
    for (const auto& [pair, count] : pair_counts) {
      if (count > best_count) {
        best = &pair;
        best_count = count;
      }
    }
    if (best == nullptr || best_count < 2) break;
    const Pair merge = *best;
    merges.push_back(merge);
    for (auto& entry : words) ApplyMerge(entry.first, merge);
    if (known.insert(merge.first + merge.second).second) ++size;
  }
  return SourceVocab(std::move(base_symbols), std::move(merges));
}

std::vector<int> SourceVocab::EncodeWord(const std::string& word) const {
  Symbols syms = InitialSymbols(word);
  // Repeatedly merge the lowest-ranked adjacent pair; equivalent to applying
  // the merge list in order.
  for (;;) {
    int best_rank = std::numeric_limits<int>::max();
    const Pair* best = nullptr;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      auto it = ranks_.find({syms[i], syms[i + 1]});
      if (it != ranks_.end() && it->second < best_rank) {
        best_rank = it->second;
        best = &it->first;
      }
    }
    if (best == nullptr) break;
    ApplyMerge(syms, *best);
  }
  std::vector<int> ids;
  ids.reserve(syms.size());
  for (const auto& s : syms) {
    auto it = ids_.find(s);
    ids.push_back(it == ids_.end() ? kUnk : it->second);
  }
  return ids;
}

std::vector<int> SourceVocab::Encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& w : utf8::SplitWords(text)) {
    auto word_ids = EncodeWord(w);
    ids.insert(ids.end(), word_ids.begin(), word_ids.end());
  }
  return ids;
}

std::string SourceVocab::Decode(std::span<const int> ids) const {
  std::string joined;
  for (int id : ids) {
    if (id == kPad || id == kUnk || id < 0 || id >= size()) continue;
    joined += tokens_[id];
  }
  std::string out;
  std::size_t pos = 0;
  while (pos < joined.size()) {
    if (joined.compare(pos, kWordEnd.size(), kWordEnd) == 0) {
      out.push_back(' ');
      pos += kWordEnd.size();
    } else {
      out.push_back(joined[pos]);
      ++pos;
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

void SourceVocab::SaveMerges(std::ostream& out) const {
  out << "bpe v1\n";
  for (const auto& [left, right] : merges_) out << left << '\t' << right << '\n';
}

void SourceVocab::SaveSymbols(std::ostream& out) const {
  for (const auto& s : base_symbols_) out << s << '\n';
}

SourceVocab SourceVocab::Load(std::istream& merges_in, std::istream& symbols_in) {
  std::string line;
  if (!std::getline(merges_in, line) || (StripLineEnd(line), line != "bpe v1")) {
    throw std::runtime_error("source vocab: missing 'bpe v1' header");
  }
  std::vector<Pair> merges;
  int line_no = 1;
  while (std::getline(merges_in, line)) {
    ++line_no;
    StripLineEnd(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("source vocab: malformed merge on line " + std::to_string(line_no));
    }
    merges.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  std::vector<std::string> symbols;
  while (std::getline(symbols_in, line)) {
    StripLineEnd(line);
    if (!line.empty()) symbols.push_back(line);
  }
  return SourceVocab(std::move(symbols), std::move(merges));
}

TargetVocab::TargetVocab(std::u32string chars) : chars_(std::move(chars)) {
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    if (!ids_.emplace(chars_[i], kNumSpecials + static_cast<int>(i)).second) {
      throw std::invalid_argument("target vocab: duplicate character");
    }
  }
}

TargetVocab TargetVocab::Build(std::span<const std::string> texts) {
  std::set<char32_t> seen;
  for (const auto& t : texts) {
    for (char32_t cp : utf8::Decode(t)) {
      if (cp != U'\n' && cp != U'\r') seen.insert(cp);
    }
  }
  return TargetVocab(std::u32string(seen.begin(), seen.end()));
}

int TargetVocab::id(char32_t c) const {
  auto it = ids_.find(c);
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> TargetVocab::Encode(std::string_view text) const {
  std::vector<int> ids;
  for (char32_t cp : utf8::Decode(text)) ids.push_back(id(cp));
  ids.push_back(kEos);
  return ids;
}

std::string TargetVocab::Decode(std::span<const int> ids) const {
  std::u32string out;
  for (int id : ids) {
    if (id == kEos) break;
    if (IsCharacter(id)) out.push_back(character(id));
  }
  return utf8::Encode(out);
}

void TargetVocab::Save(std::ostream& out) const {
  for (char32_t c : chars_) out << utf8::Encode(c) << '\n';
}

TargetVocab TargetVocab::Load(std::istream& in) {
  std::u32string chars;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    StripLineEnd(line);
    const auto decoded = utf8::Decode(line);
    if (decoded.size() != 1) {
      throw std::runtime_error("target vocab: line " + std::to_string(line_no) +
                               " must hold exactly one character");
    }
    chars.push_back(decoded[0]);
  }
  return TargetVocab(std::move(chars));
}

int TargetLength(std::string_view text) { return static_cast<int>(utf8::Length(text)); }

}  // namespace lenctl
