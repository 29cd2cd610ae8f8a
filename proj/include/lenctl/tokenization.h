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

#ifndef LENCTL_TOKENIZATION_H_
#define LENCTL_TOKENIZATION_H_

#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lenctl {

// Marks the last symbol of every source word so decoding can restore
// word boundaries: "the cat" -> "t h e▁ c a t▁" before merging.
inline constexpr std::string_view kWordEnd = "▁";

// Frequency-greedy byte-pair-style subword vocabulary over Unicode scalars.
// Ids: 0 = PAD, 1 = UNK, then base symbols in byte order, then merge results
// in merge order.
class SourceVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  SourceVocab() = default;
  SourceVocab(std::vector<std::string> base_symbols,
              std::vector<std::pair<std::string, std::string>> merges);

  // Greedy merging of the most frequent adjacent pair (ties: smallest pair
  // in byte order) until size() reaches target_size or no pair occurs twice.
  // Throws std::invalid_argument on an empty corpus or when target_size
  // cannot hold the specials plus the base inventory.
  static SourceVocab Train(std::span<const std::string> corpus, int target_size);

  // Distinct initial symbols of the corpus words, in byte order.
  static std::vector<std::string> BaseSymbols(std::span<const std::string> corpus);

  std::vector<int> Encode(std::string_view text) const;
  // Inverse of Encode up to whitespace normalization and UNK (rendered as
  // an empty string).
  std::string Decode(std::span<const int> ids) const;

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(id); }
  const std::vector<std::string>& base_symbols() const { return base_symbols_; }
  const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }

  // "bpe v1" header, then one `left<TAB>right` merge per line.
  void SaveMerges(std::ostream& out) const;
  // One base symbol per line.
  void SaveSymbols(std::ostream& out) const;
  static SourceVocab Load(std::istream& merges, std::istream& symbols);

 private:
  std::vector<std::string> SplitWord(std::string_view word) const;
  std::vector<int> EncodeWord(const std::string& word) const;

  std::vector<std::string> base_symbols_;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  std::map<std::pair<std::string, std::string>, int> ranks_;
};

// Character vocabulary for the decoder. Ids: 0 = PAD, 1 = BOS, 2 = EOS,
// 3 = UNK, then characters in code-point order.
class TargetVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecials = 4;

  TargetVocab() = default;
  explicit TargetVocab(std::u32string chars);

  // Every distinct scalar in texts except line breaks.
  static TargetVocab Build(std::span<const std::string> texts);

  // One id per character followed by EOS.
  std::vector<int> Encode(std::string_view text) const;
  // Characters up to the first EOS; specials are dropped.
  std::string Decode(std::span<const int> ids) const;

  int size() const { return kNumSpecials + static_cast<int>(chars_.size()); }
  int id(char32_t c) const;
  bool IsCharacter(int id) const { return id >= kNumSpecials && id < size(); }
  char32_t character(int id) const { return chars_.at(id - kNumSpecials); }

  // One character per line, in id order.
  void Save(std::ostream& out) const;
  static TargetVocab Load(std::istream& in);

 private:
  std::u32string chars_;
  std::unordered_map<char32_t, int> ids_;
};

// Number of characters counted as the length of a target text.
int TargetLength(std::string_view text);

}  // namespace lenctl

#endif  // LENCTL_TOKENIZATION_H_
