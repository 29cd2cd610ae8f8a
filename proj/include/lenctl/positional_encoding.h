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

#ifndef LENCTL_POSITIONAL_ENCODING_H_
#define LENCTL_POSITIONAL_ENCODING_H_

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lenctl/tensor.h"

namespace lenctl {

class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Which sinusoid family feeds the decoder input layer.
//   kPE    sin/cos(pos / base^(2i/d))          absolute position
//   kLDPE  sin/cos((len - pos) / base^(2i/d))  remaining length
//   kLRPE  sin/cos(pos / len^(2i/d))           progress relative to len
// The +PE variants add the absolute table to the length-aware one.
enum class EncodingFamily { kNone, kPE, kLDPE, kLRPE, kLDPEPlusPE, kLRPEPlusPE };

std::string_view FamilyName(EncodingFamily family);
// Accepts "none", "pe", "ldpe", "lrpe", "ldpe+pe", "lrpe+pe".
EncodingFamily ParseFamily(std::string_view name);
// True for families whose rows depend on the length constraint.
bool UsesLength(EncodingFamily family);

struct EncodingSpec {
  EncodingFamily family = EncodingFamily::kPE;
  int d = 64;
  double base = 10000.0;
  std::optional<int> len;

  // Throws ConfigurationError when d is odd/non-positive, base <= 1, or a
  // length-aware family lacks a usable len.
  void Validate() const;
};

// (max_pos + 1) x d table; row p is added to the embedding at position p.
class EncodingTable {
 public:
  EncodingTable(EncodingSpec spec, Tensor values);

  const EncodingSpec& spec() const { return spec_; }
  const Tensor& values() const { return values_; }
  int max_pos() const { return values_.dim(0) - 1; }
  int d() const { return values_.dim(1); }
  std::span<const float> row(int pos) const;

 private:
  EncodingSpec spec_;
  Tensor values_;
};

EncodingTable PeTable(int d, double base, int max_pos);
EncodingTable LdpeTable(int d, double base, int len, int max_pos);
EncodingTable LrpeTable(int d, int len, int max_pos);
// All-zero table for family kNone.
EncodingTable ZeroTable(int d, int max_pos);

// Elementwise sum. The result's family is the combined one (e.g. LDPE and
// PE give LDPE+PE; anything plus kNone keeps the other family).
EncodingTable SumEncodings(const EncodingTable& a, const EncodingTable& b);

// Dispatches on spec.family.
EncodingTable BuildTable(const EncodingSpec& spec, int max_pos);

// Per-length tables for one family, built on first use. Safe to share
// across threads.
class EncodingCache {
 public:
  EncodingCache(EncodingFamily family, int d, double base, int max_pos);

  std::shared_ptr<const EncodingTable> Get(int len) const;
  EncodingFamily family() const { return family_; }
  int max_pos() const { return max_pos_; }

 private:
  EncodingFamily family_;
  int d_;
  double base_;
  int max_pos_;
  mutable std::mutex mu_;
  mutable std::map<int, std::shared_ptr<const EncodingTable>> tables_;
};

// CSV with header pos,dim0,...,dim{d-1}; values at 9 significant digits.
void WriteTableCsv(const EncodingTable& table, std::ostream& out);

}  // namespace lenctl

#endif  // LENCTL_POSITIONAL_ENCODING_H_
