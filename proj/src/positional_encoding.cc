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

#include "lenctl/positional_encoding.h"

#include <cmath>
#include <cstdio>
#include <vector>

#include "lenctl/tensor.h"

namespace lenctl {

namespace {

void CheckDimension(int d) {
  if (d <= 0 || d % 2 != 0) {
    throw ConfigurationError("encoding dimension must be even and positive, got " +
                             std::to_string(d));
  }
}

void CheckMaxPos(int max_pos) {
  if (max_pos < 0) throw ConfigurationError("max_pos must be >= 0");
}

// Fills one row: [sin(x / w_0), cos(x / w_0), sin(x / w_1), ...] where
// w_i = base^(2i/d). Evaluated in double so that equal arguments give
// bitwise-equal rows no matter which family produced the argument.
void FillSinusoidRow(double x, double base, int d, float* out) {
  for (int i = 0; i < d / 2; ++i) {
    const double angle = x / std::pow(base, 2.0 * i / d);
    out[2 * i] = static_cast<float>(std::sin(angle));
    out[2 * i + 1] = static_cast<float>(std::cos(angle));
  }
}

EncodingFamily Combine(EncodingFamily a, EncodingFamily b) {
  using F = EncodingFamily;
  if (a == F::kNone) return b;
  if (b == F::kNone) return a;
  if ((a == F::kLDPE && b == F::kPE) || (a == F::kPE && b == F::kLDPE)) return F::kLDPEPlusPE;
  if ((a == F::kLRPE && b == F::kPE) || (a == F::kPE && b == F::kLRPE)) return F::kLRPEPlusPE;
  throw ConfigurationError("no encoding family for " + std::string(FamilyName(a)) + " + " +
                           std::string(FamilyName(b)));
}

}  // namespace

std::string_view FamilyName(EncodingFamily family) {
  switch (family) {
    case EncodingFamily::kNone:
      return "none";
    case EncodingFamily::kPE:
      return "pe";
    case EncodingFamily::kLDPE:
      return "ldpe";
    case EncodingFamily::kLRPE:
      return "lrpe";
    case EncodingFamily::kLDPEPlusPE:
      return "ldpe+pe";
    case EncodingFamily::kLRPEPlusPE:
      return "lrpe+pe";
  }
  return "?";
}

EncodingFamily ParseFamily(std::string_view name) {
  for (auto f : {EncodingFamily::kNone, EncodingFamily::kPE, EncodingFamily::kLDPE,
                 EncodingFamily::kLRPE, EncodingFamily::kLDPEPlusPE,
                 EncodingFamily::kLRPEPlusPE}) {
    if (FamilyName(f) == name) return f;
  }
  throw ConfigurationError("unknown encoding family '" + std::string(name) + "'");
}

bool UsesLength(EncodingFamily family) {
  return family == EncodingFamily::kLDPE || family == EncodingFamily::kLRPE ||
         family == EncodingFamily::kLDPEPlusPE || family == EncodingFamily::kLRPEPlusPE;
}

void EncodingSpec::Validate() const {
  CheckDimension(d);
  if (!(base > 1.0)) throw ConfigurationError("sinusoid base must be > 1");
  if (!UsesLength(family)) return;
  if (!len) {
    throw ConfigurationError("encoding family " + std::string(FamilyName(family)) +
                             " requires a length");
  }
  const bool ratio = family == EncodingFamily::kLRPE || family == EncodingFamily::kLRPEPlusPE;
  if (*len < (ratio ? 1 : 0)) {
    throw ConfigurationError("length " + std::to_string(*len) + " is invalid for family " +
                             std::string(FamilyName(family)));
  }
}

EncodingTable::EncodingTable(EncodingSpec spec, Tensor values)
    : spec_(std::move(spec)), values_(std::move(values)) {}

std::span<const float> EncodingTable::row(int pos) const {
  if (pos < 0 || pos > max_pos()) {
    throw std::out_of_range("position " + std::to_string(pos) + " outside table of " +
                            std::to_string(max_pos() + 1) + " rows");
  }
  return values_.data().subspan(static_cast<std::size_t>(pos) * d(), d());
}

EncodingTable PeTable(int d, double base, int max_pos) {
  EncodingSpec spec{EncodingFamily::kPE, d, base, std::nullopt};
  spec.Validate();
  CheckMaxPos(max_pos);
  Tensor values({max_pos + 1, d});
  for (int pos = 0; pos <= max_pos; ++pos) {
    FillSinusoidRow(static_cast<double>(pos), base, d, &values.at(pos, 0));
  }
  return EncodingTable(spec, std::move(values));
}

EncodingTable LdpeTable(int d, double base, int len, int max_pos) {
  EncodingSpec spec{EncodingFamily::kLDPE, d, base, len};
  spec.Validate();
  CheckMaxPos(max_pos);
  Tensor values({max_pos + 1, d});
  for (int pos = 0; pos <= max_pos; ++pos) {
    FillSinusoidRow(static_cast<double>(len - pos), base, d, &values.at(pos, 0));
  }
  return EncodingTable(spec, std::move(values));
}

EncodingTable LrpeTable(int d, int len, int max_pos) {
  if (len < 1) throw ConfigurationError("LRPE requires len >= 1, got " + std::to_string(len));
  // len takes the place of the base; base itself is unused.
  EncodingSpec spec{EncodingFamily::kLRPE, d, 10000.0, len};
  spec.Validate();
  CheckMaxPos(max_pos);
  Tensor values({max_pos + 1, d});
  for (int pos = 0; pos <= max_pos; ++pos) {
    float* out = &values.at(pos, 0);
    for (int i = 0; i < d / 2; ++i) {
      const double angle = pos / std::pow(static_cast<double>(len), 2.0 * i / d);
      out[2 * i] = static_cast<float>(std::sin(angle));
      out[2 * i + 1] = static_cast<float>(std::cos(angle));
    }
  }
  return EncodingTable(spec, std::move(values));
}

EncodingTable ZeroTable(int d, int max_pos) {
  EncodingSpec spec{EncodingFamily::kNone, d, 10000.0, std::nullopt};
  spec.Validate();
  CheckMaxPos(max_pos);
  return EncodingTable(spec, Tensor({max_pos + 1, d}));
}

EncodingTable SumEncodings(const EncodingTable& a, const EncodingTable& b) {
  if (a.values().shape() != b.values().shape()) {
    throw DimensionError("sum_encodings: shape mismatch " + ShapeString(a.values().shape()) +
                         " vs " + ShapeString(b.values().shape()));
  }
  EncodingSpec spec = a.spec();
  spec.family = Combine(a.spec().family, b.spec().family);
  if (!spec.len) spec.len = b.spec().len;
  if (a.spec().family == EncodingFamily::kLRPE) spec.base = b.spec().base;
  Tensor values(a.values().shape());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = a.values()[i] + b.values()[i];
  return EncodingTable(spec, std::move(values));
}

EncodingTable BuildTable(const EncodingSpec& spec, int max_pos) {
  spec.Validate();
  switch (spec.family) {
    case EncodingFamily::kNone:
      return ZeroTable(spec.d, max_pos);
    case EncodingFamily::kPE:
      return PeTable(spec.d, spec.base, max_pos);
    case EncodingFamily::kLDPE:
      return LdpeTable(spec.d, spec.base, *spec.len, max_pos);
    case EncodingFamily::kLRPE:
      return LrpeTable(spec.d, *spec.len, max_pos);
    case EncodingFamily::kLDPEPlusPE:
      return SumEncodings(LdpeTable(spec.d, spec.base, *spec.len, max_pos),
                          PeTable(spec.d, spec.base, max_pos));
    case EncodingFamily::kLRPEPlusPE:
      return SumEncodings(LrpeTable(spec.d, *spec.len, max_pos),
                          PeTable(spec.d, spec.base, max_pos));
  }
  throw ConfigurationError("unhandled encoding family");
}

EncodingCache::EncodingCache(EncodingFamily family, int d, double base, int max_pos)
    : family_(family), d_(d), base_(base), max_pos_(max_pos) {}

std::shared_ptr<const EncodingTable> EncodingCache::Get(int len) const {
  // Length-free families share a single table under key 0.
  const int key = UsesLength(family_) ? len : 0;
  std::lock_guard<std::mutex> lock(mu_);
  auto it = tables_.find(key);
  if (it != tables_.end()) return it->second;
  EncodingSpec spec{family_, d_, base_, UsesLength(family_) ? std::optional<int>(len)
                                                            : std::nullopt};
  auto table = std::make_shared<const EncodingTable>(BuildTable(spec, max_pos_));
  tables_.emplace(key, table);
  return table;
}

void WriteTableCsv(const EncodingTable& table, std::ostream& out) {
  out << "pos";
  for (int j = 0; j < table.d(); ++j) out << ",dim" << j;
  out << '\n';
  char buf[32];
  for (int pos = 0; pos <= table.max_pos(); ++pos) {
    out << pos;
    for (float v : table.row(pos)) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace lenctl
