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

#ifndef LENCTL_RANDOM_H_
#define LENCTL_RANDOM_H_

#include <cstdint>
#include <string_view>

namespace lenctl {

// SplitMix64 (Steele, Lea, Flood 2014). State advances by the golden-gamma
// constant 0x9E3779B97F4A7C15; output is finalized with the multipliers
// 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB and shifts 30/27/31. The whole
// stream is specified by these constants, so datasets and initializations
// are identical on every platform. Distribution helpers below are also
// written out here rather than taken from <random>, whose distributions are
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t Next();
  // Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t Below(std::uint64_t bound);
  // Uniform integer in [lo, hi].
  int Range(int lo, int hi);
  // Uniform double in [0, 1) with 53 random bits.
  double Uniform();
  // Standard normal via Box-Muller (one value per call, second discarded).
  double Normal();

  // Independent child stream derived from this stream's seed and a tag.
  Rng Fork(std::uint64_t tag) const;

 private:
  std::uint64_t state_;
};

// 64-bit FNV-1a.
std::uint64_t Fnv1a64(std::string_view bytes);

}  // namespace lenctl

#endif  // LENCTL_RANDOM_H_
