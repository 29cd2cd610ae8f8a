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

#ifndef LENCTL_OPTIM_H_
#define LENCTL_OPTIM_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lenctl/tensor.h"

namespace lenctl {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

struct AdamState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::int64_t step = 0;
};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

// One bias-corrected Adam update using each tensor's grad() buffer.
// Throws std::domain_error naming the parameter if a gradient is not finite;
// in that case no parameter is modified.
void AdamStep(std::span<const NamedTensor> params, AdamState& state, const AdamConfig& config);

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before scaling.
double ClipGradNorm(std::span<const NamedTensor> params, double max_norm);

}  // namespace lenctl

#endif  // LENCTL_OPTIM_H_
