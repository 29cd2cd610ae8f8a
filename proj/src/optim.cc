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

#include "lenctl/optim.h"

#include <cmath>
#include <stdexcept>

namespace lenctl {

void AdamStep(std::span<const NamedTensor> params, AdamState& state, const AdamConfig& config) {
  for (const NamedTensor& p : params) {
    for (float g : p.tensor->grad()) {
      if (!std::isfinite(g)) {
        throw std::domain_error("adam: non-finite gradient in parameter '" + p.name + "'");
      }
    }
  }
  if (state.m.empty()) {
    for (const NamedTensor& p : params) {
      state.m.emplace_back(p.tensor->size(), 0.0f);
      state.v.emplace_back(p.tensor->size(), 0.0f);
    }
  }
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam: optimizer state does not match parameter list");
  }
  ++state.step;
  const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  const float b1 = static_cast<float>(config.beta1);
  const float b2 = static_cast<float>(config.beta2);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto data = params[k].tensor->data();
    auto grad = params[k].tensor->grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != data.size()) {
      throw std::invalid_argument("adam: state shape mismatch for '" + params[k].name + "'");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const float g = grad[i];
      m[i] = b1 * m[i] + (1.0f - b1) * g;
      v[i] = b2 * v[i] + (1.0f - b2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      data[i] -= static_cast<float>(config.lr * m_hat / (std::sqrt(v_hat) + config.eps));
    }
  }
}

double ClipGradNorm(std::span<const NamedTensor> params, double max_norm) {
  double sq = 0.0;
  for (const NamedTensor& p : params) {
    for (float g : p.tensor->grad()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const float factor = static_cast<float>(max_norm / norm);
    for (const NamedTensor& p : params) {
      for (float& g : p.tensor->grad()) g *= factor;
    }
  }
  return norm;
}

}  // namespace lenctl
