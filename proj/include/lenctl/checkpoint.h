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

#ifndef LENCTL_CHECKPOINT_H_
#define LENCTL_CHECKPOINT_H_

#include <memory>
#include <string>

#include "json.hpp"
#include "lenctl/model.h"
#include "lenctl/tokenization.h"

namespace lenctl {

nlohmann::json ModelConfigToJson(const ModelConfig& config);
// Missing keys keep their defaults.
ModelConfig ModelConfigFromJson(const nlohmann::json& j);

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  SourceVocab source_vocab;
  TargetVocab target_vocab;
};

// Binary container, little-endian:
//   "LENCTLCK" magic, u32 version (1), u64 header size, JSON header holding
//   the model config and both vocabularies, u32 tensor count, then per
//   tensor: u32 name size, name, u32 rank, i32 dims, f32 values.
void SaveCheckpoint(const std::string& path, Model& model, const SourceVocab& source_vocab,
                    const TargetVocab& target_vocab);
LoadedCheckpoint LoadCheckpoint(const std::string& path);

}  // namespace lenctl

#endif  // LENCTL_CHECKPOINT_H_
