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

#ifndef LENCTL_COMMANDS_H_
#define LENCTL_COMMANDS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lenctl/checkpoint.h"
#include "lenctl/data.h"
#include "lenctl/evaluation.h"
#include "lenctl/model.h"
#include "lenctl/tokenization.h"

namespace lenctl {

// Bad flags or configuration; the CLI maps it to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  ModelConfig model;
  // Exactly one data source: a synthetic spec or a JSONL path.
  std::optional<SyntheticTaskSpec> synthetic;
  std::string train_path;
  // Source BPE size; <= 0 keeps only the base symbols (no merges).
  int source_vocab_size = 0;
  TrainOptions optimizer;
  int warmup_steps = 0;
  // Linear decay of the learning rate to 10% over the step budget.
  bool linear_decay = false;
  int batch_size = 32;
  int steps = 1000;
  std::set<int> exclude_lengths;
  std::string output_dir = "run";
  // Drives initialization, shuffling and dropout.
  std::uint64_t seed = 1;

  static RunConfig FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

struct EpochRecord {
  int epoch = 0;
  std::int64_t step = 0;
  double train_loss = 0.0;
  std::optional<double> valid_loss;
  double lr = 0.0;
};

struct TrainedModel {
  std::unique_ptr<Model> model;
  SourceVocab source_vocab;
  TargetVocab target_vocab;
  std::vector<EpochRecord> log;
  // Training examples per target length after filtering.
  std::map<int, int> length_counts;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Builds vocabularies from the training pairs and trains for
// config.steps updates. config.exclude_lengths is not applied here.
TrainedModel TrainOnPairs(std::span<const ExamplePair> train, std::span<const ExamplePair> valid,
                          const RunConfig& config, const EpochCallback& on_epoch = {});

// Loads or generates the data, applies the hash split and the length
// filter, trains, and writes into config.output_dir:
//   checkpoint.bin, train_log.csv, train_lengths.csv, config.json,
//   source.bpe, source.symbols, target.chars
// The log is flushed after every epoch, so a failed run keeps it.
TrainedModel CmdTrain(const RunConfig& config, std::ostream* progress = nullptr);

struct GenerateOptions {
  std::string checkpoint;
  std::string input;
  std::string output;
  std::optional<int> len;
  int beam = 4;
  int nbest = 1;
  bool rerank = false;
  int safety_cap = 0;
};

// One object per input line (which needs "source"; "len" is used when
// options.len is unset):
//   {"output", "len_requested", "len_generated", "logprob"[, "nbest"]}
nlohmann::json GenerateOne(const Model& model, const SourceVocab& source_vocab,
                           const TargetVocab& target_vocab, const std::string& source,
                           std::optional<int> len, const GenerateOptions& options);
void CmdGenerate(const GenerateOptions& options);

struct EvaluateOptions {
  std::string outputs;
  std::string references;
  std::string report;
  std::string histogram;  // optional CSV path
  EvalConfig config;
};

EvalReport CmdEvaluate(const EvaluateOptions& options);

void CmdPeDump(EncodingFamily family, int d, double base, std::optional<int> len, int max_pos,
               std::ostream& out);

}  // namespace lenctl

#endif  // LENCTL_COMMANDS_H_
