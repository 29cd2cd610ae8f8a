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

#include "lenctl/commands.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "lenctl/decoding.h"
#include "lenctl/positional_encoding.h"
#include "lenctl/random.h"

namespace lenctl {

namespace {

constexpr int kMaxValidExamples = 512;

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<EncodedExample> EncodeAll(std::span<const ExamplePair> pairs,
                                      const SourceVocab& source_vocab,
                                      const TargetVocab& target_vocab) {
  std::vector<EncodedExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({source_vocab.Encode(p.source), target_vocab.Encode(p.target), p.len()});
  }
  return out;
}

double LearningRate(const RunConfig& config, std::int64_t step) {
  double lr = config.optimizer.adam.lr;
  if (config.warmup_steps > 0 && step < config.warmup_steps) {
    lr *= static_cast<double>(step + 1) / config.warmup_steps;
  }
  if (config.linear_decay && config.steps > 0) {
    const double progress = static_cast<double>(step) / config.steps;
    lr *= 1.0 - 0.9 * progress;
  }
  return lr;
}

double ValidLoss(const Model& model, const std::vector<EncodedExample>& valid, int batch_size) {
  const std::size_t n = std::min<std::size_t>(valid.size(), kMaxValidExamples);
  double total = 0.0;
  int batches = 0;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    const Batch batch =
        MakeBatch(std::span<const EncodedExample>(valid.data() + start, end - start));
    total += EvaluateLoss(model, batch);
    ++batches;
  }
  return total / batches;
}

}  // namespace

RunConfig RunConfig::FromJson(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (j.contains("model")) c.model = ModelConfigFromJson(j.at("model"));
    if (j.contains("data")) {
      const auto& data = j.at("data");
      if (data.contains("synthetic")) c.synthetic = SyntheticSpecFromJson(data.at("synthetic"));
      c.train_path = data.value("train", std::string());
    }
    c.source_vocab_size = j.value("source_vocab_size", c.source_vocab_size);
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      c.optimizer.adam.lr = o.value("lr", c.optimizer.adam.lr);
      c.optimizer.adam.beta1 = o.value("beta1", c.optimizer.adam.beta1);
      c.optimizer.adam.beta2 = o.value("beta2", c.optimizer.adam.beta2);
      c.optimizer.adam.eps = o.value("eps", c.optimizer.adam.eps);
      c.optimizer.clip_norm = o.value("clip_norm", c.optimizer.clip_norm);
      c.warmup_steps = o.value("warmup_steps", c.warmup_steps);
      c.linear_decay = o.value("linear_decay", c.linear_decay);
    }
    c.batch_size = j.value("batch_size", c.batch_size);
    c.steps = j.value("steps", c.steps);
    if (j.contains("exclude_lengths")) {
      for (int len : j.at("exclude_lengths")) c.exclude_lengths.insert(len);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (c.synthetic.has_value() == !c.train_path.empty()) {
    throw UsageError("config: give exactly one of data.synthetic or data.train");
  }
  if (c.batch_size < 1) throw UsageError("config: batch_size must be >= 1");
  if (c.steps < 0) throw UsageError("config: steps must be >= 0");
  return c;
}

nlohmann::json RunConfig::ToJson() const {
  nlohmann::json data = nlohmann::json::object();
  if (synthetic) data["synthetic"] = SyntheticSpecToJson(*synthetic);
  if (!train_path.empty()) data["train"] = train_path;
  return {{"model", ModelConfigToJson(model)},
          {"data", data},
          {"source_vocab_size", source_vocab_size},
          {"optimizer",
           {{"lr", optimizer.adam.lr},
            {"beta1", optimizer.adam.beta1},
            {"beta2", optimizer.adam.beta2},
            {"eps", optimizer.adam.eps},
            {"clip_norm", optimizer.clip_norm},
            {"warmup_steps", warmup_steps},
            {"linear_decay", linear_decay}}},
          {"batch_size", batch_size},
          {"steps", steps},
          {"exclude_lengths", std::vector<int>(exclude_lengths.begin(), exclude_lengths.end())},
          {"output_dir", output_dir},
          {"seed", seed}};
}

TrainedModel TrainOnPairs(std::span<const ExamplePair> train, std::span<const ExamplePair> valid,
                          const RunConfig& config, const EpochCallback& on_epoch) {
  if (train.empty()) throw std::invalid_argument("train: no training examples");
  TrainedModel result;
  std::vector<std::string> sources;
  std::vector<std::string> targets;
  for (const auto& p : train) {
    sources.push_back(p.source);
    targets.push_back(p.target);
    ++result.length_counts[p.len()];
  }
  auto base_only = SourceVocab::BaseSymbols(sources);
  const int minimum = 2 + static_cast<int>(base_only.size());
  result.source_vocab = config.source_vocab_size <= minimum
                            ? SourceVocab(std::move(base_only), {})
                            : SourceVocab::Train(sources, config.source_vocab_size);
  result.target_vocab = TargetVocab::Build(targets);

  ModelConfig model_config = config.model;
  model_config.source_vocab = result.source_vocab.size();
  model_config.target_vocab = result.target_vocab.size();
  model_config.seed = config.seed;
  result.model = std::make_unique<Model>(model_config);

  const auto encoded = EncodeAll(train, result.source_vocab, result.target_vocab);
  const auto encoded_valid = EncodeAll(valid, result.source_vocab, result.target_vocab);
  Trainer trainer(*result.model, config.optimizer, Rng(config.seed).Fork(1).Next());
  Rng shuffle_rng = Rng(config.seed).Fork(2);
  std::vector<std::size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EncodedExample> batch_examples;

  std::int64_t step = 0;
  int epoch = 0;
  while (step < config.steps) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.Below(i)]);
    }
    double loss_sum = 0.0;
    int loss_count = 0;
    double lr = 0.0;
    for (std::size_t start = 0; start < order.size() && step < config.steps;
         start += config.batch_size) {
      batch_examples.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + config.batch_size); ++k) {
        batch_examples.push_back(encoded[order[k]]);
      }
      lr = LearningRate(config, step);
      trainer.options().adam.lr = lr;
      loss_sum += trainer.Step(MakeBatch(batch_examples));
      ++loss_count;
      ++step;
    }
    ++epoch;
    EpochRecord record{epoch, step, loss_sum / std::max(loss_count, 1), std::nullopt, lr};
    if (!encoded_valid.empty()) record.valid_loss = ValidLoss(*result.model, encoded_valid, config.batch_size);
    result.log.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  return result;
}

TrainedModel CmdTrain(const RunConfig& config, std::ostream* progress) {
  std::vector<ExamplePair> pairs =
      config.synthetic ? GenerateSynthetic(*config.synthetic) : LoadJsonl(config.train_path);
  std::vector<ExamplePair> train;
  std::vector<ExamplePair> valid;
  for (auto& p : pairs) {
    switch (AssignSplit(p.source)) {
      case Split::kTrain:
        train.push_back(std::move(p));
        break;
      case Split::kValid:
        valid.push_back(std::move(p));
        break;
      case Split::kTest:
        break;
    }
  }
  train = ExcludeLengths(train, config.exclude_lengths);
  valid = ExcludeLengths(valid, config.exclude_lengths);

  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  {
    auto out = OpenOut(dir / "config.json");
    out << config.ToJson().dump(2) << '\n';
  }
  auto log = OpenOut(dir / "train_log.csv");
  log << "epoch,step,train_loss,valid_loss,lr\n" << std::flush;
  auto on_epoch = [&](const EpochRecord& r) {
    log << r.epoch << ',' << r.step << ',' << FormatDouble(r.train_loss) << ','
        << (r.valid_loss ? FormatDouble(*r.valid_loss) : std::string()) << ','
        << FormatDouble(r.lr) << '\n'
        << std::flush;
    if (progress) {
      *progress << "epoch " << r.epoch << " step " << r.step << " train_loss "
                << FormatDouble(r.train_loss);
      if (r.valid_loss) *progress << " valid_loss " << FormatDouble(*r.valid_loss);
      *progress << '\n' << std::flush;
    }
  };
  TrainedModel trained = TrainOnPairs(train, valid, config, on_epoch);

  {
    auto out = OpenOut(dir / "train_lengths.csv");
    // Excluded lengths are listed with a zero count.
    std::map<int, int> counts = trained.length_counts;
    for (int len : config.exclude_lengths) counts.try_emplace(len, 0);
    out << "len,count\n";
    for (const auto& [len, count] : counts) out << len << ',' << count << '\n';
  }
  {
    auto merges = OpenOut(dir / "source.bpe");
    trained.source_vocab.SaveMerges(merges);
    auto symbols = OpenOut(dir / "source.symbols");
    trained.source_vocab.SaveSymbols(symbols);
    auto chars = OpenOut(dir / "target.chars");
    trained.target_vocab.Save(chars);
  }
  SaveCheckpoint((dir / "checkpoint.bin").string(), *trained.model, trained.source_vocab,
                 trained.target_vocab);
  return trained;
}

nlohmann::json GenerateOne(const Model& model, const SourceVocab& source_vocab,
                           const TargetVocab& target_vocab, const std::string& source,
                           std::optional<int> len, const GenerateOptions& options) {
  if (!len && UsesLength(model.config().family)) {
    throw UsageError("encoding family " + std::string(FamilyName(model.config().family)) +
                     " needs a requested length (--len or a \"len\" field)");
  }
  DecodeRequest request;
  request.source = source_vocab.Encode(source);
  request.len = len.value_or(0);
  request.beam = options.beam;
  request.n = options.nbest;
  request.safety_cap = options.safety_cap;
  try {
    request.Validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto hyps = BeamSearch(model, request);
  const Hypothesis chosen = options.rerank ? Rerank(hyps, source, target_vocab) : hyps.front();
  const std::string text = target_vocab.Decode(chosen.ids);
  nlohmann::json out = {{"output", text},
                        {"len_requested", len ? nlohmann::json(*len) : nlohmann::json(nullptr)},
                        {"len_generated", TargetLength(text)},
                        {"logprob", chosen.logprob}};
  if (options.nbest > 1) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& h : hyps) {
      list.push_back({{"output", target_vocab.Decode(h.ids)},
                      {"logprob", h.logprob},
                      {"terminated", h.terminated}});
    }
    out["nbest"] = list;
  }
  return out;
}

void CmdGenerate(const GenerateOptions& options) {
  const LoadedCheckpoint ckpt = LoadCheckpoint(options.checkpoint);
  std::ifstream in(options.input, std::ios::binary);
  if (!in) throw std::runtime_error("generate: cannot open " + options.input);
  auto out = OpenOut(options.output);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("generate: malformed line " + std::to_string(line_no) + ": " +
                               e.what());
    }
    if (!j.contains("source")) {
      throw std::runtime_error("generate: line " + std::to_string(line_no) + " has no source");
    }
    std::optional<int> len = options.len;
    if (!len && j.contains("len")) len = j.at("len").get<int>();
    out << GenerateOne(*ckpt.model, ckpt.source_vocab, ckpt.target_vocab,
                       j.at("source").get<std::string>(), len, options)
               .dump()
        << '\n';
  }
}

EvalReport CmdEvaluate(const EvaluateOptions& options) {
  auto read_lines = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("evaluate: cannot open " + path);
    std::vector<nlohmann::json> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      try {
        rows.push_back(nlohmann::json::parse(line));
      } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("evaluate: malformed line " + std::to_string(line_no) + " of " +
                                 path + ": " + e.what());
      }
    }
    return rows;
  };
  const auto outputs = read_lines(options.outputs);
  const auto references = read_lines(options.references);
  if (outputs.size() != references.size()) {
    throw std::runtime_error("evaluate: " + std::to_string(outputs.size()) + " outputs but " +
                             std::to_string(references.size()) + " references");
  }
  if (outputs.empty()) throw std::runtime_error("evaluate: no examples");
  std::vector<std::string> texts;
  std::vector<std::string> refs;
  std::vector<int> desired;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    texts.push_back(outputs[i].at("output").get<std::string>());
    refs.push_back(references[i].at("target").get<std::string>());
    const auto& requested = outputs[i].value("len_requested", nlohmann::json(nullptr));
    desired.push_back(requested.is_null() ? TargetLength(refs.back()) : requested.get<int>());
  }
  const EvalReport report = Evaluate(texts, refs, desired, options.config);
  if (!options.report.empty()) {
    auto out = OpenOut(options.report);
    out << report.ToJson().dump(2) << '\n';
  }
  if (!options.histogram.empty()) {
    auto out = OpenOut(options.histogram);
    report.WriteHistogramCsv(out);
  }
  return report;
}

void CmdPeDump(EncodingFamily family, int d, double base, std::optional<int> len, int max_pos,
               std::ostream& out) {
  WriteTableCsv(BuildTable(EncodingSpec{family, d, base, len}, max_pos), out);
}

}  // namespace lenctl
