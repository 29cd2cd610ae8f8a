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

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "lenctl/autodiff.h"
#include "lenctl/checkpoint.h"
#include "lenctl/model.h"
#include "lenctl/random.h"
#include "lenctl/tokenization.h"

namespace lenctl {
namespace {

ModelConfig SmallConfig(EncodingFamily family = EncodingFamily::kLDPE) {
  ModelConfig c;
  c.d = 16;
  c.encoder_layers = 1;
  c.decoder_layers = 2;
  c.heads = 2;
  c.ffn = 32;
  c.dropout = 0.0;
  c.source_vocab = 12;
  c.target_vocab = 30;
  c.family = family;
  c.max_positions = 64;
  c.seed = 5;
  return c;
}

EncodedExample RandomExample(Rng& rng, const ModelConfig& c, int src_len, int tgt_chars) {
  EncodedExample ex;
  for (int i = 0; i < src_len; ++i) ex.source.push_back(2 + static_cast<int>(rng.Below(c.source_vocab - 2)));
  for (int i = 0; i < tgt_chars; ++i) {
    ex.target.push_back(TargetVocab::kNumSpecials +
                        static_cast<int>(rng.Below(c.target_vocab - TargetVocab::kNumSpecials)));
  }
  ex.target.push_back(TargetVocab::kEos);
  ex.len = tgt_chars;
  return ex;
}

Batch RandomBatch(Rng& rng, const ModelConfig& c, int size, int src_len, int tgt_chars) {
  std::vector<EncodedExample> examples;
  for (int b = 0; b < size; ++b) examples.push_back(RandomExample(rng, c, src_len, tgt_chars));
  return MakeBatch(examples);
}

bool SameParameters(Model& a, Model& b) {
  auto pa = a.Parameters();
  auto pb = b.Parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].name != pb[i].name || !(*pa[i].tensor == *pb[i].tensor)) return false;
  }
  return true;
}

TEST_CASE("initialization is seeded") {
  ModelConfig c = SmallConfig();
  Model a(c);
  Model b(c);
  CHECK(SameParameters(a, b));
  c.seed = 6;
  Model other(c);
  CHECK_FALSE(SameParameters(a, other));
}

TEST_CASE("parameter count matches the closed form") {
  ModelConfig c;
  c.source_vocab = 200;
  c.target_vocab = 40;
  const std::size_t d = 64, ffn = 256, src = 200, tgt = 40;
  const std::size_t norm = 2 * d;
  const std::size_t attention = 4 * (d * d + d);
  const std::size_t feed_forward = d * ffn + ffn + ffn * d + d;
  const std::size_t encoder_layer = 2 * norm + attention + feed_forward;
  const std::size_t decoder_layer = 3 * norm + 2 * attention + feed_forward;
  const std::size_t expected = src * d + tgt * d + 2 * encoder_layer + 2 * decoder_layer +
                               2 * norm + d * tgt + tgt;
  CHECK(expected == 251688);
  CHECK(Model(c).ParameterCount() == expected);
}

TEST_CASE("config validation") {
  ModelConfig c = SmallConfig();
  c.heads = 3;
  CHECK_THROWS_AS(Model{c}, ConfigurationError);
  c = SmallConfig();
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.Validate(), ConfigurationError);
}

TEST_CASE("logits shape") {
  ModelConfig c = SmallConfig();
  Rng rng(1);
  const Batch batch = RandomBatch(rng, c, 2, 5, 6);
  const Tensor logits = Model(c).Logits(batch);
  CHECK(logits.shape() == std::vector<int>{2, 7, 30});
}

TEST_CASE("without positions and embeddings logits ignore position") {
  ModelConfig c = SmallConfig(EncodingFamily::kNone);
  Model model(c);
  for (auto& p : model.Parameters()) {
    if (p.name == "target_embed") std::fill(p.tensor->data().begin(), p.tensor->data().end(), 0.0f);
  }
  Rng rng(2);
  const Batch batch = RandomBatch(rng, c, 1, 4, 6);
  const Tensor logits = model.Logits(batch);
  for (int t = 1; t < batch.target_len; ++t) {
    for (int v = 0; v < c.target_vocab; ++v) {
      CHECK(logits[t * c.target_vocab + v] == doctest::Approx(logits[v]).epsilon(1e-5));
    }
  }
}

TEST_CASE("changing one example's length changes only its logits") {
  for (auto family : {EncodingFamily::kLDPE, EncodingFamily::kLRPE}) {
    ModelConfig c = SmallConfig(family);
    const Model model(c);
    Rng rng(3);
    Batch batch = RandomBatch(rng, c, 3, 5, 6);
    const Tensor before = model.Logits(batch);
    batch.lengths[1] = 9;
    const Tensor after = model.Logits(batch);
    const std::size_t per_example = static_cast<std::size_t>(batch.target_len) * c.target_vocab;
    bool changed = false;
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (i / per_example == 1) {
        changed = changed || before[i] != after[i];
      } else {
        CHECK(before[i] == after[i]);
      }
    }
    CHECK(changed);
  }
}

TEST_CASE("logits ignore the length for families without it") {
  for (auto family : {EncodingFamily::kNone, EncodingFamily::kPE}) {
    ModelConfig c = SmallConfig(family);
    const Model model(c);
    Rng rng(4);
    Batch batch = RandomBatch(rng, c, 2, 5, 6);
    const Tensor before = model.Logits(batch);
    batch.lengths = {1, 17};
    CHECK(model.Logits(batch) == before);
    batch.lengths.clear();
    CHECK(model.Logits(batch) == before);
  }
}

TEST_CASE("length families require a length per example") {
  ModelConfig c = SmallConfig(EncodingFamily::kLDPEPlusPE);
  const Model model(c);
  Rng rng(5);
  Batch batch = RandomBatch(rng, c, 2, 3, 4);
  batch.lengths.pop_back();
  CHECK_THROWS_AS(model.Logits(batch), ConfigurationError);
}

TEST_CASE("decoder is causal") {
  ModelConfig c = SmallConfig();
  const Model model(c);
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    Batch batch = RandomBatch(rng, c, 2, 4, 7);
    const int t0 = static_cast<int>(rng.Below(batch.target_len - 1));
    const Tensor before = model.Logits(batch);
    for (int b = 0; b < batch.size; ++b) {
      for (int t = t0 + 1; t < batch.target_len; ++t) {
        batch.target_in[b * batch.target_len + t] = TargetVocab::kNumSpecials +
                                                    static_cast<int>(rng.Below(5));
      }
    }
    const Tensor after = model.Logits(batch);
    for (int b = 0; b < batch.size; ++b) {
      for (int t = 0; t <= t0; ++t) {
        for (int v = 0; v < c.target_vocab; ++v) {
          const std::size_t i = (static_cast<std::size_t>(b) * batch.target_len + t) * c.target_vocab + v;
          CHECK(before[i] == after[i]);
        }
      }
    }
  }
}

TEST_CASE("incremental scoring agrees with teacher forcing") {
  ModelConfig c = SmallConfig();
  const Model model(c);
  Rng rng(7);
  const EncodedExample ex = RandomExample(rng, c, 5, 4);
  const Batch batch = MakeBatch(std::span<const EncodedExample>(&ex, 1));
  const Tensor logits = model.Logits(batch);
  const auto memory = model.Encode(ex.source);
  for (int t = 0; t < batch.target_len; ++t) {
    const std::vector<std::vector<int>> prefix = {
        std::vector<int>(ex.target.begin(), ex.target.begin() + t)};
    const Tensor lp = model.NextLogProbs(memory, prefix, ex.len);
    double z = 0;
    for (int v = 0; v < c.target_vocab; ++v) z += std::exp(lp[v]);
    CHECK(z == doctest::Approx(1.0).epsilon(1e-5));
    // Log-softmax of the teacher-forced row.
    const float* row = logits.ptr() + static_cast<std::size_t>(t) * c.target_vocab;
    double m = row[0];
    for (int v = 0; v < c.target_vocab; ++v) m = std::max(m, static_cast<double>(row[v]));
    double s = 0;
    for (int v = 0; v < c.target_vocab; ++v) s += std::exp(row[v] - m);
    for (int v = 0; v < c.target_vocab; ++v) {
      CHECK(lp[v] == doctest::Approx(row[v] - m - std::log(s)).epsilon(1e-4));
    }
  }
}

TEST_CASE("training overfits one batch") {
  ModelConfig c = SmallConfig();
  Model model(c);
  Rng rng(8);
  const Batch batch = RandomBatch(rng, c, 4, 5, 5);
  TrainOptions options;
  options.adam.lr = 3e-3;
  Trainer trainer(model, options, 1);
  const float first = trainer.Step(batch);
  float last = first;
  for (int i = 1; i < 200; ++i) last = trainer.Step(batch);
  CHECK(last <= 0.5f * first);
  CHECK(trainer.steps() == 200);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  ModelConfig c = SmallConfig();
  c.dropout = 0.1;
  Model model(c);
  Model reference(c);
  Rng rng(9);
  TrainOptions options;
  options.adam.lr = 0.0;
  Trainer trainer(model, options, 1);
  for (int i = 0; i < 3; ++i) trainer.Step(RandomBatch(rng, c, 2, 4, 3));
  CHECK(SameParameters(model, reference));
}

TEST_CASE("training is deterministic") {
  auto trajectory = [] {
    ModelConfig c = SmallConfig();
    c.dropout = 0.2;
    Model model(c);
    Trainer trainer(model, TrainOptions{}, 42);
    Rng rng(10);
    std::vector<float> losses;
    for (int i = 0; i < 15; ++i) losses.push_back(trainer.Step(RandomBatch(rng, c, 3, 4, 5)));
    return losses;
  };
  CHECK(trajectory() == trajectory());
}

TEST_CASE("non-finite loss aborts before the update") {
  ModelConfig c = SmallConfig();
  Model model(c);
  auto params = model.Parameters();
  params.back().tensor->data()[0] = std::numeric_limits<float>::infinity();
  Model snapshot(c);
  snapshot.Parameters().back().tensor->data()[0] = std::numeric_limits<float>::infinity();
  Trainer trainer(model, TrainOptions{}, 1);
  Rng rng(11);
  CHECK_THROWS_AS(trainer.Step(RandomBatch(rng, c, 2, 3, 3)), std::runtime_error);
  CHECK(SameParameters(model, snapshot));
}

TEST_CASE("teacher-forced loss falls over epochs on a toy set") {
  ModelConfig c = SmallConfig();
  Model model(c);
  Rng rng(12);
  std::vector<EncodedExample> data;
  for (int i = 0; i < 50; ++i) data.push_back(RandomExample(rng, c, 4, 3 + static_cast<int>(rng.Below(4))));
  const Batch all = MakeBatch(data);
  TrainOptions options;
  options.adam.lr = 2e-3;
  Trainer trainer(model, options, 1);
  std::vector<float> losses = {EvaluateLoss(model, all)};
  for (int epoch = 0; epoch < 6; ++epoch) {
    for (std::size_t start = 0; start < data.size(); start += 10) {
      trainer.Step(MakeBatch(std::span<const EncodedExample>(data).subspan(start, 10)));
    }
    losses.push_back(EvaluateLoss(model, all));
  }
  int rises = 0;
  for (std::size_t i = 1; i < losses.size(); ++i) rises += losses[i] > losses[i - 1];
  CHECK(rises <= 1);
  CHECK(losses.back() < losses.front());
}

TEST_CASE("checkpoint round trip reproduces logits bitwise") {
  ModelConfig c = SmallConfig(EncodingFamily::kLRPEPlusPE);
  c.target_vocab = TargetVocab::kNumSpecials + 3;
  c.source_vocab = 2 + 3;
  Model model(c);
  Trainer trainer(model, TrainOptions{}, 3);
  Rng rng(13);
  for (int i = 0; i < 3; ++i) trainer.Step(RandomBatch(rng, c, 2, 3, 4));
  const SourceVocab src({"a", "b", "c▁"}, {});
  const TargetVocab tgt(U"abc");
  const auto path = std::filesystem::temp_directory_path() / "lenctl_model_test.bin";
  SaveCheckpoint(path.string(), model, src, tgt);
  const LoadedCheckpoint loaded = LoadCheckpoint(path.string());
  const Batch batch = RandomBatch(rng, c, 2, 3, 4);
  CHECK(loaded.model->Logits(batch) == model.Logits(batch));
  CHECK(loaded.model->config().family == EncodingFamily::kLRPEPlusPE);
  CHECK(loaded.target_vocab.size() == tgt.size());
  CHECK(loaded.source_vocab.size() == src.size());
  std::filesystem::remove(path);
  CHECK_THROWS(LoadCheckpoint(path.string()));
}

}  // namespace
}  // namespace lenctl
