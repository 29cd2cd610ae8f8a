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

#ifndef LENCTL_MODEL_H_
#define LENCTL_MODEL_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lenctl/autodiff.h"
#include "lenctl/optim.h"
#include "lenctl/positional_encoding.h"
#include "lenctl/random.h"
#include "lenctl/tensor.h"

namespace lenctl {

struct ModelConfig {
  int d = 64;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int heads = 4;
  int ffn = 256;
  double dropout = 0.1;
  int source_vocab = 0;
  int target_vocab = 0;
  // Decoder-side positional family; the encoder always uses plain PE.
  EncodingFamily family = EncodingFamily::kLDPE;
  double base = 10000.0;
  // Largest position index any table covers.
  int max_positions = 512;
  std::uint64_t seed = 1;

  // Throws ConfigurationError on inconsistent settings.
  void Validate() const;
};

// One padded minibatch. target_in is BOS-shifted target_out; lengths holds
// the length constraint of each example (character count, EOS excluded,
// so EOS sits at position len of target_out).
struct Batch {
  int size = 0;
  int source_len = 0;
  int target_len = 0;
  std::vector<int> source;
  std::vector<int> target_in;
  std::vector<int> target_out;
  std::vector<int> lengths;
};

struct EncodedExample {
  std::vector<int> source;
  // Character ids followed by EOS.
  std::vector<int> target;
  int len = 0;
};

// Pads with PAD ids (0 on both sides).
Batch MakeBatch(std::span<const EncodedExample> examples);

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
};

struct Norm {
  Tensor gain;
  Tensor bias;
};

struct AttentionBlock {
  Linear q, k, v, o;
};

struct EncoderLayer {
  Norm norm1;
  AttentionBlock self_attn;
  Norm norm2;
  Linear ffn1, ffn2;
};

struct DecoderLayer {
  Norm norm1;
  AttentionBlock self_attn;
  Norm norm2;
  AttentionBlock cross_attn;
  Norm norm3;
  Linear ffn1, ffn2;
};

// Pre-norm transformer encoder-decoder. Token embeddings are scaled by
// sqrt(d) and summed with positional rows: plain PE on the encoder, the
// configured family on the decoder with rows chosen by each example's len.
class Model {
 public:
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  // Stable order; names are used as checkpoint keys.
  std::vector<NamedTensor> Parameters();
  std::size_t ParameterCount() const;

  // Taped forward pass returning logits [batch*target_len, target_vocab].
  // With a grad-enabled tape, gradients flow into the parameters. Dropout is
  // applied only when dropout_rng is non-null.
  Var Forward(Tape& tape, const Batch& batch, Rng* dropout_rng);

  // Inference: logits shaped [batch, target_len, target_vocab].
  Tensor Logits(const Batch& batch) const;

  // Encoder output for a single source sequence, reusable across decoding
  // steps.
  struct Memory {
    Tensor states;  // [source_len, d]
    std::vector<std::uint8_t> mask;
  };
  Memory Encode(std::span<const int> source) const;

  // Next-token log-probabilities after each prefix (target ids after BOS),
  // all decoded against the same memory with length constraint len.
  // Returns [prefixes.size(), target_vocab].
  Tensor NextLogProbs(const Memory& memory, std::span<const std::vector<int>> prefixes,
                      int len) const;

 private:
  Var EncodeOnTape(Tape& tape, std::span<const int> source, int batch, int source_len,
                   std::vector<std::uint8_t>& mask, Rng* dropout_rng) const;
  Var DecodeOnTape(Tape& tape, Var memory, std::span<const std::uint8_t> source_mask,
                   int batch, int source_len, std::span<const int> target_in, int target_len,
                   std::span<const int> lengths, Rng* dropout_rng) const;
  Var Leaf(Tape& tape, const Tensor& t) const;
  Var ApplyLinear(Tape& tape, Var x, const Linear& lin) const;
  Var ApplyNorm(Tape& tape, Var x, const Norm& norm) const;
  Var ApplyAttention(Tape& tape, Var query_in, Var kv_in, const AttentionBlock& block,
                     const AttentionShape& shape, std::span<const std::uint8_t> key_mask) const;
  Var ApplyFeedForward(Tape& tape, Var x, const Linear& a, const Linear& b,
                       Rng* dropout_rng) const;
  Tensor PositionRows(const EncodingCache& cache, std::span<const int> lengths, int batch,
                      int length) const;

  ModelConfig config_;
  Tensor source_embed_;
  Tensor target_embed_;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  Norm encoder_norm_;
  Norm decoder_norm_;
  Linear output_;
  std::unique_ptr<EncodingCache> source_positions_;
  std::unique_ptr<EncodingCache> target_positions_;
};

struct TrainOptions {
  AdamConfig adam;
  // Global gradient-norm clip; <= 0 disables.
  double clip_norm = 1.0;
};

// Owns the optimizer state and the dropout stream for one model.
class Trainer {
 public:
  Trainer(Model& model, TrainOptions options, std::uint64_t seed);

  // Forward, backward and one Adam update. Returns the pre-update loss.
  // Throws std::runtime_error on a non-finite loss before touching the
  // parameters.
  float Step(const Batch& batch);

  std::int64_t steps() const { return state_.step; }
  TrainOptions& options() { return options_; }

 private:
  Model& model_;
  TrainOptions options_;
  AdamState state_;
  Rng dropout_rng_;
  std::vector<NamedTensor> params_;
};

// Teacher-forced mean NLL without dropout or updates.
float EvaluateLoss(const Model& model, const Batch& batch);

}  // namespace lenctl

#endif  // LENCTL_MODEL_H_
