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

#include "lenctl/model.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "lenctl/tokenization.h"

namespace lenctl {

void ModelConfig::Validate() const {
  if (d <= 0 || d % 2 != 0) throw ConfigurationError("model width must be even and positive");
  if (heads <= 0 || d % heads != 0) {
    throw ConfigurationError("model width " + std::to_string(d) +
                             " is not divisible by " + std::to_string(heads) + " heads");
  }
  if (encoder_layers < 0 || decoder_layers < 0 || ffn <= 0) {
    throw ConfigurationError("layer counts must be >= 0 and ffn width > 0");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigurationError("dropout must be in [0, 1)");
  if (source_vocab <= 0 || target_vocab <= 0) {
    throw ConfigurationError("vocabulary sizes must be positive");
  }
  if (!(base > 1.0)) throw ConfigurationError("sinusoid base must be > 1");
  if (max_positions < 1) throw ConfigurationError("max_positions must be >= 1");
}

Batch MakeBatch(std::span<const EncodedExample> examples) {
  Batch batch;
  batch.size = static_cast<int>(examples.size());
  for (const auto& ex : examples) {
    batch.source_len = std::max(batch.source_len, static_cast<int>(ex.source.size()));
    batch.target_len = std::max(batch.target_len, static_cast<int>(ex.target.size()));
  }
  batch.source_len = std::max(batch.source_len, 1);
  batch.target_len = std::max(batch.target_len, 1);
  batch.source.assign(static_cast<std::size_t>(batch.size) * batch.source_len, SourceVocab::kPad);
  batch.target_in.assign(static_cast<std::size_t>(batch.size) * batch.target_len, TargetVocab::kPad);
  batch.target_out.assign(batch.target_in.size(), TargetVocab::kPad);
  for (int b = 0; b < batch.size; ++b) {
    const auto& ex = examples[b];
    std::copy(ex.source.begin(), ex.source.end(),
              batch.source.begin() + static_cast<std::ptrdiff_t>(b) * batch.source_len);
    const std::size_t row = static_cast<std::size_t>(b) * batch.target_len;
    for (std::size_t t = 0; t < ex.target.size(); ++t) {
      batch.target_out[row + t] = ex.target[t];
      batch.target_in[row + t] = t == 0 ? TargetVocab::kBos : ex.target[t - 1];
    }
    batch.lengths.push_back(ex.len);
  }
  return batch;
}

namespace {

Tensor XavierUniform(int in, int out, Rng& rng) {
  Tensor w({in, out});
  const double limit = std::sqrt(6.0 / (in + out));
  for (float& x : w.data()) x = static_cast<float>((2.0 * rng.Uniform() - 1.0) * limit);
  return w;
}

Tensor NormalInit(int rows, int cols, double stddev, Rng& rng) {
  Tensor w({rows, cols});
  for (float& x : w.data()) x = static_cast<float>(rng.Normal() * stddev);
  return w;
}

Linear MakeLinear(int in, int out, Rng& rng) {
  return Linear{XavierUniform(in, out, rng), Tensor({out})};
}

Norm MakeNorm(int d) { return Norm{Tensor({d}, 1.0f), Tensor({d})}; }

AttentionBlock MakeAttention(int d, Rng& rng) {
  AttentionBlock block;
  block.q = MakeLinear(d, d, rng);
  block.k = MakeLinear(d, d, rng);
  block.v = MakeLinear(d, d, rng);
  block.o = MakeLinear(d, d, rng);
  return block;
}

void Push(std::vector<NamedTensor>& out, const std::string& name, Tensor& t) {
  out.push_back({name, &t});
}

void PushLinear(std::vector<NamedTensor>& out, const std::string& name, Linear& l) {
  Push(out, name + ".weight", l.weight);
  Push(out, name + ".bias", l.bias);
}

void PushNorm(std::vector<NamedTensor>& out, const std::string& name, Norm& n) {
  Push(out, name + ".gain", n.gain);
  Push(out, name + ".bias", n.bias);
}

void PushAttention(std::vector<NamedTensor>& out, const std::string& name, AttentionBlock& a) {
  PushLinear(out, name + ".q", a.q);
  PushLinear(out, name + ".k", a.k);
  PushLinear(out, name + ".v", a.v);
  PushLinear(out, name + ".o", a.o);
}

}  // namespace

Model::Model(const ModelConfig& config) : config_(config) {
  config_.Validate();
  Rng rng(config_.seed);
  const int d = config_.d;
  const double embed_std = 1.0 / std::sqrt(static_cast<double>(d));
  source_embed_ = NormalInit(config_.source_vocab, d, embed_std, rng);
  target_embed_ = NormalInit(config_.target_vocab, d, embed_std, rng);
  for (int i = 0; i < config_.encoder_layers; ++i) {
    EncoderLayer layer;
    layer.norm1 = MakeNorm(d);
    layer.self_attn = MakeAttention(d, rng);
    layer.norm2 = MakeNorm(d);
    layer.ffn1 = MakeLinear(d, config_.ffn, rng);
    layer.ffn2 = MakeLinear(config_.ffn, d, rng);
    encoder_.push_back(std::move(layer));
  }
  for (int i = 0; i < config_.decoder_layers; ++i) {
    DecoderLayer layer;
    layer.norm1 = MakeNorm(d);
    layer.self_attn = MakeAttention(d, rng);
    layer.norm2 = MakeNorm(d);
    layer.cross_attn = MakeAttention(d, rng);
    layer.norm3 = MakeNorm(d);
    layer.ffn1 = MakeLinear(d, config_.ffn, rng);
    layer.ffn2 = MakeLinear(config_.ffn, d, rng);
    decoder_.push_back(std::move(layer));
  }
  encoder_norm_ = MakeNorm(d);
  decoder_norm_ = MakeNorm(d);
  output_ = MakeLinear(d, config_.target_vocab, rng);
  for (NamedTensor& p : Parameters()) p.tensor->set_requires_grad(true);
  source_positions_ = std::make_unique<EncodingCache>(EncodingFamily::kPE, d, config_.base,
                                                      config_.max_positions);
  target_positions_ = std::make_unique<EncodingCache>(config_.family, d, config_.base,
                                                      config_.max_positions);
}

std::vector<NamedTensor> Model::Parameters() {
  std::vector<NamedTensor> out;
  Push(out, "source_embed", source_embed_);
  Push(out, "target_embed", target_embed_);
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    const std::string prefix = "encoder." + std::to_string(i);
    auto& layer = encoder_[i];
    PushNorm(out, prefix + ".norm1", layer.norm1);
    PushAttention(out, prefix + ".self_attn", layer.self_attn);
    PushNorm(out, prefix + ".norm2", layer.norm2);
    PushLinear(out, prefix + ".ffn1", layer.ffn1);
    PushLinear(out, prefix + ".ffn2", layer.ffn2);
  }
  for (std::size_t i = 0; i < decoder_.size(); ++i) {
    const std::string prefix = "decoder." + std::to_string(i);
    auto& layer = decoder_[i];
    PushNorm(out, prefix + ".norm1", layer.norm1);
    PushAttention(out, prefix + ".self_attn", layer.self_attn);
    PushNorm(out, prefix + ".norm2", layer.norm2);
    PushAttention(out, prefix + ".cross_attn", layer.cross_attn);
    PushNorm(out, prefix + ".norm3", layer.norm3);
    PushLinear(out, prefix + ".ffn1", layer.ffn1);
    PushLinear(out, prefix + ".ffn2", layer.ffn2);
  }
  PushNorm(out, "encoder.norm", encoder_norm_);
  PushNorm(out, "decoder.norm", decoder_norm_);
  PushLinear(out, "output", output_);
  return out;
}

std::size_t Model::ParameterCount() const {
  std::size_t n = 0;
  for (const NamedTensor& p : const_cast<Model*>(this)->Parameters()) n += p.tensor->size();
  return n;
}

Var Model::Leaf(Tape& tape, const Tensor& t) const {
  // Gradient-enabled tapes only come from Forward(), which holds a mutable
  // model; inference tapes reference the tensors read-only.
  if (tape.grad_enabled()) return tape.Param(const_cast<Tensor&>(t));
  return tape.Param(t);
}

Var Model::ApplyLinear(Tape& tape, Var x, const Linear& lin) const {
  return AddRowVector(tape, MatMul(tape, x, Leaf(tape, lin.weight)), Leaf(tape, lin.bias));
}

Var Model::ApplyNorm(Tape& tape, Var x, const Norm& norm) const {
  return LayerNorm(tape, x, Leaf(tape, norm.gain), Leaf(tape, norm.bias));
}

Var Model::ApplyAttention(Tape& tape, Var query_in, Var kv_in, const AttentionBlock& block,
                          const AttentionShape& shape,
                          std::span<const std::uint8_t> key_mask) const {
  Var q = ApplyLinear(tape, query_in, block.q);
  Var k = ApplyLinear(tape, kv_in, block.k);
  Var v = ApplyLinear(tape, kv_in, block.v);
  Var a = Attention(tape, q, k, v, shape, key_mask);
  return ApplyLinear(tape, a, block.o);
}

Var Model::ApplyFeedForward(Tape& tape, Var x, const Linear& a, const Linear& b,
                            Rng* dropout_rng) const {
  Var h = Relu(tape, ApplyLinear(tape, x, a));
  if (dropout_rng) h = Dropout(tape, h, config_.dropout, *dropout_rng);
  return ApplyLinear(tape, h, b);
}

Tensor Model::PositionRows(const EncodingCache& cache, std::span<const int> lengths, int batch,
                           int length) const {
  if (length - 1 > cache.max_pos()) {
    throw std::out_of_range("sequence of " + std::to_string(length) +
                            " positions exceeds max_positions " + std::to_string(cache.max_pos()));
  }
  const int d = config_.d;
  Tensor rows({batch * length, d});
  std::shared_ptr<const EncodingTable> shared;
  if (!UsesLength(cache.family())) shared = cache.Get(0);
  for (int b = 0; b < batch; ++b) {
    std::shared_ptr<const EncodingTable> table = shared ? shared : cache.Get(lengths[b]);
    for (int t = 0; t < length; ++t) {
      auto row = table->row(t);
      std::copy(row.begin(), row.end(), &rows.at(b * length + t, 0));
    }
  }
  return rows;
}

Var Model::EncodeOnTape(Tape& tape, std::span<const int> source, int batch, int source_len,
                        std::vector<std::uint8_t>& mask, Rng* dropout_rng) const {
  mask.resize(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) mask[i] = source[i] != SourceVocab::kPad;
  // An all-pad row (empty source) keeps its first key open so attention
  // stays defined; it then attends to a pad embedding.
  for (int b = 0; b < batch; ++b) {
    bool any = false;
    for (int t = 0; t < source_len; ++t) any = any || mask[b * source_len + t];
    if (!any) mask[b * source_len] = 1;
  }
  const float scale = std::sqrt(static_cast<float>(config_.d));
  Var x = Scale(tape, Embedding(tape, Leaf(tape, source_embed_), source), scale);
  x = Add(tape, x, tape.Constant(PositionRows(*source_positions_, {}, batch, source_len)));
  if (dropout_rng) x = Dropout(tape, x, config_.dropout, *dropout_rng);
  const AttentionShape shape{batch, source_len, source_len, config_.heads, false};
  for (const auto& layer : encoder_) {
    Var h = ApplyNorm(tape, x, layer.norm1);
    Var a = ApplyAttention(tape, h, h, layer.self_attn, shape, mask);
    if (dropout_rng) a = Dropout(tape, a, config_.dropout, *dropout_rng);
    x = Add(tape, x, a);
    Var f = ApplyFeedForward(tape, ApplyNorm(tape, x, layer.norm2), layer.ffn1, layer.ffn2,
                             dropout_rng);
    if (dropout_rng) f = Dropout(tape, f, config_.dropout, *dropout_rng);
    x = Add(tape, x, f);
  }
  return ApplyNorm(tape, x, encoder_norm_);
}

Var Model::DecodeOnTape(Tape& tape, Var memory, std::span<const std::uint8_t> source_mask,
                        int batch, int source_len, std::span<const int> target_in,
                        int target_len, std::span<const int> lengths,
                        Rng* dropout_rng) const {
  if (UsesLength(config_.family) && static_cast<int>(lengths.size()) != batch) {
    throw ConfigurationError("encoding family " + std::string(FamilyName(config_.family)) +
                             " requires a length constraint for every example");
  }
  const float scale = std::sqrt(static_cast<float>(config_.d));
  Var y = Scale(tape, Embedding(tape, Leaf(tape, target_embed_), target_in), scale);
  y = Add(tape, y, tape.Constant(PositionRows(*target_positions_, lengths, batch, target_len)));
  if (dropout_rng) y = Dropout(tape, y, config_.dropout, *dropout_rng);
  const std::vector<std::uint8_t> self_mask(static_cast<std::size_t>(batch) * target_len, 1);
  const AttentionShape self_shape{batch, target_len, target_len, config_.heads, true};
  const AttentionShape cross_shape{batch, target_len, source_len, config_.heads, false};
  for (const auto& layer : decoder_) {
    Var h = ApplyNorm(tape, y, layer.norm1);
    Var a = ApplyAttention(tape, h, h, layer.self_attn, self_shape, self_mask);
    if (dropout_rng) a = Dropout(tape, a, config_.dropout, *dropout_rng);
    y = Add(tape, y, a);
    Var c = ApplyAttention(tape, ApplyNorm(tape, y, layer.norm2), memory, layer.cross_attn,
                           cross_shape, source_mask);
    if (dropout_rng) c = Dropout(tape, c, config_.dropout, *dropout_rng);
    y = Add(tape, y, c);
    Var f = ApplyFeedForward(tape, ApplyNorm(tape, y, layer.norm3), layer.ffn1, layer.ffn2,
                             dropout_rng);
    if (dropout_rng) f = Dropout(tape, f, config_.dropout, *dropout_rng);
    y = Add(tape, y, f);
  }
  return ApplyLinear(tape, ApplyNorm(tape, y, decoder_norm_), output_);
}

Var Model::Forward(Tape& tape, const Batch& batch, Rng* dropout_rng) {
  std::vector<std::uint8_t> mask;
  Var memory = EncodeOnTape(tape, batch.source, batch.size, batch.source_len, mask, dropout_rng);
  return DecodeOnTape(tape, memory, mask, batch.size, batch.source_len, batch.target_in,
                      batch.target_len, batch.lengths, dropout_rng);
}

Tensor Model::Logits(const Batch& batch) const {
  Tape tape(false);
  std::vector<std::uint8_t> mask;
  Var memory = EncodeOnTape(tape, batch.source, batch.size, batch.source_len, mask, nullptr);
  Var logits = DecodeOnTape(tape, memory, mask, batch.size, batch.source_len, batch.target_in,
                            batch.target_len, batch.lengths, nullptr);
  return tape.value(logits).Reshaped({batch.size, batch.target_len, config_.target_vocab});
}

Model::Memory Model::Encode(std::span<const int> source) const {
  std::vector<int> ids(source.begin(), source.end());
  if (ids.empty()) ids.push_back(SourceVocab::kPad);
  Tape tape(false);
  Memory memory;
  Var states = EncodeOnTape(tape, ids, 1, static_cast<int>(ids.size()), memory.mask, nullptr);
  memory.states = tape.value(states);
  return memory;
}

Tensor Model::NextLogProbs(const Memory& memory, std::span<const std::vector<int>> prefixes,
                           int len) const {
  const int batch = static_cast<int>(prefixes.size());
  const int source_len = memory.states.dim(0);
  int target_len = 1;
  for (const auto& p : prefixes) target_len = std::max(target_len, static_cast<int>(p.size()) + 1);
  std::vector<int> target_in(static_cast<std::size_t>(batch) * target_len, TargetVocab::kPad);
  for (int b = 0; b < batch; ++b) {
    target_in[static_cast<std::size_t>(b) * target_len] = TargetVocab::kBos;
    std::copy(prefixes[b].begin(), prefixes[b].end(),
              target_in.begin() + static_cast<std::ptrdiff_t>(b) * target_len + 1);
  }
  // Every prefix reads the same encoder memory.
  Tensor states({batch * source_len, config_.d});
  std::vector<std::uint8_t> mask;
  mask.reserve(static_cast<std::size_t>(batch) * source_len);
  for (int b = 0; b < batch; ++b) {
    std::copy(memory.states.data().begin(), memory.states.data().end(),
              states.ptr() + static_cast<std::size_t>(b) * source_len * config_.d);
    mask.insert(mask.end(), memory.mask.begin(), memory.mask.end());
  }
  const std::vector<int> lengths(batch, len);
  Tape tape(false);
  Var logits = DecodeOnTape(tape, tape.Constant(std::move(states)), mask, batch, source_len,
                            target_in, target_len, lengths, nullptr);
  const Tensor& lv = tape.value(logits);
  const int vocab = config_.target_vocab;
  Tensor out({batch, vocab});
  for (int b = 0; b < batch; ++b) {
    const int t = static_cast<int>(prefixes[b].size());
    const float* row = lv.ptr() + (static_cast<std::size_t>(b) * target_len + t) * vocab;
    double max = row[0];
    for (int j = 1; j < vocab; ++j) max = std::max<double>(max, row[j]);
    double z = 0.0;
    for (int j = 0; j < vocab; ++j) z += std::exp(row[j] - max);
    const double lse = max + std::log(z);
    for (int j = 0; j < vocab; ++j) out.at(b, j) = static_cast<float>(row[j] - lse);
  }
  return out;
}

Trainer::Trainer(Model& model, TrainOptions options, std::uint64_t seed)
    : model_(model), options_(options), dropout_rng_(seed), params_(model.Parameters()) {}

float Trainer::Step(const Batch& batch) {
  Tape tape(true);
  Var logits = model_.Forward(tape, batch, model_.config().dropout > 0 ? &dropout_rng_ : nullptr);
  Var loss = CrossEntropy(tape, logits, batch.target_out, TargetVocab::kPad);
  const float value = tape.value(loss)[0];
  if (!std::isfinite(value)) {
    throw std::runtime_error("non-finite training loss at step " +
                             std::to_string(state_.step + 1));
  }
  for (NamedTensor& p : params_) p.tensor->ZeroGrad();
  tape.Backward(loss);
  if (options_.clip_norm > 0) ClipGradNorm(params_, options_.clip_norm);
  AdamStep(params_, state_, options_.adam);
  return value;
}

float EvaluateLoss(const Model& model, const Batch& batch) {
  Tape tape(false);
  Tensor logits = model.Logits(batch);
  Var lv = tape.Constant(logits.Reshaped({batch.size * batch.target_len, model.config().target_vocab}));
  return tape.value(CrossEntropy(tape, lv, batch.target_out, TargetVocab::kPad))[0];
}

}  // namespace lenctl
