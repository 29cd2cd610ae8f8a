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

#include "lenctl/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lenctl {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'L', 'E', 'N', 'C', 'T', 'L', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename U>
void WriteRaw(std::ostream& out, U value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(U));
}

template <typename U>
U ReadRaw(std::istream& in) {
  U value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(U));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return value;
}

}  // namespace

nlohmann::json ModelConfigToJson(const ModelConfig& c) {
  return {{"d", c.d},
          {"encoder_layers", c.encoder_layers},
          {"decoder_layers", c.decoder_layers},
          {"heads", c.heads},
          {"ffn", c.ffn},
          {"dropout", c.dropout},
          {"source_vocab", c.source_vocab},
          {"target_vocab", c.target_vocab},
          {"family", std::string(FamilyName(c.family))},
          {"base", c.base},
          {"max_positions", c.max_positions},
          {"seed", c.seed}};
}

ModelConfig ModelConfigFromJson(const nlohmann::json& j) {
  ModelConfig c;
  c.d = j.value("d", c.d);
  c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
  c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
  c.heads = j.value("heads", c.heads);
  c.ffn = j.value("ffn", c.ffn);
  c.dropout = j.value("dropout", c.dropout);
  c.source_vocab = j.value("source_vocab", c.source_vocab);
  c.target_vocab = j.value("target_vocab", c.target_vocab);
  if (j.contains("family")) c.family = ParseFamily(j.at("family").get<std::string>());
  c.base = j.value("base", c.base);
  c.max_positions = j.value("max_positions", c.max_positions);
  c.seed = j.value("seed", c.seed);
  return c;
}

void SaveCheckpoint(const std::string& path, Model& model, const SourceVocab& source_vocab,
                    const TargetVocab& target_vocab) {
  std::ostringstream merges;
  std::ostringstream symbols;
  std::ostringstream chars;
  source_vocab.SaveMerges(merges);
  source_vocab.SaveSymbols(symbols);
  target_vocab.Save(chars);
  const nlohmann::json header = {{"config", ModelConfigToJson(model.config())},
                                 {"source_merges", merges.str()},
                                 {"source_symbols", symbols.str()},
                                 {"target_chars", chars.str()}};
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  WriteRaw<std::uint32_t>(out, kVersion);
  WriteRaw<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  const auto params = model.Parameters();
  WriteRaw<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const NamedTensor& p : params) {
    WriteRaw<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    WriteRaw<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensor->rank()));
    for (int dim : p.tensor->shape()) WriteRaw<std::int32_t>(out, dim);
    out.write(reinterpret_cast<const char*>(p.tensor->ptr()),
              static_cast<std::streamsize>(p.tensor->size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

LoadedCheckpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const auto version = ReadRaw<std::uint32_t>(in);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto header_size = ReadRaw<std::uint64_t>(in);
  std::string text(header_size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_size));
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  const auto header = nlohmann::json::parse(text);

  LoadedCheckpoint loaded;
  std::istringstream merges(header.at("source_merges").get<std::string>());
  std::istringstream symbols(header.at("source_symbols").get<std::string>());
  std::istringstream chars(header.at("target_chars").get<std::string>());
  loaded.source_vocab = SourceVocab::Load(merges, symbols);
  loaded.target_vocab = TargetVocab::Load(chars);
  loaded.model = std::make_unique<Model>(ModelConfigFromJson(header.at("config")));

  auto params = loaded.model->Parameters();
  const auto count = ReadRaw<std::uint32_t>(in);
  if (count != params.size()) {
    throw std::runtime_error("checkpoint: expected " + std::to_string(params.size()) +
                             " tensors, found " + std::to_string(count));
  }
  for (NamedTensor& p : params) {
    const auto name_size = ReadRaw<std::uint32_t>(in);
    std::string name(name_size, '\0');
    in.read(name.data(), name_size);
    if (name != p.name) {
      throw std::runtime_error("checkpoint: expected tensor '" + p.name + "', found '" + name + "'");
    }
    const auto rank = ReadRaw<std::uint32_t>(in);
    std::vector<int> shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(ReadRaw<std::int32_t>(in));
    if (shape != p.tensor->shape()) {
      throw DimensionError("checkpoint: tensor '" + name + "' has shape " + ShapeString(shape) +
                           ", model expects " + ShapeString(p.tensor->shape()));
    }
    in.read(reinterpret_cast<char*>(p.tensor->ptr()),
            static_cast<std::streamsize>(p.tensor->size() * sizeof(float)));
    if (!in) throw std::runtime_error("checkpoint: truncated tensor '" + name + "'");
  }
  return loaded;
}

}  // namespace lenctl
