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

// Batch entry point: synth, train, generate, evaluate, pe-dump.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "lenctl/commands.h"
#include "lenctl/data.h"
#include "lenctl/positional_encoding.h"

namespace {

std::set<int> ParseLengthList(const std::string& text) {
  std::set<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.insert(std::stoi(item));
    } catch (const std::exception&) {
      throw lenctl::UsageError("--exclude-lengths: '" + item + "' is not an integer");
    }
  }
  return out;
}

nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lenctl::UsageError("cannot open config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw lenctl::UsageError("config " + path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Length-controlled sequence generation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string exclude_lengths;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  auto* train = app.add_subcommand("train", "Train a model from a JSON run config");
  train->add_option("--config", config_path, "Run config (JSON)")->required();
  train->add_option("--exclude-lengths", exclude_lengths,
                    "Comma-separated target lengths removed from training");
  train->add_option("--seed", seed, "Override the config seed");
  train->add_option("--output-dir", output_dir, "Override the output directory");

  lenctl::GenerateOptions gen;
  std::optional<int> gen_len;
  auto* generate = app.add_subcommand("generate", "Decode sources at a requested length");
  generate->add_option("--checkpoint", gen.checkpoint)->required();
  generate->add_option("--input", gen.input, "JSONL with a \"source\" field")->required();
  generate->add_option("--output", gen.output, "Output JSONL")->required();
  generate->add_option("--len", gen_len, "Requested output length in characters");
  generate->add_option("--beam", gen.beam, "Beam width")->capture_default_str();
  generate->add_option("--nbest", gen.nbest, "Hypotheses to return")->capture_default_str();
  generate->add_flag("--rerank", gen.rerank, "Pick the n-best entry covering most source words");
  generate->add_option("--safety-cap", gen.safety_cap, "Token cap (default 2*len+10)");

  lenctl::EvaluateOptions eval;
  std::string unit = "char";
  std::optional<int> truncate_bytes;
  auto* evaluate = app.add_subcommand("evaluate", "Score outputs against references");
  evaluate->add_option("--outputs", eval.outputs)->required();
  evaluate->add_option("--references", eval.references)->required();
  evaluate->add_option("--report", eval.report, "Report JSON path")->required();
  evaluate->add_option("--histogram", eval.histogram, "Length-difference CSV path");
  evaluate->add_option("--unit", unit, "char or word")
      ->check(CLI::IsMember({"char", "word"}))
      ->capture_default_str();
  evaluate->add_option("--truncate-bytes", truncate_bytes, "Cut outputs to N UTF-8 bytes");

  std::string family = "pe";
  int d = 64;
  double base = 10000.0;
  std::optional<int> pe_len;
  int max_pos = 64;
  std::string pe_output;
  auto* pe_dump = app.add_subcommand("pe-dump", "Write a positional-encoding table as CSV");
  pe_dump->add_option("--family", family, "none, pe, ldpe, lrpe, ldpe+pe, lrpe+pe")
      ->capture_default_str();
  pe_dump->add_option("--d", d)->capture_default_str();
  pe_dump->add_option("--base", base)->capture_default_str();
  pe_dump->add_option("--len", pe_len);
  pe_dump->add_option("--max-pos", max_pos)->capture_default_str();
  pe_dump->add_option("--output", pe_output, "CSV path (stdout when omitted)");

  std::string synth_config;
  std::string synth_output;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset as JSONL");
  synth->add_option("--config", synth_config, "Synthetic task spec (JSON)")->required();
  synth->add_option("--output", synth_output)->required();
  synth->add_option("--seed", seed, "Override the spec seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) {
      lenctl::RunConfig config = lenctl::RunConfig::FromJson(ReadJsonFile(config_path));
      if (!exclude_lengths.empty()) config.exclude_lengths = ParseLengthList(exclude_lengths);
      if (seed) config.seed = *seed;
      if (!output_dir.empty()) config.output_dir = output_dir;
      lenctl::CmdTrain(config, &std::cerr);
    } else if (*generate) {
      gen.len = gen_len;
      lenctl::CmdGenerate(gen);
    } else if (*evaluate) {
      eval.config.unit = lenctl::ParseUnit(unit);
      eval.config.byte_truncate = truncate_bytes;
      try {
        eval.config.Validate();
      } catch (const std::invalid_argument& e) {
        throw lenctl::UsageError(e.what());
      }
      const auto report = lenctl::CmdEvaluate(eval);
      std::cout << report.ToJson().dump() << '\n';
    } else if (*pe_dump) {
      const auto fam = lenctl::ParseFamily(family);
      if (pe_output.empty()) {
        lenctl::CmdPeDump(fam, d, base, pe_len, max_pos, std::cout);
      } else {
        std::ofstream out(pe_output, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + pe_output);
        lenctl::CmdPeDump(fam, d, base, pe_len, max_pos, out);
      }
    } else if (*synth) {
      lenctl::SyntheticTaskSpec spec;
      try {
        spec = lenctl::SyntheticSpecFromJson(ReadJsonFile(synth_config));
        spec.Validate();
      } catch (const std::invalid_argument& e) {
        throw lenctl::UsageError(e.what());
      }
      if (seed) spec.seed = *seed;
      std::ofstream out(synth_output, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + synth_output);
      lenctl::WriteJsonl(out, lenctl::GenerateSynthetic(spec));
    }
  } catch (const lenctl::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const lenctl::ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
