#pragma once

#include <filesystem>
#include <string>

#include "modseg/dataio.hpp"
#include "modseg/infer.hpp"
#include "modseg/model.hpp"
#include "modseg/train.hpp"

namespace modseg {

// Every tunable in one place. Populated defaults-first, then from a config
// file, then from command-line flags (flags win).
struct RunConfig {
  ModConfig model;
  TrainConfig train;
  SyntheticSpec synth;
  int synth_sequences = 20;
  InferOptions infer;
  int eval_bins = 10;
  std::uint64_t seed = 1234;
};

// Dotted-key assignment (e.g. "model.skip_first = 2"); unknown keys throw
// ConfigError.
void apply_config_kv(RunConfig& cfg, const std::string& key, const std::string& value);

// Line-oriented `key = value` file; '#' starts a comment.
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

// Deterministic full echo in the same key = value format.
std::string serialize_config(const RunConfig& cfg);

std::string serialize_mod_config(const ModConfig& cfg);
ModConfig parse_mod_config(const std::string& text);

std::string ablation_name(Ablation a);
Ablation parse_ablation(const std::string& name);

}  // namespace modseg
