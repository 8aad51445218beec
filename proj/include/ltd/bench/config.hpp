#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ltd/baselines/heuristics.hpp"
#include "ltd/env/env.hpp"
#include "ltd/env/workload.hpp"
#include "ltd/ppo/trainer.hpp"

namespace ltd {

struct EvalConfig {
  std::string split = "test";  // "val" or "test"
  std::size_t max_prompts = 0;  // 0 keeps the whole split
};

struct AblationConfig {
  std::size_t reward_size_steps = 8192;
  std::size_t obs_depth_steps = 20480;
};

// Everything a run depends on. Sections of the INI file: [corpus], [draft],
// [cost_model], [env], [ppo], [train], [baselines], [eval], [ablation].
struct AppConfig {
  CorpusConfig corpus;
  EnvConfig env;
  TrainConfig train;
  int iterate_rounds = 3;
  HeuristicConfig baselines;
  EvalConfig eval;
  AblationConfig ablation;

  AppConfig();
  void validate() const;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

AppConfig load_config(const std::filesystem::path& path);
AppConfig parse_config(std::string_view ini_text);
// "section.key=value"; throws ConfigError on an unknown key or bad value.
void apply_override(AppConfig& cfg, std::string_view assignment);
void set_value(AppConfig& cfg, std::string_view section, std::string_view key,
               std::string_view value);

// Canonical INI text listing every key in a fixed order.
std::string dump_config(const AppConfig& cfg);
// fnv1a64 of dump_config, as 16 hex digits.
std::string config_hash(const AppConfig& cfg);

}  // namespace ltd
