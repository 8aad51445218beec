#pragma once

#include <cstdint>
#include <vector>

#include "ltd/bench/config.hpp"
#include "ltd/bench/report.hpp"
#include "ltd/ppo/trainer.hpp"

namespace ltd {

// Prompts of the configured evaluation split, capped at eval.max_prompts.
PromptSet eval_prompts(const Workload& w, const AppConfig& cfg);

// Initial size and depth stages followed by iterate_rounds co-adaptation
// rounds.
struct LtdRun {
  StageResult initial_size;
  StageResult initial_depth;
  CoadaptResult coadapt;
};
LtdRun train_ltd(const Workload& w, const AppConfig& cfg, std::uint64_t seed,
                 const ProgressFn& progress = {});

struct RewardAblationRow {
  RewardMode mode;
  EvalReport report;  // learned size policy at the default depth
  std::size_t best_update = 0;
  PolicyCheckpoint policy;
};
// One initial size stage per reward mode (throughput, acceptance_length,
// time_cost) with ablation.reward_size_steps, scored with throughput.
std::vector<RewardAblationRow> ablate_reward(const Workload& w, const AppConfig& cfg,
                                             const PromptSet& prompts, std::uint64_t seed,
                                             const ProgressFn& progress = {});

struct ObsAblationRow {
  ObsFeatures obs;
  EvalReport report;  // learned depth policy at the initial constant V
  std::size_t best_update = 0;
  PolicyCheckpoint policy;
};
// One initial depth stage per observation variant (P+D+L, P+L, P+D) with
// ablation.obs_depth_steps.
std::vector<ObsAblationRow> ablate_obs(const Workload& w, const AppConfig& cfg,
                                       const PromptSet& prompts, std::uint64_t seed,
                                       const ProgressFn& progress = {});

}  // namespace ltd
