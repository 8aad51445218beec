#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltd/env/evaluate.hpp"
#include "ltd/ppo/policy.hpp"
#include "ltd/ppo/ppo.hpp"

namespace ltd {

struct TrainConfig {
  PpoHyperparams size_hp;   // gamma 0.9, 20k steps
  PpoHyperparams depth_hp;  // gamma 0.999, 100k steps
  std::size_t iter_size_steps = 8192;
  std::size_t iter_depth_steps = 10240;
  int init_depth_min = 1;  // depths drawn per cycle while the size policy learns
  int init_depth_max = 12;
  std::size_t init_v = 60;  // constant V while the depth policy learns
  int val_depth = 8;        // counterparts for validating the initial policies
  std::size_t val_v = 60;
  PolicyArch arch;

  TrainConfig();
  void validate() const;
};

struct CurveRow {
  std::size_t update = 0;
  std::size_t steps = 0;
  double lr = 0.0;
  double mean_reward = 0.0;  // per recorded decision
  std::size_t episodes = 0;
  double val_speedup = 0.0;
  double val_tau = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;
};

void write_curve_csv(const std::vector<CurveRow>& curve, std::ostream& os);

struct StageResult {
  std::string name;
  PolicyCheckpoint best;  // highest validation speedup over all updates
  PolicyCheckpoint last;
  std::size_t best_update = 0;
  double best_val_speedup = 0.0;
  std::vector<CurveRow> curve;
};

using ProgressFn = std::function<void(const std::string& stage, const CurveRow& row)>;

// One PPO stage for the size policy. train_depth drives drafting during
// rollouts, val_depth during validation; both stay fixed.
StageResult train_size_policy(const Workload& w, const EnvConfig& env, const PpoHyperparams& hp,
                              PolicyCheckpoint init, DepthController& train_depth,
                              DepthController& val_depth, std::uint64_t seed,
                              const ProgressFn& progress = {});
StageResult train_depth_policy(const Workload& w, const EnvConfig& env, const PpoHyperparams& hp,
                               PolicyCheckpoint init, SizeController& train_size,
                               SizeController& val_size, std::uint64_t seed,
                               const ProgressFn& progress = {});

// Fresh policies trained against the heuristic counterparts.
StageResult train_initial_size(const Workload& w, const EnvConfig& env, const TrainConfig& tc,
                               std::uint64_t seed, const ProgressFn& progress = {});
StageResult train_initial_depth(const Workload& w, const EnvConfig& env, const TrainConfig& tc,
                                std::uint64_t seed, const ProgressFn& progress = {});

struct IterRecord {
  int iter = 0;
  std::string trained;  // "none", "size" or "depth"
  double val_speedup = 0.0;
  double val_tau = 0.0;
};

struct CoadaptResult {
  PolicyCheckpoint depth;
  PolicyCheckpoint size;
  std::vector<IterRecord> iters;  // Iter0 first
  std::vector<StageResult> stages;
};

// Iter0 evaluates the given pair; round r then retrains the size policy (odd
// r) or the depth policy (even r) against the other, frozen one.
CoadaptResult iterate_coadapt(const Workload& w, const EnvConfig& env, const TrainConfig& tc,
                              PolicyCheckpoint depth, PolicyCheckpoint size, int rounds,
                              std::uint64_t seed, const ProgressFn& progress = {});

// Argmax evaluation of a learned pair.
EvalStats evaluate_pair(const Workload& w, const EnvConfig& env, const PolicyCheckpoint& depth,
                        const PolicyCheckpoint& size, const PromptSet& prompts,
                        std::uint64_t seed, std::vector<TraceRecord>* trace = nullptr);

nlohmann::json to_json(const CurveRow& row);
nlohmann::json to_json(const PpoHyperparams& hp);

}  // namespace ltd
