#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ltd/env/env.hpp"
#include "ltd/env/workload.hpp"

namespace ltd {

// Totals over a prompt set. Sums run in prompt order, then cycle order.
struct EvalStats {
  std::size_t prompts = 0;
  std::size_t cycles = 0;
  std::size_t tokens = 0;  // committed by cycles
  double t_draft = 0.0;
  double t_verify = 0.0;
  double t_policy = 0.0;
  double t_vanilla = 0.0;
  double t_total = 0.0;
  double reward = 0.0;

  double speedup() const { return t_total > 0.0 ? t_vanilla / t_total : 0.0; }
  double tau() const { return cycles > 0 ? static_cast<double>(tokens) / cycles : 0.0; }
  double throughput() const { return t_total > 0.0 ? static_cast<double>(tokens) / t_total : 0.0; }
  double mean_depth = 0.0;
  double mean_v = 0.0;

  void add(const CycleOutcome& c);
  void finish();  // turns the depth/V running sums into means

 private:
  double depth_sum_ = 0.0;
  double v_sum_ = 0.0;
};

struct TraceRecord {
  std::size_t prompt = 0;
  std::size_t cycle = 0;
  CycleOutcome outcome;
};

struct Controllers {
  DepthController* depth;
  SizeController* size;
};

// Seed of the episode for prompt i, independent of evaluation order.
std::uint64_t episode_seed(std::uint64_t seed, std::size_t prompt_index);

// Runs one episode per prompt to completion.
EvalStats evaluate_controllers(const Workload& w, const EnvConfig& cfg, const PromptSet& prompts,
                               Controllers ctl, std::uint64_t seed,
                               std::vector<TraceRecord>* trace = nullptr);

}  // namespace ltd
