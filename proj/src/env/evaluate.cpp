#include "ltd/env/evaluate.hpp"

#include <stdexcept>

namespace ltd {

void EvalStats::add(const CycleOutcome& c) {
  ++cycles;
  tokens += c.accepted;
  t_draft += c.t_draft;
  t_verify += c.t_verify;
  t_policy += c.t_policy;
  t_vanilla += c.t_vanilla;
  t_total += c.total_time();
  reward += c.reward;
  depth_sum_ += c.depth;
  v_sum_ += static_cast<double>(c.v_used);
}

void EvalStats::finish() {
  if (cycles == 0) return;
  mean_depth = depth_sum_ / static_cast<double>(cycles);
  mean_v = v_sum_ / static_cast<double>(cycles);
}

std::uint64_t episode_seed(std::uint64_t seed, std::size_t prompt_index) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(prompt_index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

EvalStats evaluate_controllers(const Workload& w, const EnvConfig& cfg, const PromptSet& prompts,
                               Controllers ctl, std::uint64_t seed,
                               std::vector<TraceRecord>* trace) {
  if (prompts.empty()) throw std::invalid_argument("empty prompt set");
  EvalStats stats;
  SpecDecodeEnv env(w.target, w.draft, cfg, seed);
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    env.reseed(episode_seed(seed, i));
    env.reset(prompts[i]);
    ctl.depth->begin_episode();
    ctl.size->begin_episode();
    ++stats.prompts;
    std::size_t cycle = 0;
    while (!env.done()) {
      const CycleOutcome c = env.step_cycle(*ctl.depth, *ctl.size);
      stats.add(c);
      if (trace != nullptr) trace->push_back({i, cycle, c});
      ++cycle;
    }
  }
  stats.finish();
  return stats;
}

}  // namespace ltd
