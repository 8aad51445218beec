#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ltd/nn/mlp.hpp"
#include "ltd/ppo/policy.hpp"

namespace ltd {

struct PpoHyperparams {
  double clip = 0.2;
  double gamma = 0.9;
  double gae_lambda = 0.95;
  std::size_t epochs = 20;
  std::size_t rollout_steps = 2048;
  std::size_t minibatch = 256;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  double lr_peak = 1e-3;
  double warmup_frac = 0.01;
  std::size_t total_steps = 20000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // Prompts form one continuing generation stream: values bootstrap across
  // prompt boundaries instead of stopping at them.
  bool continuing = true;
  // Subtract the rollout's mean cycle reward before computing advantages.
  bool center_rewards = true;

  void validate() const;
  // Updates in a stage: ceil(total_steps / rollout_steps).
  std::size_t updates() const { return (total_steps + rollout_steps - 1) / rollout_steps; }
};

// Linear warm-up to lr_peak over warmup_frac of total_steps, then linear
// decay to zero at total_steps.
double lr_schedule(const PpoHyperparams& hp, double step);

class RolloutBuffer {
 public:
  RolloutBuffer(std::size_t obs_dim, std::size_t capacity);

  void add(std::span<const double> obs, int action, double log_prob, bool episode_start);
  void set_reward(std::size_t i, double r) { rewards_.at(i) = r; }
  void add_reward(std::size_t i, double r) { rewards_.at(i) += r; }
  // Step i closes a drafting cycle: gamma and lambda apply after it.
  void mark_cycle_end(std::size_t i) { cycle_ends_.at(i) = 1; }
  void clear();

  std::size_t size() const { return actions_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return size() >= capacity_; }
  std::size_t obs_dim() const { return obs_dim_; }

  std::span<const double> obs(std::size_t i) const {
    return {obs_.data() + i * obs_dim_, obs_dim_};
  }
  const std::vector<double>& all_obs() const { return obs_; }
  const std::vector<int>& actions() const { return actions_; }
  const std::vector<double>& log_probs() const { return log_probs_; }
  const std::vector<double>& rewards() const { return rewards_; }
  const std::vector<char>& episode_starts() const { return starts_; }
  const std::vector<char>& cycle_ends() const { return cycle_ends_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& advantages() const { return advantages_; }
  const std::vector<double>& returns() const { return returns_; }

  // GAE over the stored steps. last_value is V of the observation after the
  // final step; last_start says that observation opens a new episode. With
  // across_episodes the stored episode starts do not cut the recursion.
  // Discounting happens only after steps marked as cycle ends.
  void compute_gae(double gamma, double lambda, double last_value, bool last_start,
                   bool across_episodes = false);
  // Subtracts the mean reward of the cycle-end steps from each of them and
  // returns that mean (0 when no cycle ended).
  double center_cycle_rewards();

 private:
  std::size_t obs_dim_;
  std::size_t capacity_;
  std::vector<double> obs_;
  std::vector<int> actions_;
  std::vector<double> log_probs_;
  std::vector<double> rewards_;
  std::vector<char> starts_;
  std::vector<char> cycle_ends_;
  std::vector<double> values_;
  std::vector<double> advantages_;
  std::vector<double> returns_;
};

// delta_t = r_t + g_t V_{t+1} (1 - start_{t+1}) - V_t,
// A_t = delta_t + g_t l_t (1 - start_{t+1}) A_{t+1},
// with g_t = gamma, l_t = lambda after steps where discount_after is set (every
// step when it is empty) and g_t = l_t = 1 otherwise.
void compute_gae(std::span<const double> rewards, std::span<const double> values,
                 std::span<const char> starts, double last_value, bool last_start, double gamma,
                 double lambda, std::vector<double>& advantages, std::vector<double>& returns,
                 std::span<const char> discount_after = {});

// (A - mean) / (std + 1e-8) with the population std.
void normalize_advantages(std::vector<double>& adv);

struct PpoLossParts {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double total = 0.0;
};

struct MinibatchView {
  std::span<const double> obs;  // n x obs_dim
  std::span<const int> actions;
  std::span<const double> old_log_probs;
  std::span<const double> advantages;  // already normalized
  std::span<const double> returns;
};

// Clipped-surrogate loss (to minimize):
//   -mean(min(r A, clip(r, 1 +- eps) A)) + value_coef mean((V - R)^2) - entropy_coef mean(H)
// Gradients are accumulated into policy_grad / value_grad when non-empty.
PpoLossParts ppo_loss(const nn::Mlp& policy, const nn::Mlp& value, const MinibatchView& mb,
                      const PpoHyperparams& hp, std::span<double> policy_grad,
                      std::span<double> value_grad);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;  // mean pre-clip global norm
  double lr = 0.0;
};

struct PpoOptimizer {
  nn::Adam policy;
  nn::Adam value;
  PpoOptimizer() = default;
  PpoOptimizer(const PolicyCheckpoint& c, const PpoHyperparams& hp);
};

// epochs x shuffled minibatches over a buffer whose advantages and returns
// are computed. The k-th of K optimizer steps uses
// lr_schedule(step_begin + (step_end - step_begin) * k / K), so the schedule
// advances smoothly through the environment steps of this rollout. Throws
// std::runtime_error on a non-finite loss.
UpdateStats ppo_update(PolicyCheckpoint& nets, PpoOptimizer& opt, const RolloutBuffer& buffer,
                       const PpoHyperparams& hp, std::size_t step_begin, std::size_t step_end,
                       nn::Rng& rng);

// Values for every stored observation in batches.
void fill_values(const nn::Mlp& value, RolloutBuffer& buffer);

}  // namespace ltd
