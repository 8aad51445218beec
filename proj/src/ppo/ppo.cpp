#include "ltd/ppo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ltd {

void PpoHyperparams::validate() const {
  auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  if (!positive(clip) || !positive(gamma) || gamma > 1.0 || !positive(gae_lambda) ||
      gae_lambda > 1.0 || !positive(value_coef) || !positive(max_grad_norm) ||
      !positive(lr_peak) || !(entropy_coef >= 0.0) || !(warmup_frac >= 0.0 && warmup_frac < 1.0)) {
    throw std::invalid_argument("ppo hyperparameters out of range");
  }
  if (epochs == 0 || rollout_steps == 0 || minibatch == 0 || total_steps == 0) {
    throw std::invalid_argument("ppo counts must be positive");
  }
  if (rollout_steps % minibatch != 0) {
    throw std::invalid_argument("ppo minibatch must divide rollout_steps");
  }
}

double lr_schedule(const PpoHyperparams& hp, double step) {
  const double total = static_cast<double>(hp.total_steps);
  const double s = std::clamp(step, 0.0, total);
  const double warm = hp.warmup_frac * total;
  if (s < warm) return hp.lr_peak * s / warm;
  if (total <= warm) return hp.lr_peak;
  return hp.lr_peak * (total - s) / (total - warm);
}

RolloutBuffer::RolloutBuffer(std::size_t obs_dim, std::size_t capacity)
    : obs_dim_(obs_dim), capacity_(capacity) {
  obs_.reserve(obs_dim * capacity);
}

void RolloutBuffer::add(std::span<const double> obs, int action, double log_prob,
                        bool episode_start) {
  if (full()) throw std::logic_error("rollout buffer is full");
  if (obs.size() != obs_dim_) throw std::invalid_argument("observation size mismatch");
  obs_.insert(obs_.end(), obs.begin(), obs.end());
  actions_.push_back(action);
  log_probs_.push_back(log_prob);
  rewards_.push_back(0.0);
  starts_.push_back(episode_start ? 1 : 0);
  cycle_ends_.push_back(0);
}

void RolloutBuffer::clear() {
  obs_.clear();
  actions_.clear();
  log_probs_.clear();
  rewards_.clear();
  starts_.clear();
  cycle_ends_.clear();
  values_.clear();
  advantages_.clear();
  returns_.clear();
}

void RolloutBuffer::compute_gae(double gamma, double lambda, double last_value, bool last_start,
                                bool across_episodes) {
  if (values_.size() != size()) throw std::logic_error("rollout values not filled");
  const std::vector<char> none(across_episodes ? size() : 0, 0);
  ltd::compute_gae(rewards_, values_, across_episodes ? std::span<const char>(none) : starts_,
                   last_value, last_start, gamma, lambda, advantages_, returns_, cycle_ends_);
}

double RolloutBuffer::center_cycle_rewards() {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    if (cycle_ends_[i] != 0) {
      sum += rewards_[i];
      ++n;
    }
  }
  if (n == 0) return 0.0;
  const double mean = sum / static_cast<double>(n);
  for (std::size_t i = 0; i < size(); ++i) {
    if (cycle_ends_[i] != 0) rewards_[i] -= mean;
  }
  return mean;
}

void compute_gae(std::span<const double> rewards, std::span<const double> values,
                 std::span<const char> starts, double last_value, bool last_start, double gamma,
                 double lambda, std::vector<double>& advantages, std::vector<double>& returns,
                 std::span<const char> discount_after) {
  const std::size_t n = rewards.size();
  if (values.size() != n || starts.size() != n ||
      (!discount_after.empty() && discount_after.size() != n)) {
    throw std::invalid_argument("gae size mismatch");
  }
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const bool next_start = t + 1 < n ? starts[t + 1] != 0 : last_start;
    const double next_value = t + 1 < n ? values[t + 1] : last_value;
    const double nonterminal = next_start ? 0.0 : 1.0;
    const bool discount = discount_after.empty() || discount_after[t] != 0;
    const double g = discount ? gamma : 1.0;
    const double l = discount ? lambda : 1.0;
    const double delta = rewards[t] + g * next_value * nonterminal - values[t];
    next_adv = delta + g * l * nonterminal * next_adv;
    advantages[t] = next_adv;
    returns[t] = next_adv + values[t];
  }
}

void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : adv) a = (a - mean) / (sd + 1e-8);
}

PpoLossParts ppo_loss(const nn::Mlp& policy, const nn::Mlp& value, const MinibatchView& mb,
                      const PpoHyperparams& hp, std::span<double> policy_grad,
                      std::span<double> value_grad) {
  const std::size_t n = mb.actions.size();
  const std::size_t na = policy.output_dim();
  const double inv_n = 1.0 / static_cast<double>(n);
  PpoLossParts out;

  nn::Mlp::Cache pc;
  policy.forward(mb.obs, n, pc);
  const auto logits = pc.output();
  std::vector<double> dlogits(n * na, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const nn::Categorical dist(logits.subspan(i * na, na));
    const int a = mb.actions[i];
    const double logp = dist.log_prob(a);
    const double log_ratio = logp - mb.old_log_probs[i];
    const double ratio = std::exp(log_ratio);
    const double adv = mb.advantages[i];
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - hp.clip, 1.0 + hp.clip) * adv;
    const double surrogate = std::min(unclipped, clipped);
    const double h = dist.entropy();
    out.policy_loss -= surrogate * inv_n;
    out.entropy += h * inv_n;
    if (std::abs(ratio - 1.0) > hp.clip) out.clip_fraction += inv_n;
    out.approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;
    // d(-surrogate)/dlogp and d(-c H)/dlogits
    const double g = unclipped <= clipped ? -unclipped * inv_n : 0.0;
    double* dz = dlogits.data() + i * na;
    for (std::size_t j = 0; j < na; ++j) {
      const double lp = dist.log_probs[j];
      const double p = std::exp(lp);
      const double onehot = static_cast<int>(j) == a ? 1.0 : 0.0;
      dz[j] = g * (onehot - p) + hp.entropy_coef * inv_n * p * (lp + h);
    }
  }

  nn::Mlp::Cache vc;
  value.forward(mb.obs, n, vc);
  const auto v = vc.output();
  std::vector<double> dv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double err = v[i] - mb.returns[i];
    out.value_loss += err * err * inv_n;
    dv[i] = 2.0 * hp.value_coef * err * inv_n;
  }
  out.total = out.policy_loss + hp.value_coef * out.value_loss - hp.entropy_coef * out.entropy;

  if (!policy_grad.empty()) policy.backward(pc, dlogits, policy_grad);
  if (!value_grad.empty()) value.backward(vc, dv, value_grad);
  return out;
}

PpoOptimizer::PpoOptimizer(const PolicyCheckpoint& c, const PpoHyperparams& hp)
    : policy(c.policy.param_count(), hp.adam_beta1, hp.adam_beta2, hp.adam_eps),
      value(c.value.param_count(), hp.adam_beta1, hp.adam_beta2, hp.adam_eps) {}

void fill_values(const nn::Mlp& value, RolloutBuffer& buffer) {
  const std::size_t n = buffer.size();
  const std::size_t dim = buffer.obs_dim();
  auto& values = buffer.values();
  values.resize(n);
  constexpr std::size_t kBatch = 256;
  nn::Mlp::Cache cache;
  for (std::size_t s = 0; s < n; s += kBatch) {
    const std::size_t b = std::min(kBatch, n - s);
    value.forward(std::span<const double>(buffer.all_obs()).subspan(s * dim, b * dim), b, cache);
    std::copy_n(cache.output().begin(), b, values.begin() + static_cast<std::ptrdiff_t>(s));
  }
}

UpdateStats ppo_update(PolicyCheckpoint& nets, PpoOptimizer& opt, const RolloutBuffer& buffer,
                       const PpoHyperparams& hp, std::size_t step_begin, std::size_t step_end,
                       nn::Rng& rng) {
  const std::size_t n = buffer.size();
  if (n == 0 || buffer.advantages().size() != n) {
    throw std::logic_error("ppo_update needs a buffer with computed advantages");
  }
  const std::size_t dim = buffer.obs_dim();
  std::vector<double> adv = buffer.advantages();
  normalize_advantages(adv);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t mb_size = std::min(hp.minibatch, n);
  // Nonzero prefix length per observation. Minibatch rows are ordered by it
  // (longest first) so the network can skip the zero tail blocks.
  std::vector<std::size_t> len(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto o = buffer.obs(i);
    std::size_t l = dim;
    while (l > 0 && o[l - 1] == 0.0) --l;
    len[i] = l;
  }
  std::vector<std::size_t> mb_idx(mb_size);

  std::vector<double> pg(nets.policy.param_count()), vg(nets.value.param_count());
  std::vector<double> mb_obs, mb_old, mb_adv, mb_ret;
  std::vector<int> mb_act;
  UpdateStats stats;
  std::size_t batches = 0;
  const std::size_t total_batches = hp.epochs * (n / mb_size);
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    // Fisher-Yates with the raw generator so shuffles match across libraries.
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
    for (std::size_t start = 0; start + mb_size <= n; start += mb_size) {
      mb_obs.resize(mb_size * dim);
      mb_act.resize(mb_size);
      mb_old.resize(mb_size);
      mb_adv.resize(mb_size);
      mb_ret.resize(mb_size);
      std::copy_n(order.begin() + static_cast<std::ptrdiff_t>(start), mb_size, mb_idx.begin());
      std::stable_sort(mb_idx.begin(), mb_idx.end(),
                       [&](std::size_t a, std::size_t b) { return len[a] > len[b]; });
      for (std::size_t j = 0; j < mb_size; ++j) {
        const std::size_t idx = mb_idx[j];
        const auto o = buffer.obs(idx);
        std::copy(o.begin(), o.end(), mb_obs.begin() + static_cast<std::ptrdiff_t>(j * dim));
        mb_act[j] = buffer.actions()[idx];
        mb_old[j] = buffer.log_probs()[idx];
        mb_adv[j] = adv[idx];
        mb_ret[j] = buffer.returns()[idx];
      }
      const double progress =
          static_cast<double>(batches + 1) / static_cast<double>(total_batches);
      const double lr = lr_schedule(
          hp, static_cast<double>(step_begin) +
                  progress * static_cast<double>(step_end - step_begin));
      std::fill(pg.begin(), pg.end(), 0.0);
      std::fill(vg.begin(), vg.end(), 0.0);
      const PpoLossParts parts =
          ppo_loss(nets.policy, nets.value, {mb_obs, mb_act, mb_old, mb_adv, mb_ret}, hp, pg, vg);
      if (!std::isfinite(parts.total)) {
        throw std::runtime_error("ppo: non-finite loss (policy " + std::to_string(parts.policy_loss) +
                                 ", value " + std::to_string(parts.value_loss) + ", epoch " +
                                 std::to_string(epoch) + ")");
      }
      double sq = 0.0;
      for (double g : pg) sq += g * g;
      for (double g : vg) sq += g * g;
      const double norm = std::sqrt(sq);
      if (!std::isfinite(norm)) throw std::runtime_error("ppo: non-finite gradient");
      if (norm > hp.max_grad_norm) {
        const double s = hp.max_grad_norm / (norm + 1e-6);
        for (double& g : pg) g *= s;
        for (double& g : vg) g *= s;
      }
      opt.policy.step(nets.policy.params(), pg, lr);
      opt.value.step(nets.value.params(), vg, lr);

      stats.policy_loss += parts.policy_loss;
      stats.value_loss += parts.value_loss;
      stats.entropy += parts.entropy;
      stats.clip_fraction += parts.clip_fraction;
      stats.approx_kl += parts.approx_kl;
      stats.grad_norm += norm;
      stats.lr += lr;
      ++batches;
    }
  }
  const double inv = 1.0 / static_cast<double>(batches);
  stats.policy_loss *= inv;
  stats.value_loss *= inv;
  stats.entropy *= inv;
  stats.clip_fraction *= inv;
  stats.approx_kl *= inv;
  stats.grad_norm *= inv;
  stats.lr *= inv;
  return stats;
}

}  // namespace ltd
